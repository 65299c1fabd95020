#include "tonelab/design.hpp"

#include <algorithm>
#include <cmath>

#include "tonelab/errors.hpp"

namespace tonelab {

namespace {

int level_index(const std::vector<std::string>& levels, const std::string& value) {
    const auto it = std::lower_bound(levels.begin(), levels.end(), value);
    if (it == levels.end() || *it != value) return -1;
    return static_cast<int>(it - levels.begin());
}

double covariate_of(const RowX& row, const std::string& cov) {
    if (cov == "time") return row.time;
    if (cov == "log_dur") return row.log_dur;
    if (cov == "utt_pos") return row.utt_pos;
    throw ConfigError("unknown covariate \"" + cov + "\"");
}

int factor_of(const RowX& row, const std::string& factor) {
    if (factor == "gender") return row.gender;
    if (factor == "vowel") return row.vowel;
    if (factor == "speaker") return row.speaker;
    if (factor == "word") return row.word;
    if (factor == "sense") return row.sense;
    if (factor == "tone") return row.tone;
    if (factor == "tone_seq") return row.tone_seq;
    throw ConfigError("unknown factor \"" + factor + "\"");
}

constexpr int kDegree = 3;  // cubic B-splines throughout

}  // namespace

std::string TermSpec::label() const {
    switch (kind) {
        case TermKind::parametric: return "param(" + factor + ")";
        case TermKind::smooth: return "s(" + cov + ")";
        case TermKind::by_smooth: return "s(" + cov + ",by=" + factor + ")";
        case TermKind::tensor: return "ti(" + cov + "," + cov2 + ")";
        case TermKind::factor_smooth: return "fs(" + cov + "," + factor + ")";
        case TermKind::random_intercept: return "re(" + factor + ")";
    }
    return "?";
}

const std::vector<std::string>& ModelLayout::levels_of(const std::string& factor) const {
    if (factor == "gender") return genders;
    if (factor == "vowel") return vowels;
    if (factor == "speaker") return speakers;
    if (factor == "word") return words;
    if (factor == "sense") return senses;
    if (factor == "tone") return tones;
    if (factor == "tone_seq") return tone_seqs;
    throw ConfigError("unknown factor \"" + factor + "\"");
}

std::array<double, 2> ModelLayout::range_of(const std::string& cov) const {
    const auto it = cov_range.find(cov);
    if (it == cov_range.end()) throw ConfigError("unknown covariate \"" + cov + "\"");
    return it->second;
}

void finalize_layout(ModelLayout& layout) {
    for (auto& term : layout.terms) {
        term.z.clear();
        for (const auto& c : term.constraints) term.z.push_back(constraint_null_space(c));
    }
}

bool layout_row_unseen(const ModelLayout& layout, const RowX& row) {
    // Only factors a term actually consumes can make the row "unseen".
    for (const auto& term : layout.terms) {
        const auto& ts = term.spec;
        if (ts.kind == TermKind::parametric || ts.kind == TermKind::by_smooth ||
            ts.kind == TermKind::factor_smooth || ts.kind == TermKind::random_intercept) {
            if (factor_of(row, ts.factor) < 0) return true;
        }
    }
    return false;
}

RowX resolve_token(const ModelLayout& layout, const TokenRecord& token, double time,
                   bool* unseen) {
    RowX row;
    row.time = time;
    row.log_dur = std::log(token.duration_s);
    row.utt_pos = token.utt_pos;
    row.gender = level_index(layout.genders, token.gender);
    row.vowel = level_index(layout.vowels, token.vowel);
    row.speaker = level_index(layout.speakers, token.speaker);
    row.word = level_index(layout.words, token.word);
    row.sense = level_index(layout.senses, token.sense);
    row.tone = level_index(layout.tones, token.tone);
    row.tone_seq = level_index(layout.tone_seqs,
                               tone_sequence_level(token.prev_tone, token.tone, token.next_tone));
    if (unseen && layout_row_unseen(layout, row)) *unseen = true;
    return row;
}

RowX resolve_row(const ModelLayout& layout, const PredictRow& row, bool* unseen) {
    TokenRecord t;
    t.duration_s = row.duration_s;
    t.utt_pos = row.utt_pos;
    t.gender = row.gender;
    t.vowel = row.vowel;
    t.speaker = row.speaker;
    t.word = row.word;
    t.sense = row.sense;
    t.tone = row.tone.empty() ? "T1" : row.tone;
    t.prev_tone = row.prev_tone;
    t.next_tone = row.next_tone;
    RowX x = resolve_token(layout, t, row.time, nullptr);
    if (row.explicit_tone_seq)
        x.tone_seq = level_index(layout.tone_seqs, row.tone_seq);
    if (unseen && layout_row_unseen(layout, x)) *unseen = true;
    return x;
}

void eval_term_into(const ModelLayout& layout, const TermLayout& term, const RowX& row,
                    Eigen::RowVectorXd& out) {
    const TermSpec& spec = term.spec;
    switch (spec.kind) {
        case TermKind::parametric: {
            const int lv = factor_of(row, spec.factor);
            if (lv >= 1) out(term.col_start + lv - 1) = 1.0;
            return;
        }
        case TermKind::smooth: {
            const Eigen::RowVectorXd raw =
                bspline_basis(covariate_of(row, spec.cov), term.knots, kDegree);
            out.segment(term.col_start, term.width) = raw * term.z[0];
            return;
        }
        case TermKind::by_smooth: {
            const int lv = factor_of(row, spec.factor);
            if (lv < 0) return;
            const int w = spec.k - 1;
            const Eigen::RowVectorXd raw =
                bspline_basis(covariate_of(row, spec.cov), term.knots, kDegree);
            out.segment(term.col_start + lv * w, w) = raw * term.z[static_cast<std::size_t>(lv)];
            return;
        }
        case TermKind::tensor: {
            const Eigen::RowVectorXd a =
                bspline_basis(covariate_of(row, spec.cov), term.knots, kDegree) * term.z[0];
            const Eigen::RowVectorXd b =
                bspline_basis(covariate_of(row, spec.cov2), term.knots2, kDegree) * term.z[1];
            for (int i = 0; i < a.size(); ++i)
                out.segment(term.col_start + i * b.size(), b.size()) = a(i) * b;
            return;
        }
        case TermKind::factor_smooth: {
            const int lv = factor_of(row, spec.factor);
            if (lv < 0) return;
            out.segment(term.col_start + lv * spec.k, spec.k) =
                bspline_basis(covariate_of(row, spec.cov), term.knots, kDegree);
            return;
        }
        case TermKind::random_intercept: {
            const int lv = factor_of(row, spec.factor);
            if (lv >= 0) out(term.col_start + lv) = 1.0;
            return;
        }
    }
}

void eval_row_into(const ModelLayout& layout, const RowX& row, Eigen::RowVectorXd& out) {
    out.setZero(layout.n_cols);
    out(0) = 1.0;  // intercept
    for (const auto& term : layout.terms) eval_term_into(layout, term, row, out);
}

Eigen::RowVectorXd eval_row(const ModelLayout& layout, const RowX& row) {
    Eigen::RowVectorXd out(layout.n_cols);
    eval_row_into(layout, row, out);
    return out;
}

std::shared_ptr<Design> assemble_design(const ModelSpec& spec, const Corpus& corpus,
                                        const F0Scale& scale) {
    auto design = std::make_shared<Design>();
    ModelLayout& layout = design->layout;
    layout.scale = scale;
    layout.spec = spec;
    for (const auto& t : corpus.tokens) layout.genders.push_back(t.gender);
    std::sort(layout.genders.begin(), layout.genders.end());
    layout.genders.erase(std::unique(layout.genders.begin(), layout.genders.end()),
                         layout.genders.end());
    layout.vowels = corpus.vowels;
    layout.speakers = corpus.speakers;
    layout.words = corpus.words;
    layout.senses = corpus.senses;
    layout.tones = corpus.tones;
    layout.tone_seqs = corpus.tone_seqs;

    // Rows: per token, normalized times and transformed response.
    long n = 0;
    for (const auto& t : corpus.tokens) {
        if (t.samples.size() < 2)
            throw DataError("token " + t.token_id + " has a single sample; cannot normalize time");
        n += static_cast<long>(t.samples.size());
    }
    std::vector<RowX> rows;
    rows.reserve(static_cast<std::size_t>(n));
    design->y.resize(n);
    design->token_spans.reserve(corpus.tokens.size());
    design->token_ids.reserve(corpus.tokens.size());
    {
        long r = 0;
        for (const auto& t : corpus.tokens) {
            std::vector<double> times(t.samples.size());
            for (std::size_t i = 0; i < t.samples.size(); ++i) times[i] = t.samples[i].time_s;
            const std::vector<double> norm = normalize_time(times);
            design->token_spans.emplace_back(static_cast<int>(r),
                                             static_cast<int>(t.samples.size()));
            design->token_ids.push_back(t.token_id);
            for (std::size_t i = 0; i < t.samples.size(); ++i, ++r) {
                rows.push_back(resolve_token(layout, t, norm[i], nullptr));
                design->y(r) = transform_f0(t.samples[i].f0_hz, scale);
            }
        }
    }

    auto range_over = [&](const std::string& cov) {
        double lo = rows.empty() ? 0.0 : covariate_of(rows.front(), cov), hi = lo;
        for (const auto& r : rows) {
            const double v = covariate_of(r, cov);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return std::array<double, 2>{lo, hi};
    };
    layout.cov_range["time"] = range_over("time");
    layout.cov_range["log_dur"] = range_over("log_dur");
    layout.cov_range["utt_pos"] = range_over("utt_pos");

    // Column layout and penalty bookkeeping.
    int col = 1;  // column 0 = intercept
    for (const TermSpec& ts : spec.terms) {
        TermLayout term;
        term.spec = ts;
        term.col_start = col;
        switch (ts.kind) {
            case TermKind::parametric: {
                term.levels = layout.levels_of(ts.factor);
                if (term.levels.empty())
                    throw ConfigError("param(" + ts.factor + "): no attested levels");
                term.width = static_cast<int>(term.levels.size()) - 1;
                break;
            }
            case TermKind::smooth: {
                const auto r = layout.range_of(ts.cov);
                term.knots = make_knots(r[0], r[1], ts.k, kDegree);
                term.width = ts.k - 1;
                break;
            }
            case TermKind::by_smooth: {
                term.levels = layout.levels_of(ts.factor);
                if (term.levels.size() < 1)
                    throw ConfigError(ts.label() + ": no attested levels");
                const auto r = layout.range_of(ts.cov);
                term.knots = make_knots(r[0], r[1], ts.k, kDegree);
                term.width = static_cast<int>(term.levels.size()) * (ts.k - 1);
                break;
            }
            case TermKind::tensor: {
                const auto ra = layout.range_of(ts.cov);
                const auto rb = layout.range_of(ts.cov2);
                term.knots = make_knots(ra[0], ra[1], ts.k, kDegree);
                term.knots2 = make_knots(rb[0], rb[1], ts.k2, kDegree);
                if (static_cast<long>(ts.k) * ts.k2 > n)
                    throw ConfigError(ts.label() +
                                      ": kA*kB exceeds row count; reduce k");
                term.width = (ts.k - 1) * (ts.k2 - 1);
                break;
            }
            case TermKind::factor_smooth: {
                term.levels = layout.levels_of(ts.factor);
                if (term.levels.size() < 2)
                    throw ConfigError(ts.label() + ": needs at least 2 attested levels");
                const auto r = layout.range_of(ts.cov);
                term.knots = make_knots(r[0], r[1], ts.k, kDegree);
                term.width = static_cast<int>(term.levels.size()) * ts.k;
                break;
            }
            case TermKind::random_intercept: {
                term.levels = layout.levels_of(ts.factor);
                if (term.levels.size() < 2)
                    throw ConfigError(ts.label() + ": needs at least 2 attested levels");
                term.width = static_cast<int>(term.levels.size());
                break;
            }
        }
        col += term.width;
        layout.terms.push_back(std::move(term));
    }
    layout.n_cols = col;

    // Fill X term by term through the block operations, recording penalties.
    design->x = Eigen::MatrixXd::Zero(n, layout.n_cols);
    design->x.col(0).setOnes();
    int group_id = 0;
    for (auto& term : layout.terms) {
        const TermSpec& ts = term.spec;
        auto add_penalty = [&](Eigen::MatrixXd s, int grp, double ratio,
                               const std::string& role) {
            PenaltyBlock pb;
            pb.col_start = term.col_start;
            pb.s = std::move(s);
            pb.group = grp;
            pb.ratio = ratio;
            pb.role = role;
            pb.term_label = ts.label();
            term.penalty_ids.push_back(static_cast<int>(design->penalties.size()));
            design->penalties.push_back(std::move(pb));
        };
        switch (ts.kind) {
            case TermKind::parametric: {
                for (long r = 0; r < n; ++r) {
                    const int lv = factor_of(rows[static_cast<std::size_t>(r)], ts.factor);
                    if (lv >= 1) design->x(r, term.col_start + lv - 1) = 1.0;
                }
                break;
            }
            case TermKind::smooth: {
                DesignBlock raw;
                raw.label = ts.label();
                raw.columns.resize(n, ts.k);
                for (long r = 0; r < n; ++r)
                    raw.columns.row(r) = bspline_basis(
                        covariate_of(rows[static_cast<std::size_t>(r)], ts.cov), term.knots,
                        kDegree);
                raw.penalties.push_back(difference_penalty(2, ts.k));
                DesignBlock centered = center_columns(raw);
                design->x.middleCols(term.col_start, term.width) = centered.columns;
                term.constraints.push_back(centered.constraint);
                add_penalty(centered.penalties[0], group_id++, 1.0, "smooth");
                break;
            }
            case TermKind::by_smooth: {
                const int w = ts.k - 1;
                for (std::size_t lv = 0; lv < term.levels.size(); ++lv) {
                    DesignBlock raw;
                    raw.label = ts.label();
                    raw.columns = Eigen::MatrixXd::Zero(n, ts.k);
                    for (long r = 0; r < n; ++r) {
                        const auto& row = rows[static_cast<std::size_t>(r)];
                        if (factor_of(row, ts.factor) == static_cast<int>(lv))
                            raw.columns.row(r) =
                                bspline_basis(covariate_of(row, ts.cov), term.knots, kDegree);
                    }
                    raw.penalties.push_back(difference_penalty(2, ts.k));
                    DesignBlock centered = center_columns(raw);
                    design->x.middleCols(term.col_start + static_cast<int>(lv) * w, w) =
                        centered.columns;
                    term.constraints.push_back(centered.constraint);
                    PenaltyBlock pb;
                    pb.col_start = term.col_start + static_cast<int>(lv) * w;
                    pb.s = centered.penalties[0];
                    pb.group = group_id++;
                    pb.ratio = 1.0;
                    pb.role = "by";
                    pb.term_label = ts.label();
                    term.penalty_ids.push_back(static_cast<int>(design->penalties.size()));
                    design->penalties.push_back(std::move(pb));
                }
                break;
            }
            case TermKind::tensor: {
                auto marginal = [&](const std::string& cov, const std::vector<double>& knots,
                                    int k) {
                    DesignBlock raw;
                    raw.label = cov;
                    raw.columns.resize(n, k);
                    for (long r = 0; r < n; ++r)
                        raw.columns.row(r) = bspline_basis(
                            covariate_of(rows[static_cast<std::size_t>(r)], cov), knots,
                            kDegree);
                    raw.penalties.push_back(difference_penalty(2, k));
                    return center_columns(raw);
                };
                DesignBlock a = marginal(ts.cov, term.knots, ts.k);
                DesignBlock b = marginal(ts.cov2, term.knots2, ts.k2);
                DesignBlock inter = tensor_interaction_block(a, b);
                design->x.middleCols(term.col_start, term.width) = inter.columns;
                term.constraints.push_back(a.constraint);
                term.constraints.push_back(b.constraint);
                add_penalty(inter.penalties[0], group_id++, 1.0, "tensor_a");
                add_penalty(inter.penalties[1], group_id++, 1.0, "tensor_b");
                break;
            }
            case TermKind::factor_smooth: {
                for (long r = 0; r < n; ++r) {
                    const auto& row = rows[static_cast<std::size_t>(r)];
                    const int lv = factor_of(row, ts.factor);
                    if (lv < 0) continue;
                    design->x.block(r, term.col_start + lv * ts.k, 1, ts.k) =
                        bspline_basis(covariate_of(row, ts.cov), term.knots, kDegree);
                }
                const Eigen::MatrixXd sd = difference_penalty(ts.m, ts.k);
                Eigen::MatrixXd rep = Eigen::MatrixXd::Zero(term.width, term.width);
                for (std::size_t lv = 0; lv < term.levels.size(); ++lv)
                    rep.block(static_cast<int>(lv) * ts.k, static_cast<int>(lv) * ts.k, ts.k,
                              ts.k) = sd;
                const int grp = group_id++;
                add_penalty(std::move(rep), grp, 1.0, "fs_diff");
                add_penalty(Eigen::MatrixXd::Identity(term.width, term.width), grp, 1.0,
                            "fs_ridge");
                break;
            }
            case TermKind::random_intercept: {
                for (long r = 0; r < n; ++r) {
                    const int lv = factor_of(rows[static_cast<std::size_t>(r)], ts.factor);
                    if (lv >= 0) design->x(r, term.col_start + lv) = 1.0;
                }
                add_penalty(Eigen::MatrixXd::Identity(term.width, term.width), group_id++, 1.0,
                            "ridge");
                break;
            }
        }
    }
    design->n_groups = group_id;
    finalize_layout(layout);
    return design;
}

namespace {

void whiten_span(Eigen::MatrixXd& x, Eigen::VectorXd& y, int start, int len, double rho) {
    const double scale0 = std::sqrt(1.0 - rho * rho);
    for (int t = len - 1; t >= 1; --t) {
        x.row(start + t) -= rho * x.row(start + t - 1);
        y(start + t) -= rho * y(start + t - 1);
    }
    x.row(start) *= scale0;
    y(start) *= scale0;
}

}  // namespace

std::shared_ptr<Design> whiten_ar1(const Design& design, double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("whiten_ar1: rho must be in [0,1)");
    auto out = std::make_shared<Design>(design);
    out->reset_cache();
    if (rho == 0.0) return out;
    for (const auto& [start, len] : out->token_spans) whiten_span(out->x, out->y, start, len, rho);
    return out;
}

const WhitenedStats& Design::whitened_stats(double rho) const {
    if (cache_ && cache_rho_ == rho) return *cache_;
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("whitened_stats: rho must be in [0,1)");
    auto stats = std::make_shared<WhitenedStats>();
    const int p = static_cast<int>(x.cols());
    stats->a0 = Eigen::MatrixXd::Zero(p, p);
    stats->b = Eigen::VectorXd::Zero(p);
    stats->n = static_cast<long>(x.rows());

    // Token-grouped chunks: whiten a bounded copy, accumulate cross-products.
    const int chunk_target = 8192;
    double ysum = 0.0;
    std::size_t first = 0;
    while (first < token_spans.size()) {
        std::size_t last = first;
        int rows = 0;
        while (last < token_spans.size() &&
               (rows == 0 || rows + token_spans[last].second <= chunk_target)) {
            rows += token_spans[last].second;
            ++last;
        }
        const int start = token_spans[first].first;
        Eigen::MatrixXd xc = x.middleRows(start, rows);
        Eigen::VectorXd yc = y.segment(start, rows);
        if (rho != 0.0) {
            int local = 0;
            for (std::size_t t = first; t < last; ++t) {
                whiten_span(xc, yc, local, token_spans[t].second, rho);
                local += token_spans[t].second;
            }
        }
        stats->a0.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose(), 1.0);
        stats->b.noalias() += xc.transpose() * yc;
        stats->yty += yc.squaredNorm();
        ysum += yc.sum();
        first = last;
    }
    stats->a0.triangularView<Eigen::Upper>() = stats->a0.transpose();
    stats->tss = stats->yty - ysum * ysum / static_cast<double>(stats->n);
    cache_ = std::move(stats);
    cache_rho_ = rho;
    return *cache_;
}

}  // namespace tonelab
