#include "tonelab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tonelab/errors.hpp"

namespace tonelab {

namespace {

constexpr double kPi = 3.14159265358979323846;

void add_penalties(Eigen::MatrixXd& m, const Design& design,
                   const std::vector<double>& lambdas) {
    for (std::size_t j = 0; j < design.penalties.size(); ++j) {
        const auto& pb = design.penalties[j];
        if (lambdas[j] != 0.0)
            m.block(pb.col_start, pb.col_start, pb.s.rows(), pb.s.cols()) += lambdas[j] * pb.s;
    }
}

bool ldlt_singular(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
    if (ldlt.info() != Eigen::Success) return true;
    const auto& d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (!(dmax > 0.0) || !std::isfinite(dmax)) return true;
    return d.minCoeff() <= dmax * 1e-12;
}

struct CoreFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd minv;
    double rss = 0.0;
    double edf = 0.0;
    Eigen::VectorXd edf_by_col;
};

// Solve the penalized normal equations and the influence diagnostics.
CoreFit solve_penalized(const Design& design, const WhitenedStats& stats,
                        const std::vector<double>& lambdas, bool want_minv) {
    const int p = static_cast<int>(stats.a0.cols());
    Eigen::MatrixXd m = stats.a0;
    add_penalties(m, design, lambdas);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt_singular(ldlt)) {
        const bool all_zero =
            std::all_of(lambdas.begin(), lambdas.end(), [](double l) { return l == 0.0; });
        if (all_zero)
            throw ConfigError(
                "penalized system is singular with all lambdas zero; "
                "use lambda > 0 or a smaller basis dimension k");
        m.diagonal().array() += 1e-10 * m.trace();
        ldlt.compute(m);
    }
    CoreFit core;
    core.beta = ldlt.solve(stats.b);
    const double fit_ss = core.beta.dot(stats.a0 * core.beta);
    core.rss = std::max(0.0, stats.yty - 2.0 * core.beta.dot(stats.b) + fit_ss);
    if (want_minv) {
        core.minv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
        core.edf_by_col = core.minv.cwiseProduct(stats.a0).rowwise().sum();
        core.edf = core.edf_by_col.sum();
    }
    return core;
}

double gcv_of(long n, double rss, double edf) {
    const double denom = static_cast<double>(n) - edf;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return static_cast<double>(n) * rss / (denom * denom);
}

}  // namespace

FitResult fit_penalized(const Design& design, const std::vector<double>& lambdas, double rho) {
    if (lambdas.size() != design.penalties.size())
        throw ConfigError("fit_penalized: need one lambda per penalty (" +
                          std::to_string(design.penalties.size()) + ", got " +
                          std::to_string(lambdas.size()) + ")");
    for (double l : lambdas)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw ConfigError("fit_penalized: lambdas must be finite and nonnegative");
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("fit_penalized: rho must be in [0,1)");

    const WhitenedStats& stats = design.whitened_stats(rho);
    CoreFit core = solve_penalized(design, stats, lambdas, true);

    FitResult fit;
    fit.layout = design.layout;
    fit.beta = std::move(core.beta);
    fit.lambdas = lambdas;
    fit.rho = rho;
    fit.n = stats.n;
    fit.p = static_cast<int>(stats.a0.cols());
    fit.rss_w = core.rss;
    fit.tss_w = stats.tss;
    fit.edf = core.edf;
    const double denom = std::max(static_cast<double>(fit.n) - fit.edf, 1e-8);
    fit.sigma2 = std::max(core.rss, 1e-300) / denom;
    fit.aic = static_cast<double>(fit.n) *
                  std::log(2.0 * kPi * std::max(core.rss, 1e-300) / static_cast<double>(fit.n)) +
              static_cast<double>(fit.n) + 2.0 * (fit.edf + 1.0);
    fit.gcv = gcv_of(fit.n, core.rss, fit.edf);
    fit.r2 = stats.tss > 0.0 ? 1.0 - core.rss / stats.tss : 0.0;
    fit.vbeta = fit.sigma2 * 0.5 * (core.minv + core.minv.transpose());
    fit.token_spans = design.token_spans;
    fit.token_ids = design.token_ids;

    fit.term_edf["(intercept)"] = core.edf_by_col(0);
    for (const auto& term : design.layout.terms) {
        double e = 0.0;
        for (int c = 0; c < term.width; ++c) e += core.edf_by_col(term.col_start + c);
        fit.term_edf[term.spec.label()] = e;
    }

    // Whitened residuals, recomputed in token-grouped chunks.
    fit.residuals_w.resize(stats.n);
    {
        auto whitened = whiten_ar1(design, rho);
        fit.residuals_w = whitened->y - whitened->x * fit.beta;
    }
    return fit;
}

double aic(const FitResult& fit) {
    return static_cast<double>(fit.n) *
               std::log(2.0 * kPi * std::max(fit.rss_w, 1e-300) / static_cast<double>(fit.n)) +
           static_cast<double>(fit.n) + 2.0 * (fit.edf + 1.0);
}

LambdaSearch select_lambdas(const Design& design, double rho, double fs_ridge_ratio) {
    const WhitenedStats& stats = design.whitened_stats(rho);
    const long n = stats.n;
    const int p = static_cast<int>(stats.a0.cols());
    const std::size_t n_pen = design.penalties.size();

    LambdaSearch out;
    if (n_pen == 0) {
        CoreFit core = solve_penalized(design, stats, {}, true);
        out.gcv = gcv_of(n, core.rss, core.edf);
        return out;
    }

    auto ratio_of = [&](std::size_t j) {
        return design.penalties[j].role == "fs_ridge" ? fs_ridge_ratio : 1.0;
    };

    // Per-group combined penalty factor S_g = F F' (columns = positive eigenpairs).
    const int n_groups = design.n_groups;
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_groups));
    for (std::size_t j = 0; j < n_pen; ++j)
        members[static_cast<std::size_t>(design.penalties[j].group)].push_back(j);

    struct GroupFactor {
        int col_start = 0;
        Eigen::MatrixXd f;  // width x rank
    };
    std::vector<GroupFactor> factors(static_cast<std::size_t>(n_groups));
    for (int g = 0; g < n_groups; ++g) {
        const auto& mem = members[static_cast<std::size_t>(g)];
        const auto& first = design.penalties[mem.front()];
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(first.s.rows(), first.s.cols());
        for (std::size_t j : mem) {
            if (design.penalties[j].col_start != first.col_start ||
                design.penalties[j].s.rows() != first.s.rows())
                throw ConfigError("select_lambdas: grouped penalties must share a block");
            s += ratio_of(j) * design.penalties[j].s;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
        const Eigen::VectorXd vals = eig.eigenvalues();
        const double vmax = vals.cwiseAbs().maxCoeff();
        std::vector<int> keep;
        for (int i = 0; i < vals.size(); ++i)
            if (vals(i) > vmax * 1e-12) keep.push_back(i);
        GroupFactor gf;
        gf.col_start = first.col_start;
        gf.f.resize(s.rows(), static_cast<int>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i)
            gf.f.col(static_cast<int>(i)) = eig.eigenvectors().col(keep[i]) *
                                            std::sqrt(vals(keep[i]));
        factors[static_cast<std::size_t>(g)] = std::move(gf);
    }

    // The 25-point lambda grid, ascending.
    std::vector<double> grid;
    for (int i = 0; i <= 24; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.5 * i));

    std::vector<double> group_lambda(static_cast<std::size_t>(n_groups), 1.0);
    auto expand = [&]() {
        std::vector<double> l(n_pen);
        for (std::size_t j = 0; j < n_pen; ++j)
            l[j] = group_lambda[static_cast<std::size_t>(design.penalties[j].group)] *
                   ratio_of(j);
        return l;
    };

    auto direct_gcv = [&](const std::vector<double>& lambdas) {
        CoreFit core = solve_penalized(design, stats, lambdas, true);
        return gcv_of(n, core.rss, core.edf);
    };

    double current = direct_gcv(expand());

    for (int cycle = 0; cycle < 20; ++cycle) {
        const double cycle_start = current;
        for (int g = 0; g < n_groups; ++g) {
            const GroupFactor& gf = factors[static_cast<std::size_t>(g)];
            const int w = static_cast<int>(gf.f.cols());
            if (w == 0) continue;

            // K = A0 + all other groups' penalties at their current lambdas.
            Eigen::MatrixXd k = stats.a0;
            {
                std::vector<double> l = expand();
                for (std::size_t j = 0; j < n_pen; ++j)
                    if (design.penalties[j].group == g) l[j] = 0.0;
                add_penalties(k, design, l);
            }

            bool fast_ok = true;
            double best_l = group_lambda[static_cast<std::size_t>(g)];
            double best_gcv = std::numeric_limits<double>::infinity();

            Eigen::LLT<Eigen::MatrixXd> llt(k);
            if (llt.info() == Eigen::Success) {
                const auto lmat = llt.matrixL();
                Eigen::MatrixXd f_embed = Eigen::MatrixXd::Zero(p, w);
                f_embed.middleRows(gf.col_start, gf.f.rows()) = gf.f;
                Eigen::MatrixXd gm = lmat.solve(f_embed);
                Eigen::BDCSVD<Eigen::MatrixXd> svd(gm, Eigen::ComputeThinU);
                const Eigen::VectorXd sig2 = svd.singularValues().array().square();
                const Eigen::MatrixXd u = svd.matrixU();

                Eigen::VectorXd btil = lmat.solve(stats.b);
                Eigen::MatrixXd t1 = lmat.solve(stats.a0);
                Eigen::MatrixXd atil = lmat.solve(t1.transpose());
                const double t0 = atil.trace();
                const Eigen::MatrixXd tmat = u.transpose() * atil * u;
                const Eigen::VectorXd v = u.transpose() * btil;
                const Eigen::VectorXd ab = atil * btil;
                const Eigen::VectorXd w1 = u.transpose() * ab;
                const double alpha0 = btil.dot(ab);
                const double bb = btil.squaredNorm();

                if (!std::isfinite(t0) || !std::isfinite(alpha0) || !std::isfinite(bb)) {
                    fast_ok = false;
                } else {
                    for (double lam : grid) {
                        Eigen::VectorXd d(sig2.size());
                        for (int i = 0; i < sig2.size(); ++i)
                            d(i) = lam * sig2(i) / (1.0 + lam * sig2(i));
                        const double edf = t0 - d.dot(tmat.diagonal());
                        const Eigen::VectorXd dv = d.cwiseProduct(v);
                        const double beta_b = bb - d.dot(v.cwiseProduct(v));
                        const double beta_a =
                            alpha0 - 2.0 * dv.dot(w1) + dv.dot(tmat * dv);
                        const double rss =
                            std::max(0.0, stats.yty - 2.0 * beta_b + beta_a);
                        const double gcv = gcv_of(n, rss, edf);
                        if (!std::isfinite(gcv)) continue;
                        if (gcv < best_gcv) {
                            best_gcv = gcv;
                            best_l = lam;
                        }
                    }
                    if (!std::isfinite(best_gcv)) fast_ok = false;
                }
            } else {
                fast_ok = false;
            }

            if (!fast_ok) {
                best_gcv = std::numeric_limits<double>::infinity();
                for (double lam : grid) {
                    group_lambda[static_cast<std::size_t>(g)] = lam;
                    const double gcv = direct_gcv(expand());
                    if (!std::isfinite(gcv)) continue;
                    if (gcv < best_gcv) {
                        best_gcv = gcv;
                        best_l = lam;
                    }
                }
            }

            if (std::isfinite(best_gcv) && best_gcv <= current) {
                group_lambda[static_cast<std::size_t>(g)] = best_l;
                current = best_gcv;
            }
            out.gcv_trace.push_back(current);
        }
        const double rel = (cycle_start - current) / std::max(std::abs(cycle_start), 1e-300);
        if (rel < 1e-6) break;
    }

    out.lambdas = expand();
    out.gcv = current;
    return out;
}

std::vector<double> predict(const FitResult& fit, const std::vector<PredictRow>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    Eigen::RowVectorXd x(fit.layout.n_cols);
    bool unseen = false;
    for (const auto& r : rows) {
        const RowX rx = resolve_row(fit.layout, r, &unseen);
        eval_row_into(fit.layout, rx, x);
        out.push_back(x.dot(fit.beta));
    }
    const_cast<FitResult&>(fit).unseen_levels = fit.unseen_levels || unseen;
    return out;
}

PartialEffect partial_effect(const FitResult& fit, const std::string& term_label,
                             const std::string& level) {
    const ModelLayout& layout = fit.layout;
    const TermLayout* term = nullptr;
    for (const auto& t : layout.terms)
        if (t.spec.label() == term_label) term = &t;
    if (!term) throw ConfigError("partial_effect: unknown term \"" + term_label + "\"");
    const TermSpec& ts = term->spec;

    int level_idx = -1;
    const bool needs_level = ts.kind == TermKind::parametric || ts.kind == TermKind::by_smooth ||
                             ts.kind == TermKind::factor_smooth ||
                             ts.kind == TermKind::random_intercept;
    if (needs_level) {
        const auto it = std::find(term->levels.begin(), term->levels.end(), level);
        if (it == term->levels.end())
            throw ConfigError("partial_effect: unknown level \"" + level + "\" for " +
                              term_label);
        level_idx = static_cast<int>(it - term->levels.begin());
    } else if (!level.empty()) {
        throw ConfigError("partial_effect: term " + term_label + " takes no level");
    }

    const bool has_cov = ts.kind != TermKind::parametric &&
                         ts.kind != TermKind::random_intercept;
    const std::array<double, 2> range =
        has_cov ? layout.range_of(ts.cov) : std::array<double, 2>{0.0, 1.0};

    PartialEffect pe;
    pe.term = term_label;
    pe.level = level;
    pe.grid.resize(100);
    pe.values.resize(100);
    pe.se.resize(100);

    Eigen::RowVectorXd x(layout.n_cols);
    const Eigen::MatrixXd* vb = fit.vbeta.size() > 0 ? &fit.vbeta : nullptr;
    for (int i = 0; i < 100; ++i) {
        const double value = range[0] + (range[1] - range[0]) * i / 99.0;
        pe.grid[static_cast<std::size_t>(i)] = value;
        RowX rx;
        rx.gender = rx.vowel = rx.speaker = rx.word = rx.sense = rx.tone = rx.tone_seq = -1;
        if (has_cov) {
            if (ts.cov == "time") rx.time = value;
            else if (ts.cov == "log_dur") rx.log_dur = value;
            else rx.utt_pos = value;
        }
        if (ts.kind == TermKind::tensor) {
            const auto r2 = layout.range_of(ts.cov2);
            const double mid = 0.5 * (r2[0] + r2[1]);
            if (ts.cov2 == "time") rx.time = mid;
            else if (ts.cov2 == "log_dur") rx.log_dur = mid;
            else rx.utt_pos = mid;
        }
        if (needs_level) {
            if (ts.factor == "gender") rx.gender = level_idx;
            else if (ts.factor == "vowel") rx.vowel = level_idx;
            else if (ts.factor == "speaker") rx.speaker = level_idx;
            else if (ts.factor == "word") rx.word = level_idx;
            else if (ts.factor == "sense") rx.sense = level_idx;
            else if (ts.factor == "tone") rx.tone = level_idx;
            else rx.tone_seq = level_idx;
        }
        x.setZero();
        eval_term_into(layout, *term, rx, x);
        const auto seg = x.segment(term->col_start, term->width);
        pe.values[static_cast<std::size_t>(i)] =
            seg.dot(fit.beta.segment(term->col_start, term->width));
        if (vb) {
            const double var =
                seg * vb->block(term->col_start, term->col_start, term->width, term->width) *
                seg.transpose();
            pe.se[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, var));
        } else {
            pe.se[static_cast<std::size_t>(i)] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return pe;
}

double pooled_lag1(const Eigen::VectorXd& values,
                   const std::vector<std::pair<int, int>>& spans) {
    const double m = values.mean();
    double num = 0.0, den = 0.0;
    for (const auto& [start, len] : spans) {
        for (int t = 0; t < len; ++t) {
            const double d = values(start + t) - m;
            den += d * d;
            if (t + 1 < len) num += d * (values(start + t + 1) - m);
        }
    }
    if (!(den > 0.0)) throw DataError("pooled_lag1: zero variance");
    return num / den;
}

double residual_acf(const FitResult& fit, int lag) {
    if (lag < 0) throw ConfigError("residual_acf: lag must be nonnegative");
    if (lag == 0) return 1.0;
    int max_len = 0;
    for (const auto& [start, len] : fit.token_spans) max_len = std::max(max_len, len);
    if (lag >= max_len)
        throw DataError("residual_acf: lag " + std::to_string(lag) +
                        " is not shorter than the longest token (" + std::to_string(max_len) +
                        ")");
    const double m = fit.residuals_w.mean();
    double num = 0.0, den = 0.0;
    for (const auto& [start, len] : fit.token_spans) {
        for (int t = 0; t < len; ++t) {
            const double d = fit.residuals_w(start + t) - m;
            den += d * d;
            if (t + lag < len) num += d * (fit.residuals_w(start + t + lag) - m);
        }
    }
    if (!(den > 0.0)) throw DataError("residual_acf: zero residual variance");
    return num / den;
}

FitResult fit_model(const Design& design, const FitOptions& options) {
    double rho = options.rho;
    if (options.estimate_rho) {
        LambdaSearch sel0 = select_lambdas(design, 0.0, options.fs_ridge_ratio);
        FitResult f0 = fit_penalized(design, sel0.lambdas, 0.0);
        rho = std::clamp(pooled_lag1(f0.residuals_w, f0.token_spans), 0.0, 0.99);
    }
    std::vector<double> lambdas;
    if (options.select) {
        lambdas = select_lambdas(design, rho, options.fs_ridge_ratio).lambdas;
    } else {
        lambdas = options.fixed_lambdas;
    }
    return fit_penalized(design, lambdas, rho);
}

}  // namespace tonelab
