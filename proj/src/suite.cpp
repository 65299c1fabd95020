#include "tonelab/suite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"
#include "tonelab/csv.hpp"
#include "tonelab/errors.hpp"
#include "tonelab/parallel.hpp"
#include "tonelab/rng.hpp"
#include "tonelab/scales.hpp"

namespace tonelab {

using nlohmann::json;

CorePredictor core_from_name(const std::string& name) {
    if (name == "none" || name == "baseline") return CorePredictor::none;
    if (name == "tone_pattern" || name == "tone") return CorePredictor::tone_pattern;
    if (name == "word") return CorePredictor::word;
    if (name == "word_sense" || name == "sense") return CorePredictor::word_sense;
    throw ConfigError("unknown core predictor \"" + name +
                      "\"; expected none|tone_pattern|word|word_sense");
}

std::string core_name(CorePredictor core) {
    switch (core) {
        case CorePredictor::none: return "none";
        case CorePredictor::tone_pattern: return "tone_pattern";
        case CorePredictor::word: return "word";
        case CorePredictor::word_sense: return "word_sense";
    }
    return "?";
}

namespace {

TermSpec parametric_term(const std::string& factor) {
    TermSpec t;
    t.kind = TermKind::parametric;
    t.factor = factor;
    return t;
}

TermSpec smooth_term(const std::string& cov, int k) {
    TermSpec t;
    t.kind = TermKind::smooth;
    t.cov = cov;
    t.k = k;
    return t;
}

TermSpec by_term(const std::string& cov, const std::string& factor, int k) {
    TermSpec t;
    t.kind = TermKind::by_smooth;
    t.cov = cov;
    t.factor = factor;
    t.k = k;
    return t;
}

TermSpec tensor_term(const std::string& a, const std::string& b, int ka, int kb) {
    TermSpec t;
    t.kind = TermKind::tensor;
    t.cov = a;
    t.cov2 = b;
    t.k = ka;
    t.k2 = kb;
    return t;
}

TermSpec fs_term(const std::string& cov, const std::string& factor, int k, int m = 1) {
    TermSpec t;
    t.kind = TermKind::factor_smooth;
    t.cov = cov;
    t.factor = factor;
    t.k = k;
    t.m = m;
    return t;
}

TermSpec re_term(const std::string& factor) {
    TermSpec t;
    t.kind = TermKind::random_intercept;
    t.factor = factor;
    return t;
}

PredictRow row_for_token(const TokenRecord& token, double time) {
    PredictRow row;
    row.time = time;
    row.duration_s = token.duration_s;
    row.utt_pos = token.utt_pos;
    row.gender = token.gender;
    row.vowel = token.vowel;
    row.speaker = token.speaker;
    row.word = token.word;
    row.sense = token.sense;
    row.tone = token.tone;
    row.prev_tone = token.prev_tone;
    row.next_tone = token.next_tone;
    return row;
}

double shared_rho(const Corpus& corpus, const std::vector<ModelSpec>& specs,
                  const SuiteOptions& options, FitResult* first_fit) {
    if (!options.estimate_rho) return options.rho;
    const auto design = assemble_design(specs.front(), corpus, options.scale);
    FitOptions fo;
    fo.rho = options.rho;
    fo.estimate_rho = true;
    fo.fs_ridge_ratio = options.fs_ridge_ratio;
    FitResult fit = fit_model(*design, fo);
    const double rho = fit.rho;
    if (first_fit) *first_fit = std::move(fit);
    return rho;
}

}  // namespace

ModelSpec build_spec(CorePredictor core) {
    ModelSpec spec;
    spec.core = core_name(core);
    spec.terms = {parametric_term("gender"),
                  parametric_term("vowel"),
                  by_term("time", "gender", 10),
                  by_term("log_dur", "gender", 10),
                  tensor_term("time", "log_dur", 5, 5),
                  fs_term("time", "speaker", 5),
                  re_term("tone_seq"),
                  smooth_term("utt_pos", 4)};
    switch (core) {
        case CorePredictor::none:
            spec.name = "baseline";
            break;
        case CorePredictor::tone_pattern:
            spec.name = "tone";
            spec.terms.push_back(fs_term("time", "tone", 5));
            break;
        case CorePredictor::word:
            spec.name = "word";
            spec.terms.push_back(fs_term("time", "word", 5));
            break;
        case CorePredictor::word_sense:
            spec.name = "sense";
            spec.terms.push_back(fs_term("time", "sense", 5));
            break;
    }
    return spec;
}

ComparisonReport compare_models(const Corpus& corpus, const std::vector<ModelSpec>& specs,
                                const SuiteOptions& options) {
    if (specs.empty()) throw ConfigError("compare_models: no specs given");

    ComparisonReport report;
    FitResult first_fit;
    report.rho = shared_rho(corpus, specs, options, &first_fit);

    std::vector<FitResult> fits(specs.size());
    parallel_for(static_cast<int>(specs.size()), options.threads, [&](int i) {
        if (i == 0 && options.estimate_rho) {
            fits[0] = std::move(first_fit);
            return;
        }
        const auto design = assemble_design(specs[static_cast<std::size_t>(i)], corpus, options.scale);
        FitOptions fo;
        fo.rho = report.rho;
        fo.fs_ridge_ratio = options.fs_ridge_ratio;
        fits[static_cast<std::size_t>(i)] = fit_model(*design, fo);
    });

    for (std::size_t i = 0; i < specs.size(); ++i) {
        ModelComparison m;
        m.name = specs[i].name;
        m.aic = fits[i].aic;
        m.delta_aic = fits[0].aic - fits[i].aic;
        m.r2 = fits[i].r2;
        m.edf = fits[i].edf;
        report.models.push_back(std::move(m));
    }

    // Leave-one-out importance over the first spec's terms.
    const ModelSpec& base = specs.front();
    report.importance.resize(base.terms.size());
    parallel_for(static_cast<int>(base.terms.size()), options.threads, [&](int i) {
        ModelSpec reduced = base;
        reduced.terms.erase(reduced.terms.begin() + i);
        reduced.name = base.name + "-" + base.terms[static_cast<std::size_t>(i)].label();
        const auto design = assemble_design(reduced, corpus, options.scale);
        FitOptions fo;
        fo.rho = report.rho;
        fo.fs_ridge_ratio = options.fs_ridge_ratio;
        const FitResult fit = fit_model(*design, fo);
        report.importance[static_cast<std::size_t>(i)] = {
            base.terms[static_cast<std::size_t>(i)].label(), fit.aic - fits[0].aic};
    });
    return report;
}

namespace {

// Token indices split per run; every word contributes at least one token to
// each side.
struct Split {
    std::vector<int> train, test;
};

Split stratified_split(const Corpus& corpus, double holdout, const Rng& run_rng) {
    std::map<std::string, std::vector<int>> by_word;
    for (std::size_t i = 0; i < corpus.tokens.size(); ++i)
        by_word[corpus.tokens[i].word].push_back(static_cast<int>(i));

    std::vector<std::string> too_small;
    for (const auto& [word, idx] : by_word)
        if (idx.size() < 2) too_small.push_back(word);
    if (!too_small.empty()) {
        std::string msg = "cannot stratify; words with fewer than 2 tokens:";
        for (const auto& w : too_small) msg += " " + w;
        throw DataError(msg);
    }

    Split split;
    for (auto& [word, idx] : by_word) {
        Rng rng = run_rng.fork("word:" + word);
        rng.shuffle(idx);
        const int n = static_cast<int>(idx.size());
        int n_test = static_cast<int>(std::lround(holdout * n));
        n_test = std::clamp(n_test, 1, n - 1);
        for (int i = 0; i < n; ++i)
            (i < n_test ? split.test : split.train).push_back(idx[static_cast<std::size_t>(i)]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace

CVReport crossvalidate(const Corpus& corpus, const std::vector<ModelSpec>& specs, int runs,
                       double holdout, std::uint64_t seed, const SuiteOptions& options) {
    if (specs.empty()) throw ConfigError("crossvalidate: no specs given");
    if (runs < 2) throw ConfigError("crossvalidate: need at least 2 runs");
    if (!(holdout > 0.0 && holdout < 1.0))
        throw ConfigError("crossvalidate: holdout must be in (0,1)");

    CVReport report;
    report.runs = runs;
    report.holdout = holdout;
    report.rho = shared_rho(corpus, specs, options, nullptr);
    for (const auto& s : specs) report.models.push_back(s.name);

    // Full-data smoothing parameters, reused across runs.
    std::vector<std::vector<double>> lambdas(specs.size());
    parallel_for(static_cast<int>(specs.size()), options.threads, [&](int i) {
        const auto design = assemble_design(specs[static_cast<std::size_t>(i)], corpus, options.scale);
        lambdas[static_cast<std::size_t>(i)] =
            select_lambdas(*design, report.rho, options.fs_ridge_ratio).lambdas;
    });

    const Rng master(seed);
    std::vector<Split> splits;
    for (int r = 0; r < runs; ++r)
        splits.push_back(stratified_split(corpus, holdout, master.fork("run:" + std::to_string(r))));

    report.sse.assign(specs.size(), std::vector<double>(static_cast<std::size_t>(runs), 0.0));
    report.heldout.resize(static_cast<std::size_t>(runs));
    for (int r = 0; r < runs; ++r)
        for (int idx : splits[static_cast<std::size_t>(r)].test)
            report.heldout[static_cast<std::size_t>(r)].push_back(
                corpus.tokens[static_cast<std::size_t>(idx)].token_id);

    struct Job {
        int run, model;
    };
    std::vector<Job> jobs;
    for (int r = 0; r < runs; ++r)
        for (int m = 0; m < static_cast<int>(specs.size()); ++m) jobs.push_back({r, m});

    parallel_for(static_cast<int>(jobs.size()), options.threads, [&](int j) {
        const auto [r, m] = jobs[static_cast<std::size_t>(j)];
        const Split& split = splits[static_cast<std::size_t>(r)];
        // Registries are kept from the full corpus so train layouts align
        // with the full-data lambdas and test levels stay resolvable.
        Corpus train;
        train.words = corpus.words;
        train.senses = corpus.senses;
        train.speakers = corpus.speakers;
        train.tone_seqs = corpus.tone_seqs;
        train.vowels = corpus.vowels;
        train.tones = corpus.tones;
        for (int idx : split.train) train.tokens.push_back(corpus.tokens[static_cast<std::size_t>(idx)]);

        const auto design = assemble_design(specs[static_cast<std::size_t>(m)], train, options.scale);
        FitOptions fo;
        fo.rho = report.rho;
        fo.select = false;
        fo.fixed_lambdas = lambdas[static_cast<std::size_t>(m)];
        const FitResult fit = fit_model(*design, fo);

        double sse = 0.0;
        std::vector<PredictRow> rows;
        std::vector<double> y;
        for (int idx : split.test) {
            const TokenRecord& tok = corpus.tokens[static_cast<std::size_t>(idx)];
            std::vector<double> times(tok.samples.size());
            for (std::size_t i = 0; i < tok.samples.size(); ++i) times[i] = tok.samples[i].time_s;
            const std::vector<double> tn = normalize_time(times);
            for (std::size_t i = 0; i < tok.samples.size(); ++i) {
                rows.push_back(row_for_token(tok, tn[i]));
                y.push_back(transform_f0(tok.samples[i].f0_hz, fit.layout.scale));
            }
        }
        const std::vector<double> yhat = predict(fit, rows);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double e = y[i] - yhat[i];
            sse += e * e;
        }
        report.sse[static_cast<std::size_t>(m)][static_cast<std::size_t>(r)] = sse;
    });

    for (std::size_t a = 0; a < specs.size(); ++a) {
        for (std::size_t b = a + 1; b < specs.size(); ++b) {
            CVPair pair;
            pair.a = specs[a].name;
            pair.b = specs[b].name;
            pair.mean_a = mean(report.sse[a]);
            pair.mean_b = mean(report.sse[b]);
            std::vector<double> diffs(static_cast<std::size_t>(runs));
            bool all_zero = true;
            for (int r = 0; r < runs; ++r) {
                diffs[static_cast<std::size_t>(r)] =
                    report.sse[a][static_cast<std::size_t>(r)] - report.sse[b][static_cast<std::size_t>(r)];
                if (diffs[static_cast<std::size_t>(r)] != 0.0) all_zero = false;
            }
            if (all_zero) {
                pair.test = TTest{0.0, static_cast<double>(runs - 1), 1.0};
            } else {
                pair.test = paired_t(diffs);
            }
            report.pairs.push_back(std::move(pair));
        }
    }
    return report;
}

ContourMatrix denoise_contours(const FitResult& fit, const Corpus& corpus) {
    ContourMatrix out;
    out.label = fit.layout.spec.name;
    out.values.resize(static_cast<Eigen::Index>(corpus.tokens.size()), 100);
    std::vector<PredictRow> rows;
    rows.reserve(corpus.tokens.size() * 100);
    for (const auto& tok : corpus.tokens) {
        out.token_ids.push_back(tok.token_id);
        for (int i = 0; i < 100; ++i) rows.push_back(row_for_token(tok, i / 99.0));
    }
    const std::vector<double> values = predict(fit, rows);
    for (std::size_t t = 0; t < corpus.tokens.size(); ++t)
        for (int i = 0; i < 100; ++i)
            out.values(static_cast<Eigen::Index>(t), i) = values[t * 100 + static_cast<std::size_t>(i)];
    return out;
}

void write_contours(const ContourMatrix& contours, const std::string& path) {
    std::string out = "token_id";
    for (int i = 0; i < 100; ++i) out += "\tc" + std::to_string(i);
    out += "\n";
    for (std::size_t t = 0; t < contours.token_ids.size(); ++t) {
        out += contours.token_ids[t];
        for (int i = 0; i < 100; ++i) {
            out += '\t';
            out += format_double(contours.values(static_cast<Eigen::Index>(t), i));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

ContourMatrix load_contours(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: missing header row");
    ContourMatrix out;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() != 101)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 101 fields, got " +
                             std::to_string(fields.size()));
        out.token_ids.push_back(fields[0]);
        std::vector<double> row(100);
        for (int i = 0; i < 100; ++i) {
            char* end = nullptr;
            row[static_cast<std::size_t>(i)] = std::strtod(fields[static_cast<std::size_t>(i) + 1].c_str(), &end);
            if (end != fields[static_cast<std::size_t>(i) + 1].c_str() +
                           fields[static_cast<std::size_t>(i) + 1].size())
                throw ParseError(path + ":" + std::to_string(line_no) + ": bad number \"" +
                                 fields[static_cast<std::size_t>(i) + 1] + "\"");
        }
        rows.push_back(std::move(row));
    }
    out.values.resize(static_cast<Eigen::Index>(rows.size()), 100);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int i = 0; i < 100; ++i)
            out.values(static_cast<Eigen::Index>(r), i) = rows[r][static_cast<std::size_t>(i)];
    return out;
}

ScenarioContour predict_scenario(const FitResult& fit, const Scenario& scenario,
                                 const Corpus* corpus) {
    const ModelLayout& layout = fit.layout;
    PredictRow base;
    base.duration_s = scenario.duration_s;
    if (scenario.duration_median) {
        if (!corpus) throw ConfigError("scenario duration \"median\" needs a corpus");
        std::vector<double> durations;
        for (const auto& tok : corpus->tokens) durations.push_back(tok.duration_s);
        if (durations.empty()) throw DataError("scenario duration \"median\": empty corpus");
        base.duration_s = quantile(durations, 0.5);
    }
    base.utt_pos = scenario.utt_pos;
    base.gender = scenario.gender;
    base.vowel = scenario.vowel;
    base.speaker = scenario.speaker;
    base.word = scenario.word;
    base.sense = scenario.sense;
    base.tone = scenario.tone;
    base.prev_tone = scenario.prev_tone;
    base.next_tone = scenario.next_tone;

    bool unseen = false;
    const RowX resolved = resolve_row(layout, base, &unseen);
    if (unseen) {
        std::string missing;
        const auto check = [&](const char* factor, int idx) {
            if (idx < 0) missing += std::string(missing.empty() ? "" : ", ") + factor;
        };
        check("gender", resolved.gender);
        check("vowel", resolved.vowel);
        check("speaker", resolved.speaker);
        check("word", resolved.word);
        check("sense", resolved.sense);
        check("tone", resolved.tone);
        check("tone_seq", resolved.tone_seq);
        throw ConfigError("scenario level unknown to the fit: " + missing);
    }

    ScenarioContour out;
    Eigen::RowVectorXd x(layout.n_cols);
    for (int i = 0; i < 100; ++i) {
        PredictRow row = base;
        row.time = i / 99.0;
        bool row_unseen = false;
        const RowX rx = resolve_row(layout, row, &row_unseen);
        eval_row_into(layout, rx, x);
        const double v = x.dot(fit.beta);
        out.grid.push_back(row.time);
        out.model_scale.push_back(v);
        if (fit.vbeta.size() > 0) {
            const double var = x * fit.vbeta * x.transpose();
            out.se.push_back(std::sqrt(std::max(0.0, var)));
        } else {
            out.se.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        out.hz.push_back(inverse_transform(v, layout.scale));
    }
    return out;
}

std::string comparison_json(const ComparisonReport& report) {
    json j;
    j["rho"] = report.rho;
    json models = json::array();
    for (const auto& m : report.models)
        models.push_back({{"name", m.name},
                          {"aic", m.aic},
                          {"delta_aic", m.delta_aic},
                          {"r2", m.r2},
                          {"edf", m.edf}});
    j["models"] = models;
    json imp = json::array();
    for (const auto& t : report.importance)
        imp.push_back({{"term", t.term}, {"delta_aic", t.delta_aic}});
    j["importance"] = imp;
    return j.dump(2) + "\n";
}

std::string cv_json(const CVReport& report) {
    json j;
    j["runs"] = report.runs;
    j["holdout"] = report.holdout;
    j["rho"] = report.rho;
    j["models"] = report.models;
    json sse;
    for (std::size_t m = 0; m < report.models.size(); ++m) sse[report.models[m]] = report.sse[m];
    j["sse"] = sse;
    json pairs = json::array();
    for (const auto& p : report.pairs)
        pairs.push_back({{"a", p.a},
                         {"b", p.b},
                         {"mean_a", p.mean_a},
                         {"mean_b", p.mean_b},
                         {"t", p.test.t},
                         {"df", p.test.df},
                         {"p", p.test.p}});
    j["pairs"] = pairs;
    json held = json::array();
    for (const auto& run : report.heldout) held.push_back(run);
    j["heldout"] = held;
    return j.dump(2) + "\n";
}

}  // namespace tonelab
