#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tonelab/fit.hpp"
#include "tonelab/stats.hpp"
#include "tonelab/types.hpp"

namespace tonelab {

enum class CorePredictor { none, tone_pattern, word, word_sense };

CorePredictor core_from_name(const std::string& name);
std::string core_name(CorePredictor core);

// Baseline: gender, vowel, s(time,by=gender), s(log_dur,by=gender),
// ti(time,log_dur), fs(time,speaker), re(tone_seq), s(utt_pos,k=4).
// A non-none core predictor appends fs(time, <factor>) last.
ModelSpec build_spec(CorePredictor core);

struct SuiteOptions {
    F0Scale scale;
    double rho = 0.9;
    bool estimate_rho = false;  // lag-1 ACF of a rho=0 fit of the first spec
    double fs_ridge_ratio = 1.0;
    int threads = 1;
};

struct ModelComparison {
    std::string name;
    double aic = 0.0;
    double delta_aic = 0.0;  // first listed model minus this one; positive = better
    double r2 = 0.0;
    double edf = 0.0;
};

struct TermImportance {
    std::string term;
    double delta_aic = 0.0;  // AIC increase when the term is dropped
};

struct ComparisonReport {
    std::vector<ModelComparison> models;
    std::vector<TermImportance> importance;  // leave-one-out on the first spec
    double rho = 0.0;
};

// Fits every spec on the same corpus under a shared rho (estimated once on
// the first spec when requested) and reports AIC/R2 plus leave-one-term-out
// importance of the first spec's terms.
ComparisonReport compare_models(const Corpus& corpus, const std::vector<ModelSpec>& specs,
                                const SuiteOptions& options = {});

struct CVPair {
    std::string a, b;
    double mean_a = 0.0, mean_b = 0.0;
    TTest test;  // paired across runs on SSE(a) - SSE(b)
};

struct CVReport {
    std::vector<std::string> models;
    std::vector<std::vector<double>> sse;  // [model][run], held-out rows
    std::vector<CVPair> pairs;
    std::vector<std::vector<std::string>> heldout;  // [run] token ids, sorted
    int runs = 0;
    double holdout = 0.0;
    double rho = 0.0;
};

// Stratified-by-word token-level splits, identical across specs within a
// run; every word appears in both partitions. Smoothing parameters are
// selected once per spec on the full data and reused across runs.
CVReport crossvalidate(const Corpus& corpus, const std::vector<ModelSpec>& specs, int runs,
                       double holdout, std::uint64_t seed, const SuiteOptions& options = {});

struct ContourMatrix {
    std::string label;  // generating spec name
    std::vector<std::string> token_ids;
    Eigen::MatrixXd values;  // tokens x 100, model scale
};

// Predicts every token's contour at the 100-point grid i/99 using that
// token's own covariates.
ContourMatrix denoise_contours(const FitResult& fit, const Corpus& corpus);

// TSV: token_id then 100 value columns c0..c99.
void write_contours(const ContourMatrix& contours, const std::string& path);
ContourMatrix load_contours(const std::string& path);

struct Scenario {
    std::string speaker, gender, vowel, word, sense, tone;
    std::optional<std::string> prev_tone, next_tone;
    double duration_s = 0.1;
    bool duration_median = false;  // use the corpus median duration
    double utt_pos = 0.5;
};

struct ScenarioContour {
    std::vector<double> grid;
    std::vector<double> model_scale;
    std::vector<double> se;  // model scale; NaN when the fit carries no vbeta
    std::vector<double> hz;
};

// 100-point prediction for fixed covariates, back-transformed to Hz.
// Factor levels must be known to the fit; unknown levels are an error.
ScenarioContour predict_scenario(const FitResult& fit, const Scenario& scenario,
                                 const Corpus* corpus = nullptr);

std::string comparison_json(const ComparisonReport& report);
std::string cv_json(const CVReport& report);

}  // namespace tonelab
