#pragma once

// Linear map from embedding vectors to 100-point contours, nearest-neighbor
// label evaluation against a retrieval pool, and the baselines used to judge
// it: majority vote and label-permutation retraining.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tonelab/embeddings.hpp"
#include "tonelab/stats.hpp"
#include "tonelab/suite.hpp"
#include "tonelab/types.hpp"

namespace tonelab {

// Affine map: predicted contour = [1, e] * w, w is (d+1) x 100.
struct MappingModel {
    Eigen::MatrixXd w;
    double ridge = 0.0;
    int dim() const { return static_cast<int>(w.rows()) - 1; }
    Eigen::RowVectorXd predict(const Eigen::RowVectorXd& e) const;
};

// Least squares with a ridge on the non-constant rows. ridge = 0 demands
// more training rows than coefficients per output; otherwise ConfigError.
MappingModel train_mapping(const EmbeddingSet& embeddings,
                           const std::vector<std::string>& token_ids,
                           const Eigen::MatrixXd& contours, double ridge = 1e-8);

struct NNResult {
    double accuracy = 0.0;
    int n_correct = 0;
    int n_total = 0;
    std::vector<std::string> predicted_word;  // per eval token
};

// For each eval token: predict its contour from its embedding, find the
// pool token whose contour has the smallest SSE against it (ties broken by
// smaller token id), score correct when the words match. Pool rows are the
// reference contours themselves, not mapped predictions.
NNResult evaluate_nn(const MappingModel& model, const EmbeddingSet& embeddings,
                     const std::vector<std::string>& eval_ids,
                     const std::vector<std::string>& pool_ids,
                     const Eigen::MatrixXd& pool_contours,
                     const std::map<std::string, std::string>& word_of);

// Accuracy of always answering the most frequent training word.
double majority_baseline(const std::vector<std::string>& train_ids,
                         const std::vector<std::string>& eval_ids,
                         const std::map<std::string, std::string>& word_of);

struct PermutationBaseline {
    double mean = 0.0;
    double min = 1.0;
    double max = 0.0;
    std::vector<double> per_run;
};

struct DLMOptions {
    double ridge = 1e-8;
    double holdout = 0.2;
    int permutation_runs = 30;
    std::string pool_mode = "union";  // "union" or "train"
    int threads = 1;
};

struct DLMSourceResult {
    std::string source;            // contour matrix label
    std::vector<double> train_acc; // per run
    std::vector<double> test_acc;
    double mean_train = 0.0;
    double mean_test = 0.0;
    double se_test = 0.0;
};

struct DLMGap {
    std::string a, b;  // test accuracy of a minus b
    double gap = 0.0;
    double se = 0.0;
    TTest test;
};

struct DLMReport {
    int runs = 0;
    double holdout = 0.0;
    std::string pool_mode;
    std::vector<DLMSourceResult> sources;
    std::vector<DLMGap> gaps;
    double majority = 0.0;            // mean over runs
    PermutationBaseline permutation;  // on the first source
};

// Train/evaluate the embedding-to-contour map against each contour source
// (typically word-denoised, tone-denoised, baseline-denoised) under shared
// stratified splits. All sources must cover exactly the same token ids.
DLMReport run_dlm_experiment(const EmbeddingSet& embeddings,
                             const std::vector<ContourMatrix>& sources,
                             const std::map<std::string, std::string>& word_of, int runs,
                             std::uint64_t seed, const DLMOptions& options = {});

// Label-permutation control: shuffle the word labels over tokens, restratify
// by the permuted labels, retrain, evaluate. Reported accuracy should hover
// near the majority baseline.
PermutationBaseline permutation_baseline(const EmbeddingSet& embeddings,
                                         const ContourMatrix& source,
                                         const std::map<std::string, std::string>& word_of,
                                         int runs, std::uint64_t seed,
                                         const DLMOptions& options = {});

struct CentroidCheck {
    std::string word;
    double r = 0.0;
    double rmse = 0.0;
};

// Push each word's mean training embedding through the map and compare the
// resulting contour against that word's partial effect from the fit. Both
// sides are centered before comparison.
std::vector<CentroidCheck> centroid_contour_check(const MappingModel& model,
                                                  const EmbeddingSet& embeddings,
                                                  const std::map<std::string, std::string>& word_of,
                                                  const FitResult& fit);

std::string dlm_json(const DLMReport& report);

}  // namespace tonelab
