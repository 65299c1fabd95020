#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tonelab/basis.hpp"
#include "tonelab/scales.hpp"
#include "tonelab/types.hpp"

namespace tonelab {

enum class TermKind { parametric, smooth, by_smooth, tensor, factor_smooth, random_intercept };

struct TermSpec {
    TermKind kind = TermKind::smooth;
    std::string cov;     // time | log_dur | utt_pos
    std::string cov2;    // tensor second covariate
    std::string factor;  // gender | vowel | speaker | word | sense | tone | tone_seq
    int k = 10;
    int k2 = 5;
    int m = 1;  // factor-smooth difference order

    std::string label() const;
};

struct ModelSpec {
    std::string name = "baseline";
    std::string core = "none";  // none | tone_pattern | word | word_sense
    std::vector<TermSpec> terms;
};

struct TermLayout {
    TermSpec spec;
    int col_start = 0;
    int width = 0;
    std::vector<double> knots;
    std::vector<double> knots2;
    std::vector<Eigen::VectorXd> constraints;  // per sub-block centering vectors
    std::vector<std::string> levels;
    std::vector<int> penalty_ids;  // indices into Design::penalties
    std::vector<Eigen::MatrixXd> z;  // null-space transforms; derived, not serialized
};

struct ModelLayout {
    F0Scale scale;
    ModelSpec spec;
    // Attested factor levels frozen at assembly, sorted; first = reference.
    std::vector<std::string> genders, vowels, speakers, words, senses, tones, tone_seqs;
    std::map<std::string, std::array<double, 2>> cov_range;
    std::vector<TermLayout> terms;
    int n_cols = 0;

    const std::vector<std::string>& levels_of(const std::string& factor) const;
    std::array<double, 2> range_of(const std::string& cov) const;
};

struct PenaltyBlock {
    int col_start = 0;
    Eigen::MatrixXd s;
    int group = 0;
    double ratio = 1.0;       // multiplies the group's lambda
    std::string role;         // smooth | by | tensor_a | tensor_b | fs_diff | fs_ridge | ridge
    std::string term_label;
};

// One observation row's covariates, factor values resolved to level indices
// in the owning layout's registries (-1 = level unseen there).
struct RowX {
    double time = 0.0;
    double log_dur = 0.0;
    double utt_pos = 0.0;
    int gender = -1, vowel = -1, speaker = -1, word = -1, sense = -1, tone = -1,
        tone_seq = -1;
};

// Covariates of a prediction row by name; factors as labels.
struct PredictRow {
    double time = 0.0;
    double duration_s = 0.1;
    double utt_pos = 0.5;
    std::string gender, vowel, speaker, word, sense, tone;
    std::optional<std::string> prev_tone, next_tone;
    bool explicit_tone_seq = false;
    std::string tone_seq;  // used when explicit_tone_seq
};

struct WhitenedStats {
    Eigen::MatrixXd a0;  // Xw' Xw
    Eigen::VectorXd b;   // Xw' yw
    double yty = 0.0;
    double tss = 0.0;  // about the whitened mean
    long n = 0;
};

struct Design {
    ModelLayout layout;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::pair<int, int>> token_spans;  // row start, count per token
    std::vector<std::string> token_ids;
    std::vector<PenaltyBlock> penalties;
    int n_groups = 0;

    const WhitenedStats& whitened_stats(double rho) const;
    void reset_cache() { cache_.reset(); cache_rho_ = -1.0; }

private:
    mutable std::shared_ptr<WhitenedStats> cache_;
    mutable double cache_rho_ = -1.0;
};

// Parametric block (intercept, gender, vowel dummies) followed by one block
// per term in declaration order; response = transformed F0; duration enters
// as its natural log; time normalized per token.
std::shared_ptr<Design> assemble_design(const ModelSpec& spec, const Corpus& corpus,
                                        const F0Scale& scale = F0Scale{});

// Same design with AR(1) whitening applied in place of X and y: within each
// token row_t <- row_t - rho*row_{t-1}, first row scaled by sqrt(1-rho^2).
std::shared_ptr<Design> whiten_ar1(const Design& design, double rho);

// Rebuilds derived per-term data (constraint null-space transforms) after
// assembly or deserialization.
void finalize_layout(ModelLayout& layout);

// True when a factor consumed by some term resolves to no known level.
bool layout_row_unseen(const ModelLayout& layout, const RowX& row);

// Evaluation of a single design row from covariates (prediction path).
// Sets unseen when a factor level is unknown to the layout.
void eval_row_into(const ModelLayout& layout, const RowX& row, Eigen::RowVectorXd& out);
Eigen::RowVectorXd eval_row(const ModelLayout& layout, const RowX& row);
// Contribution of a single term's block to the row (columns outside the term zero).
void eval_term_into(const ModelLayout& layout, const TermLayout& term, const RowX& row,
                    Eigen::RowVectorXd& out);
RowX resolve_row(const ModelLayout& layout, const PredictRow& row, bool* unseen);
RowX resolve_token(const ModelLayout& layout, const TokenRecord& token, double time,
                   bool* unseen);

}  // namespace tonelab
