#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tonelab/embeddings.hpp"
#include "tonelab/fit.hpp"
#include "tonelab/types.hpp"

namespace tonelab {

struct GenConfig {
    int n_speakers = 20;
    int n_words = 40;
    int senses_per_word = 2;  // word w gets 1 + (w mod this) senses, max 3
    int embedding_dim = 32;
    double noise_sigma = 0.08;  // marginal sd of the AR(1) log-F0 noise
    double ar1_rho = 0.9;
    double signature_amplitude = 0.15;  // RMS of word signatures, log units
    double tone_amplitude = 0.05;       // RMS of canonical-tone curves
    // Tokens for the word of rank r: clamp(round(mass/(r+1)^exponent), floor, cap).
    double zipf_mass = 450.0;
    double zipf_exponent = 0.6;
    int zipf_floor = 12;
    int zipf_cap = 220;
    std::uint64_t seed = 1;
};

// Additive components of the generated log-F0, all curves tabulated on the
// 100-point normalized-time grid. Sense offsets are token-weighted centered
// within each word, so the word signature is the word-level expectation.
struct GroundTruth {
    std::vector<double> grid;
    std::map<std::string, std::vector<double>> word_signature;
    std::map<std::string, std::vector<double>> sense_offset;
    std::map<std::string, std::vector<double>> speaker_curve;
    std::map<std::string, std::vector<double>> tone_curve;
    std::map<std::string, double> toneseq_intercept;
    std::map<std::string, double> gender_offset;
    std::map<std::string, std::string> word_tone;
    double mu = 5.0;
    double position_slope = -0.08;
    double duration_coeff = 0.05;
    double duration_ref_log = 0.0;
};

struct GenOutput {
    Corpus corpus;
    EmbeddingSet embeddings;
    GroundTruth truth;
};

// log-F0(t) = mu + gender + speaker_curve(t) + tone_curve(t) + signature(t)
//           + sense_offset(t) + toneseq_intercept + position + duration
//           surface + AR(1) noise; samples every 5 ms; embeddings cluster by
// word, then sense, then token.
GenOutput generate(const GenConfig& config);

void write_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

struct RecoveryRow {
    std::string component;  // word | speaker | tone
    std::string level;
    double r = 0.0;  // NaN when either centered curve is constant
    double rmse = 0.0;
    long n_tokens = 0;  // 0 when no corpus was supplied
};

// Compares each fitted factor-smooth partial effect against the generated
// component on the shared grid, both curves centered. Components whose term
// is absent from the fitted spec are skipped.
std::vector<RecoveryRow> recovery_score(const FitResult& fit, const GroundTruth& truth,
                                        const Corpus* corpus = nullptr);

}  // namespace tonelab
