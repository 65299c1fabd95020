#pragma once

// Run configuration loaded from a sectioned key=value file.
//
// Grammar: `[section]` headers, `key = value` lines, `#` or `;` full-line
// comments, blank lines ignored, whitespace around keys and values trimmed.
// Scalar keys repeat last-wins; the list keys `model`, `term`, and `source`
// append in order. Keys before any section header are global.
//
//   seed = 1                 # global: seed, threads, outdir
//   threads = 1
//   outdir = out
//
//   [data]                   # tokens, samples, embeddings, ground_truth
//   tokens = out/tokens.csv
//   samples = out/samples.csv
//
//   [scale]                  # scale = log|semitone|mel|erb|bark|hz, ref_hz
//
//   [preprocess]             # enabled, octave_threshold, min_samples,
//                            # cap_per_word, min_word_freq, min_sense_support
//
//   [fit]                    # core, rho, estimate_rho, fs_ridge_ratio
//
//   [models]                 # model = baseline|tone_pattern|word|word_sense
//   model = baseline         # or the name of a [model NAME] section
//   model = word
//
//   [model custom]           # ordered term list defining a custom spec
//   term = param(gender)
//   term = s(time, by=gender, k=10)
//
//   [cv]                     # runs, holdout
//
//   [dlm]                    # runs, holdout, ridge, pool_mode,
//                            # permutation_runs, and labeled contour inputs:
//   source = word=out_word/contours.tsv
//
//   [synth]                  # speakers, words, senses_per_word,
//                            # embedding_dim, noise_sigma, ar1_rho,
//                            # signature_amplitude, tone_amplitude,
//                            # zipf_mass, zipf_exponent, zipf_floor, zipf_cap
//
// Term grammar: kind(args) with positional names first, options after.
//   param(gender)            factor as dummy-coded parametric term
//   s(time)                  smooth; options k, by (by= makes it a by-smooth)
//   ti(time, log_dur)        tensor interaction; options k, k2 (default 5,5)
//   fs(time, speaker)        factor smooth; factor positional or by=; k, m
//   re(tone_seq)             random intercept

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tonelab/design.hpp"
#include "tonelab/scales.hpp"
#include "tonelab/synthgen.hpp"
#include "tonelab/types.hpp"

namespace tonelab {

TermSpec parse_term(const std::string& text);

struct DLMSource {
    std::string label;
    std::string path;
};

struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 1;
    std::string outdir = "out";

    std::string tokens_path;
    std::string samples_path;
    std::string embeddings_path;
    std::string ground_truth_path;

    F0Scale scale;

    bool preprocess_enabled = true;
    PreprocessRules preprocess;

    std::string core = "none";
    double rho = 0.9;
    bool estimate_rho = false;
    double fs_ridge_ratio = 1.0;

    std::vector<ModelSpec> models;

    int cv_runs = 10;
    double cv_holdout = 0.1;

    int dlm_runs = 30;
    double dlm_holdout = 0.2;
    double dlm_ridge = 1e-8;
    std::string pool_mode = "union";
    int permutation_runs = 30;
    std::vector<DLMSource> dlm_sources;

    GenConfig gen;
};

// Parses the file and resolves model names against built-in cores and
// [model NAME] sections. Unknown sections or keys are ConfigError so typos
// fail loudly.
RunConfig load_run_config(const std::string& path);

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> outdir;
    std::optional<int> threads;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

}  // namespace tonelab
