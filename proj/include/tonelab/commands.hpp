#pragma once

// Batch pipeline commands. Each command reads what it needs from the run
// configuration, writes fixed-name outputs under outdir, and throws
// ParseError/ConfigError/DataError on failure; run_cli maps those to exit
// codes 1/2/3.

#include <string>
#include <vector>

#include "tonelab/config.hpp"

namespace tonelab {

// Writes tokens.csv, samples.csv, embeddings.csv, ground_truth.json.
void cmd_synth(const RunConfig& config);

// Fits the spec selected by `core` (a built-in core predictor name or a
// model listed in the config) and writes fit.json, partials.tsv,
// contours.tsv.
void cmd_fit(const RunConfig& config, const std::string& core);

// Fits every configured model on the same rows and writes comparison.json.
void cmd_compare(const RunConfig& config);

// Stratified cross-validation over the configured models; writes
// cvreport.json.
void cmd_cv(const RunConfig& config);

// Trains and evaluates the embedding-to-contour map on each configured
// contour source; writes evalreport.json.
void cmd_dlm(const RunConfig& config);

// Full argv-level entry point (argv[0] excluded). Returns the process exit
// code.
int run_cli(const std::vector<std::string>& args);

}  // namespace tonelab
