#pragma once

#include <string>

#include "tonelab/fit.hpp"

namespace tonelab {

// JSON round-trip of a fitted model: layout (spec, factor registries,
// covariate ranges, per-term geometry), coefficients, lambdas, rho, and the
// scalar fit summaries. The coefficient covariance and per-row residuals are
// deliberately not stored; a reloaded fit predicts bit-identically but
// reports no pointwise standard errors.
void save_fit(const FitResult& fit, const std::string& path);
FitResult load_fit(const std::string& path);

std::string fit_summary_json(const FitResult& fit);

}  // namespace tonelab
