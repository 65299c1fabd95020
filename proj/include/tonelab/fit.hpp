#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tonelab/design.hpp"

namespace tonelab {

struct FitResult {
    ModelLayout layout;
    Eigen::VectorXd beta;
    std::vector<double> lambdas;  // one per penalty matrix
    double rho = 0.0;
    double edf = 0.0;
    double sigma2 = 0.0;
    double aic = 0.0;
    double gcv = 0.0;
    double rss_w = 0.0;
    double tss_w = 0.0;
    double r2 = 0.0;
    long n = 0;
    int p = 0;
    std::map<std::string, double> term_edf;
    Eigen::MatrixXd vbeta;       // penalized covariance, sigma2 * M^-1
    Eigen::VectorXd residuals_w; // whitened residuals per row
    std::vector<std::pair<int, int>> token_spans;
    std::vector<std::string> token_ids;
    bool unseen_levels = false;  // set by prediction helpers
};

struct PartialEffect {
    std::string term;
    std::string level;
    std::vector<double> grid;    // 100 covariate values
    std::vector<double> values;  // model scale
    std::vector<double> se;
};

// Minimizes |W(y - Xb)|^2 + sum_j lambda_j b'S_j b, W = AR(1) whitening.
FitResult fit_penalized(const Design& design, const std::vector<double>& lambdas, double rho);

struct LambdaSearch {
    std::vector<double> lambdas;    // per penalty, groups expanded
    std::vector<double> gcv_trace;  // after every accepted coordinate update
    double gcv = 0.0;
};

// Coordinate descent over per-group log10 lambda in [-4,8] (step 0.5),
// starting at lambda=1, until GCV improves < 1e-6 relative or 20 cycles.
// Penalties sharing a group (factor smooths) move together; the fs ridge
// lambda is ridge_ratio times the group value.
LambdaSearch select_lambdas(const Design& design, double rho, double fs_ridge_ratio = 1.0);

double aic(const FitResult& fit);

std::vector<double> predict(const FitResult& fit, const std::vector<PredictRow>& rows);

PartialEffect partial_effect(const FitResult& fit, const std::string& term_label,
                             const std::string& level = "");

// Pooled within-token lag autocorrelation of the whitened residuals.
double residual_acf(const FitResult& fit, int lag);

// Lag-1 autocorrelation pooled within spans of an arbitrary series.
double pooled_lag1(const Eigen::VectorXd& values,
                   const std::vector<std::pair<int, int>>& spans);

// Convenience: GCV-selected fit, optionally estimating rho from the lag-1
// autocorrelation of an initial rho=0 fit's unwhitened residuals.
struct FitOptions {
    double rho = 0.9;
    bool estimate_rho = false;
    double fs_ridge_ratio = 1.0;
    bool select = true;                        // run GCV selection
    std::vector<double> fixed_lambdas;         // used when select = false
};
FitResult fit_model(const Design& design, const FitOptions& options);

}  // namespace tonelab
