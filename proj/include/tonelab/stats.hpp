#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tonelab {

double mean(const std::vector<double>& v);
// Unbiased sample variance (n - 1 denominator).
double sample_variance(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

// Moment skewness g1 = m3 / m2^(3/2) with biased central moments.
double skewness(const std::vector<double>& v);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);
double median(std::vector<double> v);

// Lag-1 sample autocorrelation of a single series.
double lag1_autocorrelation(const std::vector<double>& v);

double rmse(const std::vector<double>& a, const std::vector<double>& b);

struct TTest {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;  // two sided
};

// Welch statistic with Satterthwaite degrees of freedom.
TTest welch_t(const std::vector<double>& a, const std::vector<double>& b);

// One-sample t of paired differences against zero mean.
TTest paired_t(const std::vector<double>& diffs);

// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

}  // namespace tonelab
