#include "tonelab/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>

namespace tonelab {

double mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("sample_variance: need at least 2 values");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double sample_sd(const std::vector<double>& v) { return std::sqrt(sample_variance(v)); }

double skewness(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("skewness: need at least 2 values");
    const double m = mean(v);
    double m2 = 0.0, m3 = 0.0;
    for (double x : v) {
        const double d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    const double n = static_cast<double>(v.size());
    m2 /= n;
    m3 /= n;
    if (m2 <= 0.0) throw std::invalid_argument("skewness: zero variance");
    return m3 / std::pow(m2, 1.5);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 pairs");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw std::invalid_argument("pearson: zero variance input");
    return sxy / std::sqrt(sxx * syy);
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty input");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0, 1]");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double lag1_autocorrelation(const std::vector<double>& v) {
    if (v.size() < 3) throw std::invalid_argument("lag1_autocorrelation: need at least 3 values");
    const double m = mean(v);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - m;
        den += d * d;
        if (i + 1 < v.size()) num += d * (v[i + 1] - m);
    }
    if (den <= 0.0) throw std::invalid_argument("lag1_autocorrelation: zero variance");
    return num / den;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("rmse: length mismatch");
    if (a.empty()) throw std::invalid_argument("rmse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

double student_t_cdf(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("student_t_cdf: df must be positive");
    boost::math::students_t dist(df);
    return boost::math::cdf(dist, t);
}

TTest welch_t(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch_t: each group needs at least 2 values");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = sample_variance(a) / na;
    const double vb = sample_variance(b) / nb;
    if (va + vb <= 0.0) throw std::invalid_argument("welch_t: zero variance in both groups");
    TTest r;
    r.t = (mean(a) - mean(b)) / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) /
           (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p = 2.0 * (1.0 - student_t_cdf(std::fabs(r.t), r.df));
    return r;
}

TTest paired_t(const std::vector<double>& diffs) {
    if (diffs.size() < 2) throw std::invalid_argument("paired_t: need at least 2 differences");
    const double n = static_cast<double>(diffs.size());
    const double m = mean(diffs);
    const double sd = sample_sd(diffs);
    if (sd <= 0.0) throw std::invalid_argument("paired_t: zero variance differences");
    TTest r;
    r.t = m / (sd / std::sqrt(n));
    r.df = n - 1.0;
    r.p = 2.0 * (1.0 - student_t_cdf(std::fabs(r.t), r.df));
    return r;
}

}  // namespace tonelab
