#include <cmath>
#include <vector>

#include "doctest.h"
#include "tonelab/rng.hpp"
#include "tonelab/stats.hpp"

using namespace tonelab;

TEST_CASE("mean and sample variance on a hand-checked fixture") {
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(mean(v) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(sample_variance(v) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
    CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("skewness: symmetric is zero, right tail is positive") {
    CHECK(skewness({1, 2, 3}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(skewness({1, 1, 1, 10}) > 0.5);
    CHECK_THROWS_AS(skewness({2, 2, 2}), std::invalid_argument);
    // Large symmetric sample stays near zero.
    Rng r(31);
    std::vector<double> z;
    for (int i = 0; i < 20000; ++i) z.push_back(r.normal());
    CHECK(std::abs(skewness(z)) < 0.05);
}

TEST_CASE("log-normal draws skew less after the log transform") {
    Rng r(77);
    std::vector<double> raw, logged;
    for (int i = 0; i < 30000; ++i) {
        const double f = r.lognormal(5.0, 0.25);
        raw.push_back(f);
        logged.push_back(std::log(f));
    }
    CHECK(skewness(logged) < skewness(raw));
}

TEST_CASE("pearson correlation on hand fixtures") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pearson({1, 2, 3}, {1, 2, 4}) ==
          doctest::Approx(0.9819805060619659).epsilon(1e-12));
    CHECK_THROWS_AS(pearson({1, 1}, {2, 3}), std::invalid_argument);
}

TEST_CASE("quantile interpolates linearly") {
    const std::vector<double> v{4, 1, 3, 2};  // unsorted on purpose
    CHECK(quantile(v, 0.0) == doctest::Approx(1.0));
    CHECK(quantile(v, 1.0) == doctest::Approx(4.0));
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
    CHECK(median({3, 1, 2}) == doctest::Approx(2.0));
    CHECK(median({3, 1, 2, 10}) == doctest::Approx(2.5));
}

TEST_CASE("lag-1 autocorrelation signs") {
    std::vector<double> alt, ramp;
    for (int i = 0; i < 200; ++i) {
        alt.push_back(i % 2 == 0 ? 1.0 : -1.0);
        ramp.push_back(static_cast<double>(i));
    }
    CHECK(lag1_autocorrelation(alt) < -0.9);
    CHECK(lag1_autocorrelation(ramp) > 0.9);
}

TEST_CASE("rmse on a 3-4-5 fixture") {
    CHECK(rmse({0, 0}, {3, 4}) == doctest::Approx(3.5355339059327378).epsilon(1e-12));
    CHECK_THROWS_AS(rmse({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("welch t: identical samples give t=0, p=1") {
    const std::vector<double> a{1, 2, 3, 4};
    const TTest r = welch_t(a, a);
    CHECK(r.t == doctest::Approx(0.0));
    CHECK(r.p == doctest::Approx(1.0));
}

TEST_CASE("welch t on the {1,2,3,4} vs {2,3,4,5} fixture") {
    // Equal variances 5/3, n=4 each: SE = sqrt(5/6), t = -1/SE,
    // Satterthwaite df exactly 6. Verified against scipy.stats.ttest_ind
    // (equal_var=False): t=-1.0954451150103321, p=0.31533359620122965.
    const TTest r = welch_t({1, 2, 3, 4}, {2, 3, 4, 5});
    CHECK(r.t == doctest::Approx(-1.0954451150103321).epsilon(1e-12));
    CHECK(r.df == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(r.p == doctest::Approx(0.31533359620122965).epsilon(1e-9));
}

TEST_CASE("welch t separates shifted normals decisively") {
    Rng r(101);
    std::vector<double> a, b;
    for (int i = 0; i < 100; ++i) {
        a.push_back(r.normal());
        b.push_back(r.normal(1.0, 1.0));
    }
    const TTest w = welch_t(a, b);
    CHECK(w.p < 0.001);
    CHECK(w.t < 0.0);
}

TEST_CASE("welch t rejects degenerate input") {
    CHECK_THROWS_AS(welch_t({1, 1, 1}, {2, 2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(welch_t({1}, {2, 3}), std::invalid_argument);
}

TEST_CASE("paired t on a hand-solved fixture") {
    // diffs {1,2,3}: mean 2, sd 1, t = 2*sqrt(3), df 2,
    // p = 1 - t/sqrt(t^2+2) = 0.07417990022744847.
    const TTest r = paired_t({1, 2, 3});
    CHECK(r.t == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(r.df == doctest::Approx(2.0));
    CHECK(r.p == doctest::Approx(0.07417990022744847).epsilon(1e-9));
}

TEST_CASE("student t cdf reference points") {
    CHECK(student_t_cdf(0.0, 5.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(student_t_cdf(-1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-12));
}
