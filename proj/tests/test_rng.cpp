#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "tonelab/rng.hpp"

using tonelab::Rng;

TEST_CASE("splitmix64 matches the published reference sequence") {
    std::uint64_t x = 0;
    CHECK(Rng::splitmix64(x) == 0xE220A8397B1DCDAFULL);
    CHECK(Rng::splitmix64(x) == 0x6E789E6AA1B965F4ULL);
    CHECK(Rng::splitmix64(x) == 0x06C45D188009454FULL);
    CHECK(Rng::splitmix64(x) == 0xF88BB8A8724C81ECULL);
}

TEST_CASE("identical seeds give identical streams, different seeds differ") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        if (va != b.next_u64()) all_equal = false;
        if (va != c.next_u64()) any_diff = true;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform stays in [0,1) and matches its range overload") {
    Rng r(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
    Rng s(7);
    for (int i = 0; i < 100; ++i) {
        const double v = s.uniform(-2.0, 3.0);
        CHECK(v >= -2.0);
        CHECK(v < 3.0);
    }
}

TEST_CASE("below is bounded, rejects n=0, and is roughly uniform") {
    Rng r(11);
    CHECK_THROWS_AS(r.below(0), std::invalid_argument);
    std::vector<int> counts(5, 0);
    const int draws = 50000;
    for (int i = 0; i < draws; ++i) {
        const auto v = r.below(5);
        REQUIRE(v < 5);
        ++counts[static_cast<std::size_t>(v)];
    }
    // 5 sigma around draws/5 with sigma = sqrt(n p (1-p)).
    const double expect = draws / 5.0;
    const double sigma = std::sqrt(draws * 0.2 * 0.8);
    for (int c : counts) {
        CHECK(std::abs(c - expect) < 5.0 * sigma);
    }
    for (int i = 0; i < 50; ++i) CHECK(r.below(1) == 0);
}

TEST_CASE("normal draws have the requested moments") {
    Rng r(123);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sumsq += z * z;
    }
    const double m = sum / n;
    const double v = sumsq / n - m * m;
    CHECK(std::abs(m) < 0.01);
    CHECK(std::abs(v - 1.0) < 0.02);

    double shifted = 0.0;
    for (int i = 0; i < n / 10; ++i) shifted += r.normal(5.0, 0.25);
    CHECK(std::abs(shifted / (n / 10) - 5.0) < 0.01);
}

TEST_CASE("lognormal draws have the requested log moments") {
    Rng r(9);
    const int n = 50000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = r.lognormal(-2.0, 0.3);
        CHECK(d > 0.0);
        sum += std::log(d);
    }
    CHECK(std::abs(sum / n + 2.0) < 0.01);
}

TEST_CASE("shuffle permutes and is seed-stable") {
    std::vector<int> v(100);
    for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i;
    std::vector<int> a = v, b = v;
    Rng r1(5), r2(5);
    r1.shuffle(a);
    r2.shuffle(b);
    CHECK(a == b);
    CHECK(a != v);  // astronomically unlikely to be identity
    std::vector<int> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == v);
}

TEST_CASE("fork derives stable, label-separated streams") {
    Rng root(2024);
    Rng f1 = root.fork("alpha");
    Rng f2 = root.fork("alpha");
    Rng g = root.fork("beta");
    bool same = true, diff = false;
    for (int i = 0; i < 32; ++i) {
        const auto v = f1.next_u64();
        if (v != f2.next_u64()) same = false;
        if (v != g.next_u64()) diff = true;
    }
    CHECK(same);
    CHECK(diff);
}
