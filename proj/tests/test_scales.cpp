#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tonelab/errors.hpp"
#include "tonelab/scales.hpp"

using namespace tonelab;

namespace {
F0Scale make(ScaleKind k, double ref = 50.0) {
    F0Scale s;
    s.kind = k;
    s.ref_hz = ref;
    return s;
}
}  // namespace

TEST_CASE("transform formulas at reference points") {
    CHECK(transform_f0(100.0, make(ScaleKind::log)) ==
          doctest::Approx(4.605170185988092).epsilon(1e-14));
    CHECK(transform_f0(700.0, make(ScaleKind::mel)) ==
          doctest::Approx(781.1728387480312).epsilon(1e-12));
    CHECK(transform_f0(1000.0, make(ScaleKind::erb)) ==
          doctest::Approx(15.621449713970488).epsilon(1e-12));
    CHECK(transform_f0(1000.0, make(ScaleKind::bark)) ==
          doctest::Approx(8.510531510721993).epsilon(1e-12));
    CHECK(transform_f0(123.0, make(ScaleKind::hz)) == doctest::Approx(123.0));
    // Semitone of the reference is zero; one octave above is +12.
    for (double r : {50.0, 100.0, 173.2}) {
        CHECK(transform_f0(r, make(ScaleKind::semitone, r)) ==
              doctest::Approx(0.0).epsilon(1e-12));
        CHECK(transform_f0(2.0 * r, make(ScaleKind::semitone, r)) ==
              doctest::Approx(12.0).epsilon(1e-12));
    }
}

TEST_CASE("transform rejects nonpositive f0") {
    CHECK_THROWS_AS(transform_f0(0.0, make(ScaleKind::log)), std::domain_error);
    CHECK_THROWS_AS(transform_f0(-5.0, make(ScaleKind::mel)), std::domain_error);
}

TEST_CASE("round trips through every scale") {
    for (double f : {60.0, 100.0, 250.0, 400.0}) {
        for (ScaleKind k : {ScaleKind::hz, ScaleKind::log, ScaleKind::semitone,
                            ScaleKind::erb, ScaleKind::mel}) {
            const F0Scale s = make(k);
            CHECK(inverse_transform(transform_f0(f, s), s) ==
                  doctest::Approx(f).epsilon(1e-9));
        }
        const F0Scale b = make(ScaleKind::bark);
        CHECK(std::abs(inverse_transform(transform_f0(f, b), b) - f) < 1e-4);
    }
    CHECK(inverse_transform(4.605170185988092, make(ScaleKind::log)) ==
          doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("inverse rejects out-of-range values") {
    CHECK_THROWS_AS(inverse_transform(-5.0, make(ScaleKind::mel)), std::domain_error);
    CHECK_THROWS_AS(inverse_transform(-1.0, make(ScaleKind::erb)), std::domain_error);
}

TEST_CASE("all transforms are strictly monotone") {
    for (ScaleKind k : {ScaleKind::hz, ScaleKind::log, ScaleKind::semitone,
                        ScaleKind::erb, ScaleKind::mel, ScaleKind::bark}) {
        const F0Scale s = make(k);
        double prev = transform_f0(60.0, s);
        for (double f = 61.0; f <= 400.0; f += 1.0) {
            const double cur = transform_f0(f, s);
            CHECK(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("scale parsing round-trips names and validates") {
    for (const char* n : {"hz", "log", "semitone", "erb", "mel", "bark"}) {
        CHECK(F0Scale::parse(n).name() == n);
    }
    CHECK_THROWS_AS(F0Scale::parse("cents"), ConfigError);
    CHECK(F0Scale::parse("semitone", 100.0).ref_hz == doctest::Approx(100.0));
}

TEST_CASE("normalize_time maps affinely onto [0,1]") {
    {
        const auto t = normalize_time({10.0, 20.0, 30.0});
        REQUIRE(t.size() == 3);
        CHECK(t[0] == doctest::Approx(0.0));
        CHECK(t[1] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(t[2] == doctest::Approx(1.0));
    }
    {
        const auto t = normalize_time({0.0, 5.0, 15.0});
        CHECK(t[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(normalize_time({7.0}), std::invalid_argument);
}

TEST_CASE("normalize_time is invariant under affine input rescaling") {
    const std::vector<double> base{3.0, 4.5, 7.25, 11.0};
    std::vector<double> scaled;
    for (double v : base) scaled.push_back(2.5 * v + 17.0);
    const auto a = normalize_time(base);
    const auto b = normalize_time(scaled);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("hz_span on the hand fixture and degenerate inputs") {
    std::vector<double> contour(100, 0.0);
    contour[10] = -0.1;
    contour[90] = 0.1;
    CHECK(hz_span(contour, 5.0) == doctest::Approx(29.732127614966174).epsilon(1e-12));
    CHECK(hz_span(std::vector<double>(100, 0.3), 5.0) == doctest::Approx(0.0));
    CHECK(hz_span({}, 5.0) == doctest::Approx(0.0));
}
