#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tonelab/design.hpp"
#include "tonelab/errors.hpp"

using namespace tonelab;
using tltest::toy_corpus;

namespace {

TermSpec param(const std::string& factor) {
    TermSpec t;
    t.kind = TermKind::parametric;
    t.factor = factor;
    return t;
}

TermSpec smooth(const std::string& cov, int k) {
    TermSpec t;
    t.kind = TermKind::smooth;
    t.cov = cov;
    t.k = k;
    return t;
}

TermSpec by_smooth(const std::string& cov, const std::string& factor, int k) {
    TermSpec t;
    t.kind = TermKind::by_smooth;
    t.cov = cov;
    t.factor = factor;
    t.k = k;
    return t;
}

TermSpec tensor(const std::string& a, const std::string& b, int ka, int kb) {
    TermSpec t;
    t.kind = TermKind::tensor;
    t.cov = a;
    t.cov2 = b;
    t.k = ka;
    t.k2 = kb;
    return t;
}

TermSpec fs(const std::string& cov, const std::string& factor, int k, int m = 1) {
    TermSpec t;
    t.kind = TermKind::factor_smooth;
    t.cov = cov;
    t.factor = factor;
    t.k = k;
    t.m = m;
    return t;
}

TermSpec re(const std::string& factor) {
    TermSpec t;
    t.kind = TermKind::random_intercept;
    t.factor = factor;
    return t;
}

ModelSpec baseline_spec() {
    ModelSpec s;
    s.name = "baseline";
    s.terms = {param("gender"),
               param("vowel"),
               by_smooth("time", "gender", 10),
               by_smooth("log_dur", "gender", 10),
               tensor("time", "log_dur", 5, 5),
               fs("time", "speaker", 5),
               re("tone_seq"),
               smooth("utt_pos", 4)};
    return s;
}

}  // namespace

TEST_CASE("baseline design has the hand-computed column count") {
    const Corpus c = toy_corpus(1);
    const Design d = *assemble_design(baseline_spec(), c);
    // intercept 1, gender dummy 1, vowel dummies 2, two by-gender smooths
    // 2*(10-1) each, ti (5-1)*(5-1), speaker fs 4*5, tone_seq re L, utt_pos 4-1.
    const int expect = 1 + 1 + 2 + 18 + 18 + 16 + 20 +
                       static_cast<int>(c.tone_seqs.size()) + 3;
    CHECK(d.layout.n_cols == expect);
    CHECK(d.x.cols() == expect);
    long rows = 0;
    for (const auto& t : c.tokens) rows += static_cast<long>(t.samples.size());
    CHECK(d.x.rows() == rows);
    CHECK(d.token_spans.size() == c.tokens.size());
    CHECK(d.token_ids.size() == c.tokens.size());
}

TEST_CASE("a 95-word factor smooth block spans 475 columns") {
    const Corpus c = toy_corpus(2, 95, 4, 2);
    ModelSpec s = baseline_spec();
    s.name = "word";
    s.core = "word";
    s.terms.push_back(fs("time", "word", 5));
    const Design d = *assemble_design(s, c);
    const TermLayout& last = d.layout.terms.back();
    CHECK(last.spec.label() == "fs(time,word)");
    CHECK(last.width == 475);

    // Dropping the term shrinks the design by exactly its width.
    ModelSpec base = baseline_spec();
    const Design d0 = *assemble_design(base, c);
    CHECK(d.layout.n_cols - d0.layout.n_cols == 475);
}

TEST_CASE("centered blocks have zero column sums over the data") {
    const Corpus c = toy_corpus(3);
    const Design d = *assemble_design(baseline_spec(), c);
    const double tol = 1e-10 * static_cast<double>(d.x.rows());
    for (const auto& term : d.layout.terms) {
        // Tensor blocks multiply centered marginals; the products themselves
        // do not have zero column sums, so only direct smooths qualify.
        const bool centered = term.spec.kind == TermKind::smooth ||
                              term.spec.kind == TermKind::by_smooth;
        if (!centered) continue;
        const Eigen::RowVectorXd sums =
            d.x.middleCols(term.col_start, term.width).colwise().sum();
        INFO(term.spec.label());
        CHECK(sums.cwiseAbs().maxCoeff() <= tol);
    }
}

TEST_CASE("parametric block encodes reference-level dummies") {
    const Corpus c = toy_corpus(4);
    const Design d = *assemble_design(baseline_spec(), c);
    // Column 0 is the intercept.
    CHECK((d.x.col(0).array() == 1.0).all());
    // Gender dummy is column of term 0: 1 for M rows (levels sorted F,M).
    const TermLayout& g = d.layout.terms[0];
    REQUIRE(g.width == 1);
    long row = 0;
    for (std::size_t ti = 0; ti < c.tokens.size(); ++ti) {
        const auto& tok = c.tokens[ti];
        for (std::size_t si = 0; si < tok.samples.size(); ++si, ++row) {
            const double want = tok.gender == "M" ? 1.0 : 0.0;
            CHECK(d.x(row, g.col_start) == want);
        }
    }
}

TEST_CASE("evaluating rows through the layout reproduces assembled rows") {
    const Corpus c = toy_corpus(5);
    ModelSpec s = baseline_spec();
    s.terms.push_back(fs("time", "word", 5));
    const Design d = *assemble_design(s, c);

    Eigen::RowVectorXd out(d.layout.n_cols);
    long row = 0;
    for (const auto& tok : c.tokens) {
        std::vector<double> times;
        for (const auto& smp : tok.samples) times.push_back(smp.time_s);
        const auto tnorm = normalize_time(times);
        for (std::size_t si = 0; si < tok.samples.size(); ++si, ++row) {
            bool unseen = false;
            const RowX rx = resolve_token(d.layout, tok, tnorm[si], &unseen);
            CHECK_FALSE(unseen);
            eval_row_into(d.layout, rx, out);
            const double diff = (out - d.x.row(row)).cwiseAbs().maxCoeff();
            REQUIRE(diff <= 1e-11);
        }
    }
}

TEST_CASE("assembly is deterministic") {
    const Corpus c = toy_corpus(6);
    const Design a = *assemble_design(baseline_spec(), c);
    const Design b = *assemble_design(baseline_spec(), c);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("response is the transformed f0") {
    const Corpus c = toy_corpus(7);
    const Design d = *assemble_design(baseline_spec(), c);
    long row = 0;
    for (const auto& tok : c.tokens)
        for (const auto& smp : tok.samples)
            CHECK(d.y(row++) == doctest::Approx(std::log(smp.f0_hz)).epsilon(1e-14));
}

TEST_CASE("whitening at rho=0 is the identity") {
    const Corpus c = toy_corpus(8);
    const Design d = *assemble_design(baseline_spec(), c);
    const auto w = whiten_ar1(d, 0.0);
    CHECK((w->x - d.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((w->y - d.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("whitening follows the AR(1) recursion within tokens") {
    const Corpus c = toy_corpus(9);
    const Design d = *assemble_design(baseline_spec(), c);
    const double rho = 0.7;
    const auto w = whiten_ar1(d, rho);
    const auto& [start, len] = d.token_spans[3];
    REQUIRE(len >= 3);
    const double s0 = std::sqrt(1.0 - rho * rho);
    CHECK((w->x.row(start) - s0 * d.x.row(start)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(w->y(start) == doctest::Approx(s0 * d.y(start)).epsilon(1e-12));
    for (int t = 1; t < len; ++t) {
        const Eigen::RowVectorXd expect =
            d.x.row(start + t) - rho * d.x.row(start + t - 1);
        CHECK((w->x.row(start + t) - expect).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(w->y(start + t) ==
              doctest::Approx(d.y(start + t) - rho * d.y(start + t - 1)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(whiten_ar1(d, 1.0), ConfigError);
    CHECK_THROWS_AS(whiten_ar1(d, -0.2), ConfigError);
}

TEST_CASE("chunked whitened statistics match the direct computation") {
    const Corpus c = toy_corpus(10);
    const Design d = *assemble_design(baseline_spec(), c);
    for (double rho : {0.0, 0.9}) {
        const WhitenedStats& s = d.whitened_stats(rho);
        const auto w = whiten_ar1(d, rho);
        const Eigen::MatrixXd a0 = w->x.transpose() * w->x;
        const Eigen::VectorXd b = w->x.transpose() * w->y;
        const double yty = w->y.squaredNorm();
        const double ymean = w->y.mean();
        const double tss = (w->y.array() - ymean).square().sum();
        CHECK((s.a0 - a0).cwiseAbs().maxCoeff() <=
              1e-9 * std::max(1.0, a0.cwiseAbs().maxCoeff()));
        CHECK((s.b - b).cwiseAbs().maxCoeff() <=
              1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()));
        CHECK(s.yty == doctest::Approx(yty).epsilon(1e-10));
        CHECK(s.tss == doctest::Approx(tss).epsilon(1e-8));
        CHECK(s.n == w->y.size());
    }
}

TEST_CASE("penalty blocks carry the grouping contract") {
    const Corpus c = toy_corpus(11);
    ModelSpec s = baseline_spec();
    s.terms.push_back(fs("time", "word", 5));
    const Design d = *assemble_design(s, c);

    // Each by-smooth level owns a penalty and a group; fs terms contribute
    // two penalties sharing one group; tensor two groups.
    int n_by = 0, n_fs_pairs = 0;
    std::map<int, std::vector<std::size_t>> by_group;
    for (std::size_t j = 0; j < d.penalties.size(); ++j)
        by_group[d.penalties[j].group].push_back(j);
    for (const auto& [g, members] : by_group) {
        bool is_fs = false;
        for (auto j : members)
            if (d.penalties[j].role == "fs_diff" || d.penalties[j].role == "fs_ridge")
                is_fs = true;
        if (is_fs) {
            REQUIRE(members.size() == 2);
            ++n_fs_pairs;
            CHECK(d.penalties[members[0]].col_start == d.penalties[members[1]].col_start);
        } else {
            CHECK(members.size() == 1);
            if (d.penalties[members[0]].role == "by") ++n_by;
        }
    }
    CHECK(n_fs_pairs == 2);  // speaker + word
    CHECK(n_by == 4);        // two by-gender terms, two levels each
    CHECK(d.n_groups == static_cast<int>(by_group.size()));

    // All penalties symmetric PSD.
    for (const auto& pb : d.penalties) {
        CHECK((pb.s - pb.s.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pb.s);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("unseen factor levels flag and contribute zero") {
    const Corpus c = toy_corpus(12);
    ModelSpec s = baseline_spec();
    s.terms.push_back(fs("time", "word", 5));
    const Design d = *assemble_design(s, c);

    const TokenRecord& known = c.tokens[0];
    PredictRow row;
    row.time = 0.4;
    row.duration_s = known.duration_s;
    row.utt_pos = known.utt_pos;
    row.gender = known.gender;
    row.vowel = known.vowel;
    row.speaker = "nobody";  // unseen
    row.word = known.word;
    row.sense = known.sense;
    row.tone = known.tone;
    row.prev_tone = known.prev_tone;
    row.next_tone = known.next_tone;

    bool unseen = false;
    const RowX rx = resolve_row(d.layout, row, &unseen);
    CHECK(unseen);
    CHECK(rx.speaker == -1);
    Eigen::RowVectorXd x(d.layout.n_cols);
    eval_row_into(d.layout, rx, x);
    for (const auto& term : d.layout.terms) {
        if (term.spec.label() == "fs(time,speaker)") {
            CHECK(x.segment(term.col_start, term.width).cwiseAbs().maxCoeff() == 0.0);
        }
    }

    // A fully known row does not flag.
    row.speaker = known.speaker;
    unseen = false;
    resolve_row(d.layout, row, &unseen);
    CHECK_FALSE(unseen);
}

TEST_CASE("assembly rejects infeasible tensors and single-sample tokens") {
    Corpus tiny = toy_corpus(13, 2, 2, 2);
    ModelSpec s;
    s.terms = {tensor("time", "log_dur", 12, 12)};  // 144 columns > rows
    bool too_big_rows = true;
    long rows = 0;
    for (const auto& t : tiny.tokens) rows += static_cast<long>(t.samples.size());
    if (rows >= 144) too_big_rows = false;
    if (too_big_rows) CHECK_THROWS_AS(assemble_design(s, tiny), ConfigError);

    Corpus bad = toy_corpus(14, 2, 2, 3);
    bad.tokens[0].samples.resize(1);
    CHECK_THROWS_AS(assemble_design(baseline_spec(), bad), DataError);
}

TEST_CASE("covariate ranges cover the observed data") {
    const Corpus c = toy_corpus(15);
    const Design d = *assemble_design(baseline_spec(), c);
    const auto tr = d.layout.range_of("time");
    CHECK(tr[0] == doctest::Approx(0.0));
    CHECK(tr[1] == doctest::Approx(1.0));
    const auto dr = d.layout.range_of("log_dur");
    double lo = 1e9, hi = -1e9;
    for (const auto& t : c.tokens) {
        lo = std::min(lo, std::log(t.duration_s));
        hi = std::max(hi, std::log(t.duration_s));
    }
    CHECK(dr[0] == doctest::Approx(lo).epsilon(1e-12));
    CHECK(dr[1] == doctest::Approx(hi).epsilon(1e-12));
}
