#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "tonelab/basis.hpp"
#include "tonelab/errors.hpp"
#include "tonelab/rng.hpp"

using namespace tonelab;

TEST_CASE("knot vector layout for cubic k=10 on [0,1]") {
    const auto knots = make_knots(0.0, 1.0, 10, 3);
    REQUIRE(knots.size() == 14);
    for (int i = 0; i < 4; ++i) {
        CHECK(knots[static_cast<std::size_t>(i)] == doctest::Approx(0.0));
        CHECK(knots[static_cast<std::size_t>(13 - i)] == doctest::Approx(1.0));
    }
    // 6 interior knots at i/7.
    for (int i = 1; i <= 6; ++i)
        CHECK(knots[static_cast<std::size_t>(3 + i)] ==
              doctest::Approx(i / 7.0).epsilon(1e-15));
    CHECK_THROWS_AS(make_knots(0.0, 1.0, 3, 3), ConfigError);
}

TEST_CASE("degree-0 basis is an interval indicator") {
    const std::vector<double> knots{0.0, 0.5, 1.0};
    const auto row = bspline_basis(0.25, knots, 0);
    REQUIRE(row.size() == 2);
    CHECK(row(0) == doctest::Approx(1.0));
    CHECK(row(1) == doctest::Approx(0.0));
    const auto row2 = bspline_basis(0.75, knots, 0);
    CHECK(row2(0) == doctest::Approx(0.0));
    CHECK(row2(1) == doctest::Approx(1.0));
}

TEST_CASE("cubic rows sum to one everywhere in the domain") {
    const auto knots = make_knots(0.0, 1.0, 10, 3);
    Rng r(1);
    for (int i = 0; i < 500; ++i) {
        const double x = r.uniform();
        CHECK(std::abs(bspline_basis(x, knots, 3).sum() - 1.0) <= 1e-12);
    }
    for (double x : {0.0, 1.0, -0.3, 1.7}) {  // boundary and clamped
        CHECK(std::abs(bspline_basis(x, knots, 3).sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("cubic rows have at most degree+1 nonzeros") {
    const auto knots = make_knots(0.0, 1.0, 12, 3);
    Rng r(2);
    for (int i = 0; i < 100; ++i) {
        const auto row = bspline_basis(r.uniform(), knots, 3);
        int nz = 0;
        for (int j = 0; j < row.size(); ++j)
            if (row(j) != 0.0) ++nz;
        CHECK(nz <= 4);
        CHECK(nz >= 1);
    }
}

TEST_CASE("basis values are nonnegative") {
    const auto knots = make_knots(-2.0, 3.0, 8, 3);
    Rng r(3);
    for (int i = 0; i < 200; ++i) {
        const auto row = bspline_basis(r.uniform(-2.0, 3.0), knots, 3);
        CHECK(row.minCoeff() >= 0.0);
    }
}

TEST_CASE("analytic derivative matches central differences") {
    const auto knots = make_knots(0.0, 1.0, 9, 3);
    Rng r(4);
    Eigen::VectorXd coef(9);
    for (int i = 0; i < 9; ++i) coef(i) = r.normal();
    const double h = 1e-5;
    for (int i = 0; i < 100; ++i) {
        const double x = r.uniform(0.05, 0.95);
        const double exact = bspline_derivative(x, knots, 3).dot(coef);
        const double fd = (bspline_basis(x + h, knots, 3).dot(coef) -
                           bspline_basis(x - h, knots, 3).dot(coef)) /
                          (2.0 * h);
        CHECK(std::abs(exact - fd) < 1e-6);
    }
}

TEST_CASE("first-order difference penalty on 3 coefficients, by hand") {
    const Eigen::MatrixXd s = difference_penalty(1, 3);
    Eigen::MatrixXd expect(3, 3);
    expect << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    CHECK((s - expect).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK_THROWS_AS(difference_penalty(3, 3), ConfigError);
}

TEST_CASE("difference penalties annihilate their polynomial null spaces") {
    {
        const Eigen::MatrixXd s = difference_penalty(1, 6);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(6);
        CHECK(std::abs(ones.dot(s * ones)) <= 1e-12);
    }
    {
        const Eigen::MatrixXd s = difference_penalty(2, 4);
        Eigen::VectorXd lin(4);
        lin << 0, 1, 2, 3;
        CHECK(std::abs(lin.dot(s * lin)) <= 1e-12);
    }
}

TEST_CASE("difference penalties are symmetric PSD") {
    for (int order : {1, 2}) {
        for (int p : {4, 10}) {
            const Eigen::MatrixXd s = difference_penalty(order, p);
            CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
        }
    }
}

TEST_CASE("constraint null space is orthonormal and annihilates c") {
    Rng r(5);
    Eigen::VectorXd c(7);
    for (int i = 0; i < 7; ++i) c(i) = r.normal();
    const Eigen::MatrixXd z = constraint_null_space(c);
    REQUIRE(z.rows() == 7);
    REQUIRE(z.cols() == 6);
    CHECK((z.transpose() * z - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <=
          1e-12);
    CHECK((c.transpose() * z).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("center_columns yields zero column sums and transformed penalties") {
    Rng r(6);
    const auto knots = make_knots(0.0, 1.0, 6, 3);
    DesignBlock block;
    block.label = "s(x)";
    block.columns.resize(50, 6);
    for (int i = 0; i < 50; ++i) block.columns.row(i) = bspline_basis(r.uniform(), knots, 3);
    block.penalties.push_back(difference_penalty(2, 6));

    const DesignBlock centered = center_columns(block);
    REQUIRE(centered.columns.cols() == 5);
    REQUIRE(centered.penalties.size() == 1);
    REQUIRE(centered.penalties[0].rows() == 5);
    const Eigen::RowVectorXd colsums = centered.columns.colwise().sum();
    CHECK(colsums.cwiseAbs().maxCoeff() <= 1e-12 * 50);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered.penalties[0]);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    REQUIRE(centered.constraint.size() == 6);
}

TEST_CASE("tensor interaction block: dimensions, products, penalties") {
    Rng r(7);
    const int n = 40;
    DesignBlock a, b;
    a.columns.resize(n, 4);
    b.columns.resize(n, 4);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 4; ++j) {
            a.columns(i, j) = r.normal();
            b.columns(i, j) = r.normal();
        }
    a.penalties.push_back(difference_penalty(2, 4));
    b.penalties.push_back(difference_penalty(2, 4));
    const DesignBlock t = tensor_interaction_block(a, b);
    REQUIRE(t.columns.cols() == 16);
    REQUIRE(t.penalties.size() == 2);

    // Column (i,j) is the elementwise product a_i * b_j.
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const Eigen::VectorXd expect =
                a.columns.col(i).cwiseProduct(b.columns.col(j));
            CHECK((t.columns.col(i * 4 + j) - expect).cwiseAbs().maxCoeff() <= 1e-14);
        }

    // Penalties are S_A (x) I and I (x) S_B; check entries directly.
    const Eigen::MatrixXd& sa = a.penalties[0];
    const Eigen::MatrixXd& sb = b.penalties[0];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                for (int l = 0; l < 4; ++l) {
                    const double p0 = t.penalties[0](i * 4 + j, k * 4 + l);
                    const double p1 = t.penalties[1](i * 4 + j, k * 4 + l);
                    CHECK(p0 == doctest::Approx(sa(i, k) * (j == l ? 1.0 : 0.0)));
                    CHECK(p1 == doctest::Approx((i == k ? 1.0 : 0.0) * sb(j, l)));
                }
}

TEST_CASE("tensor interaction rejects kA*kB above the row count") {
    DesignBlock a, b;
    a.columns = Eigen::MatrixXd::Zero(10, 4);
    b.columns = Eigen::MatrixXd::Zero(10, 4);
    a.penalties.push_back(difference_penalty(1, 4));
    b.penalties.push_back(difference_penalty(1, 4));
    CHECK_THROWS_AS(tensor_interaction_block(a, b), ConfigError);
}

TEST_CASE("factor smooth block: L=3, k=5 gives 15 columns and 2 penalties") {
    Rng r(8);
    const auto knots = make_knots(0.0, 1.0, 5, 3);
    const std::vector<std::string> levels{"s1", "s2", "s3"};
    const int n = 30;
    std::vector<int> level_of_row;
    std::vector<double> x;
    for (int i = 0; i < n; ++i) {
        level_of_row.push_back(i % 3);
        x.push_back(r.uniform());
    }
    const DesignBlock f = factor_smooth_block(levels, level_of_row, x, knots, 3, 1, "fs");
    REQUIRE(f.columns.cols() == 15);
    REQUIRE(f.penalties.size() == 2);

    // Row content: basis values confined to the row's level block.
    for (int i = 0; i < n; ++i) {
        const auto row = bspline_basis(x[static_cast<std::size_t>(i)], knots, 3);
        const int lv = level_of_row[static_cast<std::size_t>(i)];
        for (int l = 0; l < 3; ++l) {
            const Eigen::RowVectorXd seg = f.columns.block(i, 5 * l, 1, 5);
            if (l == lv)
                CHECK((seg - row).cwiseAbs().maxCoeff() <= 1e-14);
            else
                CHECK(seg.cwiseAbs().maxCoeff() == 0.0);
        }
    }

    // First penalty: per-level difference blocks; second: full identity.
    const Eigen::MatrixXd d1 = difference_penalty(1, 5);
    for (int l = 0; l < 3; ++l)
        CHECK((f.penalties[0].block(5 * l, 5 * l, 5, 5) - d1).cwiseAbs().maxCoeff() <=
              1e-14);
    CHECK((f.penalties[1] - Eigen::MatrixXd::Identity(15, 15)).cwiseAbs().maxCoeff() <=
          1e-14);

    // Unseen level (-1) rows evaluate to zero.
    const DesignBlock g = factor_smooth_block(levels, {-1, 1}, {0.3, 0.4}, knots, 3, 1, "fs");
    CHECK(g.columns.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.columns.row(1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("random intercept block builds indicators with an identity penalty") {
    const std::vector<std::string> levels{"a", "b"};
    const DesignBlock b =
        random_intercept_block(levels, {0, 1, 1, -1}, "re");
    REQUIRE(b.columns.rows() == 4);
    REQUIRE(b.columns.cols() == 2);
    CHECK(b.columns(0, 0) == doctest::Approx(1.0));
    CHECK(b.columns(0, 1) == doctest::Approx(0.0));
    CHECK(b.columns(1, 1) == doctest::Approx(1.0));
    CHECK(b.columns(3, 0) == doctest::Approx(0.0));
    CHECK(b.columns(3, 1) == doctest::Approx(0.0));
    REQUIRE(b.penalties.size() == 1);
    CHECK((b.penalties[0] - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <=
          1e-14);
}
