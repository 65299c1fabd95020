#include "tonelab/basis.hpp"

#include <algorithm>
#include <cmath>

#include "tonelab/errors.hpp"

namespace tonelab {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

std::vector<double> make_knots(double a, double b, int k, int degree) {
    if (degree < 0) throw ConfigError("make_knots: degree must be nonnegative");
    if (k < degree + 1)
        throw ConfigError("make_knots: need k >= degree+1 basis functions (k=" +
                          std::to_string(k) + ", degree=" + std::to_string(degree) + ")");
    if (!(b > a)) {
        // Degenerate observed range (constant covariate); widen artificially.
        a -= 0.5;
        b += 0.5;
    }
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(k + degree + 1));
    for (int i = 0; i <= degree; ++i) knots.push_back(a);
    const int interior = k - degree - 1;
    for (int i = 1; i <= interior; ++i)
        knots.push_back(a + (b - a) * static_cast<double>(i) / (interior + 1));
    for (int i = 0; i <= degree; ++i) knots.push_back(b);
    return knots;
}

namespace {

// Index of the knot span containing x: largest i with knots[i] <= x and
// knots[i] < knots[i+1], restricted to valid spans [degree, nk-degree-2].
int find_span(double x, const std::vector<double>& knots, int degree) {
    const int nk = static_cast<int>(knots.size());
    const int lo = degree, hi = nk - degree - 2;
    if (x >= knots[static_cast<std::size_t>(hi)]) return hi;
    if (x <= knots[static_cast<std::size_t>(lo)]) return lo;
    int span = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), x) -
                                knots.begin()) - 1;
    return std::clamp(span, lo, hi);
}

}  // namespace

Eigen::RowVectorXd bspline_basis(double x, const std::vector<double>& knots, int degree) {
    const int k = static_cast<int>(knots.size()) - degree - 1;
    if (k < 1) throw ConfigError("bspline_basis: knot vector too short");
    x = std::clamp(x, knots.front(), knots.back());
    const int span = find_span(x, knots, degree);

    // de Boor triangular scheme: values of the degree+1 nonzero functions.
    std::vector<double> vals(static_cast<std::size_t>(degree) + 1, 0.0);
    std::vector<double> left(static_cast<std::size_t>(degree) + 1);
    std::vector<double> right(static_cast<std::size_t>(degree) + 1);
    vals[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[static_cast<std::size_t>(j)] = x - knots[static_cast<std::size_t>(span + 1 - j)];
        right[static_cast<std::size_t>(j)] = knots[static_cast<std::size_t>(span + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[static_cast<std::size_t>(r + 1)] +
                                 left[static_cast<std::size_t>(j - r)];
            const double temp = denom != 0.0 ? vals[static_cast<std::size_t>(r)] / denom : 0.0;
            vals[static_cast<std::size_t>(r)] =
                saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        vals[static_cast<std::size_t>(j)] = saved;
    }

    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(k);
    for (int j = 0; j <= degree; ++j) {
        const int idx = span - degree + j;
        if (idx >= 0 && idx < k) row(idx) = vals[static_cast<std::size_t>(j)];
    }
    return row;
}

Eigen::RowVectorXd bspline_derivative(double x, const std::vector<double>& knots, int degree) {
    const int k = static_cast<int>(knots.size()) - degree - 1;
    if (degree == 0) return Eigen::RowVectorXd::Zero(k);
    x = std::clamp(x, knots.front(), knots.back());

    // d/dx B_{i,d}(x) = d * ( B_{i,d-1}/(t_{i+d}-t_i) - B_{i+1,d-1}/(t_{i+d+1}-t_{i+1}) )
    std::vector<double> lower_knots(knots.begin() + 1, knots.end() - 1);
    const Eigen::RowVectorXd lower = bspline_basis(x, lower_knots, degree - 1);
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(k);
    for (int i = 0; i < k; ++i) {
        double v = 0.0;
        if (i - 1 >= 0 && i - 1 < lower.size()) {
            const double den = knots[static_cast<std::size_t>(i + degree)] -
                               knots[static_cast<std::size_t>(i)];
            if (den != 0.0) v += lower(i - 1) / den;
        }
        if (i < lower.size()) {
            const double den = knots[static_cast<std::size_t>(i + degree + 1)] -
                               knots[static_cast<std::size_t>(i + 1)];
            if (den != 0.0) v -= lower(i) / den;
        }
        row(i) = degree * v;
    }
    return row;
}

Eigen::MatrixXd difference_penalty(int order, int p) {
    if (order < 1 || order >= p)
        throw ConfigError("difference_penalty: need 1 <= order < p");
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(p, p);
    for (int o = 0; o < order; ++o) {
        const int rows = static_cast<int>(d.rows());
        Eigen::MatrixXd next(rows - 1, p);
        for (int i = 0; i + 1 < rows; ++i) next.row(i) = d.row(i + 1) - d.row(i);
        d = std::move(next);
    }
    return d.transpose() * d;
}

Eigen::MatrixXd constraint_null_space(const Eigen::VectorXd& c) {
    const int p = static_cast<int>(c.size());
    if (p < 2) throw ConfigError("constraint_null_space: need at least 2 columns");
    const double norm = c.norm();
    if (norm <= 0.0) {
        // No effective constraint (level unattested); drop the first column
        // deterministically so the dimension contract is kept.
        return Eigen::MatrixXd::Identity(p, p).rightCols(p - 1);
    }
    Eigen::VectorXd v = c;
    v(0) += (c(0) >= 0.0 ? norm : -norm);
    const Eigen::MatrixXd h =
        Eigen::MatrixXd::Identity(p, p) - (2.0 / v.squaredNorm()) * (v * v.transpose());
    // H maps c to a multiple of e1, so columns 2..p of H span the null space of c^T.
    return h.rightCols(p - 1);
}

DesignBlock center_columns(const DesignBlock& block) {
    const Eigen::VectorXd c = block.columns.colwise().sum().transpose();
    const Eigen::MatrixXd z = constraint_null_space(c);
    DesignBlock out;
    out.label = block.label;
    out.columns = block.columns * z;
    out.constraint = c;
    out.penalties.reserve(block.penalties.size());
    for (const auto& s : block.penalties) out.penalties.push_back(z.transpose() * s * z);
    return out;
}

DesignBlock tensor_interaction_block(const DesignBlock& a, const DesignBlock& b) {
    if (a.columns.rows() != b.columns.rows())
        throw ConfigError("tensor_interaction_block: row mismatch");
    const int n = static_cast<int>(a.columns.rows());
    const int pa = static_cast<int>(a.columns.cols());
    const int pb = static_cast<int>(b.columns.cols());
    if (static_cast<long>(pa) * pb > n)
        throw ConfigError("tensor_interaction_block: kA*kB exceeds row count; reduce k");
    DesignBlock out;
    out.label = "ti(" + a.label + "," + b.label + ")";
    out.columns.resize(n, pa * pb);
    for (int i = 0; i < pa; ++i)
        for (int j = 0; j < pb; ++j)
            out.columns.col(i * pb + j) =
                a.columns.col(i).cwiseProduct(b.columns.col(j));
    if (a.penalties.size() != 1 || b.penalties.size() != 1)
        throw ConfigError("tensor_interaction_block: marginals must carry one penalty each");
    out.penalties.push_back(kron(a.penalties[0], Eigen::MatrixXd::Identity(pb, pb)));
    out.penalties.push_back(kron(Eigen::MatrixXd::Identity(pa, pa), b.penalties[0]));
    return out;
}

DesignBlock factor_smooth_block(const std::vector<std::string>& levels,
                                const std::vector<int>& level_of_row,
                                const std::vector<double>& covariate,
                                const std::vector<double>& knots, int degree, int m,
                                const std::string& label) {
    const int L = static_cast<int>(levels.size());
    if (L < 2) throw ConfigError("factor_smooth_block: need at least 2 levels");
    const int k = static_cast<int>(knots.size()) - degree - 1;
    const int n = static_cast<int>(level_of_row.size());
    if (covariate.size() != level_of_row.size())
        throw ConfigError("factor_smooth_block: row mismatch");
    DesignBlock out;
    out.label = label;
    out.columns = Eigen::MatrixXd::Zero(n, L * k);
    for (int r = 0; r < n; ++r) {
        const int lv = level_of_row[static_cast<std::size_t>(r)];
        if (lv < 0) continue;  // unseen level contributes nothing
        out.columns.block(r, lv * k, 1, k) =
            bspline_basis(covariate[static_cast<std::size_t>(r)], knots, degree);
    }
    const Eigen::MatrixXd s = difference_penalty(m, k);
    Eigen::MatrixXd rep = Eigen::MatrixXd::Zero(L * k, L * k);
    for (int l = 0; l < L; ++l) rep.block(l * k, l * k, k, k) = s;
    out.penalties.push_back(std::move(rep));
    out.penalties.push_back(Eigen::MatrixXd::Identity(L * k, L * k));
    return out;
}

DesignBlock random_intercept_block(const std::vector<std::string>& levels,
                                   const std::vector<int>& level_of_row,
                                   const std::string& label) {
    const int L = static_cast<int>(levels.size());
    if (L < 2) throw ConfigError("random_intercept_block: need at least 2 levels");
    const int n = static_cast<int>(level_of_row.size());
    DesignBlock out;
    out.label = label;
    out.columns = Eigen::MatrixXd::Zero(n, L);
    for (int r = 0; r < n; ++r) {
        const int lv = level_of_row[static_cast<std::size_t>(r)];
        if (lv >= 0) out.columns(r, lv) = 1.0;
    }
    out.penalties.push_back(Eigen::MatrixXd::Identity(L, L));
    return out;
}

}  // namespace tonelab
