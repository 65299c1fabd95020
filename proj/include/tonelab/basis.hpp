#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace tonelab {

// Knot vector for k cubic (degree d) B-splines on [a,b]: boundary knots
// repeated d+1 times, k-d-1 equally spaced interior knots; k+d+1 knots total.
std::vector<double> make_knots(double a, double b, int k, int degree);

// All k basis function values at x (Cox-de Boor). x outside [a,b] is clamped
// to the boundary: contours are only ever queried on the training range.
Eigen::RowVectorXd bspline_basis(double x, const std::vector<double>& knots, int degree);

// Row of dB_i/dx at x, same clamping.
Eigen::RowVectorXd bspline_derivative(double x, const std::vector<double>& knots, int degree);

// D^T D for the order-th difference operator on p coefficients.
Eigen::MatrixXd difference_penalty(int order, int p);

// Orthonormal basis of the null space of c^T (Householder), p x (p-1).
// Reparameterizing a block as M*Z enforces the sum-to-zero constraint c'b=0.
Eigen::MatrixXd constraint_null_space(const Eigen::VectorXd& c);

// A block of design columns with its penalties, as produced per model term.
struct DesignBlock {
    std::string label;
    Eigen::MatrixXd columns;                // n x width
    std::vector<Eigen::MatrixXd> penalties; // width x width, symmetric PSD
    Eigen::VectorXd constraint;             // c used for centering (empty if none)
};

// Sum-to-zero reparameterization: columns -> columns*Z, penalties -> Z'SZ,
// with c = column sums (so the fitted term sums to zero over rows).
DesignBlock center_columns(const DesignBlock& block);

// Row-wise Kronecker of two centered marginal blocks; penalties S_A (x) I
// and I (x) S_B. Pure interaction, excludes main effects.
DesignBlock tensor_interaction_block(const DesignBlock& a, const DesignBlock& b);

// Per-level spline sub-blocks (L*k columns), one shared difference penalty of
// order m replicated blockwise plus one full ridge penalty. Uncentered.
DesignBlock factor_smooth_block(const std::vector<std::string>& levels,
                                const std::vector<int>& level_of_row,
                                const std::vector<double>& covariate,
                                const std::vector<double>& knots, int degree, int m,
                                const std::string& label);

// Indicator columns with an identity (ridge) penalty.
DesignBlock random_intercept_block(const std::vector<std::string>& levels,
                                   const std::vector<int>& level_of_row,
                                   const std::string& label);

}  // namespace tonelab
