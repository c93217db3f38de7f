#pragma once

#include <Eigen/Core>

namespace dair {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

/// Barycentric weights w_i = 1 / prod_{j != i} (x_i - x_j) for nodes x.
Vec barycentric_weights(const Vec& nodes);

/// Row r with p(tau) = r * values for the Lagrange interpolant on `nodes`.
/// Exact unit row when tau coincides with a node (snap tolerance 1e-13 of the
/// node spread).
RowVec interp_row(const Vec& nodes, const Vec& bw, double tau);

/// Row r with p'(tau) = r * values, in the coordinate of `nodes`.
RowVec deriv_row(const Vec& nodes, const Vec& bw, double tau);

/// Differentiation matrix D with (D * values)_i = p'(x_i).
/// Rows sum to zero (derivative of a constant vanishes).
Mat diff_matrix(const Vec& nodes, const Vec& bw);

/// Interpolatory quadrature weights on [0, 1]: w_i = integral of the i-th
/// Lagrange basis polynomial (exactly the Newton-Cotes weights for the nodes).
Vec interpolatory_weights(const Vec& nodes, const Vec& bw);

/// Nodal polynomial B(tau) = prod_i (tau - x_i) and its derivative; used for
/// the slope-corrected cubic pieces of Hermite-Simpson trajectories.
double nodal_poly(const Vec& nodes, double tau);
double nodal_poly_deriv(const Vec& nodes, double tau);

}  // namespace dair
