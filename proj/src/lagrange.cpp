#include "dair/lagrange.hpp"

#include <cmath>
#include <stdexcept>

namespace dair {

namespace {

// Index of the node tau (numerically) coincides with, or -1.
int node_hit(const Vec& nodes, double tau) {
  const double spread = nodes(nodes.size() - 1) - nodes(0);
  const double tol = 1e-13 * std::max(1.0, std::abs(spread));
  for (int i = 0; i < nodes.size(); ++i) {
    if (std::abs(tau - nodes(i)) <= tol) return i;
  }
  return -1;
}

}  // namespace

Vec barycentric_weights(const Vec& nodes) {
  const int n = static_cast<int>(nodes.size());
  if (n < 1) throw std::invalid_argument("barycentric_weights: empty node set");
  Vec w = Vec::Ones(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      w(i) /= (nodes(i) - nodes(j));
    }
  }
  return w;
}

RowVec interp_row(const Vec& nodes, const Vec& bw, double tau) {
  const int n = static_cast<int>(nodes.size());
  RowVec r = RowVec::Zero(n);
  const int hit = node_hit(nodes, tau);
  if (hit >= 0) {
    r(hit) = 1.0;
    return r;
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    r(i) = bw(i) / (tau - nodes(i));
    s += r(i);
  }
  r /= s;
  return r;
}

RowVec deriv_row(const Vec& nodes, const Vec& bw, double tau) {
  const int n = static_cast<int>(nodes.size());
  const int hit = node_hit(nodes, tau);
  if (hit >= 0) {
    // Standard differentiation-matrix row at a node.
    RowVec r = RowVec::Zero(n);
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == hit) continue;
      r(j) = (bw(j) / bw(hit)) / (nodes(hit) - nodes(j));
      diag -= r(j);
    }
    r(hit) = diag;
    return r;
  }
  // Off-node: differentiate the barycentric form b_j = (w_j/(tau-x_j)) / S.
  RowVec b = RowVec::Zero(n);
  double s = 0.0, s1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double gi = bw(i) / (tau - nodes(i));
    b(i) = gi;
    s += gi;
    s1 += gi / (tau - nodes(i));  // = w_i / (tau-x_i)^2
  }
  RowVec r(n);
  for (int j = 0; j < n; ++j) {
    const double gj1 = b(j) / (tau - nodes(j));
    r(j) = (-gj1 + (b(j) / s) * s1) / s;
  }
  return r;
}

Mat diff_matrix(const Vec& nodes, const Vec& bw) {
  const int n = static_cast<int>(nodes.size());
  Mat d(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      d(i, j) = (bw(j) / bw(i)) / (nodes(i) - nodes(j));
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

Vec interpolatory_weights(const Vec& nodes, const Vec& bw) {
  // Gauss-Legendre of order n integrates the degree-(n-1) basis exactly.
  // Local implementation to avoid a dependency cycle with the mesh module.
  const int n = static_cast<int>(nodes.size());
  const int order = n;
  // Newton on Legendre polynomials, nodes mapped to [0,1].
  Vec gx(order), gw(order);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2 * j + 1) * z * p2 - j * p3) / (j + 1);
      }
      pp = order * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    gx(i) = 0.5 * (1.0 - z);
    gx(order - 1 - i) = 0.5 * (1.0 + z);
    gw(i) = 1.0 / ((1.0 - z * z) * pp * pp);
    gw(order - 1 - i) = gw(i);
  }
  Vec w = Vec::Zero(n);
  for (int q = 0; q < order; ++q) {
    w += gw(q) * interp_row(nodes, bw, gx(q)).transpose();
  }
  return w;
}

double nodal_poly(const Vec& nodes, double tau) {
  double b = 1.0;
  for (int i = 0; i < nodes.size(); ++i) b *= (tau - nodes(i));
  return b;
}

double nodal_poly_deriv(const Vec& nodes, double tau) {
  const int n = static_cast<int>(nodes.size());
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double term = 1.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      term *= (tau - nodes(j));
    }
    s += term;
  }
  return s;
}

}  // namespace dair
