#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dair/lagrange.hpp"

namespace dair {

enum class MeshScheme { hermite_simpson, lgr, uniform };

/// How trajectory continuity across major nodes is realized.
enum class Continuity {
  implicit_shared,  ///< shared decision variable at interval boundaries
  explicit_rows,    ///< separate variables tied by equality constraints
  none              ///< discontinuous at major nodes (inputs only)
};

/// Placement of the transcription-tier quadrature.
enum class QuadratureRule {
  gauss,         ///< Gauss-Legendre with Q = oversample * N points per interval
  data_points    ///< quadrature at the data points with interpolatory weights
};

std::string to_string(MeshScheme s);
std::string to_string(Continuity c);
std::string to_string(QuadratureRule q);

struct MeshOptions {
  std::optional<Vec> major_fractions;  ///< K+1 strictly increasing, 0 .. 1
  int quad_oversample = 2;             ///< Q = oversample * N for the gauss rule
  QuadratureRule quadrature = QuadratureRule::gauss;
  Continuity state_continuity = Continuity::implicit_shared;
  Continuity input_continuity = Continuity::implicit_shared;
};

/// Legendre-Gauss-Radau points (left endpoint included, right excluded),
/// mapped from [-1,1) to [0,1). Strictly increasing, `degree` points.
Vec lgr_nodes(int degree);

/// LGR points together with their quadrature weights on [0,1] (sum to 1).
std::pair<Vec, Vec> lgr_rule(int degree);

/// Gauss-Legendre abscissae and weights on the open unit interval; exact for
/// polynomials of degree <= 2*order - 1. Weights sum to 1.
std::pair<Vec, Vec> gauss_legendre(int order);

/// Fixed discretization grid: major nodes, per-interval data points, and the
/// transcription-tier quadrature. Stores fractions only, so free-time
/// problems rescale without a rebuild.
struct Mesh {
  MeshScheme scheme = MeshScheme::hermite_simpson;
  int degree = 3;  ///< polynomial degree of the state pieces
  int K = 1;
  Vec major_fractions;  ///< K+1 entries, 0 = s_1 < ... < s_{K+1} = 1

  Vec data_fracs;       ///< N data-point fractions within one interval
  Vec data_bw;          ///< barycentric weights of data_fracs
  std::vector<int> colloc_local;  ///< local indices of collocation points (may be empty)

  Vec quad_fracs;  ///< Q quadrature fractions within one interval
  Vec quad_w;      ///< Q weights on the local unit interval (sum to 1)

  Vec colloc_quad_fracs;  ///< collocation-point quadrature used for collocation costs
  Vec colloc_quad_w;

  Continuity state_continuity = Continuity::implicit_shared;
  Continuity input_continuity = Continuity::implicit_shared;
  QuadratureRule quadrature = QuadratureRule::gauss;
  int quad_oversample = 2;

  int points_per_interval() const { return static_cast<int>(data_fracs.size()); }
  int quad_points() const { return static_cast<int>(quad_fracs.size()); }
  bool has_collocation() const { return !colloc_local.empty(); }
  /// Fraction length s_{k+1} - s_k of interval k (0-based).
  double interval_fraction(int k) const;
  /// Absolute data-point fraction within [0,1] of node i in interval k.
  double absolute_fraction(int k, int i) const;
  /// Number of distinct data points when interval endpoints are shared.
  int shared_node_count() const { return K * (points_per_interval() - 1) + 1; }

  void validate() const;

  nlohmann::json to_json() const;
  static Mesh from_json(const nlohmann::json& j);
};

Mesh build_mesh(MeshScheme scheme, int K, const MeshOptions& options = {}, int degree = 0);
Mesh build_mesh(const std::string& scheme, int K, const MeshOptions& options = {}, int degree = 0);

/// Constant interpolation/differentiation operators of one interval.
/// `a` is the differentiation matrix on the data-point fractions; the
/// collocation identity reads  a * chi - dt * f(chi, ...) = 0, i.e. the
/// time-dependent companion of `a` is d_unit scaled by the interval duration.
struct IntervalOperators {
  Vec fracs;
  Vec bw;
  Mat a;       ///< differentiation matrix in fraction coordinates
  Mat d_unit;  ///< multiply by the interval duration to get the Eq-(8a) pairing
  RowVec interpolation_row(double tau) const { return interp_row(fracs, bw, tau); }
  RowVec derivative_row(double tau) const { return deriv_row(fracs, bw, tau); }
};

IntervalOperators differentiation_operators(const Mesh& mesh, int k);

}  // namespace dair
