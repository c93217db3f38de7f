#pragma once

#include <memory>
#include <optional>

#include "dair/dop.hpp"
#include "dair/mesh.hpp"
#include "dair/nlp.hpp"

namespace dair {

/// Flat layout of the decision vector
///   [states node-major | inputs node-major | p | t0 | tf]
/// with interval endpoints sharing a slot under implicit continuity.
struct DecisionLayout {
  int n = 0, m = 0, np = 0;
  bool free_t0 = false, free_tf = false;
  int K = 0;
  int N = 0;  ///< data points per interval
  bool share_states = true;
  bool share_inputs = true;
  int n_state_nodes = 0;
  int n_input_nodes = 0;
  int input_offset = 0;
  int p_offset = 0;

  static DecisionLayout build(const DopDefinition& dop, const Mesh& mesh);

  int size() const;
  int state_node(int k, int i) const { return share_states ? k * (N - 1) + i : k * N + i; }
  int input_node(int k, int i) const { return share_inputs ? k * (N - 1) + i : k * N + i; }
  int state_index(int k, int i, int j) const { return state_node(k, i) * n + j; }
  int input_index(int k, int i, int j) const { return input_offset + input_node(k, i) * m + j; }
  int p_index(int j) const { return p_offset + j; }
  int t0_index() const { return free_t0 ? p_offset + np : -1; }
  int tf_index() const { return free_tf ? p_offset + np + (free_t0 ? 1 : 0) : -1; }

  /// Local gather order for whole-interval atoms:
  ///   [x(i,j) node-major | u(i,j) node-major | p | t0 if free | tf if free].
  std::vector<int> interval_support(int k) const;
  int local_size() const { return N * (n + m) + np + (free_t0 ? 1 : 0) + (free_tf ? 1 : 0); }
};

/// Parameterized solution variables in structured form.
struct DecisionVector {
  Mat chi;  ///< n_state_nodes x n
  Mat ups;  ///< n_input_nodes x m
  Vec p;
  double t0 = 0.0, tf = 1.0;
};

Vec pack(const DecisionLayout& layout, const DecisionVector& dv);
DecisionVector unpack(const DecisionLayout& layout, const Vec& z);

/// Default initial guess: states interpolated linearly between the boundary
/// hints (box midpoints otherwise), inputs and parameters at box midpoints.
Vec initial_guess(const DopDefinition& dop, const Mesh& mesh);

/// Optional caps of the residual-minimization problem.
struct DairCaps {
  std::optional<double> objective_cap;  ///< J_c
  std::optional<Vec> mirs_caps;         ///< per-equation bounds, n + n_g entries
  Vec weights;                          ///< diagonal of W; empty means identity
};

/// Direct collocation: dynamics forced to zero at the collocation points,
/// path/DAE constraints at data points, Lagrange cost on the
/// collocation-point quadrature.
TranscribedNlp build_collocation(const DopDefinition& dop, const Mesh& mesh);

/// Residual minimization: the mean integrated squared residual norm is the
/// objective; dynamics never appear as equality rows.
TranscribedNlp build_dair_residual(const DopDefinition& dop, const Mesh& mesh,
                                   const DairCaps& caps = {});

/// Cost minimization subject to mandatory per-equation residual caps.
TranscribedNlp build_dair_cost(const DopDefinition& dop, const Mesh& mesh, const Vec& mirs_caps,
                               const Vec& weights = {});

/// Piecewise interpolants assembled from a flat solution vector.
Trajectory interpolate_solution(const Vec& z, const Mesh& mesh, const DopDefinition& dop);

/// Per-equation mean integrated residual squared on the transcription
/// quadrature: exactly the left-hand sides the cap rows constrain.
Vec transcription_mirs(const DopDefinition& dop, const Mesh& mesh, const Vec& z);

/// Weighted mean integrated residual norm squared on the transcription
/// quadrature (the residual-minimization objective value).
double transcription_mirns(const DopDefinition& dop, const Mesh& mesh, const Vec& z,
                           const Vec& weights = {});

/// Mayer plus quadrature Lagrange cost of a flat vector.
double transcription_cost(const DopDefinition& dop, const Mesh& mesh, const Vec& z);

/// Max violations of the non-dynamic constraints at a flat vector: boundary
/// rows (infinity norm) and path rows (max positive part).
struct PointFeasibility {
  double boundary = 0.0;
  double path = 0.0;
};
PointFeasibility point_feasibility(const DopDefinition& dop, const Mesh& mesh, const Vec& z);

}  // namespace dair
