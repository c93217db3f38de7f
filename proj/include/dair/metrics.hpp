#pragma once

#include <nlohmann/json_fwd.hpp>

#include "dair/dop.hpp"
#include "dair/mesh.hpp"

namespace dair {

/// Configuration of the error metrics. The reporting tier is an independent,
/// higher-order quadrature so the a posteriori numbers are not the ones the
/// NLP controls directly.
struct ResidualConfig {
  Vec weights;                ///< diagonal of W, n + n_g entries; empty = identity
  int report_oversample = 4;  ///< reporting quadrature order = oversample * N
  int violation_samples = 10; ///< per data point, for the constraint-violation grid

  void validate(int n_equations) const;
  Vec effective_weights(int n_equations) const;
};

struct ErrorReport {
  Mat zeta;   ///< (n+n_g) x K, per-equation absolute local error (reporting tier)
  Vec eta;    ///< K, norm-based local error per interval (reporting tier)
  double r = 0.0;       ///< weighted IRNS on the transcription quadrature
  double mirns = 0.0;   ///< r / (tf - t0)
  Vec mirs;             ///< per-equation mean integrated residual squared (transcription tier)
  double r_report = 0.0;      ///< IRNS recomputed on the reporting quadrature
  double mirns_report = 0.0;
  double constraint_violation = 0.0;  ///< max positive part of c on the sampling grid
  double dt = 0.0;

  nlohmann::json to_json() const;
};

/// Stacked dynamic-constraint residual [xdot - f; g] on the interpolants.
Vec residual_at(const DopDefinition& dop, const Trajectory& traj, const Vec& p, double t);

/// Integrated residual norm squared with weighting, on the mesh's
/// transcription quadrature.
double irns(const DopDefinition& dop, const Mesh& mesh, const Trajectory& traj, const Vec& p,
            const ResidualConfig& cfg = {});

/// All error metrics of a trajectory.
ErrorReport local_errors(const DopDefinition& dop, const Mesh& mesh, const Trajectory& traj,
                         const Vec& p, const ResidualConfig& cfg = {});

/// Per-equation transcription-tier MIRS of a flat decision vector: exactly
/// the quantities the cap rows constrain.
Vec mirs_constraint_values(const DopDefinition& dop, const Mesh& mesh, const Vec& z,
                           const ResidualConfig& cfg = {});

}  // namespace dair
