#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dair/metrics.hpp"
#include "dair/solver.hpp"
#include "dair/transcription.hpp"

namespace dair {

/// Requested accuracy: per-equation upper bounds on the transcription-tier
/// MIRS, plus the feasibility tolerance the early-termination check uses for
/// path/boundary rows.
struct AccuracyRequest {
  Vec mirs_request;  ///< n + n_g strictly positive entries
  double feas_tol = 1e-8;

  void validate(int n_equations) const;
  static AccuracyRequest uniform(int n_equations, double level, double feas_tol = 1e-8);
};

/// Result of a single-method run (collocation, or one phase of the
/// alternating scheme).
struct SolveReport {
  SolveOutcome outcome;
  Trajectory trajectory;
  ErrorReport errors;
  double objective = 0.0;  ///< Bolza cost at the returned point
};

enum class EquationFlag { met_requirement, relaxed_to_achievable };

/// Full record of one alternating residual/cost solve.
struct DairReport {
  SolveOutcome residual_outcome;
  ErrorReport residual_errors;
  Vec requested;  ///< caps as requested
  Vec achieved;   ///< transcription-tier MIRS at the residual-phase iterate
  Vec applied;    ///< caps handed to the cost problem
  std::vector<EquationFlag> flags;
  bool cost_warmstart_feasible = false;
  SolveOutcome cost_outcome;
  ErrorReport cost_errors;
  Trajectory trajectory;
  double objective = 0.0;

  bool relaxed() const;
};

/// Collocation solve with metrics.
SolveReport run_collocation(const DopDefinition& dop, const Mesh& mesh,
                            const SolverOptions& opts = {}, const Vec& x0 = {});

/// The standalone alternating procedure: residual minimization with early
/// termination once the request is met, per-equation fallback to achievable
/// caps otherwise, then cost minimization warm-started at the residual-phase
/// iterate.
DairReport dair_solve(const DopDefinition& dop, const Mesh& mesh, const AccuracyRequest& req,
                      const SolverOptions& opts = {}, const Vec& weights = {});

/// Residual minimization warm-started at a collocation solution with the
/// collocation objective as a cap: accuracy improves, optimality does not
/// degrade. No cost phase.
DairReport represent_solution(const DopDefinition& dop, const Mesh& mesh, const Vec& colloc_z,
                              const AccuracyRequest& req, const SolverOptions& opts = {},
                              const Vec& weights = {});

struct ParetoPoint {
  double mirns = 0.0;  ///< reporting-tier value
  double objective = 0.0;
  double violation = 0.0;
  bool dominated = false;
  bool is_collocation = false;
  std::string status;
};

struct ParetoResult {
  std::vector<ParetoPoint> points;  ///< sorted by mirns, collocation included
};

/// Per-request alternating solves plus one collocation solve, run
/// concurrently; the violation metric is a problem-specific hook (may be
/// empty).
ParetoResult pareto_sweep(const DopDefinition& dop, const Mesh& mesh,
                          const std::vector<AccuracyRequest>& grid,
                          const SolverOptions& opts = {}, const Vec& weights = {},
                          const std::function<double(const Trajectory&)>& violation = {});

/// Log-spaced cap grid on [floor, span*floor] built from an achievable floor.
std::vector<AccuracyRequest> pareto_grid(const Vec& floor_mirs, int points, double span = 1e3,
                                         double feas_tol = 1e-8);

struct StudyRow {
  int K = 0;
  double colloc_mirns = 0.0;
  double dair_mirns = 0.0;
  std::string colloc_status;
  std::string dair_status;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double colloc_slope = 0.0;  ///< log-log fit of mirns against K
  double dair_slope = 0.0;
};

/// Uniform-refinement study: collocation and fully solved residual
/// minimization per K (early termination disabled).
StudyResult convergence_study(const DopDefinition& dop, const std::string& scheme, int degree,
                              const std::vector<int>& k_list, const SolverOptions& opts = {},
                              const Vec& weights = {});

struct RolloutResult {
  Vec terminal_state;
  Vec times;      ///< uniform sample grid
  Vec deviation;  ///< |x_sim - x_traj| at the grid
  double max_deviation = 0.0;
};

/// Integrates xdot = f(x, u(t), t, p) from the trajectory's initial state
/// holding the interpolated input, with an embedded 4(5) pair at
/// abs/rel tolerance 1e-10.
RolloutResult simulate_rollout(const DopDefinition& dop, const Trajectory& traj, const Vec& p,
                               int grid = 500);

/// Direct-evaluation feasibility check of the cost problem at a warm start.
bool cost_warmstart_feasible(const DopDefinition& dop, const Mesh& mesh, const Vec& z,
                             const Vec& applied_caps, double feas_tol);

}  // namespace dair
