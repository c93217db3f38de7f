#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dair/dop.hpp"

namespace dair {

/// A registered benchmark: problem definition plus the discretization the
/// reference studies use and any problem-specific metrics.
struct BenchmarkCase {
  DopDefinition dop;
  std::string recommended_scheme;  ///< "hs" or "lgr"
  int recommended_K = 8;
  int recommended_degree = 3;
  Vec recommended_weights;  ///< residual weighting; empty = identity
  std::optional<double> analytic_objective;

  /// Ready-to-run JSON config reproducing the reference setup.
  nlohmann::json reference_config() const;
};

std::vector<std::string> problem_names();

/// Built-in problems: "lq-analytic", "goddard", "dae-pendulum", "cartpole".
/// Unknown names raise an error listing the registry.
DopDefinition register_problem(const std::string& name);
BenchmarkCase benchmark_case(const std::string& name);

// ---- problem-specific metrics ----

/// Weighted terminal-condition distance for the cart pole; the state tuple is
/// (y1, y1dot, theta1, theta1dot) and the angle error carries a factor 2.
double cartpole_terminal_violation(const Vec& terminal_state);

/// Total variation of the input over [window_lo, window_hi] on a 1000-point
/// uniform grid.
double goddard_thrust_tv(const Trajectory& traj, double window_lo, double window_hi);

/// Largest time span on which the input stays strictly inside its box by more
/// than 1% of the box width; empty optional when no such span exists.
std::optional<std::pair<double, double>> input_interior_window(const Trajectory& traj,
                                                               double u_lb, double u_ub);

/// Max absolute value of the algebraic constraint over a 1000-point grid.
double dae_manifold_drift(const DopDefinition& dop, const Trajectory& traj, const Vec& p);

// ---- analytic reference for the scalar regulator problem ----

double lq_optimal_objective();       ///< tanh(1)
double lq_optimal_state(double t);   ///< cosh(1-t)/cosh(1)
double lq_optimal_input(double t);   ///< -sinh(1-t)/cosh(1)

}  // namespace dair
