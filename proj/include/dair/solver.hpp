#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dair/nlp.hpp"

namespace dair {

enum class SolveStatus {
  converged,
  early_terminated,
  max_iterations,
  infeasible_detected,
  numerical_failure
};

std::string to_string(SolveStatus s);

struct IterationRecord {
  int iter = 0;   ///< global step counter
  int major = 0;  ///< outer (multiplier/barrier) iteration
  int inner = 0;  ///< Newton step within the major iteration
  double objective = 0.0;
  double merit = 0.0;
  double eq_violation = 0.0;
  double ineq_violation = 0.0;
  double step_norm = 0.0;
  double mu = 0.0;
  double rho = 0.0;
};

struct SolverOptions {
  double tol = 1e-9;          ///< KKT tolerance (stationarity and violations)
  int max_major = 60;
  int max_inner = 50;
  double mu0 = 1e-1;          ///< initial barrier parameter
  double mu_shrink = 0.2;     ///< barrier reduction per major iteration
  double mu_floor = 1e-11;
  double rho0 = 10.0;         ///< initial penalty on constraint rows
  double rho_max = 1e8;
  /// Invoked once per major iteration with the current flat vector; returning
  /// true stops the solve with status early_terminated.
  std::function<bool(const Vec&)> early_termination;
  int verbosity = 0;

  void validate() const;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::numerical_failure;
  Vec x;
  double objective = 0.0;
  double eq_violation = 0.0;    ///< infinity norm of equality rows
  double ineq_violation = 0.0;  ///< max positive part of inequality rows
  std::vector<IterationRecord> log;
  std::string message;

  bool usable() const {
    return status == SolveStatus::converged || status == SolveStatus::early_terminated;
  }
};

/// Reference solver: augmented-Lagrangian outer loop on (slack-completed)
/// constraint rows, log-barrier treatment of variable bounds and slacks,
/// damped-Newton inner steps with exact Hessians from the term structure.
SolveOutcome solve(const TranscribedNlp& nlp, const Vec& x0, const SolverOptions& opts = {});

using SolveBackend =
    std::function<SolveOutcome(const TranscribedNlp&, const Vec&, const SolverOptions&)>;

/// Pluggable backends; "builtin" is always registered.
void register_backend(const std::string& name, SolveBackend backend);
SolveOutcome solve_with(const std::string& backend, const TranscribedNlp& nlp, const Vec& x0,
                        const SolverOptions& opts = {});
std::vector<std::string> solver_backends();

}  // namespace dair
