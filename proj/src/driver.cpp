#include "dair/driver.hpp"
#include <array>

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

namespace dair {

void AccuracyRequest::validate(int n_equations) const {
  if (mirs_request.size() != n_equations) {
    throw std::invalid_argument("accuracy request: need n + n_g entries");
  }
  for (int j = 0; j < mirs_request.size(); ++j) {
    if (!(mirs_request(j) > 0.0) || !std::isfinite(mirs_request(j))) {
      throw std::invalid_argument("accuracy request: entries must be strictly positive and finite");
    }
  }
  if (!(feas_tol > 0.0)) throw std::invalid_argument("accuracy request: feasibility tolerance");
}

AccuracyRequest AccuracyRequest::uniform(int n_equations, double level, double feas_tol) {
  AccuracyRequest req;
  req.mirs_request = Vec::Constant(n_equations, level);
  req.feas_tol = feas_tol;
  req.validate(n_equations);
  return req;
}

bool DairReport::relaxed() const {
  return std::any_of(flags.begin(), flags.end(),
                     [](EquationFlag f) { return f == EquationFlag::relaxed_to_achievable; });
}

SolveReport run_collocation(const DopDefinition& dop, const Mesh& mesh, const SolverOptions& opts,
                            const Vec& x0) {
  const TranscribedNlp nlp = build_collocation(dop, mesh);
  const Vec start = x0.size() == nlp.n_vars ? x0 : initial_guess(dop, mesh);
  SolveReport rep;
  rep.outcome = solve(nlp, start, opts);
  rep.trajectory = interpolate_solution(rep.outcome.x, mesh, dop);
  const DecisionLayout lay = DecisionLayout::build(dop, mesh);
  const Vec p = unpack(lay, rep.outcome.x).p;
  rep.errors = local_errors(dop, mesh, rep.trajectory, p);
  rep.objective = transcription_cost(dop, mesh, rep.outcome.x);
  return rep;
}

bool cost_warmstart_feasible(const DopDefinition& dop, const Mesh& mesh, const Vec& z,
                             const Vec& applied_caps, double feas_tol) {
  const Vec mirs = transcription_mirs(dop, mesh, z);
  for (int j = 0; j < mirs.size(); ++j) {
    if (mirs(j) > applied_caps(j)) return false;
  }
  const PointFeasibility pf = point_feasibility(dop, mesh, z);
  return pf.boundary <= feas_tol && pf.path <= feas_tol;
}

DairReport dair_solve(const DopDefinition& dop, const Mesh& mesh, const AccuracyRequest& req,
                      const SolverOptions& opts, const Vec& weights) {
  const int ne = dop.n + dop.ng;
  req.validate(ne);

  DairReport rep;
  rep.requested = req.mirs_request;

  // Phase 1: residual minimization with early termination once every
  // transcription-tier MIRS is within request and the non-dynamic rows are
  // feasible.
  DairCaps caps;
  caps.weights = weights;
  const TranscribedNlp res_nlp = build_dair_residual(dop, mesh, caps);
  SolverOptions res_opts = opts;
  res_opts.early_termination = [&](const Vec& z) {
    const Vec mirs = transcription_mirs(dop, mesh, z);
    for (int j = 0; j < ne; ++j) {
      if (mirs(j) > req.mirs_request(j)) return false;
    }
    const PointFeasibility pf = point_feasibility(dop, mesh, z);
    return pf.boundary <= req.feas_tol && pf.path <= req.feas_tol;
  };
  rep.residual_outcome = solve(res_nlp, initial_guess(dop, mesh), res_opts);
  if (rep.residual_outcome.status == SolveStatus::numerical_failure) {
    throw std::runtime_error("residual phase failed numerically: " + rep.residual_outcome.message);
  }

  const Vec& z_res = rep.residual_outcome.x;
  rep.achieved = transcription_mirs(dop, mesh, z_res);
  {
    const Trajectory traj = interpolate_solution(z_res, mesh, dop);
    const DecisionLayout lay = DecisionLayout::build(dop, mesh);
    rep.residual_errors = local_errors(dop, mesh, traj, unpack(lay, z_res).p);
  }

  // Cap selection: the request where met, the achieved level elsewhere. The
  // relaxed caps carry a small relative margin; at the exact floor the cost
  // problem's feasible set collapses to (nearly) the warm start alone and
  // the caps become degenerate.
  rep.applied = Vec(ne);
  rep.flags.resize(ne);
  const bool early = rep.residual_outcome.status == SolveStatus::early_terminated;
  for (int j = 0; j < ne; ++j) {
    if (early || rep.achieved(j) <= req.mirs_request(j)) {
      rep.applied(j) = req.mirs_request(j);
      rep.flags[j] = EquationFlag::met_requirement;
    } else {
      rep.applied(j) = rep.achieved(j) * (1.0 + 1e-3) + 1e-300;
      rep.flags[j] = EquationFlag::relaxed_to_achievable;
    }
  }

  rep.cost_warmstart_feasible = cost_warmstart_feasible(dop, mesh, z_res, rep.applied,
                                                        std::max(req.feas_tol, 1e2 * opts.tol));

  // Phase 2: cost minimization under the applied caps, warm-started at the
  // residual-phase iterate.
  const TranscribedNlp cost_nlp = build_dair_cost(dop, mesh, rep.applied, weights);
  SolverOptions cost_opts = opts;
  cost_opts.early_termination = nullptr;
  rep.cost_outcome = solve(cost_nlp, z_res, cost_opts);

  rep.trajectory = interpolate_solution(rep.cost_outcome.x, mesh, dop);
  const DecisionLayout lay = DecisionLayout::build(dop, mesh);
  rep.cost_errors = local_errors(dop, mesh, rep.trajectory, unpack(lay, rep.cost_outcome.x).p);
  rep.objective = transcription_cost(dop, mesh, rep.cost_outcome.x);
  return rep;
}

DairReport represent_solution(const DopDefinition& dop, const Mesh& mesh, const Vec& colloc_z,
                              const AccuracyRequest& req, const SolverOptions& opts,
                              const Vec& weights) {
  const int ne = dop.n + dop.ng;
  req.validate(ne);

  DairReport rep;
  rep.requested = req.mirs_request;

  const double colloc_cost = transcription_cost(dop, mesh, colloc_z);
  const double colloc_mirns = transcription_mirns(dop, mesh, colloc_z, weights);

  DairCaps caps;
  caps.weights = weights;
  caps.objective_cap = colloc_cost + std::max(1e-12, 1e-12 * std::abs(colloc_cost));
  const TranscribedNlp nlp = build_dair_residual(dop, mesh, caps);
  rep.residual_outcome = solve(nlp, colloc_z, opts);
  if (rep.residual_outcome.status == SolveStatus::numerical_failure) {
    throw std::runtime_error("representation solve failed numerically: " +
                             rep.residual_outcome.message);
  }

  // The warm start is feasible for this problem, so a usable outcome should
  // never be worse in either metric; keep the better point as a safeguard
  // against stray local steps.
  Vec z = rep.residual_outcome.x;
  const double new_mirns = transcription_mirns(dop, mesh, z, weights);
  const double new_cost = transcription_cost(dop, mesh, z);
  const double tol10 = 10.0 * opts.tol;
  if (!rep.residual_outcome.usable() ||
      (new_mirns > colloc_mirns + tol10 || new_cost > colloc_cost + tol10)) {
    z = colloc_z;
  }

  rep.achieved = transcription_mirs(dop, mesh, z);
  rep.applied = rep.achieved;
  rep.flags.assign(ne, EquationFlag::met_requirement);
  for (int j = 0; j < ne; ++j) {
    if (rep.achieved(j) > req.mirs_request(j)) rep.flags[j] = EquationFlag::relaxed_to_achievable;
  }
  rep.trajectory = interpolate_solution(z, mesh, dop);
  const DecisionLayout lay = DecisionLayout::build(dop, mesh);
  rep.residual_errors = local_errors(dop, mesh, rep.trajectory, unpack(lay, z).p);
  rep.objective = transcription_cost(dop, mesh, z);
  rep.residual_outcome.x = z;
  return rep;
}

std::vector<AccuracyRequest> pareto_grid(const Vec& floor_mirs, int points, double span,
                                         double feas_tol) {
  if (points < 1) throw std::invalid_argument("pareto grid: need at least one point");
  std::vector<AccuracyRequest> grid;
  for (int i = 0; i < points; ++i) {
    const double factor =
        points == 1 ? 1.0 : std::pow(span, static_cast<double>(i) / (points - 1));
    AccuracyRequest req;
    req.mirs_request = floor_mirs * factor;
    for (int j = 0; j < req.mirs_request.size(); ++j) {
      req.mirs_request(j) = std::max(req.mirs_request(j), 1e-300);
    }
    req.feas_tol = feas_tol;
    grid.push_back(std::move(req));
  }
  return grid;
}

ParetoResult pareto_sweep(const DopDefinition& dop, const Mesh& mesh,
                          const std::vector<AccuracyRequest>& grid, const SolverOptions& opts,
                          const Vec& weights,
                          const std::function<double(const Trajectory&)>& violation) {
  if (grid.empty()) throw std::invalid_argument("pareto sweep: empty request grid");

  std::vector<std::future<ParetoPoint>> futures;
  futures.reserve(grid.size() + 1);
  for (const AccuracyRequest& req : grid) {
    futures.push_back(std::async(std::launch::async, [&, req]() {
      ParetoPoint pt;
      try {
        const DairReport rep = dair_solve(dop, mesh, req, opts, weights);
        pt.mirns = rep.cost_errors.mirns_report;
        pt.objective = rep.objective;
        pt.violation = violation ? violation(rep.trajectory) : 0.0;
        pt.status = to_string(rep.cost_outcome.status);
      } catch (const std::exception& e) {
        pt.status = std::string("failed: ") + e.what();
        pt.mirns = std::numeric_limits<double>::quiet_NaN();
      }
      return pt;
    }));
  }
  futures.push_back(std::async(std::launch::async, [&]() {
    ParetoPoint pt;
    pt.is_collocation = true;
    try {
      const SolveReport rep = run_collocation(dop, mesh, opts);
      pt.mirns = rep.errors.mirns_report;
      pt.objective = rep.objective;
      pt.violation = violation ? violation(rep.trajectory) : 0.0;
      pt.status = to_string(rep.outcome.status);
    } catch (const std::exception& e) {
      pt.status = std::string("failed: ") + e.what();
      pt.mirns = std::numeric_limits<double>::quiet_NaN();
    }
    return pt;
  }));

  ParetoResult result;
  for (auto& f : futures) result.points.push_back(f.get());
  std::sort(result.points.begin(), result.points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (std::isnan(a.mirns)) return false;
    if (std::isnan(b.mirns)) return true;
    return a.mirns < b.mirns;
  });

  // Dominance: another point at least as good in both metrics and strictly
  // better in one (beyond solver noise).
  const double slack = 10.0 * opts.tol;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    ParetoPoint& p = result.points[i];
    if (std::isnan(p.mirns)) continue;
    for (std::size_t q = 0; q < result.points.size(); ++q) {
      if (q == i) continue;
      const ParetoPoint& o = result.points[q];
      if (std::isnan(o.mirns)) continue;
      const bool no_worse = o.mirns <= p.mirns + slack && o.objective <= p.objective + slack;
      const bool better = o.mirns < p.mirns - slack || o.objective < p.objective - slack;
      if (no_worse && better) {
        p.dominated = true;
        break;
      }
    }
  }
  return result;
}

StudyResult convergence_study(const DopDefinition& dop, const std::string& scheme, int degree,
                              const std::vector<int>& k_list, const SolverOptions& opts,
                              const Vec& weights) {
  if (k_list.empty()) throw std::invalid_argument("convergence study: empty K list");
  for (std::size_t i = 1; i < k_list.size(); ++i) {
    if (k_list[i] <= k_list[i - 1]) {
      throw std::invalid_argument("convergence study: K list must be strictly increasing");
    }
  }

  auto run_one = [&](int K) {
    StudyRow row;
    row.K = K;
    const Mesh mesh = build_mesh(scheme, K, {}, degree);
    Vec warm;
    try {
      const SolveReport colloc = run_collocation(dop, mesh, opts);
      row.colloc_mirns = colloc.errors.mirns_report;
      row.colloc_status = to_string(colloc.outcome.status);
      if (colloc.outcome.usable()) warm = colloc.outcome.x;
    } catch (const std::exception& e) {
      row.colloc_status = std::string("failed: ") + e.what();
      row.colloc_mirns = std::numeric_limits<double>::quiet_NaN();
    }
    try {
      DairCaps caps;
      caps.weights = weights;
      const TranscribedNlp nlp = build_dair_residual(dop, mesh, caps);
      const Vec start = warm.size() == nlp.n_vars ? warm : initial_guess(dop, mesh);
      const SolveOutcome out = solve(nlp, start, opts);
      const Trajectory traj = interpolate_solution(out.x, mesh, dop);
      const DecisionLayout lay = DecisionLayout::build(dop, mesh);
      ErrorReport err = local_errors(dop, mesh, traj, unpack(lay, out.x).p);
      row.dair_mirns = err.mirns_report;
      row.dair_status = to_string(out.status);
    } catch (const std::exception& e) {
      row.dair_status = std::string("failed: ") + e.what();
      row.dair_mirns = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
  };

  std::vector<std::future<StudyRow>> futures;
  for (int K : k_list) futures.push_back(std::async(std::launch::async, run_one, K));

  StudyResult result;
  for (auto& f : futures) result.rows.push_back(f.get());
  std::sort(result.rows.begin(), result.rows.end(),
            [](const StudyRow& a, const StudyRow& b) { return a.K < b.K; });

  auto fit_slope = [](const std::vector<StudyRow>& rows, bool dair) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const StudyRow& r : rows) {
      const double v = dair ? r.dair_mirns : r.colloc_mirns;
      if (!(v > 0.0) || std::isnan(v)) continue;
      const double lx = std::log(static_cast<double>(r.K));
      const double ly = std::log(v);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
    }
    if (m < 2) return 0.0;
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  result.colloc_slope = fit_slope(result.rows, false);
  result.dair_slope = fit_slope(result.rows, true);
  return result;
}

namespace {

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
  static constexpr double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a[7][6] = {
      {0, 0, 0, 0, 0, 0},
      {1.0 / 5, 0, 0, 0, 0, 0},
      {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
      {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static constexpr double b5[7] = {35.0 / 384,     0, 500.0 / 1113, 125.0 / 192,
                                   -2187.0 / 6784, 11.0 / 84, 0};
  static constexpr double b4[7] = {5179.0 / 57600,  0,           7571.0 / 16695, 393.0 / 640,
                                   -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
};

}  // namespace

RolloutResult simulate_rollout(const DopDefinition& dop, const Trajectory& traj, const Vec& p,
                               int grid) {
  if (dop.ng != 0) {
    throw std::invalid_argument("rollout requires pure-ODE dynamics (n_g = 0)");
  }
  const double abs_tol = 1e-10, rel_tol = 1e-10;
  const int n = dop.n;

  auto rhs = [&](double t, const Vec& x, Vec& dx) {
    const Vec u = traj.input_at(std::clamp(t, traj.t0, traj.tf));
    dx.resize(n);
    dop.f64.ode(std::span<const double>(x.data(), x.size()),
                std::span<const double>(u.data(), u.size()), t,
                std::span<const double>(p.data(), p.size()),
                std::span<double>(dx.data(), dx.size()));
  };

  RolloutResult res;
  res.times = Vec::LinSpaced(grid, traj.t0, traj.tf);
  res.deviation = Vec::Zero(grid);

  Vec x = traj.state_at(traj.t0);
  res.deviation(0) = 0.0;
  double t = traj.t0;
  double h = (traj.tf - traj.t0) / 100.0;
  const double h_min = 1e-14 * (traj.tf - traj.t0);

  std::array<Vec, 7> k;
  Vec xs, x5, x4;
  int next_out = 1;
  while (next_out < grid) {
    const double t_target = res.times(next_out);
    if (t + h > t_target) h = t_target - t;
    bool step_done = false;
    while (!step_done) {
      for (int s = 0; s < 7; ++s) {
        xs = x;
        for (int j = 0; j < s; ++j) {
          if (Dopri5::a[s][j] != 0.0) xs += (h * Dopri5::a[s][j]) * k[j];
        }
        rhs(t + Dopri5::c[s] * h, xs, k[s]);
      }
      x5 = x;
      x4 = x;
      for (int s = 0; s < 7; ++s) {
        if (Dopri5::b5[s] != 0.0) x5 += (h * Dopri5::b5[s]) * k[s];
        if (Dopri5::b4[s] != 0.0) x4 += (h * Dopri5::b4[s]) * k[s];
      }
      double err = 0.0;
      for (int j = 0; j < n; ++j) {
        const double scale = abs_tol + rel_tol * std::max(std::abs(x(j)), std::abs(x5(j)));
        err = std::max(err, std::abs(x5(j) - x4(j)) / scale);
      }
      if (!std::isfinite(err)) err = 1e10;
      if (err <= 1.0) {
        t += h;
        x = x5;
        step_done = true;
      }
      const double factor = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
      h *= factor;
      if (h < h_min) {
        throw std::runtime_error("rollout integrator step collapsed at t = " + std::to_string(t));
      }
    }
    if (std::abs(t - t_target) < 1e-12 * std::max(1.0, std::abs(t_target))) {
      const Vec x_ref = traj.state_at(t_target);
      res.deviation(next_out) = (x - x_ref).norm();
      ++next_out;
    }
  }
  res.terminal_state = x;
  res.max_deviation = res.deviation.maxCoeff();
  return res;
}

}  // namespace dair
