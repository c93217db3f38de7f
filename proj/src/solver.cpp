#include "dair/solver.hpp"

#include <cstdio>

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

namespace dair {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::early_terminated: return "early-terminated";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::infeasible_detected: return "infeasible-detected";
    case SolveStatus::numerical_failure: return "numerical-failure";
  }
  return "?";
}

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
  if (!(mu_shrink > 0.0 && mu_shrink < 1.0)) {
    throw std::invalid_argument("solver: barrier reduction factor must be in (0,1)");
  }
}

namespace {

constexpr double kFtb = 0.995;       // fraction-to-boundary factor
constexpr double kSigma = 1e10;      // dual safeguard box width
constexpr double kRhoCool = 1e4;     // penalty level the endgame cools down to

struct Work {
  const TranscribedNlp& nlp;
  Vec lb, ub;
  std::vector<bool> has_lb, has_ub, frozen;
  int n, n_eq, n_in;

  explicit Work(const TranscribedNlp& p) : nlp(p) {
    n = p.n_vars;
    n_eq = static_cast<int>(p.eq.size());
    n_in = static_cast<int>(p.ineq.size());
    lb = p.lb;
    ub = p.ub;
    has_lb.resize(n);
    has_ub.resize(n);
    frozen.resize(n);
    for (int i = 0; i < n; ++i) {
      has_lb[i] = std::isfinite(lb(i));
      has_ub[i] = std::isfinite(ub(i));
      frozen[i] = has_lb[i] && has_ub[i] && (ub(i) - lb(i) < 1e-14);
    }
  }

  Vec project(const Vec& x0) const {
    Vec x = x0;
    for (int i = 0; i < n; ++i) {
      if (frozen[i]) {
        x(i) = 0.5 * (lb(i) + ub(i));
        continue;
      }
      double margin = 1e-4;
      if (has_lb[i] && has_ub[i]) margin = std::min(margin, 1e-4 * (ub(i) - lb(i)));
      if (has_lb[i]) x(i) = std::max(x(i), lb(i) + margin);
      if (has_ub[i]) x(i) = std::min(x(i), ub(i) - margin);
    }
    return x;
  }

  double barrier(const Vec& x, double mu) const {
    double b = 0.0;
    for (int i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      if (has_lb[i]) b -= std::log(x(i) - lb(i));
      if (has_ub[i]) b -= std::log(ub(i) - x(i));
    }
    return mu * b;
  }
};

using SparseRows = std::vector<std::vector<std::pair<int, double>>>;

// Augmented Lagrangian with the shifted-penalty treatment of inequality rows,
// log barrier on the variable bounds.
double merit_value(const Work& w, const Vec& x, double mu, double rho, const Vec& lam_eq,
                   const Vec& lam_in) {
  const std::span<const double> z(x.data(), static_cast<std::size_t>(x.size()));
  const double f = w.nlp.objective(z);
  double m = f + w.barrier(x, mu);
  if (w.n_eq > 0) {
    const Vec ce = w.nlp.equalities(z);
    m += lam_eq.dot(ce) + 0.5 * rho * ce.squaredNorm();
  }
  if (w.n_in > 0) {
    const Vec ci = w.nlp.inequalities(z);
    for (int i = 0; i < w.n_in; ++i) {
      const double shifted = std::max(0.0, lam_in(i) + rho * ci(i));
      m += (shifted * shifted - lam_in(i) * lam_in(i)) / (2.0 * rho);
    }
  }
  return m;
}

}  // namespace

SolveOutcome solve(const TranscribedNlp& nlp, const Vec& x0, const SolverOptions& opts) {
  opts.validate();
  Work w(nlp);
  const int n = w.n, n_eq = w.n_eq, n_in = w.n_in;
  const double tol = opts.tol;

  SolveOutcome out;
  Vec x = w.project(x0);
  auto zspan = [&]() { return std::span<const double>(x.data(), x.size()); };

  Vec lam_eq = Vec::Zero(n_eq);
  Vec lam_in = Vec::Zero(n_in);
  double mu = opts.mu0;
  double rho = opts.rho0;
  double prev_progress = std::numeric_limits<double>::infinity();

  // Primal-dual bound multipliers, kept inside a safeguard box around mu/d.
  Vec z_lo = Vec::Zero(n), z_hi = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (w.frozen[i]) continue;
    if (w.has_lb[i]) z_lo(i) = mu / (x(i) - w.lb(i));
    if (w.has_ub[i]) z_hi(i) = mu / (w.ub(i) - x(i));
  }

  Mat h_smooth(n, n), h(n, n);
  bool h_valid = false;
  double alpha_prev = 1.0;
  int steps_since_refresh = 0;
  int iter = 0;
  int stalled_majors = 0;

  auto fail = [&](const std::string& msg) {
    out.status = SolveStatus::numerical_failure;
    out.message = msg;
    out.x = x;
    out.objective = nlp.objective(zspan());
    return out;
  };

  for (int major = 0; major < opts.max_major; ++major) {
    const double theta = std::max(0.1 * tol, 0.1 * mu);
    int tiny_steps = 0;
    h_valid = false;  // multipliers changed

    // ---- inner damped-Newton loop ----
    for (int inner = 0; inner < opts.max_inner; ++inner) {
      const double f = nlp.objective(zspan());
      Vec grad_l = nlp.objective_gradient(zspan());
      const Vec ce = nlp.equalities(zspan());
      const Vec ci = nlp.inequalities(zspan());
      if (!std::isfinite(f) || !grad_l.allFinite() || !ce.allFinite() || !ci.allFinite()) {
        return fail("non-finite problem evaluation");
      }

      const SparseRows j_eq = nlp.eq_jacobian(zspan());
      const SparseRows j_in = nlp.ineq_jacobian(zspan());

      const Vec sig_eq = lam_eq + rho * ce;
      Vec sig_in(n_in);
      for (int i = 0; i < n_in; ++i) sig_in(i) = std::max(0.0, lam_in(i) + rho * ci(i));

      for (int r = 0; r < n_eq; ++r) {
        for (auto& [idx, val] : j_eq[r]) grad_l(idx) += sig_eq(r) * val;
      }
      for (int r = 0; r < n_in; ++r) {
        if (sig_in(r) == 0.0) continue;
        for (auto& [idx, val] : j_in[r]) grad_l(idx) += sig_in(r) * val;
      }

      // Primal-dual optimality error of the barrier subproblem.
      double pd_err = 0.0;
      Vec grad_phi = grad_l;  // barrier-gradient right-hand side
      for (int i = 0; i < n; ++i) {
        if (w.frozen[i]) {
          grad_phi(i) = 0.0;
          continue;
        }
        double g_pd = grad_l(i);
        if (w.has_lb[i]) {
          const double d = x(i) - w.lb(i);
          grad_phi(i) -= mu / d;
          g_pd -= z_lo(i);
          pd_err = std::max(pd_err, std::abs(z_lo(i) * d - mu));
        }
        if (w.has_ub[i]) {
          const double d = w.ub(i) - x(i);
          grad_phi(i) += mu / d;
          g_pd += z_hi(i);
          pd_err = std::max(pd_err, std::abs(z_hi(i) * d - mu));
        }
        pd_err = std::max(pd_err, std::abs(g_pd));
      }
      if (!std::isfinite(pd_err)) return fail("non-finite merit gradient");
      if (pd_err <= theta) break;

      // Exact curvature plus Gauss-Newton penalty; refreshed lazily since the
      // term Hessians dominate the per-step cost. The primal-dual bound
      // diagonal is always current.
      if (!h_valid || steps_since_refresh >= 0 || alpha_prev < 2.0) {
        h_smooth.setZero();
        nlp.accumulate_hessian(zspan(), 1.0, std::span<const double>(sig_eq.data(), sig_eq.size()),
                               std::span<const double>(sig_in.data(), sig_in.size()), h_smooth);
        for (int r = 0; r < n_eq; ++r) {
          for (auto& [i1, v1] : j_eq[r]) {
            for (auto& [i2, v2] : j_eq[r]) h_smooth(i1, i2) += rho * v1 * v2;
          }
        }
        for (int r = 0; r < n_in; ++r) {
          if (sig_in(r) == 0.0) continue;
          for (auto& [i1, v1] : j_in[r]) {
            for (auto& [i2, v2] : j_in[r]) h_smooth(i1, i2) += rho * v1 * v2;
          }
        }
        h_valid = true;
        steps_since_refresh = 0;
      }
      h = h_smooth;
      for (int i = 0; i < n; ++i) {
        if (w.frozen[i]) continue;
        if (w.has_lb[i]) h(i, i) += z_lo(i) / (x(i) - w.lb(i));
        if (w.has_ub[i]) h(i, i) += z_hi(i) / (w.ub(i) - x(i));
      }
      for (int i = 0; i < n; ++i) {
        if (!w.frozen[i]) continue;
        h.row(i).setZero();
        h.col(i).setZero();
        h(i, i) = 1.0;
      }

      // Regularized factorization: inflate the diagonal shift until positive
      // definite and a descent direction for the barrier merit comes out.
      double tau = 0.0;
      const double tau0 = 1e-10 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
      Vec dx(n);
      double dd = 0.0;
      bool ok = false;
      for (int attempt = 0; attempt < 40; ++attempt) {
        Mat hreg = h;
        if (tau > 0.0) hreg.diagonal().array() += tau;
        Eigen::LLT<Mat> llt(hreg);
        if (llt.info() == Eigen::Success) {
          dx = llt.solve(-grad_phi);
          dd = grad_phi.dot(dx);
          if (dd < 0.0 && dx.allFinite()) {
            ok = true;
            break;
          }
        }
        tau = (tau == 0.0) ? tau0 : tau * 10.0;
        if (tau > 1e14) break;
      }
      if (!ok) break;  // let the outer loop adjust multipliers / penalties

      double alpha_max = 1.0;
      for (int i = 0; i < n; ++i) {
        if (w.frozen[i]) continue;
        if (w.has_lb[i] && dx(i) < 0.0) {
          alpha_max = std::min(alpha_max, kFtb * (w.lb(i) - x(i)) / dx(i));
        }
        if (w.has_ub[i] && dx(i) > 0.0) {
          alpha_max = std::min(alpha_max, kFtb * (w.ub(i) - x(i)) / dx(i));
        }
      }

      // Barrier-subproblem KKT error at a trial point with the current duals;
      // used by the endgame acceptance where merit differences fall below
      // evaluation noise.
      auto trial_pd_err = [&](const Vec& xt) {
        const std::span<const double> zs(xt.data(), static_cast<std::size_t>(xt.size()));
        Vec g = nlp.objective_gradient(zs);
        const Vec cet = nlp.equalities(zs);
        const Vec cit = nlp.inequalities(zs);
        const SparseRows jet = nlp.eq_jacobian(zs);
        const SparseRows jit = nlp.ineq_jacobian(zs);
        for (int r = 0; r < n_eq; ++r) {
          const double s = lam_eq(r) + rho * cet(r);
          for (auto& [idx, val] : jet[r]) g(idx) += s * val;
        }
        for (int r = 0; r < n_in; ++r) {
          const double s = std::max(0.0, lam_in(r) + rho * cit(r));
          if (s == 0.0) continue;
          for (auto& [idx, val] : jit[r]) g(idx) += s * val;
        }
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
          if (w.frozen[i]) continue;
          double gi = g(i);
          if (w.has_lb[i]) gi -= z_lo(i);
          if (w.has_ub[i]) gi += z_hi(i);
          e = std::max(e, std::abs(gi));
        }
        return e;
      };
      const bool endgame = (n_eq == 0 || ce.lpNorm<Eigen::Infinity>() <= 1e2 * tol) &&
                           (n_in == 0 || ci.maxCoeff() <= 1e2 * tol);

      const double m0 = merit_value(w, x, mu, rho, lam_eq, lam_in);
      double alpha = alpha_max;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vec x_new = x + alpha * dx;
        const double m_new = merit_value(w, x_new, mu, rho, lam_eq, lam_in);
        const bool merit_ok = std::isfinite(m_new) && m_new <= m0 + 1e-4 * alpha * dd;
        // Near the solution the predicted decrease drops below the merit's
        // floating-point resolution; there a contraction of the KKT residual
        // certifies the (damped) Newton step instead.
        const bool polish_ok = !merit_ok && endgame && ls < 3 &&
                               std::abs(dd) <= 1e-9 * (1.0 + std::abs(m0)) &&
                               std::isfinite(m_new) &&
                               trial_pd_err(x_new) <= 0.9 * pd_err;
        if (merit_ok || polish_ok) {
          // Dual step from the linearized complementarity, with its own
          // fraction-to-boundary and the safeguard box around mu/d.
          for (int i = 0; i < n; ++i) {
            if (w.frozen[i]) continue;
            if (w.has_lb[i]) {
              const double d_old = x(i) - w.lb(i);
              const double dz = (mu - z_lo(i) * d_old) / d_old - z_lo(i) * alpha * dx(i) / d_old;
              double step = dz;
              if (dz < 0.0) step = std::max(dz, -kFtb * z_lo(i));
              z_lo(i) += step;
              const double d_new = x_new(i) - w.lb(i);
              z_lo(i) = std::clamp(z_lo(i), mu / (kSigma * d_new), kSigma * mu / d_new);
            }
            if (w.has_ub[i]) {
              const double d_old = w.ub(i) - x(i);
              const double dz = (mu - z_hi(i) * d_old) / d_old + z_hi(i) * alpha * dx(i) / d_old;
              double step = dz;
              if (dz < 0.0) step = std::max(dz, -kFtb * z_hi(i));
              z_hi(i) += step;
              const double d_new = w.ub(i) - x_new(i);
              z_hi(i) = std::clamp(z_hi(i), mu / (kSigma * d_new), kSigma * mu / d_new);
            }
          }
          x = x_new;
          IterationRecord rec;
          rec.iter = iter++;
          rec.major = major;
          rec.inner = inner;
          rec.objective = f;
          rec.merit = m_new;
          rec.eq_violation = n_eq > 0 ? ce.lpNorm<Eigen::Infinity>() : 0.0;
          rec.ineq_violation = n_in > 0 ? std::max(0.0, ci.maxCoeff()) : 0.0;
          rec.step_norm = alpha * dx.norm();
          rec.mu = mu;
          rec.rho = rho;
          out.log.push_back(rec);
          accepted = true;
          break;
        }
        alpha *= 0.5;
        if (alpha < 1e-18) break;
      }
      if (opts.verbosity >= 2) {
        std::fprintf(stderr,
                     "[inner] major=%d inner=%d pd=%.3e tau=%.1e alpha=%.3e dd=%.3e acc=%d\n",
                     major, inner, pd_err, tau, alpha, dd, accepted ? 1 : 0);
      }
      if (!accepted) break;
      alpha_prev = alpha;
      ++steps_since_refresh;
      if (alpha * dx.lpNorm<Eigen::Infinity>() < 1e-15 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
        if (++tiny_steps >= 2) break;
      } else {
        tiny_steps = 0;
      }
    }

    // ---- major-iteration bookkeeping ----
    const Vec ce = nlp.equalities(zspan());
    const Vec ci = nlp.inequalities(zspan());
    const double eq_viol = n_eq > 0 ? ce.lpNorm<Eigen::Infinity>() : 0.0;
    const double ineq_viol = n_in > 0 ? std::max(0.0, ci.maxCoeff()) : 0.0;

    // Progress measure for the penalty schedule: equality violation plus the
    // shifted inequality measure max(c, -lambda/rho).
    double progress = eq_viol;
    for (int i = 0; i < n_in; ++i) {
      progress = std::max(progress, std::abs(std::max(ci(i), -lam_in(i) / rho)));
    }

    // KKT stationarity with first-order row multipliers and the bound duals.
    Vec grad_stat = nlp.objective_gradient(zspan());
    const SparseRows j_eq = nlp.eq_jacobian(zspan());
    const SparseRows j_in = nlp.ineq_jacobian(zspan());
    const Vec sig_eq = lam_eq + rho * ce;
    Vec sig_in(n_in);
    for (int i = 0; i < n_in; ++i) sig_in(i) = std::max(0.0, lam_in(i) + rho * ci(i));
    for (int r = 0; r < n_eq; ++r) {
      for (auto& [idx, val] : j_eq[r]) grad_stat(idx) += sig_eq(r) * val;
    }
    for (int r = 0; r < n_in; ++r) {
      if (sig_in(r) == 0.0) continue;
      for (auto& [idx, val] : j_in[r]) grad_stat(idx) += sig_in(r) * val;
    }
    double z_abs_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      if (w.frozen[i]) {
        grad_stat(i) = 0.0;
        continue;
      }
      if (w.has_lb[i]) {
        grad_stat(i) -= z_lo(i);
        z_abs_sum += z_lo(i);
      }
      if (w.has_ub[i]) {
        grad_stat(i) += z_hi(i);
        z_abs_sum += z_hi(i);
      }
    }
    const double lam_abs_sum = sig_eq.cwiseAbs().sum() + sig_in.cwiseAbs().sum() + z_abs_sum;
    const int n_mult = n_eq + n_in + 2 * n;
    const double sd = std::max(100.0, lam_abs_sum / std::max(1, n_mult)) / 100.0;
    const double stat = grad_stat.lpNorm<Eigen::Infinity>() / sd;

    if (opts.verbosity >= 1) {
      int imax = 0;
      grad_stat.cwiseAbs().maxCoeff(&imax);
      std::fprintf(stderr,
                   "[major %d] eq=%.3e in=%.3e stat=%.3e sd=%.3e mu=%.1e rho=%.1e "
                   "imax=%d g=%.3e dlb=%.3e dub=%.3e zlo=%.3e zhi=%.3e\n",
                   major, eq_viol, ineq_viol, stat, sd, mu, rho, imax, grad_stat(imax),
                   w.has_lb[imax] ? x(imax) - w.lb(imax) : -1.0,
                   w.has_ub[imax] ? w.ub(imax) - x(imax) : -1.0, z_lo(imax), z_hi(imax));
    }

    if (opts.early_termination && opts.early_termination(x)) {
      out.status = SolveStatus::early_terminated;
      out.x = x;
      out.objective = nlp.objective(zspan());
      out.eq_violation = eq_viol;
      out.ineq_violation = ineq_viol;
      return out;
    }

    if (eq_viol <= tol && ineq_viol <= tol && stat <= tol &&
        mu <= std::max(tol, 10 * opts.mu_floor)) {
      out.status = SolveStatus::converged;
      out.x = x;
      out.objective = nlp.objective(zspan());
      out.eq_violation = eq_viol;
      out.ineq_violation = ineq_viol;
      return out;
    }

    lam_eq += rho * ce;
    for (int i = 0; i < n_in; ++i) lam_in(i) = std::max(0.0, lam_in(i) + rho * ci(i));
    if (eq_viol <= tol && ineq_viol <= tol && stat > tol && rho > kRhoCool) {
      // Violations are met and only stationarity blocks: a large penalty
      // raises the merit's noise floor, so cool it and let the multipliers
      // carry the constraints.
      rho *= 0.1;
      stalled_majors = 0;
    } else if (progress > 0.25 * prev_progress && progress > tol) {
      rho = std::min(rho * 10.0, opts.rho_max);
      ++stalled_majors;
    } else {
      stalled_majors = 0;
    }
    prev_progress = std::max(progress, 1e-300);
    mu = std::max(mu * opts.mu_shrink, opts.mu_floor);

    if (stalled_majors >= 8 && rho >= opts.rho_max && progress > 1e3 * tol) {
      out.status = SolveStatus::infeasible_detected;
      out.x = x;
      out.objective = nlp.objective(zspan());
      out.eq_violation = eq_viol;
      out.ineq_violation = ineq_viol;
      out.message = "constraint violation stopped improving at the penalty cap";
      return out;
    }
  }

  out.status = SolveStatus::max_iterations;
  out.x = x;
  out.objective = nlp.objective(zspan());
  const Vec ce = nlp.equalities(zspan());
  const Vec ci = nlp.inequalities(zspan());
  out.eq_violation = n_eq > 0 ? ce.lpNorm<Eigen::Infinity>() : 0.0;
  out.ineq_violation = n_in > 0 ? std::max(0.0, ci.maxCoeff()) : 0.0;
  return out;
}

namespace {

std::map<std::string, SolveBackend>& backend_registry() {
  static std::map<std::string, SolveBackend> reg{
      {"builtin", [](const TranscribedNlp& nlp, const Vec& x0, const SolverOptions& o) {
         return solve(nlp, x0, o);
       }}};
  return reg;
}

std::mutex& backend_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void register_backend(const std::string& name, SolveBackend backend) {
  std::lock_guard<std::mutex> lock(backend_mutex());
  auto& reg = backend_registry();
  if (reg.count(name)) {
    throw std::invalid_argument("solver backend '" + name + "' already registered");
  }
  reg[name] = std::move(backend);
}

SolveOutcome solve_with(const std::string& backend, const TranscribedNlp& nlp, const Vec& x0,
                        const SolverOptions& opts) {
  SolveBackend fn;
  {
    std::lock_guard<std::mutex> lock(backend_mutex());
    auto& reg = backend_registry();
    auto it = reg.find(backend);
    if (it == reg.end()) {
      std::string names;
      for (auto& [k, v] : reg) names += (names.empty() ? "" : ", ") + k;
      throw std::invalid_argument("unknown solver backend '" + backend +
                                  "' (available: " + names + ")");
    }
    fn = it->second;
  }
  return fn(nlp, x0, opts);
}

std::vector<std::string> solver_backends() {
  std::lock_guard<std::mutex> lock(backend_mutex());
  std::vector<std::string> names;
  for (auto& [k, v] : backend_registry()) names.push_back(k);
  return names;
}

}  // namespace dair
