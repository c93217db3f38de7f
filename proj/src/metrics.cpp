#include "dair/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dair/transcription.hpp"

namespace dair {

void ResidualConfig::validate(int n_equations) const {
  if (weights.size() != 0) {
    if (weights.size() != n_equations) {
      throw std::invalid_argument("residual config: weights must have n + n_g entries");
    }
    bool any_positive = false;
    for (int j = 0; j < weights.size(); ++j) {
      if (!std::isfinite(weights(j)) || weights(j) < 0.0) {
        throw std::invalid_argument("residual config: weights must be finite and nonnegative");
      }
      any_positive = any_positive || weights(j) > 0.0;
    }
    if (!any_positive) {
      throw std::invalid_argument("residual config: at least one weight must be positive");
    }
  }
  if (report_oversample < 1) {
    throw std::invalid_argument("residual config: reporting oversample must be >= 1");
  }
  if (violation_samples < 2) {
    throw std::invalid_argument("residual config: need at least 2 violation samples per point");
  }
}

Vec ResidualConfig::effective_weights(int n_equations) const {
  validate(n_equations);
  if (weights.size() == 0) return Vec::Ones(n_equations);
  return weights;
}

namespace {

// Residual on piece k at local fraction tau (avoids breakpoint tie-breaks).
void residual_on_piece(const DopDefinition& dop, const Trajectory& traj, int k, double tau,
                       const Vec& p, Vec& eps) {
  const double dt_k = traj.breaks(k + 1) - traj.breaks(k);
  Vec x, xd, u;
  traj.state[k].eval(tau, dt_k, x, xd);
  Vec udot;
  if (dop.m > 0) {
    traj.input[k].eval(tau, dt_k, u, udot);
  } else {
    u.resize(0);
  }
  const double t = traj.breaks(k) + dt_k * tau;
  eps.resize(dop.n + dop.ng);
  Vec f(dop.n);
  dop.f64.ode(std::span<const double>(x.data(), x.size()),
              std::span<const double>(u.data(), u.size()), t,
              std::span<const double>(p.data(), p.size()), std::span<double>(f.data(), f.size()));
  for (int j = 0; j < dop.n; ++j) eps(j) = xd(j) - f(j);
  if (dop.ng > 0) {
    dop.f64.dae(std::span<const double>(x.data(), x.size()),
                std::span<const double>(xd.data(), xd.size()),
                std::span<const double>(u.data(), u.size()), t,
                std::span<const double>(p.data(), p.size()),
                std::span<double>(eps.data() + dop.n, dop.ng));
  }
}

}  // namespace

Vec residual_at(const DopDefinition& dop, const Trajectory& traj, const Vec& p, double t) {
  const int k = traj.locate(t);
  const double dt_k = traj.breaks(k + 1) - traj.breaks(k);
  const double tau = (t - traj.breaks(k)) / dt_k;
  Vec eps;
  residual_on_piece(dop, traj, k, tau, p, eps);
  return eps;
}

double irns(const DopDefinition& dop, const Mesh& mesh, const Trajectory& traj, const Vec& p,
            const ResidualConfig& cfg) {
  const int ne = dop.n + dop.ng;
  const Vec w = cfg.effective_weights(ne);
  const Vec wsq = w.cwiseProduct(w);
  const double horizon = traj.tf - traj.t0;
  double total = 0.0;
  Vec eps;
  for (int k = 0; k < mesh.K; ++k) {
    const double ds = mesh.interval_fraction(k);
    for (int qi = 0; qi < mesh.quad_points(); ++qi) {
      residual_on_piece(dop, traj, k, mesh.quad_fracs(qi), p, eps);
      double s = 0.0;
      for (int j = 0; j < ne; ++j) s += wsq(j) * eps(j) * eps(j);
      total += mesh.quad_w(qi) * ds * horizon * s;
    }
  }
  return total;
}

ErrorReport local_errors(const DopDefinition& dop, const Mesh& mesh, const Trajectory& traj,
                         const Vec& p, const ResidualConfig& cfg) {
  const int ne = dop.n + dop.ng;
  const Vec w = cfg.effective_weights(ne);
  const Vec wsq = w.cwiseProduct(w);
  const int N = mesh.points_per_interval();
  const double horizon = traj.tf - traj.t0;

  ErrorReport rep;
  rep.dt = horizon;
  rep.zeta = Mat::Zero(ne, mesh.K);
  rep.eta = Vec::Zero(mesh.K);
  rep.mirs = Vec::Zero(ne);

  // Reporting tier: independent higher-order rule for the local errors.
  auto [rq, rw] = gauss_legendre(std::min(128, cfg.report_oversample * N));
  Vec eps;
  for (int k = 0; k < mesh.K; ++k) {
    const double dt_k = traj.breaks(k + 1) - traj.breaks(k);
    for (int qi = 0; qi < rq.size(); ++qi) {
      residual_on_piece(dop, traj, k, rq(qi), p, eps);
      const double wq = rw(qi) * dt_k;
      double nrm2 = 0.0, wnrm2 = 0.0;
      for (int j = 0; j < ne; ++j) {
        rep.zeta(j, k) += wq * std::abs(eps(j));
        nrm2 += eps(j) * eps(j);
        wnrm2 += wsq(j) * eps(j) * eps(j);
      }
      rep.eta(k) += wq * std::sqrt(nrm2);
      rep.r_report += wq * wnrm2;
    }
  }
  rep.mirns_report = rep.r_report / horizon;

  // Transcription tier: what the NLPs actually control.
  for (int k = 0; k < mesh.K; ++k) {
    const double ds = mesh.interval_fraction(k);
    for (int qi = 0; qi < mesh.quad_points(); ++qi) {
      residual_on_piece(dop, traj, k, mesh.quad_fracs(qi), p, eps);
      const double wfrac = mesh.quad_w(qi) * ds;
      double wnrm2 = 0.0;
      for (int j = 0; j < ne; ++j) {
        rep.mirs(j) += wfrac * eps(j) * eps(j);
        wnrm2 += wsq(j) * eps(j) * eps(j);
      }
      rep.r += wfrac * horizon * wnrm2;
    }
  }
  rep.mirns = rep.r / horizon;

  // Constraint violation on a uniform per-interval grid.
  if (dop.nc > 0) {
    const int samples = cfg.violation_samples * N;
    Vec x, xd, u, udot, cc(dop.nc);
    for (int k = 0; k < mesh.K; ++k) {
      const double dt_k = traj.breaks(k + 1) - traj.breaks(k);
      for (int s = 0; s < samples; ++s) {
        const double tau = static_cast<double>(s) / (samples - 1);
        traj.state[k].eval(tau, dt_k, x, xd);
        if (dop.m > 0) traj.input[k].eval(tau, dt_k, u, udot);
        const double t = traj.breaks(k) + dt_k * tau;
        dop.f64.path(std::span<const double>(x.data(), x.size()),
                     std::span<const double>(xd.data(), xd.size()),
                     std::span<const double>(u.data(), u.size()), t,
                     std::span<const double>(p.data(), p.size()),
                     std::span<double>(cc.data(), cc.size()));
        for (int j = 0; j < dop.nc; ++j) {
          rep.constraint_violation = std::max(rep.constraint_violation, cc(j));
        }
      }
    }
  }
  return rep;
}

Vec mirs_constraint_values(const DopDefinition& dop, const Mesh& mesh, const Vec& z,
                           const ResidualConfig& cfg) {
  cfg.validate(dop.n + dop.ng);
  return transcription_mirs(dop, mesh, z);
}

nlohmann::json ErrorReport::to_json() const {
  nlohmann::json j;
  j["r"] = r;
  j["mirns"] = mirns;
  j["mirs"] = std::vector<double>(mirs.begin(), mirs.end());
  j["r_report"] = r_report;
  j["mirns_report"] = mirns_report;
  j["eta"] = std::vector<double>(eta.begin(), eta.end());
  std::vector<std::vector<double>> zrows;
  for (int i = 0; i < zeta.rows(); ++i) {
    zrows.emplace_back(zeta.row(i).begin(), zeta.row(i).end());
  }
  j["zeta"] = zrows;
  j["constraint_violation"] = constraint_violation;
  j["dt"] = dt;
  return j;
}

}  // namespace dair
