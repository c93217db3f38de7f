#include "dair/dop.hpp"

#include <cmath>
#include <stdexcept>

namespace dair {

DopBuilder& DopBuilder::dims(int n, int m, int np, int ng, int nc, int nq) {
  dop_.n = n;
  dop_.m = m;
  dop_.np = np;
  dop_.ng = ng;
  dop_.nc = nc;
  dop_.nq = nq;
  return *this;
}

DopBuilder& DopBuilder::fixed_time(double t0, double tf) {
  dop_.t0 = TimeSpec{false, t0, t0, t0};
  dop_.tf = TimeSpec{false, tf, tf, tf};
  return *this;
}

DopBuilder& DopBuilder::free_tf(double t0, double tf_lb, double tf_ub) {
  dop_.t0 = TimeSpec{false, t0, t0, t0};
  dop_.tf = TimeSpec{true, 0.0, tf_lb, tf_ub};
  return *this;
}

DopBuilder& DopBuilder::guesses(Vec x0, Vec xf, Vec p) {
  dop_.x0_guess = std::move(x0);
  dop_.xf_guess = std::move(xf);
  dop_.p_guess = std::move(p);
  return *this;
}

DopDefinition DopBuilder::build() {
  if (!dop_.f64.lagrange) lagrange([](auto /*x*/, auto /*u*/, const auto& t, auto /*p*/) {
    return t * 0.0;
  });
  if (!dop_.f64.mayer) mayer([](auto /*x0*/, const auto& t0, auto /*xf*/, const auto& /*tf*/,
                                auto /*p*/) { return t0 * 0.0; });
  if (!dop_.f64.boundary && dop_.nq == 0) {
    boundary([](auto /*x0*/, const auto& /*t0*/, auto /*xf*/, const auto& /*tf*/, auto /*p*/,
                auto /*out*/) {});
  }
  if (!dop_.f64.dae && dop_.ng == 0) {
    dae([](auto /*x*/, auto /*xd*/, auto /*u*/, const auto& /*t*/, auto /*p*/, auto /*out*/) {});
  }
  if (!dop_.f64.path && dop_.nc == 0) {
    path([](auto /*x*/, auto /*xd*/, auto /*u*/, const auto& /*t*/, auto /*p*/, auto /*out*/) {});
  }
  dop_.validate();
  return dop_;
}

void DopDefinition::validate() const {
  if (n < 1) throw std::invalid_argument("dop '" + name + "': need at least one state");
  if (m < 0 || np < 0 || ng < 0 || nc < 0 || nq < 0) {
    throw std::invalid_argument("dop '" + name + "': negative dimension");
  }
  auto check_bounds = [this](const Vec& lb, const Vec& ub, int dim, const char* what) {
    if (lb.size() != dim || ub.size() != dim) {
      throw std::invalid_argument("dop '" + name + "': " + what + " bounds size mismatch");
    }
    for (int i = 0; i < dim; ++i) {
      if (!(lb(i) <= ub(i))) {
        throw std::invalid_argument("dop '" + name + "': " + what + " bounds inverted");
      }
    }
  };
  check_bounds(x_lb, x_ub, n, "state");
  check_bounds(u_lb, u_ub, m, "input");
  check_bounds(p_lb, p_ub, np, "parameter");
  const double t0_hi = t0.free ? t0.ub : t0.value;
  const double tf_lo = tf.free ? tf.lb : tf.value;
  if (!(t0_hi < tf_lo)) {
    throw std::invalid_argument("dop '" + name + "': t0 must precede tf for all admissible pairs");
  }
  if (!f64.ode) throw std::invalid_argument("dop '" + name + "': missing ode right-hand side");
  if (ng > 0 && !f64.dae) throw std::invalid_argument("dop '" + name + "': missing dae residual");
  if (nc > 0 && !f64.path) throw std::invalid_argument("dop '" + name + "': missing path constraint");
  if (nq > 0 && !f64.boundary) throw std::invalid_argument("dop '" + name + "': missing boundary");
}

void PolyPiece::eval(double tau, double dt, Vec& value, Vec& deriv) const {
  const RowVec pr = interp_row(fracs, bw, tau);
  const RowVec dr = deriv_row(fracs, bw, tau);
  value = (pr * values).transpose();
  deriv = (dr * values).transpose();
  if (slope_fix.size() > 0) {
    const double b = nodal_poly(fracs, tau);
    const double db = nodal_poly_deriv(fracs, tau);
    value += b * slope_fix;
    deriv += db * slope_fix;
  }
  deriv /= dt;
}

Vec PolyPiece::eval_value(double tau) const {
  const RowVec pr = interp_row(fracs, bw, tau);
  Vec value = (pr * values).transpose();
  if (slope_fix.size() > 0) value += nodal_poly(fracs, tau) * slope_fix;
  return value;
}

int Trajectory::locate(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(tf - t0));
  if (t < t0 - tol || t > tf + tol) {
    throw std::domain_error("trajectory: time outside [t0, tf]");
  }
  const int K = intervals();
  // First interval whose right end reaches t; at an interior breakpoint this
  // selects the left piece.
  for (int k = 0; k < K; ++k) {
    if (t <= breaks(k + 1)) return k;
  }
  return K - 1;
}

void Trajectory::eval(double t, Vec& x, Vec& xdot, Vec& u) const {
  const int k = locate(t);
  const double dt = breaks(k + 1) - breaks(k);
  const double tau = (t - breaks(k)) / dt;
  state[k].eval(tau, dt, x, xdot);
  if (!input.empty()) {
    Vec udot;
    input[k].eval(tau, dt, u, udot);
  } else {
    u.resize(0);
  }
}

Vec Trajectory::state_at(double t) const {
  Vec x, xd, u;
  eval(t, x, xd, u);
  return x;
}

Vec Trajectory::state_deriv_at(double t) const {
  Vec x, xd, u;
  eval(t, x, xd, u);
  return xd;
}

Vec Trajectory::input_at(double t) const {
  Vec x, xd, u;
  eval(t, x, xd, u);
  return u;
}

TrajectorySample evaluate_trajectory(const Trajectory& traj, double t) {
  TrajectorySample s;
  traj.eval(t, s.x, s.xdot, s.u);
  return s;
}

}  // namespace dair
