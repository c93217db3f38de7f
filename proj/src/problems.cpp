#include "dair/problems.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dair {

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Scalar regulator with a closed-form optimum: min int(x^2 + u^2),
// xdot = u, x(0) = 1, terminal state free, horizon [0, 1].
DopDefinition make_lq() {
  DopBuilder b;
  b.name("lq-analytic")
      .dims(1, 1, 0, 0, 0, 1)
      .state_bounds(vec({-10.0}), vec({10.0}))
      .input_bounds(vec({-10.0}), vec({10.0}))
      .param_bounds(Vec(0), Vec(0))
      .fixed_time(0.0, 1.0)
      .guesses(vec({1.0}), vec({0.3}));
  b.ode([](auto /*x*/, auto u, const auto& /*t*/, auto /*p*/, auto out) { out[0] = u[0]; });
  b.lagrange([](auto x, auto u, const auto& /*t*/, auto /*p*/) {
    return x[0] * x[0] + u[0] * u[0];
  });
  b.boundary([](auto x0, const auto& /*t0*/, auto /*xf*/, const auto& /*tf*/, auto /*p*/,
                auto out) { out[0] = x0[0] - 1.0; });
  return b.build();
}

// Normalized vertical-ascent rocket: maximize final altitude with
// bang-singular-bang thrust. Classic nondimensional constants:
// h0 = v0 = 0 -> h(0)=1, v(0)=0, m(0)=1, g0 = 1, c = 0.5, T_max = 3.5,
// drag D = 310 v^2 exp(-500 (h-1)), terminal mass 0.6, free final time.
DopDefinition make_goddard() {
  DopBuilder b;
  b.name("goddard")
      .dims(3, 1, 0, 0, 0, 4)
      .state_bounds(vec({0.99, -0.3, 0.55}), vec({1.2, 0.5, 1.05}))
      .input_bounds(vec({0.0}), vec({3.5}))
      .param_bounds(Vec(0), Vec(0))
      .free_tf(0.0, 0.1, 0.35)
      .guesses(vec({1.0, 0.0, 1.0}), vec({1.01, 0.02, 0.6}));
  b.ode([](auto x, auto u, const auto& /*t*/, auto /*p*/, auto out) {
    const auto& h = x[0];
    const auto& v = x[1];
    const auto& mass = x[2];
    const auto drag = 310.0 * v * v * exp(-500.0 * (h - 1.0));
    const auto grav = 1.0 / (h * h);
    out[0] = v;
    out[1] = (u[0] - drag) / mass - grav;
    out[2] = -u[0] / 0.5;
  });
  b.mayer([](auto /*x0*/, const auto& /*t0*/, auto xf, const auto& /*tf*/, auto /*p*/) {
    return -xf[0];
  });
  b.boundary([](auto x0, const auto& /*t0*/, auto xf, const auto& /*tf*/, auto /*p*/, auto out) {
    out[0] = x0[0] - 1.0;
    out[1] = x0[1];
    out[2] = x0[2] - 1.0;
    out[3] = xf[2] - 0.6;
  });
  return b.build();
}

// Planar pendulum in Cartesian coordinates with the rod length kept as a
// position-level algebraic constraint (index 3). Inputs: tangential force
// and the rod tension. Unit mass and length, g = 9.81. Swing from hanging
// to horizontal in 1.5 s minimizing control effort.
DopDefinition make_dae_pendulum() {
  DopBuilder b;
  b.name("dae-pendulum")
      .dims(4, 2, 0, 1, 0, 6)
      .state_bounds(vec({-1.05, -1.05, -12.0, -12.0}), vec({1.05, 1.05, 12.0, 12.0}))
      .input_bounds(vec({-25.0, -40.0}), vec({25.0, 40.0}))
      .param_bounds(Vec(0), Vec(0))
      .fixed_time(0.0, 1.5)
      .guesses(vec({0.0, -1.0, 0.0, 0.0}), vec({1.0, 0.0, 0.0, 0.0}));
  b.ode([](auto x, auto u, const auto& /*t*/, auto /*p*/, auto out) {
    const auto& px = x[0];
    const auto& py = x[1];
    const auto& force = u[0];
    const auto& tension = u[1];
    out[0] = x[2];
    out[1] = x[3];
    out[2] = -tension * px - force * py;
    out[3] = -tension * py + force * px - 9.81;
  });
  b.dae([](auto x, auto /*xd*/, auto /*u*/, const auto& /*t*/, auto /*p*/, auto out) {
    out[0] = x[0] * x[0] + x[1] * x[1] - 1.0;
  });
  b.lagrange([](auto /*x*/, auto u, const auto& /*t*/, auto /*p*/) { return u[0] * u[0]; });
  b.boundary([](auto x0, const auto& /*t0*/, auto xf, const auto& /*tf*/, auto /*p*/, auto out) {
    out[0] = x0[0];
    out[1] = x0[1] + 1.0;
    out[2] = x0[2];
    out[3] = x0[3];
    out[4] = xf[0] - 1.0;
    out[5] = xf[1];
  });
  return b.build();
}

// Cart pole swing-up. States (y1, y1dot, theta1, theta1dot) with theta
// measured from the hanging position; cart mass 1 kg, pole mass 0.3 kg,
// pole length 0.5 m, g = 9.81. Control effort objective, t_f = 2 s,
// u in [-20, 20] N, terminal conditions y1 = 1, y1dot = 0, theta1 = pi,
// theta1dot = 0.
DopDefinition make_cartpole() {
  DopBuilder b;
  const double pi = M_PI;
  b.name("cartpole")
      .dims(4, 1, 0, 0, 0, 8)
      .state_bounds(vec({-2.0, -12.0, -2.0 * pi, -14.0}), vec({2.0, 12.0, 3.0 * pi, 14.0}))
      .input_bounds(vec({-20.0}), vec({20.0}))
      .param_bounds(Vec(0), Vec(0))
      .fixed_time(0.0, 2.0)
      .guesses(vec({0.0, 0.0, 0.0, 0.0}), vec({1.0, 0.0, pi, 0.0}));
  b.ode([](auto x, auto u, const auto& /*t*/, auto /*p*/, auto out) {
    constexpr double m1 = 1.0, m2 = 0.3, len = 0.5, grav = 9.81;
    const auto& th = x[2];
    const auto& thd = x[3];
    const auto s = sin(th);
    const auto c = cos(th);
    const auto den = m1 + m2 * (1.0 - c * c);
    out[0] = x[1];
    out[1] = (len * m2 * s * thd * thd + u[0] + m2 * grav * c * s) / den;
    out[2] = thd;
    out[3] = -(len * m2 * c * s * thd * thd + u[0] * c + (m1 + m2) * grav * s) / (len * den);
  });
  b.lagrange([](auto /*x*/, auto u, const auto& /*t*/, auto /*p*/) { return u[0] * u[0]; });
  b.boundary([](auto x0, const auto& /*t0*/, auto xf, const auto& /*tf*/, auto /*p*/, auto out) {
    out[0] = x0[0];
    out[1] = x0[1];
    out[2] = x0[2];
    out[3] = x0[3];
    out[4] = xf[0] - 1.0;
    out[5] = xf[1];
    out[6] = xf[2] - M_PI;
    out[7] = xf[3];
  });
  return b.build();
}

}  // namespace

std::vector<std::string> problem_names() {
  return {"cartpole", "dae-pendulum", "goddard", "lq-analytic"};
}

BenchmarkCase benchmark_case(const std::string& name) {
  BenchmarkCase c;
  if (name == "lq-analytic") {
    c.dop = make_lq();
    c.recommended_scheme = "hs";
    c.recommended_K = 16;
    c.analytic_objective = lq_optimal_objective();
  } else if (name == "goddard") {
    c.dop = make_goddard();
    c.recommended_scheme = "hs";
    c.recommended_K = 99;  // 100 major nodes
  } else if (name == "dae-pendulum") {
    c.dop = make_dae_pendulum();
    c.recommended_scheme = "lgr";
    c.recommended_K = 50;
    c.recommended_degree = 5;
  } else if (name == "cartpole") {
    c.dop = make_cartpole();
    c.recommended_scheme = "hs";
    c.recommended_K = 7;
    c.recommended_weights = vec({1.0, 1.0, 2.0, 1.0});
  } else {
    std::string names;
    for (const auto& n : problem_names()) names += (names.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown problem '" + name + "' (registered: " + names + ")");
  }
  return c;
}

DopDefinition register_problem(const std::string& name) { return benchmark_case(name).dop; }

nlohmann::json BenchmarkCase::reference_config() const {
  nlohmann::json j;
  j["problem"] = dop.name;
  j["method"] = "dair";
  j["scheme"] = recommended_scheme;
  j["K"] = recommended_K;
  if (recommended_scheme == "lgr") j["degree"] = recommended_degree;
  if (recommended_weights.size() > 0) {
    j["weights"] = std::vector<double>(recommended_weights.begin(), recommended_weights.end());
  }
  j["mirs"] = 1e-6;
  j["tol"] = 1e-9;
  j["emit"] = {"csv", "json"};
  return j;
}

double cartpole_terminal_violation(const Vec& terminal_state) {
  if (terminal_state.size() != 4) {
    throw std::invalid_argument("cartpole terminal violation expects a 4-vector");
  }
  const double ey = terminal_state(0) - 1.0;
  const double eyd = terminal_state(1);
  const double eth = 2.0 * (terminal_state(2) - M_PI);
  const double ethd = terminal_state(3);
  return std::sqrt(ey * ey + eyd * eyd + eth * eth + ethd * ethd);
}

double goddard_thrust_tv(const Trajectory& traj, double window_lo, double window_hi) {
  if (!(window_hi > window_lo)) throw std::invalid_argument("thrust TV: empty window");
  const int grid = 1000;
  double tv = 0.0;
  double prev = traj.input_at(window_lo)(0);
  for (int i = 1; i < grid; ++i) {
    const double t = window_lo + (window_hi - window_lo) * i / (grid - 1);
    const double cur = traj.input_at(t)(0);
    tv += std::abs(cur - prev);
    prev = cur;
  }
  return tv;
}

std::optional<std::pair<double, double>> input_interior_window(const Trajectory& traj,
                                                               double u_lb, double u_ub) {
  const int grid = 1000;
  const double margin = 0.01 * (u_ub - u_lb);
  int best_lo = -1, best_len = 0;
  int run_lo = -1, run_len = 0;
  for (int i = 0; i < grid; ++i) {
    const double t = traj.t0 + (traj.tf - traj.t0) * i / (grid - 1);
    const double u = traj.input_at(t)(0);
    const bool interior = (u > u_lb + margin) && (u < u_ub - margin);
    if (interior) {
      if (run_lo < 0) run_lo = i;
      ++run_len;
      if (run_len > best_len) {
        best_len = run_len;
        best_lo = run_lo;
      }
    } else {
      run_lo = -1;
      run_len = 0;
    }
  }
  if (best_len < 2) return std::nullopt;
  const double t_lo = traj.t0 + (traj.tf - traj.t0) * best_lo / (grid - 1);
  const double t_hi = traj.t0 + (traj.tf - traj.t0) * (best_lo + best_len - 1) / (grid - 1);
  return std::make_pair(t_lo, t_hi);
}

double dae_manifold_drift(const DopDefinition& dop, const Trajectory& traj, const Vec& p) {
  if (dop.ng < 1) {
    throw std::invalid_argument("manifold drift requires a problem with algebraic constraints");
  }
  const int grid = 1000;
  double drift = 0.0;
  Vec x, xd, u, g(dop.ng);
  for (int i = 0; i < grid; ++i) {
    const double t = traj.t0 + (traj.tf - traj.t0) * i / (grid - 1);
    traj.eval(t, x, xd, u);
    dop.f64.dae(std::span<const double>(x.data(), x.size()),
                std::span<const double>(xd.data(), xd.size()),
                std::span<const double>(u.data(), u.size()), t,
                std::span<const double>(p.data(), p.size()),
                std::span<double>(g.data(), g.size()));
    drift = std::max(drift, std::abs(g(0)));
  }
  return drift;
}

double lq_optimal_objective() { return std::tanh(1.0); }
double lq_optimal_state(double t) { return std::cosh(1.0 - t) / std::cosh(1.0); }
double lq_optimal_input(double t) { return -std::sinh(1.0 - t) / std::cosh(1.0); }

}  // namespace dair
