#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dair/dual.hpp"
#include "dair/lagrange.hpp"

namespace dair {

/// Problem callables instantiated for one scalar type. All outputs are
/// written through spans sized by the declared dimensions.
template <class T>
struct DopFns {
  std::function<void(std::span<const T> x, std::span<const T> u, const T& t,
                     std::span<const T> p, std::span<T> out)>
      ode;  ///< f, out has n entries
  std::function<void(std::span<const T> x, std::span<const T> xdot, std::span<const T> u,
                     const T& t, std::span<const T> p, std::span<T> out)>
      dae;  ///< g, out has n_g entries
  std::function<void(std::span<const T> x, std::span<const T> xdot, std::span<const T> u,
                     const T& t, std::span<const T> p, std::span<T> out)>
      path;  ///< c, out has n_c entries, convention c <= 0
  std::function<T(std::span<const T> x, std::span<const T> u, const T& t, std::span<const T> p)>
      lagrange;
  std::function<T(std::span<const T> x0, const T& t0, std::span<const T> xf, const T& tf,
                  std::span<const T> p)>
      mayer;
  std::function<void(std::span<const T> x0, const T& t0, std::span<const T> xf, const T& tf,
                     std::span<const T> p, std::span<T> out)>
      boundary;  ///< phi, out has n_q entries
};

struct TimeSpec {
  bool free = false;
  double value = 0.0;  ///< used when fixed
  double lb = 0.0;     ///< used when free
  double ub = 0.0;
};

/// Continuous-time dynamic optimization problem in Bolza form. Immutable
/// after construction; all callables are pure and reentrant.
struct DopDefinition {
  std::string name;
  int n = 0;    ///< states
  int m = 0;    ///< inputs
  int np = 0;   ///< static parameters
  int ng = 0;   ///< DAE equations
  int nc = 0;   ///< path constraints
  int nq = 0;   ///< boundary conditions

  Vec x_lb, x_ub;
  Vec u_lb, u_ub;
  Vec p_lb, p_ub;
  TimeSpec t0, tf;

  /// Initial-guess hints (may be empty; the transcription falls back to box
  /// midpoints).
  Vec x0_guess, xf_guess, p_guess;

  DopFns<double> f64;
  DopFns<Dual> fd1;
  DopFns<Dual2> fd2;

  template <class T>
  const DopFns<T>& fns() const;

  double t0_value() const { return t0.free ? 0.5 * (t0.lb + t0.ub) : t0.value; }
  double tf_value() const { return tf.free ? 0.5 * (tf.lb + tf.ub) : tf.value; }

  void validate() const;
};

template <>
inline const DopFns<double>& DopDefinition::fns<double>() const { return f64; }
template <>
inline const DopFns<Dual>& DopDefinition::fns<Dual>() const { return fd1; }
template <>
inline const DopFns<Dual2>& DopDefinition::fns<Dual2>() const { return fd2; }

/// Assembles a DopDefinition from generic lambdas, instantiating the double,
/// first-order and second-order scalar paths from a single body.
class DopBuilder {
 public:
  DopBuilder& name(std::string v) { dop_.name = std::move(v); return *this; }
  DopBuilder& dims(int n, int m, int np = 0, int ng = 0, int nc = 0, int nq = 0);
  DopBuilder& state_bounds(Vec lb, Vec ub) { dop_.x_lb = std::move(lb); dop_.x_ub = std::move(ub); return *this; }
  DopBuilder& input_bounds(Vec lb, Vec ub) { dop_.u_lb = std::move(lb); dop_.u_ub = std::move(ub); return *this; }
  DopBuilder& param_bounds(Vec lb, Vec ub) { dop_.p_lb = std::move(lb); dop_.p_ub = std::move(ub); return *this; }
  DopBuilder& fixed_time(double t0, double tf);
  DopBuilder& free_tf(double t0, double tf_lb, double tf_ub);
  DopBuilder& guesses(Vec x0, Vec xf, Vec p = {});

  template <class F>
  DopBuilder& ode(F f) { dop_.f64.ode = f; dop_.fd1.ode = f; dop_.fd2.ode = f; return *this; }
  template <class F>
  DopBuilder& dae(F f) { dop_.f64.dae = f; dop_.fd1.dae = f; dop_.fd2.dae = f; return *this; }
  template <class F>
  DopBuilder& path(F f) { dop_.f64.path = f; dop_.fd1.path = f; dop_.fd2.path = f; return *this; }
  template <class F>
  DopBuilder& lagrange(F f) { dop_.f64.lagrange = f; dop_.fd1.lagrange = f; dop_.fd2.lagrange = f; return *this; }
  template <class F>
  DopBuilder& mayer(F f) { dop_.f64.mayer = f; dop_.fd1.mayer = f; dop_.fd2.mayer = f; return *this; }
  template <class F>
  DopBuilder& boundary(F f) { dop_.f64.boundary = f; dop_.fd1.boundary = f; dop_.fd2.boundary = f; return *this; }

  DopDefinition build();

 private:
  DopDefinition dop_;
};

/// One polynomial piece of a trajectory: barycentric Lagrange interpolant of
/// `values` on `fracs`, optionally corrected by slope_fix * B(tau) where B is
/// the nodal polynomial (vanishes at all data points, so interpolation of the
/// data is preserved).
struct PolyPiece {
  Vec fracs;
  Vec bw;
  Mat values;     ///< N x dim
  Vec slope_fix;  ///< dim entries, or empty

  void eval(double tau, double dt, Vec& value, Vec& deriv) const;
  Vec eval_value(double tau) const;
};

/// Piecewise-polynomial solution trajectories over [t0, tf]. Evaluation at a
/// shared breakpoint uses the left piece.
struct Trajectory {
  double t0 = 0.0;
  double tf = 1.0;
  Vec breaks;  ///< K+1 absolute times
  std::vector<PolyPiece> state;
  std::vector<PolyPiece> input;

  int intervals() const { return static_cast<int>(state.size()); }
  /// Interval index containing t; left piece at interior breakpoints.
  int locate(double t) const;
  void eval(double t, Vec& x, Vec& xdot, Vec& u) const;
  Vec state_at(double t) const;
  Vec state_deriv_at(double t) const;
  Vec input_at(double t) const;
};

/// Trajectory evaluation as a tuple, per the toolkit's public operation set.
struct TrajectorySample {
  Vec x;
  Vec xdot;
  Vec u;
};
TrajectorySample evaluate_trajectory(const Trajectory& traj, double t);

}  // namespace dair
