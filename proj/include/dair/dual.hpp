#pragma once

#include <cmath>

namespace dair {

/// First-order forward-mode scalar: a value and one directional derivative.
/// Arithmetic propagates the derivative by the chain rule; comparisons act on
/// the value part so branching code works unchanged.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

/// Second-order forward-over-forward scalar. Tracks two directions (d1, d2)
/// and the mixed second derivative d12, so one evaluation with seeds
/// (e_a, e_b) yields the Hessian entry H(a,b).
struct Dual2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d12 = 0.0;

  Dual2() = default;
  Dual2(double value) : v(value) {}
  Dual2(double value, double da, double db, double dab) : v(value), d1(da), d2(db), d12(dab) {}
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }
inline double value_of(const Dual2& x) { return x.v; }

// Exact-match double overloads so generic problem code written against this
// header resolves unambiguously when instantiated with plain values.
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double tan(double x) { return std::tan(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double sinh(double x) { return std::sinh(x); }
inline double cosh(double x) { return std::cosh(x); }
inline double tanh(double x) { return std::tanh(x); }
inline double atan(double x) { return std::atan(x); }
inline double pow(double x, double e) { return std::pow(x, e); }
inline double abs(double x) { return std::abs(x); }
inline double fabs(double x) { return std::fabs(x); }
inline double min(double a, double b) { return a <= b ? a : b; }
inline double max(double a, double b) { return a >= b ? a : b; }

// ---- Dual arithmetic ----

inline Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(const Dual& a, const Dual& b) {
  const double inv = 1.0 / b.v;
  const double q = a.v * inv;
  return {q, (a.d - q * b.d) * inv};
}
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator+(const Dual& a) { return a; }

inline Dual operator+(const Dual& a, double b) { return {a.v + b, a.d}; }
inline Dual operator+(double a, const Dual& b) { return {a + b.v, b.d}; }
inline Dual operator-(const Dual& a, double b) { return {a.v - b, a.d}; }
inline Dual operator-(double a, const Dual& b) { return {a - b.v, -b.d}; }
inline Dual operator*(const Dual& a, double b) { return {a.v * b, a.d * b}; }
inline Dual operator*(double a, const Dual& b) { return {a * b.v, a * b.d}; }
inline Dual operator/(const Dual& a, double b) { return {a.v / b, a.d / b}; }
inline Dual operator/(double a, const Dual& b) {
  const double inv = 1.0 / b.v;
  const double q = a * inv;
  return {q, -q * b.d * inv};
}

inline Dual& operator+=(Dual& a, const Dual& b) { a = a + b; return a; }
inline Dual& operator-=(Dual& a, const Dual& b) { a = a - b; return a; }
inline Dual& operator*=(Dual& a, const Dual& b) { a = a * b; return a; }
inline Dual& operator/=(Dual& a, const Dual& b) { a = a / b; return a; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
inline bool operator<(const Dual& a, double b) { return a.v < b; }
inline bool operator>(const Dual& a, double b) { return a.v > b; }
inline bool operator<=(const Dual& a, double b) { return a.v <= b; }
inline bool operator>=(const Dual& a, double b) { return a.v >= b; }
inline bool operator<(double a, const Dual& b) { return a < b.v; }
inline bool operator>(double a, const Dual& b) { return a > b.v; }

/// g(x) with g'(x) given: chain rule in one place.
inline Dual unary(const Dual& x, double g, double gp) { return {g, gp * x.d}; }

inline Dual sin(const Dual& x) { return unary(x, std::sin(x.v), std::cos(x.v)); }
inline Dual cos(const Dual& x) { return unary(x, std::cos(x.v), -std::sin(x.v)); }
inline Dual tan(const Dual& x) { const double t = std::tan(x.v); return unary(x, t, 1.0 + t * t); }
inline Dual exp(const Dual& x) { const double e = std::exp(x.v); return unary(x, e, e); }
inline Dual log(const Dual& x) { return unary(x, std::log(x.v), 1.0 / x.v); }
inline Dual sqrt(const Dual& x) { const double s = std::sqrt(x.v); return unary(x, s, 0.5 / s); }
inline Dual sinh(const Dual& x) { return unary(x, std::sinh(x.v), std::cosh(x.v)); }
inline Dual cosh(const Dual& x) { return unary(x, std::cosh(x.v), std::sinh(x.v)); }
inline Dual tanh(const Dual& x) { const double t = std::tanh(x.v); return unary(x, t, 1.0 - t * t); }
inline Dual atan(const Dual& x) { return unary(x, std::atan(x.v), 1.0 / (1.0 + x.v * x.v)); }
inline Dual pow(const Dual& x, double e) {
  return unary(x, std::pow(x.v, e), e * std::pow(x.v, e - 1.0));
}
// |x| at 0 takes the x >= 0 branch (one-sided derivative by branch order).
inline Dual abs(const Dual& x) { return x.v >= 0.0 ? x : -x; }
inline Dual fabs(const Dual& x) { return abs(x); }
inline Dual min(const Dual& a, const Dual& b) { return a.v <= b.v ? a : b; }
inline Dual max(const Dual& a, const Dual& b) { return a.v >= b.v ? a : b; }

// ---- Dual2 arithmetic ----

inline Dual2 operator+(const Dual2& a, const Dual2& b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2, a.d12 + b.d12};
}
inline Dual2 operator-(const Dual2& a, const Dual2& b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2, a.d12 - b.d12};
}
inline Dual2 operator*(const Dual2& a, const Dual2& b) {
  return {a.v * b.v,
          a.d1 * b.v + a.v * b.d1,
          a.d2 * b.v + a.v * b.d2,
          a.d12 * b.v + a.d1 * b.d2 + a.d2 * b.d1 + a.v * b.d12};
}
inline Dual2 operator-(const Dual2& a) { return {-a.v, -a.d1, -a.d2, -a.d12}; }
inline Dual2 operator+(const Dual2& a) { return a; }

/// g(x) from g, g', g'': second-order chain rule.
inline Dual2 unary(const Dual2& x, double g, double gp, double gpp) {
  return {g, gp * x.d1, gp * x.d2, gp * x.d12 + gpp * x.d1 * x.d2};
}

inline Dual2 inv(const Dual2& x) {
  const double i = 1.0 / x.v;
  return unary(x, i, -i * i, 2.0 * i * i * i);
}
inline Dual2 operator/(const Dual2& a, const Dual2& b) { return a * inv(b); }

inline Dual2 operator+(const Dual2& a, double b) { return {a.v + b, a.d1, a.d2, a.d12}; }
inline Dual2 operator+(double a, const Dual2& b) { return b + a; }
inline Dual2 operator-(const Dual2& a, double b) { return {a.v - b, a.d1, a.d2, a.d12}; }
inline Dual2 operator-(double a, const Dual2& b) { return {a - b.v, -b.d1, -b.d2, -b.d12}; }
inline Dual2 operator*(const Dual2& a, double b) { return {a.v * b, a.d1 * b, a.d2 * b, a.d12 * b}; }
inline Dual2 operator*(double a, const Dual2& b) { return b * a; }
inline Dual2 operator/(const Dual2& a, double b) { return a * (1.0 / b); }
inline Dual2 operator/(double a, const Dual2& b) { return inv(b) * a; }

inline Dual2& operator+=(Dual2& a, const Dual2& b) { a = a + b; return a; }
inline Dual2& operator-=(Dual2& a, const Dual2& b) { a = a - b; return a; }
inline Dual2& operator*=(Dual2& a, const Dual2& b) { a = a * b; return a; }
inline Dual2& operator/=(Dual2& a, const Dual2& b) { a = a / b; return a; }

inline bool operator<(const Dual2& a, const Dual2& b) { return a.v < b.v; }
inline bool operator>(const Dual2& a, const Dual2& b) { return a.v > b.v; }
inline bool operator<=(const Dual2& a, const Dual2& b) { return a.v <= b.v; }
inline bool operator>=(const Dual2& a, const Dual2& b) { return a.v >= b.v; }
inline bool operator<(const Dual2& a, double b) { return a.v < b; }
inline bool operator>(const Dual2& a, double b) { return a.v > b; }
inline bool operator<=(const Dual2& a, double b) { return a.v <= b; }
inline bool operator>=(const Dual2& a, double b) { return a.v >= b; }
inline bool operator<(double a, const Dual2& b) { return a < b.v; }
inline bool operator>(double a, const Dual2& b) { return a > b.v; }

inline Dual2 sin(const Dual2& x) { const double s = std::sin(x.v); return unary(x, s, std::cos(x.v), -s); }
inline Dual2 cos(const Dual2& x) { const double c = std::cos(x.v); return unary(x, c, -std::sin(x.v), -c); }
inline Dual2 tan(const Dual2& x) {
  const double t = std::tan(x.v);
  const double sec2 = 1.0 + t * t;
  return unary(x, t, sec2, 2.0 * t * sec2);
}
inline Dual2 exp(const Dual2& x) { const double e = std::exp(x.v); return unary(x, e, e, e); }
inline Dual2 log(const Dual2& x) { const double i = 1.0 / x.v; return unary(x, std::log(x.v), i, -i * i); }
inline Dual2 sqrt(const Dual2& x) {
  const double s = std::sqrt(x.v);
  return unary(x, s, 0.5 / s, -0.25 / (s * x.v));
}
inline Dual2 sinh(const Dual2& x) { const double s = std::sinh(x.v); return unary(x, s, std::cosh(x.v), s); }
inline Dual2 cosh(const Dual2& x) { const double c = std::cosh(x.v); return unary(x, c, std::sinh(x.v), c); }
inline Dual2 tanh(const Dual2& x) {
  const double t = std::tanh(x.v);
  const double sech2 = 1.0 - t * t;
  return unary(x, t, sech2, -2.0 * t * sech2);
}
inline Dual2 atan(const Dual2& x) {
  const double den = 1.0 + x.v * x.v;
  return unary(x, std::atan(x.v), 1.0 / den, -2.0 * x.v / (den * den));
}
inline Dual2 pow(const Dual2& x, double e) {
  return unary(x, std::pow(x.v, e), e * std::pow(x.v, e - 1.0),
               e * (e - 1.0) * std::pow(x.v, e - 2.0));
}
inline Dual2 abs(const Dual2& x) { return x.v >= 0.0 ? x : -x; }
inline Dual2 fabs(const Dual2& x) { return abs(x); }
inline Dual2 min(const Dual2& a, const Dual2& b) { return a.v <= b.v ? a : b; }
inline Dual2 max(const Dual2& a, const Dual2& b) { return a.v >= b.v ? a : b; }

}  // namespace dair
