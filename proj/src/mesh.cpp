#include "dair/mesh.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dair {

namespace {

// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p1 = 1.0, p2 = 0.0;
  for (int j = 0; j < n; ++j) {
    const double p3 = p2;
    p2 = p1;
    p1 = ((2 * j + 1) * x * p2 - j * p3) / (j + 1);
  }
  const double dp = (n == 0) ? 0.0 : n * (x * p1 - p2) / (x * x - 1.0);
  return {p1, dp};
}

// Radau polynomial Q(x) = P_{p-1}(x) + P_p(x) and derivative.
std::pair<double, double> radau_poly(int p, double x) {
  auto [a, da] = legendre(p - 1, x);
  auto [b, db] = legendre(p, x);
  return {a + b, da + db};
}

}  // namespace

Vec lgr_nodes(int degree) { return lgr_rule(degree).first; }

std::pair<Vec, Vec> lgr_rule(int degree) {
  if (degree < 1 || degree > 64) {
    throw std::invalid_argument("lgr_rule: degree must be in [1, 64]");
  }
  Vec x(degree);
  x(0) = -1.0;  // exact root of P_{p-1} + P_p
  if (degree > 1) {
    // Bracket the interior roots on a fine grid, then polish by Newton with
    // bisection fallback. Tolerance 1e-14.
    const int samples = 50 * degree;
    std::vector<double> roots;
    double prev_x = -1.0 + 1e-12;
    double prev_q = radau_poly(degree, prev_x).first;
    for (int i = 1; i <= samples; ++i) {
      const double xi = -1.0 + 2.0 * (static_cast<double>(i) / samples) - 1e-12;
      const double qi = radau_poly(degree, xi).first;
      if (prev_q == 0.0 || prev_q * qi < 0.0) {
        double lo = prev_x, hi = xi;
        double z = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
          auto [q, dq] = radau_poly(degree, z);
          double step = (dq != 0.0) ? q / dq : 0.0;
          double znew = z - step;
          if (!(znew > lo && znew < hi) || dq == 0.0) {
            // bisection fallback
            const double qlo = radau_poly(degree, lo).first;
            if (qlo * q <= 0.0) hi = z; else lo = z;
            znew = 0.5 * (lo + hi);
          } else {
            if (q * radau_poly(degree, lo).first <= 0.0) hi = z; else lo = z;
          }
          if (std::abs(znew - z) < 1e-14) { z = znew; break; }
          z = znew;
        }
        roots.push_back(z);
      }
      prev_x = xi;
      prev_q = qi;
    }
    if (static_cast<int>(roots.size()) != degree - 1) {
      throw std::runtime_error("lgr_rule: root bracketing failed");
    }
    for (int i = 0; i < degree - 1; ++i) x(i + 1) = roots[i];
  }
  // Weights: w(-1) = 2/p^2, interior w_i = (1 - x_i) / (p^2 P_{p-1}(x_i)^2).
  Vec w(degree);
  const double p2 = static_cast<double>(degree) * degree;
  w(0) = 2.0 / p2;
  for (int i = 1; i < degree; ++i) {
    const double pl = legendre(degree - 1, x(i)).first;
    w(i) = (1.0 - x(i)) / (p2 * pl * pl);
  }
  // Map [-1,1) -> [0,1).
  Vec nodes(degree), weights(degree);
  for (int i = 0; i < degree; ++i) {
    nodes(i) = 0.5 * (x(i) + 1.0);
    weights(i) = 0.5 * w(i);
  }
  return {nodes, weights};
}

std::pair<Vec, Vec> gauss_legendre(int order) {
  if (order < 1 || order > 128) {
    throw std::invalid_argument("gauss_legendre: order must be in [1, 128]");
  }
  Vec x(order), w(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      auto [p, d] = legendre(order, z);
      dp = d;
      const double z1 = z;
      z = z1 - p / d;
      if (std::abs(z - z1) < 1e-15) break;
    }
    dp = legendre(order, z).second;
    x(i) = 0.5 * (1.0 - z);
    x(order - 1 - i) = 0.5 * (1.0 + z);
    w(i) = 1.0 / ((1.0 - z * z) * dp * dp);
    w(order - 1 - i) = w(i);
  }
  return {x, w};
}

double Mesh::interval_fraction(int k) const {
  return major_fractions(k + 1) - major_fractions(k);
}

double Mesh::absolute_fraction(int k, int i) const {
  return major_fractions(k) + interval_fraction(k) * data_fracs(i);
}

void Mesh::validate() const {
  if (K < 1) throw std::invalid_argument("mesh: K must be >= 1");
  if (major_fractions.size() != K + 1) {
    throw std::invalid_argument("mesh: expected K+1 major-node fractions");
  }
  if (std::abs(major_fractions(0)) > 1e-15 || std::abs(major_fractions(K) - 1.0) > 1e-15) {
    throw std::invalid_argument("mesh: major nodes must start at 0 and end at 1");
  }
  for (int k = 0; k < K; ++k) {
    if (!(major_fractions(k + 1) > major_fractions(k))) {
      throw std::invalid_argument("mesh: major-node fractions must be strictly increasing");
    }
  }
  const int n = points_per_interval();
  if (n < 2) throw std::invalid_argument("mesh: need at least two data points per interval");
  for (int i = 0; i < n; ++i) {
    if (data_fracs(i) < -1e-15 || data_fracs(i) > 1.0 + 1e-15) {
      throw std::invalid_argument("mesh: data fractions must lie in [0, 1]");
    }
    if (i > 0 && !(data_fracs(i) > data_fracs(i - 1))) {
      throw std::invalid_argument("mesh: data fractions must be strictly increasing");
    }
  }
  if (quad_points() < n) {
    throw std::invalid_argument("mesh: quadrature must have at least as many points as data");
  }
  if (std::abs(quad_w.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("mesh: quadrature weights must integrate 1 exactly");
  }
  if (state_continuity == Continuity::none) {
    throw std::invalid_argument("mesh: states cannot be discontinuous at major nodes");
  }
}

Mesh build_mesh(MeshScheme scheme, int K, const MeshOptions& options, int degree) {
  if (K < 1) throw std::invalid_argument("build_mesh: K must be >= 1");
  if (options.quad_oversample < 1) {
    throw std::invalid_argument("build_mesh: quadrature oversample must be >= 1");
  }
  Mesh mesh;
  mesh.scheme = scheme;
  mesh.K = K;
  if (options.major_fractions) {
    mesh.major_fractions = *options.major_fractions;
  } else {
    mesh.major_fractions = Vec::LinSpaced(K + 1, 0.0, 1.0);
  }

  switch (scheme) {
    case MeshScheme::hermite_simpson: {
      mesh.degree = 3;
      mesh.data_fracs = Vec(3);
      mesh.data_fracs << 0.0, 0.5, 1.0;
      mesh.colloc_local = {1, 2};
      break;
    }
    case MeshScheme::lgr: {
      if (degree < 1 || degree > 64) {
        throw std::invalid_argument("build_mesh: lgr degree must be in [1, 64]");
      }
      mesh.degree = degree;
      const Vec pts = lgr_nodes(degree);
      mesh.data_fracs = Vec(degree + 1);
      mesh.data_fracs.head(degree) = pts;
      mesh.data_fracs(degree) = 1.0;  // non-collocated right endpoint
      mesh.colloc_local.resize(degree);
      for (int i = 0; i < degree; ++i) mesh.colloc_local[i] = i;
      break;
    }
    case MeshScheme::uniform: {
      if (degree < 1 || degree > 64) {
        throw std::invalid_argument("build_mesh: uniform degree must be in [1, 64]");
      }
      mesh.degree = degree;
      mesh.data_fracs = Vec::LinSpaced(degree + 1, 0.0, 1.0);
      mesh.colloc_local.clear();
      break;
    }
  }
  mesh.data_bw = barycentric_weights(mesh.data_fracs);

  const int n = mesh.points_per_interval();
  mesh.quadrature = options.quadrature;
  mesh.quad_oversample = options.quad_oversample;
  if (options.quadrature == QuadratureRule::gauss) {
    auto [qx, qw] = gauss_legendre(options.quad_oversample * n);
    mesh.quad_fracs = qx;
    mesh.quad_w = qw;
  } else {
    mesh.quad_fracs = mesh.data_fracs;
    mesh.quad_w = interpolatory_weights(mesh.data_fracs, mesh.data_bw);
  }

  // Collocation-point quadrature for Lagrange costs in collocation builds:
  // Simpson weights for Hermite-Simpson, the Radau rule for LGR.
  if (scheme == MeshScheme::hermite_simpson) {
    mesh.colloc_quad_fracs = mesh.data_fracs;
    mesh.colloc_quad_w = Vec(3);
    mesh.colloc_quad_w << 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0;
  } else if (scheme == MeshScheme::lgr) {
    auto [rx, rw] = lgr_rule(mesh.degree);
    mesh.colloc_quad_fracs = rx;
    mesh.colloc_quad_w = rw;
  }

  mesh.state_continuity = options.state_continuity;
  mesh.input_continuity = options.input_continuity;
  mesh.validate();
  return mesh;
}

Mesh build_mesh(const std::string& scheme, int K, const MeshOptions& options, int degree) {
  if (scheme == "hs" || scheme == "hermite-simpson") {
    return build_mesh(MeshScheme::hermite_simpson, K, options, degree);
  }
  if (scheme == "lgr") return build_mesh(MeshScheme::lgr, K, options, degree);
  if (scheme == "uniform") return build_mesh(MeshScheme::uniform, K, options, degree);
  throw std::invalid_argument("build_mesh: unknown scheme '" + scheme +
                              "' (expected hs, lgr or uniform)");
}

IntervalOperators differentiation_operators(const Mesh& mesh, int k) {
  if (k < 0 || k >= mesh.K) throw std::out_of_range("differentiation_operators: interval index");
  IntervalOperators ops;
  ops.fracs = mesh.data_fracs;
  ops.bw = mesh.data_bw;
  ops.a = diff_matrix(ops.fracs, ops.bw);
  ops.d_unit = -Mat::Identity(ops.fracs.size(), ops.fracs.size());
  return ops;
}

std::string to_string(MeshScheme s) {
  switch (s) {
    case MeshScheme::hermite_simpson: return "hs";
    case MeshScheme::lgr: return "lgr";
    case MeshScheme::uniform: return "uniform";
  }
  return "?";
}

std::string to_string(Continuity c) {
  switch (c) {
    case Continuity::implicit_shared: return "implicit";
    case Continuity::explicit_rows: return "explicit";
    case Continuity::none: return "none";
  }
  return "?";
}

std::string to_string(QuadratureRule q) {
  return q == QuadratureRule::gauss ? "gauss" : "data-points";
}

namespace {

Continuity continuity_from_string(const std::string& s) {
  if (s == "implicit") return Continuity::implicit_shared;
  if (s == "explicit") return Continuity::explicit_rows;
  if (s == "none") return Continuity::none;
  throw std::invalid_argument("mesh: unknown continuity mode '" + s + "'");
}

}  // namespace

nlohmann::json Mesh::to_json() const {
  nlohmann::json j;
  j["scheme"] = dair::to_string(scheme);
  j["degree"] = degree;
  j["K"] = K;
  j["major_fractions"] = std::vector<double>(major_fractions.begin(), major_fractions.end());
  j["quadrature"] = dair::to_string(quadrature);
  j["quad_oversample"] = quad_oversample;
  j["state_continuity"] = dair::to_string(state_continuity);
  j["input_continuity"] = dair::to_string(input_continuity);
  return j;
}

Mesh Mesh::from_json(const nlohmann::json& j) {
  MeshOptions options;
  if (j.contains("major_fractions")) {
    const auto fr = j.at("major_fractions").get<std::vector<double>>();
    options.major_fractions = Eigen::Map<const Vec>(fr.data(), fr.size());
  }
  if (j.contains("quad_oversample")) options.quad_oversample = j.at("quad_oversample").get<int>();
  if (j.contains("quadrature")) {
    const auto q = j.at("quadrature").get<std::string>();
    options.quadrature = (q == "data-points") ? QuadratureRule::data_points : QuadratureRule::gauss;
  }
  if (j.contains("state_continuity")) {
    options.state_continuity = continuity_from_string(j.at("state_continuity").get<std::string>());
  }
  if (j.contains("input_continuity")) {
    options.input_continuity = continuity_from_string(j.at("input_continuity").get<std::string>());
  }
  const int degree = j.contains("degree") ? j.at("degree").get<int>() : 0;
  return build_mesh(j.at("scheme").get<std::string>(), j.at("K").get<int>(), options, degree);
}

}  // namespace dair
