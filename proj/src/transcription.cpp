#include "dair/transcription.hpp"

#include <cmath>
#include <stdexcept>

namespace dair {

namespace {

/// Precomputed mesh/problem constants shared by all atoms of one build.
struct Cache {
  int n = 0, m = 0, np = 0, ng = 0, nc = 0, nq = 0, N = 0, K = 0;
  bool free_t0 = false, free_tf = false;
  bool hs = false;  ///< slope-corrected cubic state pieces
  double t0_fixed = 0.0, tf_fixed = 1.0;
  DecisionLayout layout;
  Mesh mesh;
  Mat D;        ///< N x N differentiation matrix on the data fractions
  RowVec dP0;   ///< derivative row at tau = 0
  double dB0 = 1.0;
  Vec dB_data;  ///< nodal-polynomial derivative at the data fractions
  Mat Pq, dPq;  ///< N x Q interpolation/derivative rows (transposed storage)
  Vec Bq, dBq;
  Mat Pcq, dPcq;  ///< N x Qc rows at the collocation-quadrature fractions
  Vec Bcq, dBcq;
  std::shared_ptr<const DopDefinition> dop;
};

std::shared_ptr<const Cache> make_cache(const DopDefinition& dop, const Mesh& mesh) {
  mesh.validate();
  dop.validate();
  auto c = std::make_shared<Cache>();
  c->n = dop.n;
  c->m = dop.m;
  c->np = dop.np;
  c->ng = dop.ng;
  c->nc = dop.nc;
  c->nq = dop.nq;
  c->N = mesh.points_per_interval();
  c->K = mesh.K;
  c->free_t0 = dop.t0.free;
  c->free_tf = dop.tf.free;
  c->t0_fixed = dop.t0.value;
  c->tf_fixed = dop.tf.value;
  c->hs = (mesh.scheme == MeshScheme::hermite_simpson);
  c->layout = DecisionLayout::build(dop, mesh);
  c->mesh = mesh;
  c->D = diff_matrix(mesh.data_fracs, mesh.data_bw);
  c->dP0 = c->D.row(0);
  c->dB0 = nodal_poly_deriv(mesh.data_fracs, 0.0);
  c->dB_data = Vec(c->N);
  for (int i = 0; i < c->N; ++i) c->dB_data(i) = nodal_poly_deriv(mesh.data_fracs, mesh.data_fracs(i));
  const int q = mesh.quad_points();
  c->Pq.resize(c->N, q);
  c->dPq.resize(c->N, q);
  c->Bq.resize(q);
  c->dBq.resize(q);
  for (int i = 0; i < q; ++i) {
    c->Pq.col(i) = interp_row(mesh.data_fracs, mesh.data_bw, mesh.quad_fracs(i)).transpose();
    c->dPq.col(i) = deriv_row(mesh.data_fracs, mesh.data_bw, mesh.quad_fracs(i)).transpose();
    c->Bq(i) = nodal_poly(mesh.data_fracs, mesh.quad_fracs(i));
    c->dBq(i) = nodal_poly_deriv(mesh.data_fracs, mesh.quad_fracs(i));
  }
  const int cq = static_cast<int>(mesh.colloc_quad_fracs.size());
  if (cq > 0) {
    c->Pcq.resize(c->N, cq);
    c->dPcq.resize(c->N, cq);
    c->Bcq.resize(cq);
    c->dBcq.resize(cq);
    for (int i = 0; i < cq; ++i) {
      c->Pcq.col(i) =
          interp_row(mesh.data_fracs, mesh.data_bw, mesh.colloc_quad_fracs(i)).transpose();
      c->dPcq.col(i) =
          deriv_row(mesh.data_fracs, mesh.data_bw, mesh.colloc_quad_fracs(i)).transpose();
      c->Bcq(i) = nodal_poly(mesh.data_fracs, mesh.colloc_quad_fracs(i));
      c->dBcq(i) = nodal_poly_deriv(mesh.data_fracs, mesh.colloc_quad_fracs(i));
    }
  }
  c->dop = std::make_shared<const DopDefinition>(dop);
  return c;
}

/// View over the gathered local variables of one interval.
template <class T>
struct Local {
  std::span<const T> z;
  const Cache* c;

  T x(int i, int j) const { return z[i * c->n + j]; }
  T u(int i, int j) const { return z[c->N * c->n + i * c->m + j]; }
  std::span<const T> p() const { return z.subspan(c->N * (c->n + c->m), c->np); }
  T t0() const {
    const int o = c->N * (c->n + c->m) + c->np;
    return c->free_t0 ? z[o] : T(c->t0_fixed);
  }
  T tf() const {
    const int o = c->N * (c->n + c->m) + c->np + (c->free_t0 ? 1 : 0);
    return c->free_tf ? z[o] : T(c->tf_fixed);
  }
};

/// Per-thread scratch buffers for the templated evaluation helpers. Atom
/// bodies do not nest, so one set per scalar type suffices.
template <class T>
struct EvalWs {
  std::vector<T> x, xd, u, f, fm, fr, slope, eps, xl, ul, fl, out;
};
template <class T>
EvalWs<T>& eval_ws() {
  thread_local EvalWs<T> w;
  return w;
}

template <class T>
T time_at(const Cache& c, const Local<T>& a, int k, double tau) {
  const double abs_frac = c.mesh.major_fractions(k) + c.mesh.interval_fraction(k) * tau;
  return a.t0() + (a.tf() - a.t0()) * abs_frac;
}

/// Dynamics evaluated at data point i of interval k; x/u/f are scratch.
template <class T>
void node_dynamics(const Cache& c, const Local<T>& a, int k, int i, std::vector<T>& x,
                   std::vector<T>& u, std::vector<T>& f) {
  x.resize(c.n);
  u.resize(c.m);
  f.resize(c.n);
  for (int j = 0; j < c.n; ++j) x[j] = a.x(i, j);
  for (int j = 0; j < c.m; ++j) u[j] = a.u(i, j);
  const T t = time_at(c, a, k, c.mesh.data_fracs(i));
  c.dop->fns<T>().ode(x, u, t, a.p(), f);
}

/// Slope-correction coefficients of the Hermite-Simpson cubic: the piece is
/// the Lagrange interpolant of the data plus slope * B(tau), pinned so the
/// left-end derivative equals the dynamics there. Writes ws.slope.
template <class T>
void hs_slope(const Cache& c, const Local<T>& a, int k, const T& dt_k, EvalWs<T>& ws) {
  node_dynamics(c, a, k, 0, ws.xl, ws.ul, ws.fl);
  ws.slope.resize(c.n);
  for (int j = 0; j < c.n; ++j) {
    T lp(0.0);
    for (int i = 0; i < c.N; ++i) lp += c.dP0(i) * a.x(i, j);
    ws.slope[j] = (dt_k * ws.fl[j] - lp) / c.dB0;
  }
}

/// Interpolated state/derivative/input from the transposed row constants
/// (columns qi of p_cols / d_cols). Writes ws.x, ws.xd, ws.u; reads ws.slope
/// when the scheme uses the cubic correction.
template <class T>
void sample_cols(const Cache& c, const Local<T>& a, const Mat& p_cols, const Mat& d_cols,
                 double b, double db, int qi, bool use_slope, const T& dt_k, EvalWs<T>& ws) {
  ws.x.resize(c.n);
  ws.xd.resize(c.n);
  ws.u.resize(c.m);
  for (int j = 0; j < c.n; ++j) {
    T v(0.0), dv(0.0);
    for (int i = 0; i < c.N; ++i) {
      v += p_cols(i, qi) * a.x(i, j);
      dv += d_cols(i, qi) * a.x(i, j);
    }
    if (use_slope) {
      v += ws.slope[j] * b;
      dv += ws.slope[j] * db;
    }
    ws.x[j] = v;
    ws.xd[j] = dv / dt_k;
  }
  for (int j = 0; j < c.m; ++j) {
    T v(0.0);
    for (int i = 0; i < c.N; ++i) v += p_cols(i, qi) * a.u(i, j);
    ws.u[j] = v;
  }
}

/// Stacked residual [xdot - f; g] at quadrature point qi of interval k.
/// Writes ws.eps.
template <class T>
void residual_at_quad(const Cache& c, const Local<T>& a, int k, int qi, EvalWs<T>& ws) {
  const T t0 = a.t0(), tf = a.tf();
  const T dt_k = (tf - t0) * c.mesh.interval_fraction(k);
  if (c.hs) hs_slope(c, a, k, dt_k, ws);
  sample_cols(c, a, c.Pq, c.dPq, c.Bq(qi), c.dBq(qi), qi, c.hs, dt_k, ws);
  const T t = time_at(c, a, k, c.mesh.quad_fracs(qi));
  ws.f.resize(c.n);
  c.dop->fns<T>().ode(ws.x, ws.u, t, a.p(), ws.f);
  ws.eps.resize(c.n + c.ng);
  for (int j = 0; j < c.n; ++j) ws.eps[j] = ws.xd[j] - ws.f[j];
  if (c.ng > 0) {
    c.dop->fns<T>().dae(ws.x, ws.xd, ws.u, t, a.p(), std::span<T>(ws.eps).subspan(c.n, c.ng));
  }
}

/// State, derivative and input at data point i of interval k; writes
/// ws.x, ws.xd, ws.u.
template <class T>
void node_state_and_deriv(const Cache& c, const Local<T>& a, int k, int i, EvalWs<T>& ws) {
  const T dt_k = (a.tf() - a.t0()) * c.mesh.interval_fraction(k);
  if (c.hs) hs_slope(c, a, k, dt_k, ws);
  ws.x.resize(c.n);
  ws.xd.resize(c.n);
  ws.u.resize(c.m);
  for (int j = 0; j < c.n; ++j) {
    ws.x[j] = a.x(i, j);
    T dv(0.0);
    for (int l = 0; l < c.N; ++l) dv += c.D(i, l) * a.x(l, j);
    if (c.hs) dv += ws.slope[j] * c.dB_data(i);
    ws.xd[j] = dv / dt_k;
  }
  for (int j = 0; j < c.m; ++j) ws.u[j] = a.u(i, j);
}

/// Lagrange cost contribution of one quadrature point (collocation-quadrature
/// rows when use_colloc is set).
template <class T>
T lagrange_cost_at(const Cache& c, const Local<T>& a, int k, int qi, bool use_colloc) {
  EvalWs<T>& ws = eval_ws<T>();
  const T t0 = a.t0(), tf = a.tf();
  const T dt_k = (tf - t0) * c.mesh.interval_fraction(k);
  if (c.hs) hs_slope(c, a, k, dt_k, ws);
  const Mat& pm = use_colloc ? c.Pcq : c.Pq;
  const Mat& dm = use_colloc ? c.dPcq : c.dPq;
  const Vec& bv = use_colloc ? c.Bcq : c.Bq;
  const Vec& dbv = use_colloc ? c.dBcq : c.dBq;
  const double frac = use_colloc ? c.mesh.colloc_quad_fracs(qi) : c.mesh.quad_fracs(qi);
  const double w = use_colloc ? c.mesh.colloc_quad_w(qi) : c.mesh.quad_w(qi);
  sample_cols(c, a, pm, dm, bv(qi), dbv(qi), qi, c.hs, dt_k, ws);
  const T t = time_at(c, a, k, frac);
  const T l = c.dop->fns<T>().lagrange(ws.x, ws.u, t, a.p());
  return (w * c.mesh.interval_fraction(k)) * (tf - t0) * l;
}

template <class Span>
using scalar_of = typename std::remove_cvref_t<Span>::value_type;

// ---- boundary-atom local layout: [x0 | xf | p | t0? | tf?] ----

std::vector<int> boundary_support(const Cache& c) {
  const DecisionLayout& lay = c.layout;
  std::vector<int> sup;
  for (int j = 0; j < c.n; ++j) sup.push_back(lay.state_index(0, 0, j));
  for (int j = 0; j < c.n; ++j) sup.push_back(lay.state_index(c.K - 1, c.N - 1, j));
  for (int j = 0; j < c.np; ++j) sup.push_back(lay.p_index(j));
  if (lay.free_t0) sup.push_back(lay.t0_index());
  if (lay.free_tf) sup.push_back(lay.tf_index());
  return sup;
}

template <class T>
struct BoundaryArgs {
  std::span<const T> z;
  const Cache* c;
  std::span<const T> x0() const { return z.first(c->n); }
  std::span<const T> xf() const { return z.subspan(c->n, c->n); }
  std::span<const T> p() const { return z.subspan(2 * c->n, c->np); }
  T t0() const { return c->free_t0 ? z[2 * c->n + c->np] : T(c->t0_fixed); }
  T tf() const {
    return c->free_tf ? z[2 * c->n + c->np + (c->free_t0 ? 1 : 0)] : T(c->tf_fixed);
  }
};

Term make_boundary_term(std::shared_ptr<const Cache> c, int row) {
  return make_term(boundary_support(*c), [c, row](auto z) {
    using T = scalar_of<decltype(z)>;
    BoundaryArgs<T> a{z, c.get()};
    std::vector<T> out(c->nq);
    c->dop->fns<T>().boundary(a.x0(), a.t0(), a.xf(), a.tf(), a.p(), out);
    return out[row];
  });
}

Term make_mayer_term(std::shared_ptr<const Cache> c) {
  return make_term(boundary_support(*c), [c](auto z) {
    using T = scalar_of<decltype(z)>;
    BoundaryArgs<T> a{z, c.get()};
    return c->dop->fns<T>().mayer(a.x0(), a.t0(), a.xf(), a.tf(), a.p());
  });
}

// ---- constraint/objective row assembly ----

void add_boundary_rows(TranscribedNlp& nlp, std::shared_ptr<const Cache> c) {
  for (int j = 0; j < c->nq; ++j) {
    Row row;
    row.label = RowLabel::boundary;
    row.atoms.push_back(make_boundary_term(c, j));
    nlp.eq.push_back(std::move(row));
  }
}

void add_continuity_rows(TranscribedNlp& nlp, std::shared_ptr<const Cache> c) {
  const DecisionLayout& lay = c->layout;
  if (!lay.share_states) {
    for (int k = 0; k + 1 < c->K; ++k) {
      for (int j = 0; j < c->n; ++j) {
        Row row;
        row.label = RowLabel::continuity;
        row.atoms.push_back(make_term(
            std::vector<int>{lay.state_index(k, c->N - 1, j), lay.state_index(k + 1, 0, j)},
            [](auto z) { return z[0] - z[1]; }));
        nlp.eq.push_back(std::move(row));
      }
    }
  }
  if (!lay.share_inputs && c->mesh.input_continuity == Continuity::explicit_rows) {
    for (int k = 0; k + 1 < c->K; ++k) {
      for (int j = 0; j < c->m; ++j) {
        Row row;
        row.label = RowLabel::continuity;
        row.atoms.push_back(make_term(
            std::vector<int>{lay.input_index(k, c->N - 1, j), lay.input_index(k + 1, 0, j)},
            [](auto z) { return z[0] - z[1]; }));
        nlp.eq.push_back(std::move(row));
      }
    }
  }
}

/// DAE and path rows at data points. DAE rows sit at the collocation points
/// when requested (LGR); path rows cover every distinct data point, evaluated
/// on the left interval at shared nodes.
void add_pointwise_rows(TranscribedNlp& nlp, std::shared_ptr<const Cache> c,
                        bool dae_rows_at_colloc) {
  const DecisionLayout& lay = c->layout;
  auto add_dae_row = [&](int k, int i, int j) {
    Row row;
    row.label = RowLabel::dae;
    row.atoms.push_back(make_term(lay.interval_support(k), [c, k, i, j](auto z) {
      using T = scalar_of<decltype(z)>;
      Local<T> a{z, c.get()};
      EvalWs<T>& ws = eval_ws<T>();
      node_state_and_deriv(*c, a, k, i, ws);
      const T t = time_at(*c, a, k, c->mesh.data_fracs(i));
      ws.out.resize(c->ng);
      c->dop->fns<T>().dae(ws.x, ws.xd, ws.u, t, a.p(), ws.out);
      return ws.out[j];
    }));
    nlp.eq.push_back(std::move(row));
  };
  auto add_path_row = [&](int k, int i, int j) {
    Row row;
    row.label = RowLabel::path;
    row.atoms.push_back(make_term(lay.interval_support(k), [c, k, i, j](auto z) {
      using T = scalar_of<decltype(z)>;
      Local<T> a{z, c.get()};
      EvalWs<T>& ws = eval_ws<T>();
      node_state_and_deriv(*c, a, k, i, ws);
      const T t = time_at(*c, a, k, c->mesh.data_fracs(i));
      ws.out.resize(c->nc);
      c->dop->fns<T>().path(ws.x, ws.xd, ws.u, t, a.p(), ws.out);
      return ws.out[j];
    }));
    nlp.ineq.push_back(std::move(row));
  };

  if (c->ng > 0) {
    if (dae_rows_at_colloc && c->mesh.has_collocation()) {
      for (int k = 0; k < c->K; ++k) {
        for (int i : c->mesh.colloc_local) {
          for (int j = 0; j < c->ng; ++j) add_dae_row(k, i, j);
        }
      }
    } else {
      for (int k = 0; k < c->K; ++k) {
        for (int i = (k == 0 ? 0 : 1); i < c->N; ++i) {
          for (int j = 0; j < c->ng; ++j) add_dae_row(k, i, j);
        }
      }
    }
  }
  if (c->nc > 0) {
    for (int k = 0; k < c->K; ++k) {
      for (int i = (k == 0 ? 0 : 1); i < c->N; ++i) {
        for (int j = 0; j < c->nc; ++j) add_path_row(k, i, j);
      }
    }
  }
}

void add_cost_atoms(Row& row, std::shared_ptr<const Cache> c, bool use_colloc_quad) {
  row.atoms.push_back(make_mayer_term(c));
  const int q = use_colloc_quad ? static_cast<int>(c->mesh.colloc_quad_fracs.size())
                                : c->mesh.quad_points();
  for (int k = 0; k < c->K; ++k) {
    for (int qi = 0; qi < q; ++qi) {
      row.atoms.push_back(
          make_term(c->layout.interval_support(k), [c, k, qi, use_colloc_quad](auto z) {
            using T = scalar_of<decltype(z)>;
            Local<T> a{z, c.get()};
            return lagrange_cost_at(*c, a, k, qi, use_colloc_quad);
          }));
    }
  }
}

void set_bounds(TranscribedNlp& nlp, const Cache& c) {
  const DecisionLayout& lay = c.layout;
  const DopDefinition& dop = *c.dop;
  nlp.n_vars = lay.size();
  nlp.lb = Vec::Constant(nlp.n_vars, -std::numeric_limits<double>::infinity());
  nlp.ub = Vec::Constant(nlp.n_vars, std::numeric_limits<double>::infinity());
  for (int g = 0; g < lay.n_state_nodes; ++g) {
    for (int j = 0; j < c.n; ++j) {
      nlp.lb(g * c.n + j) = dop.x_lb(j);
      nlp.ub(g * c.n + j) = dop.x_ub(j);
    }
  }
  for (int g = 0; g < lay.n_input_nodes; ++g) {
    for (int j = 0; j < c.m; ++j) {
      nlp.lb(lay.input_offset + g * c.m + j) = dop.u_lb(j);
      nlp.ub(lay.input_offset + g * c.m + j) = dop.u_ub(j);
    }
  }
  for (int j = 0; j < c.np; ++j) {
    nlp.lb(lay.p_index(j)) = dop.p_lb(j);
    nlp.ub(lay.p_index(j)) = dop.p_ub(j);
  }
  if (lay.free_t0) {
    nlp.lb(lay.t0_index()) = dop.t0.lb;
    nlp.ub(lay.t0_index()) = dop.t0.ub;
  }
  if (lay.free_tf) {
    nlp.lb(lay.tf_index()) = dop.tf.lb;
    nlp.ub(lay.tf_index()) = dop.tf.ub;
  }
}

Vec effective_weights(const Cache& c, const Vec& weights) {
  const int ne = c.n + c.ng;
  if (weights.size() == 0) return Vec::Ones(ne);
  if (weights.size() != ne) {
    throw std::invalid_argument("residual weights must have n + n_g entries");
  }
  for (int j = 0; j < ne; ++j) {
    if (!(weights(j) >= 0.0) || !std::isfinite(weights(j))) {
      throw std::invalid_argument("residual weights must be finite and nonnegative");
    }
  }
  if (weights.maxCoeff() <= 0.0) {
    throw std::invalid_argument("at least one residual weight must be positive");
  }
  return weights;
}

}  // namespace

DecisionLayout DecisionLayout::build(const DopDefinition& dop, const Mesh& mesh) {
  DecisionLayout lay;
  lay.n = dop.n;
  lay.m = dop.m;
  lay.np = dop.np;
  lay.free_t0 = dop.t0.free;
  lay.free_tf = dop.tf.free;
  lay.K = mesh.K;
  lay.N = mesh.points_per_interval();
  lay.share_states = (mesh.state_continuity == Continuity::implicit_shared);
  lay.share_inputs = (mesh.input_continuity == Continuity::implicit_shared);
  lay.n_state_nodes = lay.share_states ? mesh.shared_node_count() : lay.K * lay.N;
  lay.n_input_nodes = lay.share_inputs ? mesh.shared_node_count() : lay.K * lay.N;
  lay.input_offset = lay.n_state_nodes * lay.n;
  lay.p_offset = lay.input_offset + lay.n_input_nodes * lay.m;
  return lay;
}

int DecisionLayout::size() const {
  return p_offset + np + (free_t0 ? 1 : 0) + (free_tf ? 1 : 0);
}

std::vector<int> DecisionLayout::interval_support(int k) const {
  std::vector<int> sup;
  sup.reserve(local_size());
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < n; ++j) sup.push_back(state_index(k, i, j));
  }
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < m; ++j) sup.push_back(input_index(k, i, j));
  }
  for (int j = 0; j < np; ++j) sup.push_back(p_index(j));
  if (free_t0) sup.push_back(t0_index());
  if (free_tf) sup.push_back(tf_index());
  return sup;
}

Vec pack(const DecisionLayout& layout, const DecisionVector& dv) {
  Vec z(layout.size());
  for (int g = 0; g < layout.n_state_nodes; ++g) {
    for (int j = 0; j < layout.n; ++j) z(g * layout.n + j) = dv.chi(g, j);
  }
  for (int g = 0; g < layout.n_input_nodes; ++g) {
    for (int j = 0; j < layout.m; ++j) z(layout.input_offset + g * layout.m + j) = dv.ups(g, j);
  }
  for (int j = 0; j < layout.np; ++j) z(layout.p_index(j)) = dv.p(j);
  if (layout.free_t0) z(layout.t0_index()) = dv.t0;
  if (layout.free_tf) z(layout.tf_index()) = dv.tf;
  return z;
}

DecisionVector unpack(const DecisionLayout& layout, const Vec& z) {
  if (z.size() != layout.size()) throw std::invalid_argument("unpack: flat length mismatch");
  DecisionVector dv;
  dv.chi.resize(layout.n_state_nodes, layout.n);
  dv.ups.resize(layout.n_input_nodes, layout.m);
  dv.p.resize(layout.np);
  for (int g = 0; g < layout.n_state_nodes; ++g) {
    for (int j = 0; j < layout.n; ++j) dv.chi(g, j) = z(g * layout.n + j);
  }
  for (int g = 0; g < layout.n_input_nodes; ++g) {
    for (int j = 0; j < layout.m; ++j) dv.ups(g, j) = z(layout.input_offset + g * layout.m + j);
  }
  for (int j = 0; j < layout.np; ++j) dv.p(j) = z(layout.p_index(j));
  dv.t0 = layout.free_t0 ? z(layout.t0_index()) : 0.0;
  dv.tf = layout.free_tf ? z(layout.tf_index()) : 0.0;
  return dv;
}

namespace {

double midpoint(double lo, double hi) {
  const bool flo = std::isfinite(lo), fhi = std::isfinite(hi);
  if (flo && fhi) return 0.5 * (lo + hi);
  if (flo) return lo + 1.0;
  if (fhi) return hi - 1.0;
  return 0.0;
}

}  // namespace

Vec initial_guess(const DopDefinition& dop, const Mesh& mesh) {
  const DecisionLayout lay = DecisionLayout::build(dop, mesh);
  Vec x0g(dop.n), xfg(dop.n);
  for (int j = 0; j < dop.n; ++j) {
    x0g(j) = dop.x0_guess.size() == dop.n ? dop.x0_guess(j) : midpoint(dop.x_lb(j), dop.x_ub(j));
    xfg(j) = dop.xf_guess.size() == dop.n ? dop.xf_guess(j) : midpoint(dop.x_lb(j), dop.x_ub(j));
  }
  DecisionVector dv;
  dv.chi.resize(lay.n_state_nodes, lay.n);
  dv.ups.resize(lay.n_input_nodes, lay.m);
  dv.p.resize(lay.np);
  for (int k = 0; k < mesh.K; ++k) {
    for (int i = 0; i < lay.N; ++i) {
      const double frac = mesh.absolute_fraction(k, i);
      for (int j = 0; j < lay.n; ++j) {
        dv.chi(lay.state_node(k, i), j) = (1.0 - frac) * x0g(j) + frac * xfg(j);
      }
      for (int j = 0; j < lay.m; ++j) {
        dv.ups(lay.input_node(k, i), j) = midpoint(dop.u_lb(j), dop.u_ub(j));
      }
    }
  }
  for (int j = 0; j < lay.np; ++j) {
    dv.p(j) = dop.p_guess.size() == lay.np ? dop.p_guess(j) : midpoint(dop.p_lb(j), dop.p_ub(j));
  }
  dv.t0 = dop.t0.free ? 0.5 * (dop.t0.lb + dop.t0.ub) : dop.t0.value;
  dv.tf = dop.tf.free ? 0.5 * (dop.tf.lb + dop.tf.ub) : dop.tf.value;
  return pack(lay, dv);
}

TranscribedNlp build_collocation(const DopDefinition& dop, const Mesh& mesh) {
  if (!mesh.has_collocation()) {
    throw std::invalid_argument("build_collocation: scheme '" + to_string(mesh.scheme) +
                                "' supplies no collocation structure");
  }
  auto c = make_cache(dop, mesh);
  TranscribedNlp nlp;
  set_bounds(nlp, *c);

  if (mesh.scheme == MeshScheme::hermite_simpson) {
    // Separated form: midpoint interpolation defect and Simpson defect.
    for (int k = 0; k < c->K; ++k) {
      for (int j = 0; j < c->n; ++j) {
        for (int defect = 0; defect < 2; ++defect) {
          Row row;
          row.label = RowLabel::collocation_defect;
          row.atoms.push_back(make_term(c->layout.interval_support(k), [c, k, j, defect](auto z) {
            using T = scalar_of<decltype(z)>;
            Local<T> a{z, c.get()};
            const T dt = (a.tf() - a.t0()) * c->mesh.interval_fraction(k);
            EvalWs<T>& ws = eval_ws<T>();
            node_dynamics(*c, a, k, 0, ws.xl, ws.ul, ws.f);
            node_dynamics(*c, a, k, 1, ws.xl, ws.ul, ws.fm);
            node_dynamics(*c, a, k, 2, ws.xl, ws.ul, ws.fr);
            if (defect == 0) {
              return a.x(1, j) - 0.5 * (a.x(0, j) + a.x(2, j)) - dt * (ws.f[j] - ws.fr[j]) / 8.0;
            }
            return a.x(2, j) - a.x(0, j) - dt * (ws.f[j] + 4.0 * ws.fm[j] + ws.fr[j]) / 6.0;
          }));
          nlp.eq.push_back(std::move(row));
        }
      }
    }
  } else {
    for (int k = 0; k < c->K; ++k) {
      for (int i : mesh.colloc_local) {
        for (int j = 0; j < c->n; ++j) {
          Row row;
          row.label = RowLabel::collocation_defect;
          row.atoms.push_back(make_term(c->layout.interval_support(k), [c, k, i, j](auto z) {
            using T = scalar_of<decltype(z)>;
            Local<T> a{z, c.get()};
            const T dt = (a.tf() - a.t0()) * c->mesh.interval_fraction(k);
            EvalWs<T>& ws = eval_ws<T>();
            node_dynamics(*c, a, k, i, ws.xl, ws.ul, ws.f);
            T lhs(0.0);
            for (int l = 0; l < c->N; ++l) lhs += c->D(i, l) * a.x(l, j);
            return lhs - dt * ws.f[j];
          }));
          nlp.eq.push_back(std::move(row));
        }
      }
    }
  }

  add_pointwise_rows(nlp, c, /*dae_rows_at_colloc=*/mesh.scheme == MeshScheme::lgr);
  add_boundary_rows(nlp, c);
  add_continuity_rows(nlp, c);

  nlp.objective_row = Row{};
  add_cost_atoms(nlp.objective_row, c, /*use_colloc_quad=*/true);
  return nlp;
}

TranscribedNlp build_dair_residual(const DopDefinition& dop, const Mesh& mesh,
                                   const DairCaps& caps) {
  auto c = make_cache(dop, mesh);
  const Vec w = effective_weights(*c, caps.weights);
  const Vec wsq = w.cwiseProduct(w);

  TranscribedNlp nlp;
  set_bounds(nlp, *c);

  // Objective: mean integrated squared weighted residual norm. The horizon
  // length cancels against the absolute quadrature weights, so each atom is
  // w_q * ds_k * |W eps(q)|^2 even with free endpoints.
  nlp.objective_row = Row{};
  for (int k = 0; k < c->K; ++k) {
    const double ds = mesh.interval_fraction(k);
    for (int qi = 0; qi < mesh.quad_points(); ++qi) {
      const double wq = mesh.quad_w(qi) * ds;
      nlp.objective_row.atoms.push_back(
          make_term(c->layout.interval_support(k), [c, k, qi, wq, wsq](auto z) {
            using T = scalar_of<decltype(z)>;
            Local<T> a{z, c.get()};
            EvalWs<T>& ws = eval_ws<T>();
            residual_at_quad(*c, a, k, qi, ws);
            T s(0.0);
            for (std::size_t j = 0; j < ws.eps.size(); ++j) s += wsq(j) * ws.eps[j] * ws.eps[j];
            return wq * s;
          }));
    }
  }

  // Path constraints at data points; dynamics only through the objective.
  if (c->nc > 0) {
    TranscribedNlp tmp;
    tmp.n_vars = nlp.n_vars;
    add_pointwise_rows(tmp, c, /*dae_rows_at_colloc=*/true);
    for (Row& r : tmp.ineq) nlp.ineq.push_back(std::move(r));
  }
  add_boundary_rows(nlp, c);
  add_continuity_rows(nlp, c);

  if (caps.objective_cap) {
    const double jc = *caps.objective_cap;
    Row row;
    row.label = RowLabel::objective_cap;
    row.offset = -jc;
    row.scale = 1.0 / std::max(1.0, std::abs(jc));
    add_cost_atoms(row, c, /*use_colloc_quad=*/false);
    nlp.ineq.push_back(std::move(row));
  }
  if (caps.mirs_caps) {
    const Vec& rho = *caps.mirs_caps;
    if (rho.size() != c->n + c->ng) {
      throw std::invalid_argument("mirs caps must have n + n_g entries");
    }
    for (int j = 0; j < rho.size(); ++j) {
      if (!(rho(j) >= 0.0)) throw std::invalid_argument("mirs caps must be nonnegative");
    }
    for (int j = 0; j < rho.size(); ++j) {
      Row row;
      row.label = RowLabel::mirs_cap;
      row.offset = -rho(j);
      // Sum-of-squares rows have gradients of order sqrt(cap) near activity;
      // scaling by 1/sqrt(cap) keeps multipliers and conditioning sane.
      row.scale = 1.0 / std::sqrt(std::max(rho(j), 1e-16));
      for (int k = 0; k < c->K; ++k) {
        const double ds = mesh.interval_fraction(k);
        for (int qi = 0; qi < mesh.quad_points(); ++qi) {
          const double wq = mesh.quad_w(qi) * ds;
          row.atoms.push_back(make_term(c->layout.interval_support(k), [c, k, qi, j, wq](auto z) {
            using T = scalar_of<decltype(z)>;
            Local<T> a{z, c.get()};
            EvalWs<T>& ws = eval_ws<T>();
            residual_at_quad(*c, a, k, qi, ws);
            return wq * ws.eps[j] * ws.eps[j];
          }));
        }
      }
      nlp.ineq.push_back(std::move(row));
    }
  }
  return nlp;
}

TranscribedNlp build_dair_cost(const DopDefinition& dop, const Mesh& mesh, const Vec& mirs_caps,
                               const Vec& weights) {
  if (mirs_caps.size() == 0) {
    throw std::invalid_argument("build_dair_cost: per-equation residual caps are mandatory");
  }
  DairCaps caps;
  caps.mirs_caps = mirs_caps;
  caps.weights = weights;
  // The constraint rows match the residual problem's; only the objective
  // changes to the Bolza cost.
  TranscribedNlp nlp = build_dair_residual(dop, mesh, caps);
  auto c = make_cache(dop, mesh);
  nlp.objective_row = Row{};
  add_cost_atoms(nlp.objective_row, c, /*use_colloc_quad=*/false);
  return nlp;
}

Trajectory interpolate_solution(const Vec& z, const Mesh& mesh, const DopDefinition& dop) {
  const DecisionLayout lay = DecisionLayout::build(dop, mesh);
  if (z.size() != lay.size()) {
    throw std::invalid_argument("interpolate_solution: flat length mismatch");
  }
  auto c = make_cache(dop, mesh);
  const DecisionVector dv = unpack(lay, z);
  const double t0 = dop.t0.free ? dv.t0 : dop.t0.value;
  const double tf = dop.tf.free ? dv.tf : dop.tf.value;

  Trajectory traj;
  traj.t0 = t0;
  traj.tf = tf;
  traj.breaks = Vec(mesh.K + 1);
  for (int k = 0; k <= mesh.K; ++k) traj.breaks(k) = t0 + (tf - t0) * mesh.major_fractions(k);

  std::vector<double> buf(lay.local_size());
  for (int k = 0; k < mesh.K; ++k) {
    PolyPiece sp;
    sp.fracs = mesh.data_fracs;
    sp.bw = mesh.data_bw;
    sp.values.resize(lay.N, lay.n);
    for (int i = 0; i < lay.N; ++i) {
      for (int j = 0; j < lay.n; ++j) sp.values(i, j) = dv.chi(lay.state_node(k, i), j);
    }
    if (mesh.scheme == MeshScheme::hermite_simpson) {
      const std::vector<int> sup = lay.interval_support(k);
      for (std::size_t i = 0; i < sup.size(); ++i) buf[i] = z(sup[i]);
      Local<double> a{std::span<const double>(buf.data(), buf.size()), c.get()};
      const double dt_k = (tf - t0) * mesh.interval_fraction(k);
      EvalWs<double>& ws = eval_ws<double>();
      hs_slope(*c, a, k, dt_k, ws);
      sp.slope_fix = Eigen::Map<const Vec>(ws.slope.data(), ws.slope.size());
    }
    traj.state.push_back(std::move(sp));

    PolyPiece up;
    up.fracs = mesh.data_fracs;
    up.bw = mesh.data_bw;
    up.values.resize(lay.N, lay.m);
    for (int i = 0; i < lay.N; ++i) {
      for (int j = 0; j < lay.m; ++j) up.values(i, j) = dv.ups(lay.input_node(k, i), j);
    }
    traj.input.push_back(std::move(up));
  }
  return traj;
}

namespace {

template <class Fn>
void for_each_quad_point(const DopDefinition& dop, const Mesh& mesh, const Vec& z, Fn&& fn) {
  auto c = make_cache(dop, mesh);
  const DecisionLayout& lay = c->layout;
  if (z.size() != lay.size()) throw std::invalid_argument("flat vector length mismatch");
  std::vector<double> buf(lay.local_size());
  EvalWs<double>& ws = eval_ws<double>();
  for (int k = 0; k < mesh.K; ++k) {
    const std::vector<int> sup = lay.interval_support(k);
    for (std::size_t i = 0; i < sup.size(); ++i) buf[i] = z(sup[i]);
    Local<double> a{std::span<const double>(buf.data(), buf.size()), c.get()};
    const double ds = mesh.interval_fraction(k);
    for (int qi = 0; qi < mesh.quad_points(); ++qi) {
      residual_at_quad(*c, a, k, qi, ws);
      fn(mesh.quad_w(qi) * ds, ws.eps);
    }
  }
}

}  // namespace

Vec transcription_mirs(const DopDefinition& dop, const Mesh& mesh, const Vec& z) {
  Vec mirs = Vec::Zero(dop.n + dop.ng);
  for_each_quad_point(dop, mesh, z, [&](double w, const std::vector<double>& eps) {
    for (std::size_t j = 0; j < eps.size(); ++j) mirs(j) += w * eps[j] * eps[j];
  });
  return mirs;
}

double transcription_mirns(const DopDefinition& dop, const Mesh& mesh, const Vec& z,
                           const Vec& weights) {
  Vec w = weights;
  if (w.size() == 0) w = Vec::Ones(dop.n + dop.ng);
  const Vec wsq = w.cwiseProduct(w);
  double mirns = 0.0;
  for_each_quad_point(dop, mesh, z, [&](double wq, const std::vector<double>& eps) {
    double s = 0.0;
    for (std::size_t j = 0; j < eps.size(); ++j) s += wsq(j) * eps[j] * eps[j];
    mirns += wq * s;
  });
  return mirns;
}

double transcription_cost(const DopDefinition& dop, const Mesh& mesh, const Vec& z) {
  auto c = make_cache(dop, mesh);
  const DecisionLayout& lay = c->layout;
  if (z.size() != lay.size()) throw std::invalid_argument("flat vector length mismatch");

  std::vector<int> bsup = boundary_support(*c);
  std::vector<double> bbuf(bsup.size());
  for (std::size_t i = 0; i < bsup.size(); ++i) bbuf[i] = z(bsup[i]);
  BoundaryArgs<double> ba{std::span<const double>(bbuf.data(), bbuf.size()), c.get()};
  double cost = c->dop->f64.mayer(ba.x0(), ba.t0(), ba.xf(), ba.tf(), ba.p());

  std::vector<double> buf(lay.local_size());
  for (int k = 0; k < mesh.K; ++k) {
    const std::vector<int> sup = lay.interval_support(k);
    for (std::size_t i = 0; i < sup.size(); ++i) buf[i] = z(sup[i]);
    Local<double> a{std::span<const double>(buf.data(), buf.size()), c.get()};
    for (int qi = 0; qi < mesh.quad_points(); ++qi) {
      cost += lagrange_cost_at(*c, a, k, qi, /*use_colloc=*/false);
    }
  }
  return cost;
}

PointFeasibility point_feasibility(const DopDefinition& dop, const Mesh& mesh, const Vec& z) {
  auto c = make_cache(dop, mesh);
  const DecisionLayout& lay = c->layout;
  if (z.size() != lay.size()) throw std::invalid_argument("flat vector length mismatch");
  PointFeasibility pf;

  if (dop.nq > 0) {
    std::vector<int> bsup = boundary_support(*c);
    std::vector<double> bbuf(bsup.size());
    for (std::size_t i = 0; i < bsup.size(); ++i) bbuf[i] = z(bsup[i]);
    BoundaryArgs<double> ba{std::span<const double>(bbuf.data(), bbuf.size()), c.get()};
    std::vector<double> phi(dop.nq);
    c->dop->f64.boundary(ba.x0(), ba.t0(), ba.xf(), ba.tf(), ba.p(), phi);
    for (double v : phi) pf.boundary = std::max(pf.boundary, std::abs(v));
  }
  if (dop.nc > 0) {
    std::vector<double> buf(lay.local_size());
    std::vector<double> cc(dop.nc);
    EvalWs<double>& ws = eval_ws<double>();
    for (int k = 0; k < mesh.K; ++k) {
      const std::vector<int> sup = lay.interval_support(k);
      for (std::size_t i = 0; i < sup.size(); ++i) buf[i] = z(sup[i]);
      Local<double> a{std::span<const double>(buf.data(), buf.size()), c.get()};
      for (int i = (k == 0 ? 0 : 1); i < lay.N; ++i) {
        node_state_and_deriv(*c, a, k, i, ws);
        const double t = time_at(*c, a, k, mesh.data_fracs(i));
        c->dop->f64.path(ws.x, ws.xd, ws.u, t, a.p(), cc);
        for (double v : cc) pf.path = std::max(pf.path, v);
      }
    }
  }
  return pf;
}

}  // namespace dair
