#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dair/dual.hpp"
#include "dair/lagrange.hpp"

namespace dair {

enum class RowLabel {
  collocation_defect,
  dae,
  path,
  boundary,
  continuity,
  mirs_cap,
  objective_cap,
  generic
};

std::string to_string(RowLabel label);

/// Scalar term with local variable support. The three callables share one
/// body (a generic lambda) instantiated for plain values, first-order duals
/// and second-order duals, which is what makes exact derivatives cheap.
struct Term {
  std::vector<int> support;
  std::function<double(std::span<const double>)> f0;
  std::function<Dual(std::span<const Dual>)> f1;
  std::function<Dual2(std::span<const Dual2>)> f2;
};

template <class F>
Term make_term(std::vector<int> support, F f) {
  Term t;
  t.support = std::move(support);
  t.f0 = [f](std::span<const double> z) { return f(z); };
  t.f1 = [f](std::span<const Dual> z) { return f(z); };
  t.f2 = [f](std::span<const Dual2> z) { return f(z); };
  return t;
}

/// One constraint row (or the objective): scale * (sum of atoms + offset).
struct Row {
  std::vector<Term> atoms;
  double offset = 0.0;
  double scale = 1.0;
  RowLabel label = RowLabel::generic;

  double value(std::span<const double> z) const;
  /// Sparse gradient accumulated into (index, value) pairs, combined per row.
  std::vector<std::pair<int, double>> gradient(std::span<const double> z) const;
  std::vector<int> support() const;
};

/// Generic NLP in the form
///   min objective(z)  s.t.  eq(z) = 0,  ineq(z) <= 0,  lb <= z <= ub.
/// Every row carries a provenance label and a local support list; the
/// declared sparsity is the union of atom supports (a superset of the true
/// nonzero pattern).
struct TranscribedNlp {
  int n_vars = 0;
  Vec lb, ub;
  Row objective_row;  ///< label ignored; offset/scale apply
  std::vector<Row> eq;
  std::vector<Row> ineq;

  double objective(std::span<const double> z) const { return objective_row.value(z); }
  Vec equalities(std::span<const double> z) const;
  Vec inequalities(std::span<const double> z) const;

  Vec objective_gradient(std::span<const double> z) const;
  std::vector<std::vector<std::pair<int, double>>> eq_jacobian(std::span<const double> z) const;
  std::vector<std::vector<std::pair<int, double>>> ineq_jacobian(std::span<const double> z) const;

  /// Accumulates  w_obj * H(objective) + sum_i w_eq[i] * H(eq_i)
  ///            + sum_j w_ineq[j] * H(ineq_j)  into the dense matrix H.
  void accumulate_hessian(std::span<const double> z, double w_obj, std::span<const double> w_eq,
                          std::span<const double> w_ineq, Mat& h) const;

  std::vector<std::vector<int>> eq_sparsity() const;
  std::vector<std::vector<int>> ineq_sparsity() const;
  std::map<std::string, int> label_census() const;
  int rows_with_label(RowLabel label) const;

  nlohmann::json introspect() const;
};

}  // namespace dair
