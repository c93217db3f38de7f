#include "dair/nlp.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

namespace dair {

namespace {

thread_local std::vector<double> scratch0;
thread_local std::vector<Dual> scratch1;
thread_local std::vector<Dual2> scratch2;

double eval_atom(const Term& t, std::span<const double> z) {
  scratch0.resize(t.support.size());
  for (std::size_t i = 0; i < t.support.size(); ++i) scratch0[i] = z[t.support[i]];
  return t.f0(scratch0);
}

}  // namespace

std::string to_string(RowLabel label) {
  switch (label) {
    case RowLabel::collocation_defect: return "collocation-defect";
    case RowLabel::dae: return "dae";
    case RowLabel::path: return "path";
    case RowLabel::boundary: return "boundary";
    case RowLabel::continuity: return "continuity";
    case RowLabel::mirs_cap: return "mirs-cap";
    case RowLabel::objective_cap: return "objective-cap";
    case RowLabel::generic: return "generic";
  }
  return "?";
}

double Row::value(std::span<const double> z) const {
  double s = offset;
  for (const Term& t : atoms) s += eval_atom(t, z);
  return scale * s;
}

std::vector<std::pair<int, double>> Row::gradient(std::span<const double> z) const {
  std::vector<std::pair<int, double>> g;
  if (atoms.size() == 1) {
    const Term& t = atoms.front();
    const std::size_t k = t.support.size();
    scratch1.resize(k);
    for (std::size_t i = 0; i < k; ++i) scratch1[i] = Dual(z[t.support[i]]);
    g.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      scratch1[i].d = 1.0;
      const Dual r = t.f1(scratch1);
      scratch1[i].d = 0.0;
      g.emplace_back(t.support[i], scale * r.d);
    }
    return g;
  }
  std::map<int, double> acc;
  for (const Term& t : atoms) {
    const std::size_t k = t.support.size();
    scratch1.resize(k);
    for (std::size_t i = 0; i < k; ++i) scratch1[i] = Dual(z[t.support[i]]);
    for (std::size_t i = 0; i < k; ++i) {
      scratch1[i].d = 1.0;
      const Dual r = t.f1(scratch1);
      scratch1[i].d = 0.0;
      acc[t.support[i]] += r.d;
    }
  }
  g.reserve(acc.size());
  for (auto& [idx, val] : acc) g.emplace_back(idx, scale * val);
  return g;
}

std::vector<int> Row::support() const {
  std::set<int> s;
  for (const Term& t : atoms) s.insert(t.support.begin(), t.support.end());
  return {s.begin(), s.end()};
}

Vec TranscribedNlp::equalities(std::span<const double> z) const {
  Vec v(eq.size());
  for (std::size_t i = 0; i < eq.size(); ++i) v(i) = eq[i].value(z);
  return v;
}

Vec TranscribedNlp::inequalities(std::span<const double> z) const {
  Vec v(ineq.size());
  for (std::size_t i = 0; i < ineq.size(); ++i) v(i) = ineq[i].value(z);
  return v;
}

Vec TranscribedNlp::objective_gradient(std::span<const double> z) const {
  Vec g = Vec::Zero(n_vars);
  for (auto& [idx, val] : objective_row.gradient(z)) g(idx) += val;
  return g;
}

std::vector<std::vector<std::pair<int, double>>> TranscribedNlp::eq_jacobian(
    std::span<const double> z) const {
  std::vector<std::vector<std::pair<int, double>>> jac(eq.size());
  for (std::size_t i = 0; i < eq.size(); ++i) jac[i] = eq[i].gradient(z);
  return jac;
}

std::vector<std::vector<std::pair<int, double>>> TranscribedNlp::ineq_jacobian(
    std::span<const double> z) const {
  std::vector<std::vector<std::pair<int, double>>> jac(ineq.size());
  for (std::size_t i = 0; i < ineq.size(); ++i) jac[i] = ineq[i].gradient(z);
  return jac;
}

namespace {

void accumulate_row_hessian(const Row& row, double weight, std::span<const double> z, Mat& h) {
  if (weight == 0.0) return;
  const double w = weight * row.scale;
  for (const Term& t : row.atoms) {
    const std::size_t k = t.support.size();
    scratch2.resize(k);
    for (std::size_t i = 0; i < k; ++i) scratch2[i] = Dual2(z[t.support[i]]);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i; j < k; ++j) {
        scratch2[i].d1 = 1.0;
        scratch2[j].d2 = 1.0;
        const Dual2 r = t.f2(scratch2);
        scratch2[i].d1 = 0.0;
        scratch2[j].d2 = 0.0;
        const int a = t.support[i];
        const int b = t.support[j];
        h(a, b) += w * r.d12;
        if (a != b) h(b, a) += w * r.d12;
      }
    }
  }
}

}  // namespace

void TranscribedNlp::accumulate_hessian(std::span<const double> z, double w_obj,
                                        std::span<const double> w_eq,
                                        std::span<const double> w_ineq, Mat& h) const {
  accumulate_row_hessian(objective_row, w_obj, z, h);
  for (std::size_t i = 0; i < eq.size(); ++i) accumulate_row_hessian(eq[i], w_eq[i], z, h);
  for (std::size_t i = 0; i < ineq.size(); ++i) accumulate_row_hessian(ineq[i], w_ineq[i], z, h);
}

std::vector<std::vector<int>> TranscribedNlp::eq_sparsity() const {
  std::vector<std::vector<int>> s(eq.size());
  for (std::size_t i = 0; i < eq.size(); ++i) s[i] = eq[i].support();
  return s;
}

std::vector<std::vector<int>> TranscribedNlp::ineq_sparsity() const {
  std::vector<std::vector<int>> s(ineq.size());
  for (std::size_t i = 0; i < ineq.size(); ++i) s[i] = ineq[i].support();
  return s;
}

std::map<std::string, int> TranscribedNlp::label_census() const {
  std::map<std::string, int> census;
  for (const Row& r : eq) census[to_string(r.label)]++;
  for (const Row& r : ineq) census[to_string(r.label)]++;
  return census;
}

int TranscribedNlp::rows_with_label(RowLabel label) const {
  int count = 0;
  for (const Row& r : eq) count += (r.label == label);
  for (const Row& r : ineq) count += (r.label == label);
  return count;
}

nlohmann::json TranscribedNlp::introspect() const {
  nlohmann::json j;
  j["n_vars"] = n_vars;
  j["n_eq"] = eq.size();
  j["n_ineq"] = ineq.size();
  j["labels"] = label_census();
  std::size_t nnz = 0;
  for (const auto& s : eq_sparsity()) nnz += s.size();
  for (const auto& s : ineq_sparsity()) nnz += s.size();
  const std::size_t rows = eq.size() + ineq.size();
  j["jacobian_nnz"] = nnz;
  j["jacobian_density"] =
      rows == 0 ? 0.0 : static_cast<double>(nnz) / (static_cast<double>(rows) * n_vars);
  int bounded = 0;
  for (int i = 0; i < n_vars; ++i) {
    if (std::isfinite(lb(i)) || std::isfinite(ub(i))) ++bounded;
  }
  j["bounded_vars"] = bounded;
  return j;
}

}  // namespace dair
