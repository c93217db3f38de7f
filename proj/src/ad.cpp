#include "dair/ad.hpp"

#include <algorithm>
#include <cmath>

namespace dair {

AdResult ad_evaluate(const DualVecFn& fn, int n_out, const Vec& point, const Mat& seeds) {
  const int n = static_cast<int>(point.size());
  std::vector<Dual> x(n);
  for (int i = 0; i < n; ++i) x[i] = Dual(point(i));
  std::vector<Dual> y(n_out);

  AdResult res;
  res.values = Vec::Zero(n_out);
  const int n_seeds = static_cast<int>(seeds.cols());
  res.directional = Mat::Zero(n_out, n_seeds);
  if (n_seeds == 0) {
    std::fill(y.begin(), y.end(), Dual(0.0));
    fn(x, y);
    for (int r = 0; r < n_out; ++r) res.values(r) = y[r].v;
  }
  for (int s = 0; s < n_seeds; ++s) {
    for (int i = 0; i < n; ++i) x[i].d = seeds(i, s);
    std::fill(y.begin(), y.end(), Dual(0.0));
    fn(x, y);
    for (int r = 0; r < n_out; ++r) {
      if (s == 0) res.values(r) = y[r].v;
      res.directional(r, s) = y[r].d;
      if (!std::isfinite(y[r].v) || !std::isfinite(y[r].d)) res.finite = false;
    }
    for (int i = 0; i < n; ++i) x[i].d = 0.0;
  }
  return res;
}

std::vector<int> color_columns(int n_cols, const std::vector<std::vector<int>>& row_supports) {
  // Conflict graph: columns sharing a row cannot share a color. Greedy
  // first-fit in column order.
  std::vector<std::vector<int>> rows_of_col(n_cols);
  for (std::size_t r = 0; r < row_supports.size(); ++r) {
    for (int c : row_supports[r]) {
      if (c >= 0 && c < n_cols) rows_of_col[c].push_back(static_cast<int>(r));
    }
  }
  std::vector<int> color(n_cols, -1);
  std::vector<std::vector<int>> row_colors(row_supports.size());
  int n_colors = 0;
  for (int c = 0; c < n_cols; ++c) {
    std::vector<char> used(n_colors, 0);
    for (int r : rows_of_col[c]) {
      for (int col : row_colors[r]) used[col] = 1;
    }
    int pick = -1;
    for (int k = 0; k < n_colors; ++k) {
      if (!used[k]) { pick = k; break; }
    }
    if (pick < 0) pick = n_colors++;
    color[c] = pick;
    for (int r : rows_of_col[c]) row_colors[r].push_back(pick);
  }
  return color;
}

namespace {

Mat jacobian_with_seeds(const DualVecFn& fn, const Vec& point, int n_out, const Mat& seeds,
                        const std::vector<int>& color, bool colored,
                        const std::vector<std::vector<int>>& row_supports) {
  const int n = static_cast<int>(point.size());
  std::vector<Dual> x(n);
  for (int i = 0; i < n; ++i) x[i] = Dual(point(i));
  std::vector<Dual> y(n_out);

  Mat jac = Mat::Zero(n_out, n);
  for (int s = 0; s < seeds.cols(); ++s) {
    for (int i = 0; i < n; ++i) x[i].d = seeds(i, s);
    std::fill(y.begin(), y.end(), Dual(0.0));
    fn(x, y);
    if (!colored) {
      for (int r = 0; r < n_out; ++r) jac(r, s) = y[r].d;
    } else {
      // Decompress: within a color group every row has at most one column.
      for (int r = 0; r < n_out; ++r) {
        for (int c : row_supports[r]) {
          if (color[c] == s) jac(r, c) = y[r].d;
        }
      }
    }
    for (int i = 0; i < n; ++i) x[i].d = 0.0;
  }
  return jac;
}

}  // namespace

Mat ad_jacobian_colored(const DualVecFn& fn, const Vec& point, int n_out,
                        const std::vector<std::vector<int>>& row_supports) {
  const int n = static_cast<int>(point.size());
  const std::vector<int> color = color_columns(n, row_supports);
  const int n_colors = color.empty() ? 0 : 1 + *std::max_element(color.begin(), color.end());
  Mat seeds = Mat::Zero(n, n_colors);
  for (int c = 0; c < n; ++c) {
    if (color[c] >= 0) seeds(c, color[c]) = 1.0;
  }
  return jacobian_with_seeds(fn, point, n_out, seeds, color, true, row_supports);
}

Mat ad_jacobian_dense(const DualVecFn& fn, const Vec& point, int n_out) {
  const int n = static_cast<int>(point.size());
  const Mat seeds = Mat::Identity(n, n);
  return jacobian_with_seeds(fn, point, n_out, seeds, {}, false, {});
}

DualVecFn nlp_constraint_function(const TranscribedNlp& nlp) {
  // Copies of the rows keep the adapter self-contained.
  const std::vector<Row> eq = nlp.eq;
  const std::vector<Row> ineq = nlp.ineq;
  return [eq, ineq](std::span<const Dual> z, std::span<Dual> out) {
    std::vector<Dual> loc;
    std::size_t r = 0;
    auto eval_row = [&](const Row& row) {
      Dual s(row.offset);
      for (const Term& t : row.atoms) {
        loc.resize(t.support.size());
        for (std::size_t i = 0; i < t.support.size(); ++i) loc[i] = z[t.support[i]];
        s += t.f1(loc);
      }
      out[r++] = s * row.scale;
    };
    for (const Row& row : eq) eval_row(row);
    for (const Row& row : ineq) eval_row(row);
  };
}

DualVecFn nlp_objective_function(const TranscribedNlp& nlp) {
  const Row obj = nlp.objective_row;
  return [obj](std::span<const Dual> z, std::span<Dual> out) {
    std::vector<Dual> loc;
    Dual s(obj.offset);
    for (const Term& t : obj.atoms) {
      loc.resize(t.support.size());
      for (std::size_t i = 0; i < t.support.size(); ++i) loc[i] = z[t.support[i]];
      s += t.f1(loc);
    }
    out[0] = s * obj.scale;
  };
}

}  // namespace dair
