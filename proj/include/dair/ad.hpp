#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dair/dual.hpp"
#include "dair/lagrange.hpp"
#include "dair/nlp.hpp"

namespace dair {

/// Vector function evaluated on dual numbers; the derivative channel carries
/// one directional derivative per call.
using DualVecFn = std::function<void(std::span<const Dual>, std::span<Dual>)>;

struct AdResult {
  Vec values;
  Mat directional;  ///< n_out x n_seeds, column s = J * seeds.col(s)
  bool finite = true;  ///< false when a NaN/Inf propagated through
};

/// Forward-mode evaluation: values and J*seed for each seed direction.
AdResult ad_evaluate(const DualVecFn& fn, int n_out, const Vec& point, const Mat& seeds);

/// Greedy column coloring: columns sharing a row in `row_supports` get
/// distinct colors. Returns color index per column.
std::vector<int> color_columns(int n_cols, const std::vector<std::vector<int>>& row_supports);

/// Dense Jacobian assembled from colored coordinate seeds. `row_supports`
/// must be a superset of the true nonzero pattern (entries outside it are
/// discarded by the decompression).
Mat ad_jacobian_colored(const DualVecFn& fn, const Vec& point, int n_out,
                        const std::vector<std::vector<int>>& row_supports);

/// Dense Jacobian by seeding every coordinate (no sparsity information).
Mat ad_jacobian_dense(const DualVecFn& fn, const Vec& point, int n_out);

/// Adapter: all constraint rows of an NLP (equalities then inequalities) as a
/// dual-number vector function.
DualVecFn nlp_constraint_function(const TranscribedNlp& nlp);
/// Adapter: objective as a 1-output dual-number function.
DualVecFn nlp_objective_function(const TranscribedNlp& nlp);

}  // namespace dair
