#pragma once

// Data-parallel inner loops shared by the learners.
//
// Every kernel in ngate::kernels has a serial twin in ngate::kernels::reference.
// The two are required to produce bit-identical results for any thread count:
// parallel loops only write disjoint outputs, and every reduction is finished
// serially in a fixed order. tests/test_kernels.cpp checks this and
// bench/kernels_bench.cpp times one against the other.

#include <cstdint>
#include <span>

#include "neutral_gate/feature_codec.hpp"

namespace ngate::kernels {

/// Sum of (a_k - b_k)^2 in double precision, accumulated in index order.
double squared_distance(std::span<const float> a, std::span<const float> b);

/// out[j] = exp(-gamma * |data.row(j) - x|^2) for every row j.
void rbf_row(const FloatMatrix& data, std::span<const float> x, double gamma, std::span<double> out);

/// Best axis-aligned split of one tree node.
struct SplitChoice {
  std::int32_t feature = -1;  // -1: no admissible split
  double threshold = 0.0;     // go left iff x[feature] <= threshold
  double score = 0.0;         // sum over children of (w+^2 + w-^2) / w; larger is purer
};

/// Node samples, given as row indices into `data` (duplicates allowed, as in a
/// bootstrap), labels in {-1,+1} and non-negative weights, both indexed by row.
struct NodeView {
  const FloatMatrix* data = nullptr;
  std::span<const std::int8_t> labels;
  std::span<const double> weights;
  std::span<const std::uint32_t> rows;
};

/// Maximizes the weighted Gini purity score over `features`, with thresholds at
/// midpoints between consecutive distinct values. Ties go to the lowest
/// feature index, then to the lowest threshold.
SplitChoice best_split(const NodeView& node, std::span<const std::uint32_t> features);

namespace reference {

void rbf_row(const FloatMatrix& data, std::span<const float> x, double gamma, std::span<double> out);
SplitChoice best_split(const NodeView& node, std::span<const std::uint32_t> features);

}  // namespace reference

/// Split search restricted to a single feature; exposed for the reduction tests.
SplitChoice best_split_on_feature(const NodeView& node, std::uint32_t feature);

/// True if `a` should be preferred over `b` under the tie-breaking order.
bool better_split(const SplitChoice& a, const SplitChoice& b);

}  // namespace ngate::kernels
