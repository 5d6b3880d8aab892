#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neutral_gate/feature_codec.hpp"
#include "neutral_gate/rng.hpp"

namespace ngate {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::int8_t vote = -1;            // leaf class, +1 Neutral / -1 NonNeutral
  std::uint32_t sample_count = 0;   // training samples that reached the node (with multiplicity)

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Binary classification tree; nodes[0] is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  std::int8_t predict(std::span<const float> x) const;
  /// Root has depth 0.
  std::uint32_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

struct TreeParams {
  std::uint32_t max_depth = 25;
  std::uint32_t min_sample_count = 12;
  std::uint32_t active_var_count = 0;  // features drawn per node; 0 = all
};

/// Grows a tree on rows of `data` (duplicates allowed) with labels in {-1,+1}
/// and per-row weights. A node becomes a leaf when it is pure, sits at
/// max_depth, holds fewer than min_sample_count samples, or has no admissible
/// split. Leaves vote by weighted majority, ties going to NonNeutral.
DecisionTree grow_tree(const FloatMatrix& data, std::span<const std::int8_t> labels,
                       std::span<const double> weights, std::vector<std::uint32_t> rows,
                       const TreeParams& params, Rng& rng);

}  // namespace ngate
