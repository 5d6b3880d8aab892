#include "neutral_gate/decision_tree.hpp"

#include <algorithm>
#include <numeric>

#include "neutral_gate/kernels.hpp"

namespace ngate {

std::int8_t DecisionTree::predict(std::span<const float> x) const {
  std::uint32_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<double>(x[n.feature]) <= n.threshold ? n.left : n.right;
  }
  return nodes[i].vote;
}

std::uint32_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::uint32_t deepest = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(nodes[i].right, d + 1);
      stack.emplace_back(nodes[i].left, d + 1);
    }
  }
  return deepest;
}

namespace {

struct PendingNode {
  std::uint32_t index;
  std::uint32_t depth;
  std::vector<std::uint32_t> rows;
};

}  // namespace

DecisionTree grow_tree(const FloatMatrix& data, std::span<const std::int8_t> labels,
                       std::span<const double> weights, std::vector<std::uint32_t> rows,
                       const TreeParams& params, Rng& rng) {
  const auto dim = static_cast<std::uint32_t>(data.cols);
  const bool subsample = params.active_var_count > 0 && params.active_var_count < dim;
  std::vector<std::uint32_t> pool(dim);
  std::iota(pool.begin(), pool.end(), 0u);
  const std::uint32_t n_active = subsample ? params.active_var_count : dim;

  DecisionTree tree;
  tree.nodes.emplace_back();
  std::vector<PendingNode> stack;
  stack.push_back({0, 0, std::move(rows)});

  while (!stack.empty()) {
    PendingNode cur = std::move(stack.back());
    stack.pop_back();

    double pos = 0.0, neg = 0.0;
    for (auto r : cur.rows) (labels[r] > 0 ? pos : neg) += weights[r];
    auto& node = tree.nodes[cur.index];
    node.sample_count = static_cast<std::uint32_t>(cur.rows.size());
    node.vote = pos > neg ? +1 : -1;

    bool pure = true;
    for (auto r : cur.rows) {
      if (labels[r] != labels[cur.rows.front()]) {
        pure = false;
        break;
      }
    }
    if (pure || cur.depth >= params.max_depth || cur.rows.size() < params.min_sample_count) continue;

    if (subsample) {
      for (std::uint32_t i = 0; i < n_active; ++i) {
        const auto j = i + static_cast<std::uint32_t>(rng.uniform_index(dim - i));
        std::swap(pool[i], pool[j]);
      }
    }
    const kernels::NodeView view{&data, labels, weights, cur.rows};
    const auto split = kernels::best_split(view, std::span<const std::uint32_t>(pool.data(), n_active));
    if (split.feature < 0) continue;

    std::vector<std::uint32_t> left_rows, right_rows;
    for (auto r : cur.rows) {
      const double v = data.values[static_cast<std::size_t>(r) * data.cols + split.feature];
      (v <= split.threshold ? left_rows : right_rows).push_back(r);
    }
    const auto left = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& parent = tree.nodes[cur.index];
    parent.feature = split.feature;
    parent.threshold = split.threshold;
    parent.left = left;
    parent.right = right;
    // right pushed first so the left subtree is expanded next
    stack.push_back({right, cur.depth + 1, std::move(right_rows)});
    stack.push_back({left, cur.depth + 1, std::move(left_rows)});
  }
  return tree;
}

}  // namespace ngate
