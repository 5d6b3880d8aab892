#include "neutral_gate/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace ngate::kernels {

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    sum += d * d;
  }
  return sum;
}

void rbf_row(const FloatMatrix& data, std::span<const float> x, double gamma, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(data.rows);
#pragma omp parallel for schedule(static) if (n * static_cast<std::int64_t>(data.cols) > 32768)
  for (std::int64_t j = 0; j < n; ++j) {
    out[j] = std::exp(-gamma * squared_distance(data.row(j), x));
  }
}

bool better_split(const SplitChoice& a, const SplitChoice& b) {
  if (a.feature < 0) return false;
  if (b.feature < 0) return true;
  if (a.score != b.score) return a.score > b.score;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

SplitChoice best_split_on_feature(const NodeView& node, std::uint32_t feature) {
  const auto& data = *node.data;
  std::vector<std::pair<float, std::uint32_t>> column;
  column.reserve(node.rows.size());
  double pos_total = 0.0, neg_total = 0.0;
  for (auto r : node.rows) {
    column.emplace_back(data.values[static_cast<std::size_t>(r) * data.cols + feature], r);
    (node.labels[r] > 0 ? pos_total : neg_total) += node.weights[r];
  }
  std::sort(column.begin(), column.end());

  SplitChoice best;
  double pos_left = 0.0, neg_left = 0.0;
  for (std::size_t k = 0; k + 1 < column.size(); ++k) {
    const auto r = column[k].second;
    (node.labels[r] > 0 ? pos_left : neg_left) += node.weights[r];
    if (column[k].first == column[k + 1].first) continue;
    const double w_left = pos_left + neg_left;
    const double pos_right = pos_total - pos_left;
    const double neg_right = neg_total - neg_left;
    const double w_right = pos_right + neg_right;
    if (w_left <= 0.0 || w_right <= 0.0) continue;
    const double score = (pos_left * pos_left + neg_left * neg_left) / w_left +
                         (pos_right * pos_right + neg_right * neg_right) / w_right;
    if (best.feature < 0 || score > best.score) {
      best.feature = static_cast<std::int32_t>(feature);
      // exact in double: both operands are floats
      best.threshold = (static_cast<double>(column[k].first) + static_cast<double>(column[k + 1].first)) / 2.0;
      best.score = score;
    }
  }
  return best;
}

SplitChoice best_split(const NodeView& node, std::span<const std::uint32_t> features) {
  std::vector<SplitChoice> per_feature(features.size());
  const auto nf = static_cast<std::int64_t>(features.size());
  const auto work = nf * static_cast<std::int64_t>(node.rows.size());
#pragma omp parallel for schedule(dynamic, 4) if (work > 16384)
  for (std::int64_t f = 0; f < nf; ++f) {
    per_feature[f] = best_split_on_feature(node, features[f]);
  }
  SplitChoice best;
  for (const auto& c : per_feature) {
    if (better_split(c, best)) best = c;
  }
  return best;
}

namespace reference {

void rbf_row(const FloatMatrix& data, std::span<const float> x, double gamma, std::span<double> out) {
  for (std::size_t j = 0; j < data.rows; ++j) {
    out[j] = std::exp(-gamma * squared_distance(data.row(j), x));
  }
}

SplitChoice best_split(const NodeView& node, std::span<const std::uint32_t> features) {
  SplitChoice best;
  for (auto f : features) {
    const auto c = best_split_on_feature(node, f);
    if (better_split(c, best)) best = c;
  }
  return best;
}

}  // namespace reference

}  // namespace ngate::kernels
