#include "neutral_gate/adaboost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "neutral_gate/error.hpp"
#include "neutral_gate/rng.hpp"

namespace ngate {

void BoostConfig::validate() const {
  if (weak_count < 1) throw Error(ErrorKind::kConfig, "boost weak_count must be >= 1");
  if (!(weight_trim_rate > 0.0 && weight_trim_rate <= 1.0)) {
    throw Error(ErrorKind::kConfig, "boost weight_trim_rate must be in (0,1]");
  }
}

double discrete_boost_alpha(double weighted_error) {
  const double e = std::max(weighted_error, kBoostErrorFloor);
  return std::log((1.0 - e) / e);
}

TrainedClassifier train_boost(const TrainingSet& train, const BoostConfig& cfg, BoostTrainReport* report,
                              const BoostObserver& observer) {
  cfg.validate();
  train.validate();
  if (!train.has_both_classes()) throw Error(ErrorKind::kData, "boost training needs both classes");

  const std::size_t n = train.size();
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  const TreeParams params{cfg.max_depth, cfg.min_sample_count, 0};
  Rng rng(cfg.seed);

  BoostModel boost;
  boost.weak_count = cfg.weak_count;
  boost.max_depth = cfg.max_depth;
  boost.min_sample_count = cfg.min_sample_count;
  BoostTrainReport local;
  std::vector<std::uint32_t> order(n);
  std::vector<std::int8_t> predictions(n);

  for (std::uint32_t t = 0; t < cfg.weak_count; ++t) {
    // trimming: heaviest samples first, keep the shortest prefix reaching the trim rate
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return weights[a] > weights[b]; });
    std::size_t keep = 0;
    double mass = 0.0;
    while (keep < n && mass < cfg.weight_trim_rate) mass += weights[order[keep++]];
    std::vector<std::uint32_t> rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(rows.begin(), rows.end());

    auto tree = grow_tree(train.x, train.y, weights, std::move(rows), params, rng);

    double error = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      predictions[i] = tree.predict(train.x.row(i));
      if (predictions[i] != train.y[i]) error += weights[i];
    }
    if (error >= 0.5) {
      local.stop = BoostStop::kNoBetterThanChance;
      break;
    }

    BoostRound round;
    round.error = error;
    round.alpha = discrete_boost_alpha(error);
    round.trimmed_count = keep;
    boost.trees.push_back(std::move(tree));
    boost.alphas.push_back(round.alpha);

    const double factor = std::exp(round.alpha);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (predictions[i] != train.y[i]) weights[i] *= factor;
      total += weights[i];
    }
    double sum = 0.0;
    for (auto& w : weights) {
      w /= total;
      sum += w;
    }
    round.weight_sum = sum;
    local.rounds.push_back(round);
    if (observer) observer(round, weights);

    if (error == 0.0) {
      local.stop = BoostStop::kPerfectLearner;
      break;
    }
  }

  if (boost.trees.empty()) {
    throw Error(ErrorKind::kData, "boosting found no weak learner better than chance");
  }
  if (report) *report = std::move(local);
  TrainedClassifier model;
  model.space = train.space;
  model.payload = std::move(boost);
  return model;
}

}  // namespace ngate
