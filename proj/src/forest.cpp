#include "neutral_gate/forest.hpp"

#include <cmath>
#include <limits>

#include "neutral_gate/error.hpp"
#include "neutral_gate/rng.hpp"

namespace ngate {

void ForestConfig::validate() const {
  if (max_trees < 1) throw Error(ErrorKind::kConfig, "forest max_trees must be >= 1");
  if (!(oob_epsilon > 0.0 && oob_epsilon < 1.0)) throw Error(ErrorKind::kConfig, "forest oob_epsilon must be in (0,1)");
  if (active_var_count < 1) throw Error(ErrorKind::kConfig, "forest active_var_count must be >= 1");
}

TrainedClassifier train_forest(const TrainingSet& train, const ForestConfig& cfg, ForestTrainReport* report) {
  cfg.validate();
  train.validate();
  if (!train.has_both_classes()) throw Error(ErrorKind::kData, "forest training needs both classes");

  const std::size_t n = train.size();
  const std::vector<double> unit_weights(n, 1.0);
  const TreeParams params{cfg.max_depth, cfg.min_sample_count, cfg.active_var_count};

  ForestModel forest;
  forest.max_trees = cfg.max_trees;
  forest.max_depth = cfg.max_depth;
  forest.min_sample_count = cfg.min_sample_count;

  std::vector<std::uint32_t> oob_neutral(n, 0), oob_total(n, 0);
  std::vector<char> in_bag(n);
  double previous = std::numeric_limits<double>::quiet_NaN();
  ForestTrainReport local;

  for (std::uint32_t t = 0; t < cfg.max_trees; ++t) {
    Rng rng(mix_seed(cfg.seed, t));
    std::vector<std::uint32_t> rows(n);
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (auto& r : rows) {
      r = static_cast<std::uint32_t>(rng.uniform_index(n));
      in_bag[r] = 1;
    }
    forest.trees.push_back(grow_tree(train.x, train.y, unit_weights, std::move(rows), params, rng));
    const auto& tree = forest.trees.back();

    std::size_t voted = 0, wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_bag[i]) {
        ++oob_total[i];
        oob_neutral[i] += tree.predict(train.x.row(i)) > 0 ? 1 : 0;
      }
      if (oob_total[i] == 0) continue;
      ++voted;
      const int majority = 2 * oob_neutral[i] > oob_total[i] ? 1 : -1;
      wrong += majority != train.y[i] ? 1 : 0;
    }
    const double error = voted > 0 ? static_cast<double>(wrong) / static_cast<double>(voted)
                                   : std::numeric_limits<double>::quiet_NaN();
    local.oob_errors.push_back(error);

    bool stop = false;
    if (!std::isnan(error)) {
      if (cfg.stop_rule == OobStopRule::kAbsolute) {
        stop = error < cfg.oob_epsilon;
      } else if (!std::isnan(previous)) {
        stop = std::abs(error - previous) < cfg.oob_epsilon;
      }
    }
    previous = error;
    if (stop) {
      local.stopped_by_epsilon = true;
      break;
    }
  }

  if (report) *report = std::move(local);
  TrainedClassifier model;
  model.space = train.space;
  model.payload = std::move(forest);
  return model;
}

}  // namespace ngate
