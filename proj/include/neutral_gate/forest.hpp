#pragma once

#include <cstdint>
#include <vector>

#include "neutral_gate/model.hpp"

namespace ngate {

/// When the epsilon part of the termination criterion fires.
enum class OobStopRule : std::uint8_t {
  kDelta,     // |oob_error(t) - oob_error(t-1)| < oob_epsilon
  kAbsolute,  // oob_error(t) < oob_epsilon
};

struct ForestConfig {
  std::uint32_t max_trees = 75;
  double oob_epsilon = 0.05;
  std::uint32_t active_var_count = 100;
  std::uint32_t min_sample_count = 12;
  std::uint32_t max_depth = 25;
  std::uint64_t seed = 0;
  OobStopRule stop_rule = OobStopRule::kDelta;

  void validate() const;
};

struct ForestTrainReport {
  /// Out-of-bag error after each tree (NaN while no sample has an OOB vote).
  std::vector<double> oob_errors;
  bool stopped_by_epsilon = false;
};

/// Bagged Gini trees. Tree t draws a bootstrap of size N and samples features
/// per node from an Rng seeded with mix_seed(cfg.seed, t). Growth stops after
/// max_trees trees or when the OOB criterion fires, whichever comes first.
TrainedClassifier train_forest(const TrainingSet& train, const ForestConfig& cfg,
                               ForestTrainReport* report = nullptr);

}  // namespace ngate
