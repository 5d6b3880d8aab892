#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "neutral_gate/model.hpp"

namespace ngate {

struct BoostConfig {
  std::uint32_t weak_count = 8000;
  double weight_trim_rate = 0.9;
  std::uint32_t min_sample_count = 12;
  std::uint32_t max_depth = 50;
  /// Feeds the weak-learner RNG. Weak learners consider every feature, so the
  /// seed currently has no effect on the model.
  std::uint64_t seed = 0;

  void validate() const;
};

/// Weighted error below which a weak learner counts as perfect.
inline constexpr double kBoostErrorFloor = 1e-10;

/// ln((1 - e) / e), with e clamped to kBoostErrorFloor from below.
double discrete_boost_alpha(double weighted_error);

struct BoostRound {
  double error = 0.0;             // weighted training error over all samples
  double alpha = 0.0;
  std::size_t trimmed_count = 0;  // samples the weak learner was fitted on
  double weight_sum = 0.0;        // after renormalization
};

enum class BoostStop : std::uint8_t { kWeakCount, kPerfectLearner, kNoBetterThanChance };

struct BoostTrainReport {
  std::vector<BoostRound> rounds;
  BoostStop stop = BoostStop::kWeakCount;
};

/// Called after every accepted round with the renormalized sample weights.
using BoostObserver = std::function<void(const BoostRound&, std::span<const double> weights)>;

/// Discrete AdaBoost with weight trimming. Each round fits a depth-bounded
/// Gini tree on the highest-weight samples holding at least weight_trim_rate
/// of the mass, takes alpha = ln((1-e)/e), multiplies the weights of
/// misclassified samples by exp(alpha) and renormalizes. Training stops early
/// when a round reaches e = 0 (that tree is kept) or e >= 0.5 (that tree is not).
TrainedClassifier train_boost(const TrainingSet& train, const BoostConfig& cfg,
                              BoostTrainReport* report = nullptr, const BoostObserver& observer = {});

}  // namespace ngate
