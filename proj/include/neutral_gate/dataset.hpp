#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neutral_gate/feature_codec.hpp"

namespace ngate {

enum class BinaryLabel : std::uint8_t { kNeutral, kNonNeutral };

constexpr BinaryLabel binary_label(Expression e) {
  return e == Expression::kNeutral ? BinaryLabel::kNeutral : BinaryLabel::kNonNeutral;
}

/// +1 for Neutral (the positive class everywhere downstream), -1 otherwise.
constexpr int sign_of(BinaryLabel l) { return l == BinaryLabel::kNeutral ? +1 : -1; }

struct LabeledSample {
  FeatureRecord record;
  BinaryLabel label = BinaryLabel::kNeutral;
};

struct SplitSpec {
  double validation_fraction = 0.30;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> validation;
};

std::vector<LabeledSample> binarize(std::vector<FeatureRecord> records);

/// Keeps the minority class whole and down-samples the majority uniformly at
/// random. Survivors keep their input order. Throws Error(kData) if a class is absent.
std::vector<LabeledSample> balance(std::vector<LabeledSample> samples, std::uint64_t seed);

/// balance() applied inside every dataset_name group that holds both classes;
/// single-class groups pass through, then a global balance() pass restores
/// exact equality.
std::vector<LabeledSample> balance_per_dataset(std::vector<LabeledSample> samples, std::uint64_t seed);

/// Whole subjects go to one side. Subjects are visited in a seeded shuffle of
/// their sorted ids and moved to validation whenever that brings the validation
/// sample count strictly closer to validation_fraction * N. Both sides end up
/// non-empty. Input order is preserved within each side.
Split split_identity_disjoint(std::vector<LabeledSample> samples, const SplitSpec& spec);

}  // namespace ngate
