#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "neutral_gate/biom_eval.hpp"
#include "neutral_gate/feature_codec.hpp"

namespace ngate {

/// Parameters of a synthetic stand-in for extracted embeddings.
///
/// Each subject gets an identity offset in both backbone spaces; each
/// expression class gets a fixed direction. A sample is identity + intensity *
/// direction + noise, and its softmax vectors peak on its expression with a
/// sharpness that grows with intensity. Mated similarities fall with the
/// expression intensity of both samples, so expressive samples are the ones
/// that cause false non-matches.
struct SyntheticSpec {
  std::size_t subjects = 24;
  std::size_t samples_per_subject = 6;
  double neutral_share = 0.4;
  std::string dataset_name = "synthetic";
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<FeatureRecord> records;
  std::vector<MatedComparison> comparisons;  // every within-subject pair
};

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace ngate
