#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "neutral_gate/feature_codec.hpp"
#include "neutral_gate/model.hpp"

namespace ngate {

/// Expression-neutrality component quality of one sample.
struct NeutralityQuality {
  std::string sample_id;
  double confidence = 0.0;  // neutral-class confidence, [0,1]
  int quality = 0;          // round-half-up of 100 * confidence, [0,100]
};

int quality_from_confidence(double confidence);

/// One entry per record, in input order. The model must carry a combination scheme.
std::vector<NeutralityQuality> score_samples(const TrainedClassifier& model, std::span<const FeatureRecord> records);

/// Scores file: header sample_id,confidence,quality; confidence with 9 significant digits.
void write_scores(const std::filesystem::path& path, std::span<const NeutralityQuality> scores);
std::vector<NeutralityQuality> read_scores(const std::filesystem::path& path);

}  // namespace ngate
