#include "neutral_gate/neutrality.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "neutral_gate/csv.hpp"
#include "neutral_gate/error.hpp"

namespace ngate {

int quality_from_confidence(double confidence) {
  const double q = std::floor(100.0 * confidence + 0.5);
  return static_cast<int>(std::clamp(q, 0.0, 100.0));
}

std::vector<NeutralityQuality> score_samples(const TrainedClassifier& model, std::span<const FeatureRecord> records) {
  if (!model.space.scheme) {
    throw Error(ErrorKind::kModel, "model was trained on raw vectors and has no feature combination scheme");
  }
  const auto batch = combine_all(records, *model.space.scheme);
  const auto confidences = predict_confidences(model, batch);
  std::vector<NeutralityQuality> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back({records[i].meta.sample_id, confidences[i], quality_from_confidence(confidences[i])});
  }
  return out;
}

void write_scores(const std::filesystem::path& path, std::span<const NeutralityQuality> scores) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open for writing " + path.string());
  out << "sample_id,confidence,quality\n";
  for (const auto& s : scores) {
    csv::check_field(s.sample_id);
    out << s.sample_id << ',' << csv::format_sig9(s.confidence) << ',' << s.quality << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

std::vector<NeutralityQuality> read_scores(const std::filesystem::path& path) {
  std::vector<NeutralityQuality> out;
  std::unordered_set<std::string> seen;
  for (auto& row : csv::read(path, {"sample_id", "confidence", "quality"})) {
    NeutralityQuality q;
    q.sample_id = std::move(row[0]);
    q.confidence = csv::parse_double(row[1], "confidence");
    const double quality = csv::parse_double(row[2], "quality");
    if (!(q.confidence >= 0.0 && q.confidence <= 1.0)) {
      throw Error(ErrorKind::kFormat, "confidence outside [0,1] for '" + q.sample_id + "'");
    }
    if (quality != std::floor(quality) || quality < 0 || quality > 100) {
      throw Error(ErrorKind::kFormat, "quality must be an integer in [0,100] for '" + q.sample_id + "'");
    }
    q.quality = static_cast<int>(quality);
    if (!seen.insert(q.sample_id).second) {
      throw Error(ErrorKind::kData, "duplicate sample_id '" + q.sample_id + "' in " + path.string());
    }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace ngate
