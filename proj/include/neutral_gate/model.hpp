#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "neutral_gate/dataset.hpp"
#include "neutral_gate/decision_tree.hpp"
#include "neutral_gate/feature_codec.hpp"

namespace ngate {

enum class ModelKind : std::uint8_t { kSvm = 0, kRandomForest = 1, kAdaBoost = 2 };

std::string_view to_string(ModelKind k);
/// CLI spelling: svm, rf, adaboost.
std::optional<ModelKind> parse_model_kind(std::string_view name);

/// Input space of a model. Models trained on combined features carry the
/// scheme; models trained on arbitrary vectors (tests, synthetic studies) do not.
struct FeatureSpace {
  std::optional<ComboScheme> scheme;
  std::uint32_t dim = 0;

  static FeatureSpace of(ComboScheme s) {
    return {s, static_cast<std::uint32_t>(scheme_dimension(s))};
  }
  static FeatureSpace raw(std::uint32_t d) { return {std::nullopt, d}; }
  bool operator==(const FeatureSpace&) const = default;
};

/// Row-major feature matrix with labels in {-1,+1} (+1 = Neutral).
struct TrainingSet {
  FeatureSpace space;
  FloatMatrix x;
  std::vector<std::int8_t> y;

  std::size_t size() const { return x.rows; }
  /// Throws Error(kData) on shape mismatches or labels outside {-1,+1}.
  void validate() const;
  bool has_both_classes() const;
};

TrainingSet make_training_set(std::span<const LabeledSample> samples, ComboScheme scheme);

struct SvmModel {
  double c = 0.0;
  double gamma = 0.0;
  FloatMatrix support_vectors;
  std::vector<double> dual_coefs;  // alpha_i * y_i
  double bias = 0.0;
  double platt_a = 0.0;
  double platt_b = 0.0;

  double decision_value(std::span<const float> x) const;
  bool operator==(const SvmModel&) const = default;
};

struct ForestModel {
  std::uint32_t max_trees = 0;
  std::uint32_t max_depth = 0;
  std::uint32_t min_sample_count = 0;
  std::vector<DecisionTree> trees;
  bool operator==(const ForestModel&) const = default;
};

struct BoostModel {
  std::uint32_t weak_count = 0;
  std::uint32_t max_depth = 0;
  std::uint32_t min_sample_count = 0;
  std::vector<DecisionTree> trees;
  std::vector<double> alphas;

  /// sum(alpha_t * h_t(x)) / sum(alpha_t), in [-1, 1].
  double normalized_margin(std::span<const float> x) const;
  bool operator==(const BoostModel&) const = default;
};

struct TrainedClassifier {
  FeatureSpace space;
  std::variant<SvmModel, ForestModel, BoostModel> payload;

  ModelKind kind() const { return static_cast<ModelKind>(payload.index()); }
  bool operator==(const TrainedClassifier&) const = default;
};

/// Neutral-class confidence in [0,1].
struct Confidence {
  double neutral = 0.0;
};

double logistic(double t);

/// SVM: 1/(1+exp(A*f(x)+B)); forest: share of trees voting Neutral;
/// boost: logistic(2 * normalized margin).
Confidence predict_confidence(const TrainedClassifier& model, const ComboVector& x);
/// Same as above for vectors without a scheme tag; only the dimension is checked.
Confidence predict_confidence(const TrainedClassifier& model, std::span<const float> x);

/// One confidence per row of `batch`, OpenMP-parallel over rows.
std::vector<double> predict_confidences(const TrainedClassifier& model, const FloatMatrix& batch);

namespace reference {
std::vector<double> predict_confidences(const TrainedClassifier& model, const FloatMatrix& batch);
}  // namespace reference

/// Throws Error(kModel) when a stored model breaks its structural invariants
/// (|dual coef| <= C, tree count and depth bounds, finite boosting weights).
void check_invariants(const TrainedClassifier& model);

// Container: "NGMD" | u32 version | u8 kind | u8 scheme (255 = none) |
// u64 payload length | payload | u32 CRC-32 of payload. Little-endian throughout.
inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::uint8_t kNoScheme = 255;

std::vector<std::uint8_t> serialize_model(const TrainedClassifier& model);
TrainedClassifier deserialize_model(std::span<const std::uint8_t> bytes,
                                    std::optional<ModelKind> expected = std::nullopt);

void save_model(const TrainedClassifier& model, const std::filesystem::path& path);
TrainedClassifier load_model(const std::filesystem::path& path, std::optional<ModelKind> expected = std::nullopt);

}  // namespace ngate
