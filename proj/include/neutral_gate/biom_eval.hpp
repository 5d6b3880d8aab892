#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "neutral_gate/dataset.hpp"
#include "neutral_gate/feature_codec.hpp"

namespace ngate {

// ---------------------------------------------------------------------------
// Classification: DET curve and equal error rate
// ---------------------------------------------------------------------------

struct ScoredLabel {
  double score = 0.0;
  BinaryLabel label = BinaryLabel::kNeutral;
};

struct DetPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
};

struct DetCurve {
  std::vector<DetPoint> points;  // ascending threshold, -inf first, +inf last
  double eer = 0.0;
};

/// Neutral is the positive class and "score >= t" accepts it:
///   FNR(t) = #{Neutral : s < t} / #Neutral,  FPR(t) = #{NonNeutral : s >= t} / #NonNeutral,
/// swept over every distinct score plus -inf and +inf. The EER is read where
/// FNR - FPR changes sign, interpolating linearly between the two bracketing
/// points (a tied plateau therefore yields its midpoint).
DetCurve det_curve(std::span<const ScoredLabel> scores);

/// EER from a precomputed point list, using the same crossing rule as det_curve.
double eer_from_points(std::span<const DetPoint> points);

// ---------------------------------------------------------------------------
// Utility prediction: error-versus-discard characteristic
// ---------------------------------------------------------------------------

struct MatedComparison {
  std::string probe_id;
  std::string reference_id;
  double similarity = 0.0;
};

struct FixedThreshold {
  double tau = 0.0;
};

/// Smallest threshold whose zero-discard FNMR is at least f0.
struct StartingFnmr {
  double f0 = 0.05;
};

using ThresholdMode = std::variant<FixedThreshold, StartingFnmr>;

/// How a discard count is realized when the cut falls inside a run of equal pair qualities.
enum class TiePolicy : std::uint8_t {
  /// Back off to the previous quality boundary: tied comparisons are kept or dropped together.
  kWholeGroups,
  /// Drop exactly floor(d*P), breaking ties by (probe_id, reference_id).
  kStableOrder,
};

struct EdcConfig {
  double d_max = 0.20;
  double grid_step = 0.01;
  ThresholdMode threshold = StartingFnmr{};
  TiePolicy ties = TiePolicy::kWholeGroups;

  void validate() const;
};

struct EdcCurve {
  std::vector<double> discard_fractions;
  std::vector<double> fnmr_values;
  std::vector<std::size_t> discarded;  // comparisons actually removed at each grid point
  double threshold = 0.0;
  double pauc = 0.0;
  double pauc_normalized = 0.0;  // pauc / (last grid fraction)
  std::size_t comparisons = 0;
  bool truncated = false;        // retained set ran empty before d_max
};

/// 0, step, 2*step, ... with d_max as the final point.
std::vector<double> discard_grid(double d_max, double step);

/// floor(fraction * n), tolerant to the representation error of grid fractions.
std::size_t discard_count(double fraction, std::size_t n);

double threshold_for_starting_fnmr(std::span<const double> similarities, double f0);

/// Pair quality is min(quality(probe), quality(reference)); comparisons are
/// discarded in ascending pair quality, then (probe_id, reference_id).
/// FNMR(d) is the share of retained comparisons with similarity < threshold.
EdcCurve edc_curve(const std::unordered_map<std::string, double>& qualities,
                   std::span<const MatedComparison> comparisons, const EdcConfig& cfg);

struct PartialAuc {
  double raw = 0.0;
  double normalized = 0.0;
};

/// Trapezoidal area under y(x) over the given grid; needs at least 2 points.
PartialAuc pauc(std::span<const double> x, std::span<const double> y);
PartialAuc pauc(const EdcCurve& curve);

std::vector<MatedComparison> read_comparisons(const std::filesystem::path& path);
void write_comparisons(const std::filesystem::path& path, std::span<const MatedComparison> comparisons);

// ---------------------------------------------------------------------------
// Expression-class discard flow
// ---------------------------------------------------------------------------

struct ClassFlow {
  std::vector<double> discard_fractions;
  std::vector<Expression> labels;               // labels present in the input, enum order
  std::vector<std::vector<double>> proportions;  // [grid point][label]
  std::vector<std::size_t> retained;
};

/// At each fraction d, drops the floor(d*N) lowest-confidence samples (ties by
/// sample_id) and reports the expression-label shares of what is left.
ClassFlow class_flow(const std::unordered_map<std::string, double>& qualities, std::span<const SampleMeta> records,
                     std::span<const double> grid);

// ---------------------------------------------------------------------------
// Curve files
// ---------------------------------------------------------------------------

void write_det_csv(const std::filesystem::path& path, const DetCurve& curve);
void write_edc_csv(const std::filesystem::path& path, const EdcCurve& curve);
void write_flow_csv(const std::filesystem::path& path, const ClassFlow& flow);

}  // namespace ngate
