#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neutral_gate/model.hpp"

namespace ngate {

struct SvmConfig {
  double c = 3.0;
  double gamma = 0.002;
  /// Largest KKT violation accepted as converged.
  double kkt_tolerance = 1e-3;
  /// SMO keeps iterating until the maximal-violating-pair gap drops below this.
  double gap_tolerance = 1e-6;
  /// Sweeps (n pair updates each) in a row without a new smallest gap before giving up.
  std::uint32_t max_passes = 10;
  std::uint64_t cache_budget_bytes = 256ull << 20;

  void validate() const;
};

/// Dual solution of  max sum(a) - 1/2 a'Qa  s.t.  0 <= a_i <= C, y'a = 0,
/// with Q_ij = y_i y_j exp(-gamma |x_i - x_j|^2).
struct SvmSolution {
  std::vector<double> alpha;
  /// Decision function is f(x) = sum_i alpha_i y_i K(x_i, x) - rho.
  double rho = 0.0;
  double dual_objective = 0.0;
  /// Final m(a) - M(a): the maximal KKT violation across the training set.
  double violation_gap = 0.0;
  std::uint64_t iterations = 0;
  /// violation_gap <= kkt_tolerance.
  bool converged = false;
};

/// Sequential minimal optimization with second-order working-set selection
/// and an LRU cache of kernel rows. Results do not depend on the cache size.
SvmSolution solve_svm_dual(const FloatMatrix& x, std::span<const std::int8_t> y, const SvmConfig& cfg);

struct PlattFit {
  double a = 0.0;
  double b = 0.0;
};

/// Fits P(Neutral | f) = 1 / (1 + exp(a*f + b)) by regularized maximum
/// likelihood (Newton's method with backtracking); labels in {-1,+1}.
PlattFit fit_platt(std::span<const double> decision_values, std::span<const std::int8_t> labels);

struct SvmTrainReport {
  SvmSolution solution;
  std::size_t support_vectors = 0;
  /// False when the validation split lacked a class and calibration fell back to training data.
  bool calibrated_on_validation = true;
};

/// Trains the SVM on `train` and calibrates it on `validation` (falling back to
/// `train` if validation is empty or single-class). Non-convergence is reported
/// through `report`, the model is still returned.
TrainedClassifier train_svm(const TrainingSet& train, const TrainingSet& validation, const SvmConfig& cfg,
                            SvmTrainReport* report = nullptr);

}  // namespace ngate
