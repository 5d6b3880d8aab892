#include "neutral_gate/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <string>
#include <unordered_map>

#include "neutral_gate/error.hpp"
#include "neutral_gate/kernels.hpp"

namespace ngate {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// LRU cache of full kernel rows K(x_i, .).
class KernelCache {
 public:
  KernelCache(const FloatMatrix& x, double gamma, std::uint64_t budget_bytes)
      : x_(x), gamma_(gamma) {
    const std::uint64_t row_bytes = std::max<std::uint64_t>(1, x.rows * sizeof(double));
    capacity_ = static_cast<std::size_t>(std::max<std::uint64_t>(2, budget_bytes / row_bytes));
  }

  /// The returned span stays valid until the next call that computes a new row
  /// and evicts; callers fetch at most two rows per step and capacity is >= 2.
  std::span<const double> row(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->values;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().index);
      lru_.pop_back();
    }
    lru_.push_front({i, std::vector<double>(x_.rows)});
    kernels::rbf_row(x_, x_.row(i), gamma_, lru_.front().values);
    index_[i] = lru_.begin();
    return lru_.front().values;
  }

 private:
  struct Entry {
    std::size_t index;
    std::vector<double> values;
  };
  const FloatMatrix& x_;
  double gamma_;
  std::size_t capacity_ = 2;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

}  // namespace

void SvmConfig::validate() const {
  if (!(c > 0.0)) throw Error(ErrorKind::kConfig, "SVM C must be > 0");
  if (!(gamma > 0.0)) throw Error(ErrorKind::kConfig, "SVM gamma must be > 0");
  if (!(kkt_tolerance > 0.0)) throw Error(ErrorKind::kConfig, "SVM KKT tolerance must be > 0");
  if (!(gap_tolerance > 0.0)) throw Error(ErrorKind::kConfig, "SVM gap tolerance must be > 0");
  if (max_passes == 0) throw Error(ErrorKind::kConfig, "SVM max_passes must be >= 1");
}

SvmSolution solve_svm_dual(const FloatMatrix& x, std::span<const std::int8_t> y, const SvmConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.rows;
  if (y.size() != n) throw Error(ErrorKind::kData, "label count does not match rows");
  const bool pos = std::find(y.begin(), y.end(), std::int8_t{1}) != y.end();
  const bool neg = std::find(y.begin(), y.end(), std::int8_t{-1}) != y.end();
  if (!pos || !neg) throw Error(ErrorKind::kData, "SVM training needs both classes");

  const double c = cfg.c;
  KernelCache cache(x, cfg.gamma, cfg.cache_budget_bytes);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a

  auto at_upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  SvmSolution sol;
  const std::uint64_t sweep = std::max<std::size_t>(n, 1);
  const std::uint64_t hard_cap = std::max<std::uint64_t>(10'000'000, 100 * sweep);
  double best_gap = kInf;
  std::uint32_t stale_sweeps = 0;
  bool improved_this_sweep = false;
  double gap = kInf;

  for (std::uint64_t iter = 0;; ++iter) {
    // i: maximal violator in I_up
    double gmax = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!at_upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i = t;
        }
      } else if (!at_lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i = t;
      }
    }
    // j: second-order choice in I_low
    double gmax2 = -kInf;
    std::size_t j = n;
    double best_obj = kInf;
    std::span<const double> ki;
    if (i < n) ki = cache.row(i);
    for (std::size_t t = 0; t < n && i < n; ++t) {
      if (y[t] > 0) {
        if (!at_lower(t)) {
          const double diff = gmax + grad[t];
          gmax2 = std::max(gmax2, grad[t]);
          if (diff > 0.0) {
            const double quad = std::max(2.0 - 2.0 * ki[t], kTau);
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) {
              best_obj = obj;
              j = t;
            }
          }
        }
      } else if (!at_upper(t)) {
        const double diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (diff > 0.0) {
          const double quad = std::max(2.0 - 2.0 * ki[t], kTau);
          const double obj = -(diff * diff) / quad;
          if (obj <= best_obj) {
            best_obj = obj;
            j = t;
          }
        }
      }
    }
    gap = gmax + gmax2;
    if (gap < best_gap) {
      best_gap = gap;
      improved_this_sweep = true;
    }
    if (i == n || j == n || gap < cfg.gap_tolerance) break;
    if ((iter + 1) % sweep == 0) {
      stale_sweeps = improved_this_sweep ? 0 : stale_sweeps + 1;
      improved_this_sweep = false;
      if (stale_sweeps >= cfg.max_passes) break;
    }
    if (iter >= hard_cap) break;

    // row i is the most recently used entry, so fetching row j cannot evict it
    const auto kj = cache.row(j);
    const double qij = y[i] * y[j] * ki[j];
    const double old_ai = alpha[i], old_aj = alpha[j];
    if (y[i] != y[j]) {
      const double quad = std::max(2.0 + 2.0 * qij, kTau);
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      const double quad = std::max(2.0 - 2.0 * qij, kTau);
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
    }
    sol.iterations = iter + 1;
  }

  // exact gradient for the reported objective and bias
  std::fill(grad.begin(), grad.end(), -1.0);
  for (std::size_t s = 0; s < n; ++s) {
    if (alpha[s] == 0.0) continue;
    const auto ks = cache.row(s);
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * y[s] * alpha[s] * ks[t];
  }

  double ub = kInf, lb = -kInf, free_sum = 0.0;
  std::size_t n_free = 0;
  double up_max = -kInf, low_min = kInf;
  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (at_upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
    const bool in_up = (y[t] > 0 && !at_upper(t)) || (y[t] < 0 && !at_lower(t));
    const bool in_low = (y[t] > 0 && !at_lower(t)) || (y[t] < 0 && !at_upper(t));
    if (in_up) up_max = std::max(up_max, -yg);
    if (in_low) low_min = std::min(low_min, -yg);
    objective += alpha[t] * (grad[t] - 1.0);
  }
  sol.rho = n_free > 0 ? free_sum / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.dual_objective = -objective / 2.0;
  sol.violation_gap = std::max(0.0, up_max - low_min);
  sol.converged = sol.violation_gap <= cfg.kkt_tolerance;
  sol.alpha = std::move(alpha);
  return sol;
}

PlattFit fit_platt(std::span<const double> dec, std::span<const std::int8_t> labels) {
  const std::size_t n = dec.size();
  double prior1 = 0.0, prior0 = 0.0;
  for (auto l : labels) (l > 0 ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] > 0 ? hi : lo;

  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dec[i] * a + b;
      f += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };

  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10, kSigma = 1e-12, kEps = 1e-5;
  double a = 0.0, b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = objective(a, b);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dec[i] * a + b;
      double p, q;
      if (z >= 0.0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= kMinStep) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;
  }
  return {a, b};
}

TrainedClassifier train_svm(const TrainingSet& train, const TrainingSet& validation, const SvmConfig& cfg,
                            SvmTrainReport* report) {
  cfg.validate();
  train.validate();
  if (!train.has_both_classes()) throw Error(ErrorKind::kData, "SVM training needs both classes");
  if (validation.size() > 0) {
    validation.validate();
    if (validation.space != train.space) throw Error(ErrorKind::kData, "validation feature space differs from training");
  }

  SvmSolution sol = solve_svm_dual(train.x, train.y, cfg);

  SvmModel svm;
  svm.c = cfg.c;
  svm.gamma = cfg.gamma;
  svm.bias = -sol.rho;
  std::size_t n_sv = 0;
  for (double a : sol.alpha) n_sv += a > 0.0 ? 1 : 0;
  svm.support_vectors = FloatMatrix(n_sv, train.x.cols);
  for (std::size_t i = 0, k = 0; i < train.size(); ++i) {
    if (sol.alpha[i] <= 0.0) continue;
    std::copy(train.x.row(i).begin(), train.x.row(i).end(), svm.support_vectors.row(k).begin());
    svm.dual_coefs.push_back(sol.alpha[i] * train.y[i]);
    ++k;
  }

  const bool use_validation = validation.size() > 0 && validation.has_both_classes();
  const TrainingSet& calib = use_validation ? validation : train;
  std::vector<double> dec(calib.size());
  const auto n = static_cast<std::int64_t>(calib.size());
#pragma omp parallel for schedule(dynamic, 16) if (n > 32)
  for (std::int64_t i = 0; i < n; ++i) dec[i] = svm.decision_value(calib.x.row(i));
  const auto platt = fit_platt(dec, calib.y);
  svm.platt_a = platt.a;
  svm.platt_b = platt.b;

  if (report) {
    report->support_vectors = n_sv;
    report->calibrated_on_validation = use_validation;
    report->solution = std::move(sol);
  }
  TrainedClassifier model;
  model.space = train.space;
  model.payload = std::move(svm);
  return model;
}

}  // namespace ngate
