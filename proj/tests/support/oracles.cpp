#include "oracles.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace ngate::testing {

namespace {

std::vector<float> softmax_row(Rng& rng) {
  std::vector<float> row(kSoftmaxDim);
  double sum = 0.0;
  std::vector<double> raw(kSoftmaxDim);
  for (auto& r : raw) {
    r = -std::log(1.0 - rng.uniform01());
    sum += r;
  }
  for (std::size_t i = 0; i < kSoftmaxDim; ++i) row[i] = static_cast<float>(raw[i] / sum);
  return row;
}

std::vector<float> normal_row(Rng& rng, std::size_t n) {
  std::vector<float> row(n);
  for (auto& v : row) v = static_cast<float>(rng.normal());
  return row;
}

// Solves A z = b in place with partial pivoting; false if A is numerically singular.
bool gauss_solve(std::vector<std::vector<double>>& a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-13) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * b[k];
    b[i] = s / a[i][i];
  }
  return true;
}

}  // namespace

FeatureRecord random_record(Rng& rng, std::string sample_id, std::string subject_id, Expression e,
                            std::string dataset) {
  FeatureRecord r;
  r.meta.sample_id = std::move(sample_id);
  r.meta.subject_id = std::move(subject_id);
  r.meta.dataset_name = std::move(dataset);
  r.meta.expression = e;
  r.hse1 = normal_row(rng, kHse1Dim);
  r.hse2 = normal_row(rng, kHse2Dim);
  r.softmax1 = softmax_row(rng);
  r.softmax2 = softmax_row(rng);
  return r;
}

std::vector<LabeledSample> random_labeled(Rng& rng, std::size_t subjects, std::size_t max_per_subject,
                                          std::size_t n_datasets) {
  // Only metadata matters for splitting and balancing, so vectors stay empty.
  std::vector<LabeledSample> out;
  for (std::size_t s = 0; s < subjects; ++s) {
    const std::size_t count = 1 + rng.uniform_index(max_per_subject);
    const std::string dataset = "d" + std::to_string(rng.uniform_index(n_datasets));
    for (std::size_t k = 0; k < count; ++k) {
      LabeledSample ls;
      ls.record.meta.row = static_cast<std::uint32_t>(out.size());
      ls.record.meta.sample_id = "p" + std::to_string(s) + "_" + std::to_string(k);
      ls.record.meta.subject_id = "p" + std::to_string(s);
      ls.record.meta.dataset_name = dataset;
      const bool neutral = rng.uniform01() < 0.35;
      ls.record.meta.expression = neutral ? Expression::kNeutral : Expression::kHappiness;
      ls.label = neutral ? BinaryLabel::kNeutral : BinaryLabel::kNonNeutral;
      out.push_back(std::move(ls));
    }
  }
  return out;
}

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * d);
}

double svm_dual_objective(const std::vector<std::vector<double>>& points, std::span<const int> y,
                          std::span<const double> alpha, double gamma) {
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    lin += alpha[i];
    for (std::size_t j = 0; j < points.size(); ++j) {
      quad += alpha[i] * alpha[j] * y[i] * y[j] * rbf(points[i], points[j], gamma);
    }
  }
  return lin - 0.5 * quad;
}

QpOracle svm_qp_oracle(const std::vector<std::vector<double>>& points, std::span<const int> y, double c,
                       double gamma) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> q(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) q[i][j] = y[i] * y[j] * rbf(points[i], points[j], gamma);
  }
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i) combos *= 3;

  QpOracle best;
  best.objective = -std::numeric_limits<double>::infinity();
  std::vector<int> state(n);
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t rest = code;
    std::vector<std::size_t> free_idx;
    std::vector<double> alpha(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = static_cast<int>(rest % 3);  // 0: lower bound, 1: free, 2: upper bound
      rest /= 3;
      if (state[i] == 1) free_idx.push_back(i);
      if (state[i] == 2) alpha[i] = c;
    }
    const std::size_t m = free_idx.size();
    if (m == 0) {
      double eq = 0.0;
      for (std::size_t i = 0; i < n; ++i) eq += y[i] * alpha[i];
      if (std::abs(eq) > 1e-12) continue;
    } else {
      // [Q_FF y_F; y_F' 0] [a_F; b] = [1 - Q_FU C; -y_U' C]
      std::vector<std::vector<double>> a(m + 1, std::vector<double>(m + 1, 0.0));
      std::vector<double> rhs(m + 1, 0.0);
      for (std::size_t r = 0; r < m; ++r) {
        const std::size_t i = free_idx[r];
        for (std::size_t s = 0; s < m; ++s) a[r][s] = q[i][free_idx[s]];
        a[r][m] = y[i];
        a[m][r] = y[i];
        rhs[r] = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (state[j] == 2) rhs[r] -= q[i][j] * c;
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (state[j] == 2) rhs[m] -= y[j] * c;
      }
      if (!gauss_solve(a, rhs)) continue;
      bool feasible = true;
      for (std::size_t r = 0; r < m; ++r) {
        const double v = rhs[r];
        if (v < -1e-10 || v > c + 1e-10) {
          feasible = false;
          break;
        }
        alpha[free_idx[r]] = std::clamp(v, 0.0, c);
      }
      if (!feasible) continue;
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      obj += alpha[i];
      for (std::size_t j = 0; j < n; ++j) obj -= 0.5 * alpha[i] * alpha[j] * q[i][j];
    }
    if (obj > best.objective) {
      best.objective = obj;
      best.alpha = alpha;
    }
  }
  if (best.alpha.empty()) throw std::logic_error("QP oracle found no feasible point");
  return best;
}

double svm_kkt_violation(const std::vector<std::vector<double>>& points, std::span<const int> y,
                         std::span<const double> alpha, double rho, double c, double gamma, double bound_eps) {
  const std::size_t n = points.size();
  double worst = 0.0, eq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    eq += y[i] * alpha[i];
    worst = std::max({worst, -alpha[i], alpha[i] - c});
    double f = -rho;
    for (std::size_t j = 0; j < n; ++j) f += alpha[j] * y[j] * rbf(points[j], points[i], gamma);
    const double margin = y[i] * f;
    if (alpha[i] <= bound_eps) {
      worst = std::max(worst, 1.0 - margin);
    } else if (alpha[i] >= c - bound_eps) {
      worst = std::max(worst, margin - 1.0);
    } else {
      worst = std::max(worst, std::abs(margin - 1.0));
    }
  }
  return std::max(worst, std::abs(eq));
}

DetOracle det_oracle(std::span<const ScoredLabel> scores) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> thresholds{-inf};
  for (const auto& s : scores) thresholds.push_back(s.score);
  thresholds.push_back(inf);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::size_t pos = 0, neg = 0;
  for (const auto& s : scores) (s.label == BinaryLabel::kNeutral ? pos : neg) += 1;
  DetOracle out;
  for (double t : thresholds) {
    std::size_t fn = 0, fp = 0;
    for (const auto& s : scores) {
      if (s.label == BinaryLabel::kNeutral && s.score < t) ++fn;
      if (s.label == BinaryLabel::kNonNeutral && s.score >= t) ++fp;
    }
    out.points.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(fn) / static_cast<double>(pos)});
  }
  // FNR rises from 0 and FPR falls to 0, so they cross exactly once (possibly on a plateau).
  for (std::size_t k = 0; k < out.points.size(); ++k) {
    const auto& b = out.points[k];
    if (b.fnr < b.fpr) continue;
    if (k == 0 || b.fnr == b.fpr) {
      out.eer = b.fnr;
      break;
    }
    const auto& a = out.points[k - 1];
    // FNR(l) = a.fnr + l (b.fnr - a.fnr), FPR(l) = a.fpr + l (b.fpr - a.fpr), solve FNR = FPR
    const long double l = (static_cast<long double>(a.fpr) - a.fnr) /
                          ((static_cast<long double>(b.fnr) - a.fnr) - (static_cast<long double>(b.fpr) - a.fpr));
    out.eer = static_cast<double>(a.fnr + l * (static_cast<long double>(b.fnr) - a.fnr));
    break;
  }
  return out;
}

double riemann_oracle(std::span<const double> x, std::span<const double> y, std::size_t n) {
  const double lo = x.front(), hi = x.back();
  const double h = (hi - lo) / static_cast<double>(n);
  long double sum = 0.0L;
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = lo + (static_cast<double>(i) + 0.5) * h;
    while (seg + 2 < x.size() && t > x[seg + 1]) ++seg;
    const double w = (t - x[seg]) / (x[seg + 1] - x[seg]);
    sum += y[seg] + w * (y[seg + 1] - y[seg]);
  }
  return static_cast<double>(sum * h);
}

TenPairInstance ten_pair_instance(Rng& rng) {
  TenPairInstance inst;
  // Pair k has quality 0.05 + 0.09 k via its lower-quality probe; pairs 0 and 1 fail.
  std::vector<std::size_t> order{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t k = 0; k < 10; ++k) {
    const std::string probe = "q" + std::to_string(order[k]);
    const std::string ref = "r" + std::to_string(order[k]);
    inst.qualities[probe] = 0.05 + 0.09 * static_cast<double>(k);
    inst.qualities[ref] = 0.99;
    const double sim = k < 2 ? inst.tau - 0.1 - 0.2 * rng.uniform01() : inst.tau + 0.05 + 0.4 * rng.uniform01();
    inst.comparisons.push_back({probe, ref, sim});
  }
  rng.shuffle(std::span<MatedComparison>(inst.comparisons));
  return inst;
}

TrainingSet separable_blobs(std::size_t n, std::size_t dims, std::uint64_t seed) {
  Rng rng(seed);
  TrainingSet set{FeatureSpace::raw(static_cast<std::uint32_t>(dims)), FloatMatrix(n, dims), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : -1;
    auto row = set.x.row(i);
    for (auto& v : row) v = static_cast<float>(5.0 * label + rng.normal());
    set.y.push_back(static_cast<std::int8_t>(label));
  }
  return set;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("ngate-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ngate::testing
