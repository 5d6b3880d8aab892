#include "neutral_gate/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "neutral_gate/error.hpp"
#include "neutral_gate/rng.hpp"

namespace ngate {

namespace {

constexpr double kIdentityScale = 0.3;
constexpr double kNoiseScale = 0.2;
constexpr double kDirectionScale = 0.5;

std::vector<double> gaussian(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

std::vector<float> softmax_for(Rng& rng, Expression e, double intensity) {
  std::array<double, kSoftmaxDim> logits{};
  const auto peak = e == Expression::kNonNeutralUnspecified ? Expression::kHappiness : e;
  for (auto& l : logits) l = 0.5 * rng.normal();
  logits[static_cast<std::size_t>(peak)] += 1.0 + 3.0 * intensity;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) total += (l = std::exp(l - top));
  std::vector<float> out(kSoftmaxDim);
  for (std::size_t k = 0; k < kSoftmaxDim; ++k) out[k] = static_cast<float>(logits[k] / total);
  return out;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.subjects == 0 || spec.samples_per_subject == 0) {
    throw Error(ErrorKind::kConfig, "synthetic corpus needs subjects and samples");
  }
  if (!(spec.neutral_share > 0.0 && spec.neutral_share < 1.0)) {
    throw Error(ErrorKind::kConfig, "neutral_share must lie strictly between 0 and 1");
  }
  Rng rng(spec.seed);
  constexpr std::array<Expression, 7> kExpressive{Expression::kAnger,     Expression::kContempt, Expression::kDisgust,
                                                  Expression::kFear,      Expression::kHappiness, Expression::kSadness,
                                                  Expression::kSurprise};
  std::array<std::vector<double>, kAllExpressions.size()> dir1, dir2;
  for (auto e : kAllExpressions) {
    dir1[static_cast<std::size_t>(e)] = gaussian(rng, kHse1Dim, kDirectionScale);
    dir2[static_cast<std::size_t>(e)] = gaussian(rng, kHse2Dim, kDirectionScale);
  }

  SyntheticCorpus corpus;
  std::vector<double> intensity;
  std::vector<std::size_t> subject_of;
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    const auto id1 = gaussian(rng, kHse1Dim, kIdentityScale);
    const auto id2 = gaussian(rng, kHse2Dim, kIdentityScale);
    char subject[32];
    std::snprintf(subject, sizeof subject, "s%04zu", s);
    for (std::size_t k = 0; k < spec.samples_per_subject; ++k) {
      const bool neutral = rng.uniform01() < spec.neutral_share;
      const Expression e = neutral ? Expression::kNeutral : kExpressive[rng.uniform_index(kExpressive.size())];
      const double level = neutral ? 0.15 * rng.uniform01() : 0.3 + 0.7 * rng.uniform01();
      const auto& d1 = dir1[static_cast<std::size_t>(e)];
      const auto& d2 = dir2[static_cast<std::size_t>(e)];

      FeatureRecord r;
      char sample[48];
      std::snprintf(sample, sizeof sample, "%s_%03zu", subject, k);
      r.meta = {0, sample, subject, spec.dataset_name, e};
      r.hse1.resize(kHse1Dim);
      r.hse2.resize(kHse2Dim);
      for (std::size_t j = 0; j < kHse1Dim; ++j) {
        r.hse1[j] = static_cast<float>(id1[j] + level * d1[j] + kNoiseScale * rng.normal());
      }
      for (std::size_t j = 0; j < kHse2Dim; ++j) {
        r.hse2[j] = static_cast<float>(id2[j] + level * d2[j] + kNoiseScale * rng.normal());
      }
      r.softmax1 = softmax_for(rng, e, level);
      r.softmax2 = softmax_for(rng, e, level);
      corpus.records.push_back(std::move(r));
      intensity.push_back(level);
      subject_of.push_back(s);
    }
  }

  for (std::size_t a = 0; a < corpus.records.size(); ++a) {
    for (std::size_t b = a + 1; b < corpus.records.size() && subject_of[b] == subject_of[a]; ++b) {
      const double sim = 0.75 - 0.35 * (intensity[a] + intensity[b]) + 0.05 * rng.normal();
      corpus.comparisons.push_back(
          {corpus.records[a].meta.sample_id, corpus.records[b].meta.sample_id, std::clamp(sim, -1.0, 1.0)});
    }
  }
  for (std::size_t i = 0; i < corpus.records.size(); ++i) corpus.records[i].meta.row = static_cast<std::uint32_t>(i);
  return corpus;
}

}  // namespace ngate
