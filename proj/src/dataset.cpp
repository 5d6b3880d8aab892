#include "neutral_gate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "neutral_gate/error.hpp"
#include "neutral_gate/rng.hpp"

namespace ngate {

std::vector<LabeledSample> binarize(std::vector<FeatureRecord> records) {
  std::vector<LabeledSample> out;
  out.reserve(records.size());
  for (auto& r : records) {
    const auto label = binary_label(r.meta.expression);
    out.push_back(LabeledSample{std::move(r), label});
  }
  return out;
}

std::vector<LabeledSample> balance(std::vector<LabeledSample> samples, std::uint64_t seed) {
  std::vector<std::size_t> neutral, non_neutral;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (samples[i].label == BinaryLabel::kNeutral ? neutral : non_neutral).push_back(i);
  }
  if (neutral.empty() || non_neutral.empty()) {
    throw Error(ErrorKind::kData, "balance needs both classes (neutral=" + std::to_string(neutral.size()) +
                                      ", non_neutral=" + std::to_string(non_neutral.size()) + ")");
  }
  auto& majority = neutral.size() > non_neutral.size() ? neutral : non_neutral;
  const std::size_t keep = std::min(neutral.size(), non_neutral.size());

  std::vector<bool> kept(samples.size(), true);
  if (majority.size() > keep) {
    // partial Fisher-Yates: the first `keep` slots are a uniform subset
    Rng rng(seed);
    for (std::size_t i = 0; i < keep; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(majority.size() - i));
      std::swap(majority[i], majority[j]);
    }
    for (std::size_t i = keep; i < majority.size(); ++i) kept[majority[i]] = false;
  }

  std::vector<LabeledSample> out;
  out.reserve(2 * keep);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (kept[i]) out.push_back(std::move(samples[i]));
  }
  return out;
}

std::vector<LabeledSample> balance_per_dataset(std::vector<LabeledSample> samples, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].record.meta.dataset_name].push_back(i);

  std::vector<bool> kept(samples.size(), true);
  std::uint64_t stream = 0;
  for (const auto& [name, idx] : groups) {
    std::vector<LabeledSample> group;
    group.reserve(idx.size());
    bool has_n = false, has_nn = false;
    for (auto i : idx) {
      has_n |= samples[i].label == BinaryLabel::kNeutral;
      has_nn |= samples[i].label == BinaryLabel::kNonNeutral;
    }
    ++stream;
    if (!has_n || !has_nn) continue;
    // balance on positions so survivors can be mapped back
    for (std::size_t k = 0; k < idx.size(); ++k) {
      LabeledSample s;
      s.label = samples[idx[k]].label;
      s.record.meta.row = static_cast<std::uint32_t>(k);
      group.push_back(std::move(s));
    }
    const auto survivors = balance(std::move(group), mix_seed(seed, stream));
    std::vector<bool> survive(idx.size(), false);
    for (const auto& s : survivors) survive[s.record.meta.row] = true;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (!survive[k]) kept[idx[k]] = false;
    }
  }

  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (kept[i]) out.push_back(std::move(samples[i]));
  }
  return balance(std::move(out), mix_seed(seed, 0));
}

Split split_identity_disjoint(std::vector<LabeledSample> samples, const SplitSpec& spec) {
  if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0)) {
    throw Error(ErrorKind::kConfig, "validation_fraction must lie strictly between 0 and 1");
  }
  std::map<std::string, std::size_t> subject_sizes;
  for (const auto& s : samples) ++subject_sizes[s.record.meta.subject_id];
  if (subject_sizes.size() < 2) {
    throw Error(ErrorKind::kData, "identity-disjoint split needs at least 2 subjects, got " +
                                      std::to_string(subject_sizes.size()));
  }

  std::vector<std::string> order;
  order.reserve(subject_sizes.size());
  for (const auto& [id, n] : subject_sizes) order.push_back(id);
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::string>(order));

  const double n_total = static_cast<double>(samples.size());
  const double target = spec.validation_fraction * n_total;
  std::map<std::string, bool> in_validation;
  double assigned = 0.0;
  for (const auto& id : order) {
    const double size = static_cast<double>(subject_sizes[id]);
    const bool closer = std::abs(assigned + size - target) < std::abs(assigned - target);
    const bool leaves_train = assigned + size < n_total;
    if (closer && leaves_train) {
      in_validation[id] = true;
      assigned += size;
    }
  }
  if (in_validation.empty()) in_validation[order.front()] = true;

  Split out;
  for (auto& s : samples) {
    (in_validation.contains(s.record.meta.subject_id) ? out.validation : out.train).push_back(std::move(s));
  }
  return out;
}

}  // namespace ngate
