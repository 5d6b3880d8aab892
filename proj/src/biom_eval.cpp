#include "neutral_gate/biom_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "neutral_gate/csv.hpp"
#include "neutral_gate/error.hpp"

namespace ngate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open for writing " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

}  // namespace

double eer_from_points(std::span<const DetPoint> points) {
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double d1 = points[k].fnr - points[k].fpr;
    if (d1 < 0.0) continue;
    if (d1 == 0.0 || k == 0) return points[k].fnr;
    const double d0 = points[k - 1].fnr - points[k - 1].fpr;
    const double lambda = -d0 / (d1 - d0);
    return points[k - 1].fnr + lambda * (points[k].fnr - points[k - 1].fnr);
  }
  return points.empty() ? 0.0 : points.back().fnr;
}

DetCurve det_curve(std::span<const ScoredLabel> scores) {
  std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : sorted) (s.label == BinaryLabel::kNeutral ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::kData, "DET curve needs both classes");

  const double pos = static_cast<double>(n_pos), neg = static_cast<double>(n_neg);
  DetCurve curve;
  curve.points.push_back({-kInf, 1.0, 0.0});
  // neutral_below: Neutral scores < current threshold; neg_below likewise for NonNeutral
  std::size_t neutral_below = 0, neg_below = 0;
  for (std::size_t k = 0; k < sorted.size();) {
    const double t = sorted[k].score;
    curve.points.push_back({t, static_cast<double>(n_neg - neg_below) / neg,
                            static_cast<double>(neutral_below) / pos});
    for (; k < sorted.size() && sorted[k].score == t; ++k) {
      (sorted[k].label == BinaryLabel::kNeutral ? neutral_below : neg_below) += 1;
    }
  }
  curve.points.push_back({kInf, 0.0, 1.0});
  curve.eer = eer_from_points(curve.points);
  return curve;
}

void EdcConfig::validate() const {
  if (!(d_max > 0.0 && d_max <= 1.0)) throw Error(ErrorKind::kConfig, "d_max must lie in (0,1]");
  if (!(grid_step > 0.0 && grid_step <= d_max)) throw Error(ErrorKind::kConfig, "grid_step must lie in (0,d_max]");
  if (const auto* s = std::get_if<StartingFnmr>(&threshold)) {
    if (!(s->f0 >= 0.0 && s->f0 <= 1.0)) throw Error(ErrorKind::kConfig, "starting FNMR must lie in [0,1]");
  } else if (!std::isfinite(std::get<FixedThreshold>(threshold).tau)) {
    throw Error(ErrorKind::kConfig, "threshold must be finite");
  }
}

std::vector<double> discard_grid(double d_max, double step) {
  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    const double d = static_cast<double>(k) * step;
    if (d >= d_max - 1e-12 * std::max(1.0, d_max)) break;
    grid.push_back(d);
  }
  grid.push_back(d_max);
  return grid;
}

std::size_t discard_count(double fraction, std::size_t n) {
  // grid fractions such as 0.29 are not exact in binary; 0.29 * 100 would floor to 28
  const double raw = fraction * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::floor(raw + 1e-9 * std::max(1.0, raw))));
}

double threshold_for_starting_fnmr(std::span<const double> similarities, double f0) {
  if (similarities.empty()) throw Error(ErrorKind::kData, "no comparisons to set a threshold on");
  std::vector<double> sorted(similarities.begin(), similarities.end());
  std::sort(sorted.begin(), sorted.end());
  const double need = f0 * static_cast<double>(sorted.size());
  const auto k = static_cast<std::size_t>(std::ceil(need - 1e-9 * std::max(1.0, need)));
  if (k == 0) return -kInf;
  // FNMR counts similarity < tau, so the next double above the k-th smallest score
  // is the smallest threshold that rejects k comparisons
  return std::nextafter(sorted[std::min(k, sorted.size()) - 1], kInf);
}

EdcCurve edc_curve(const std::unordered_map<std::string, double>& qualities,
                   std::span<const MatedComparison> comparisons, const EdcConfig& cfg) {
  cfg.validate();
  if (comparisons.empty()) throw Error(ErrorKind::kData, "EDC needs at least one mated comparison");

  struct Pair {
    double quality;
    const MatedComparison* cmp;
  };
  std::vector<Pair> pairs;
  pairs.reserve(comparisons.size());
  std::vector<double> similarities;
  similarities.reserve(comparisons.size());
  auto lookup = [&](const std::string& id) {
    const auto it = qualities.find(id);
    if (it == qualities.end()) throw Error(ErrorKind::kData, "no quality score for sample '" + id + "'");
    return it->second;
  };
  for (const auto& c : comparisons) {
    pairs.push_back({std::min(lookup(c.probe_id), lookup(c.reference_id)), &c});
    similarities.push_back(c.similarity);
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.quality != b.quality) return a.quality < b.quality;
    if (a.cmp->probe_id != b.cmp->probe_id) return a.cmp->probe_id < b.cmp->probe_id;
    return a.cmp->reference_id < b.cmp->reference_id;
  });

  EdcCurve curve;
  curve.comparisons = pairs.size();
  curve.threshold = std::holds_alternative<FixedThreshold>(cfg.threshold)
                        ? std::get<FixedThreshold>(cfg.threshold).tau
                        : threshold_for_starting_fnmr(similarities, std::get<StartingFnmr>(cfg.threshold).f0);

  // rejected_after[k]: false non-matches among pairs[k..]
  const std::size_t p = pairs.size();
  std::vector<std::size_t> rejected_after(p + 1, 0);
  for (std::size_t k = p; k-- > 0;) {
    rejected_after[k] = rejected_after[k + 1] + (pairs[k].cmp->similarity < curve.threshold ? 1 : 0);
  }

  for (double d : discard_grid(cfg.d_max, cfg.grid_step)) {
    std::size_t drop = discard_count(d, p);
    if (cfg.ties == TiePolicy::kWholeGroups) {
      while (drop > 0 && drop < p && pairs[drop - 1].quality == pairs[drop].quality) --drop;
    }
    if (drop >= p) {
      curve.truncated = true;
      break;
    }
    curve.discard_fractions.push_back(d);
    curve.discarded.push_back(drop);
    curve.fnmr_values.push_back(static_cast<double>(rejected_after[drop]) / static_cast<double>(p - drop));
  }
  if (curve.discard_fractions.size() >= 2) {
    const auto area = pauc(curve);
    curve.pauc = area.raw;
    curve.pauc_normalized = area.normalized;
  }
  return curve;
}

PartialAuc pauc(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || x.size() != y.size()) {
    throw Error(ErrorKind::kData, "partial AUC needs at least 2 matching grid points");
  }
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) area += (x[k + 1] - x[k]) * (y[k] + y[k + 1]) / 2.0;
  const double span = x.back() - x.front();
  return {area, span > 0.0 ? area / span : 0.0};
}

PartialAuc pauc(const EdcCurve& curve) { return pauc(curve.discard_fractions, curve.fnmr_values); }

std::vector<MatedComparison> read_comparisons(const std::filesystem::path& path) {
  std::vector<MatedComparison> out;
  for (auto& row : csv::read(path, {"probe_id", "reference_id", "similarity"})) {
    MatedComparison c{std::move(row[0]), std::move(row[1]), csv::parse_double(row[2], "similarity")};
    if (c.probe_id == c.reference_id) {
      throw Error(ErrorKind::kData, "comparison of '" + c.probe_id + "' with itself");
    }
    out.push_back(std::move(c));
  }
  return out;
}

void write_comparisons(const std::filesystem::path& path, std::span<const MatedComparison> comparisons) {
  auto out = open_out(path);
  out << "probe_id,reference_id,similarity\n";
  for (const auto& c : comparisons) {
    csv::check_field(c.probe_id);
    csv::check_field(c.reference_id);
    out << c.probe_id << ',' << c.reference_id << ',' << csv::format_sig9(c.similarity) << '\n';
  }
  finish(out, path);
}

ClassFlow class_flow(const std::unordered_map<std::string, double>& qualities, std::span<const SampleMeta> records,
                     std::span<const double> grid) {
  struct Item {
    double confidence;
    const SampleMeta* meta;
  };
  std::vector<Item> items;
  items.reserve(records.size());
  std::array<bool, kAllExpressions.size()> present{};
  for (const auto& r : records) {
    const auto it = qualities.find(r.sample_id);
    if (it == qualities.end()) throw Error(ErrorKind::kData, "no quality score for sample '" + r.sample_id + "'");
    items.push_back({it->second, &r});
    present[static_cast<std::size_t>(r.expression)] = true;
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.confidence != b.confidence) return a.confidence < b.confidence;
    return a.meta->sample_id < b.meta->sample_id;
  });

  ClassFlow flow;
  std::array<std::size_t, kAllExpressions.size()> column{};
  for (auto e : kAllExpressions) {
    if (present[static_cast<std::size_t>(e)]) {
      column[static_cast<std::size_t>(e)] = flow.labels.size();
      flow.labels.push_back(e);
    }
  }
  // kept_from[k][label]: count of label among items[k..]
  const std::size_t n = items.size();
  std::vector<std::vector<std::size_t>> kept_from(n + 1, std::vector<std::size_t>(flow.labels.size(), 0));
  for (std::size_t k = n; k-- > 0;) {
    kept_from[k] = kept_from[k + 1];
    ++kept_from[k][column[static_cast<std::size_t>(items[k].meta->expression)]];
  }

  for (double d : grid) {
    if (!(d >= 0.0 && d <= 1.0)) throw Error(ErrorKind::kConfig, "discard fractions must lie in [0,1]");
    const std::size_t drop = discard_count(d, n);
    const std::size_t left = n - drop;
    std::vector<double> shares(flow.labels.size(), 0.0);
    for (std::size_t l = 0; l < shares.size() && left > 0; ++l) {
      shares[l] = static_cast<double>(kept_from[drop][l]) / static_cast<double>(left);
    }
    flow.discard_fractions.push_back(d);
    flow.retained.push_back(left);
    flow.proportions.push_back(std::move(shares));
  }
  return flow;
}

void write_det_csv(const std::filesystem::path& path, const DetCurve& curve) {
  auto out = open_out(path);
  out << "threshold,fpr,fnr\n";
  for (const auto& p : curve.points) {
    out << csv::format_sig9(p.threshold) << ',' << csv::format_sig9(p.fpr) << ',' << csv::format_sig9(p.fnr) << '\n';
  }
  finish(out, path);
}

void write_edc_csv(const std::filesystem::path& path, const EdcCurve& curve) {
  auto out = open_out(path);
  out << "discard_fraction,fnmr\n";
  for (std::size_t k = 0; k < curve.discard_fractions.size(); ++k) {
    out << csv::format_sig9(curve.discard_fractions[k]) << ',' << csv::format_sig9(curve.fnmr_values[k]) << '\n';
  }
  finish(out, path);
}

void write_flow_csv(const std::filesystem::path& path, const ClassFlow& flow) {
  auto out = open_out(path);
  out << "discard_fraction,label,proportion\n";
  for (std::size_t k = 0; k < flow.discard_fractions.size(); ++k) {
    for (std::size_t l = 0; l < flow.labels.size(); ++l) {
      out << csv::format_sig9(flow.discard_fractions[k]) << ',' << to_string(flow.labels[l]) << ','
          << csv::format_sig9(flow.proportions[k][l]) << '\n';
    }
  }
  finish(out, path);
}

}  // namespace ngate
