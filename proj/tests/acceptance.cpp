// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "neutral_gate/adaboost.hpp"
#include "neutral_gate/biom_eval.hpp"
#include "neutral_gate/cli.hpp"
#include "neutral_gate/dataset.hpp"
#include "neutral_gate/error.hpp"
#include "neutral_gate/feature_codec.hpp"
#include "neutral_gate/forest.hpp"
#include "neutral_gate/svm.hpp"
#include "support/oracles.hpp"

using namespace ngate;
namespace nt = ngate::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

using Check = std::function<void(Outcome&)>;

struct Criterion {
  std::string name;
  double budget_s;  // 0: no time limit
  Check check;
};

// ---------------------------------------------------------------------------

void codec(Outcome& o) {
  Rng rng(1001);
  nt::TempDir dir("acc-codec");
  for (int i = 0; i < 1000 && o.ok; ++i) {
    FloatMatrix m(rng.uniform_index(17), rng.uniform_index(65));
    for (auto& v : m.values) {
      const auto bits = static_cast<std::uint32_t>(rng.next());
      std::memcpy(&v, &bits, 4);
    }
    const auto path = dir / "m.feat";
    write_matrix(path, m);
    const auto back = read_matrix(path);
    o.require(back.rows == m.rows && back.cols == m.cols &&
                  std::memcmp(back.values.data(), m.values.data(), 4 * m.values.size()) == 0,
              "roundtrip mismatch at case " + std::to_string(i));

    // malformed variants of the same file
    const auto bytes = nt::read_bytes(path);
    std::vector<std::vector<std::uint8_t>> bad;
    auto magic = bytes;
    magic[rng.uniform_index(4)] ^= static_cast<std::uint8_t>(1 + rng.uniform_index(255));
    bad.push_back(magic);
    auto shorter = bytes;
    shorter.resize(rng.uniform_index(bytes.size()));
    bad.push_back(shorter);
    auto longer = bytes;
    longer.resize(bytes.size() + 1 + rng.uniform_index(8), 0);
    bad.push_back(longer);
    if (m.rows > 0 && m.cols > 0) {
      // with a zero dimension the other one does not affect the size, so the file stays valid
      auto dims = bytes;
      dims[8 + rng.uniform_index(8)] ^= 0x10;
      bad.push_back(dims);
    }
    for (const auto& b : bad) {
      bool rejected = false;
      try {
        decode_matrix(b);
      } catch (const Error& e) {
        rejected = e.kind() == ErrorKind::kFormat;
      }
      o.require(rejected, "malformed container accepted at case " + std::to_string(i));
    }
  }
}

void combination(Outcome& o) {
  Rng rng(1002);
  const std::size_t want[] = {1280, 1408, 1288, 1416, 2688, 2704};
  for (int i = 0; i < 20; ++i) {
    const auto r = nt::random_record(rng, "a", "s", Expression::kNeutral);
    for (std::size_t s = 0; s < kAllSchemes.size(); ++s) {
      o.require(combine(r, kAllSchemes[s]).values.size() == want[s], "wrong dimension for " +
                                                                         std::string(to_string(kAllSchemes[s])));
    }
  }
}

void svm_oracle(Outcome& o) {
  Rng rng(1003);
  std::size_t instances = 0;
  for (double gamma : {0.002, 1.0, 10.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(7);
      const double scale = 1.0 / std::sqrt(gamma);
      FloatMatrix x(n, 2);
      std::vector<std::int8_t> y8;
      std::vector<int> y;
      std::vector<std::vector<double>> pts;
      for (std::size_t i = 0; i < n; ++i) {
        const int label = i < 2 ? (i == 0 ? 1 : -1) : (rng.uniform01() < 0.5 ? 1 : -1);
        y8.push_back(static_cast<std::int8_t>(label));
        y.push_back(label);
        std::vector<double> p;
        for (std::size_t k = 0; k < 2; ++k) {
          x.row(i)[k] = static_cast<float>(scale * (rng.normal() + 0.7 * label));
          p.push_back(x.row(i)[k]);
        }
        pts.push_back(p);
      }
      SvmConfig cfg;  // C = 3
      cfg.gamma = gamma;
      const auto sol = solve_svm_dual(x, y8, cfg);
      const auto oracle = nt::svm_qp_oracle(pts, y, cfg.c, gamma);
      const double gap = std::abs(sol.dual_objective - oracle.objective);
      const double kkt = nt::svm_kkt_violation(pts, y, sol.alpha, sol.rho, cfg.c, gamma, 1e-8);
      std::ostringstream where;
      where << "gamma=" << gamma << " n=" << n << " objective gap=" << gap << " kkt=" << kkt;
      o.require(gap <= 1e-6, where.str());
      o.require(kkt <= 1e-3, where.str());
      ++instances;
    }
  }
  o.require(instances >= 20, "too few instances");
}

void adaboost(Outcome& o) {
  TrainingSet set{FeatureSpace::raw(1), FloatMatrix(4, 1), {1, -1, -1, 1}};
  for (int i = 0; i < 4; ++i) set.x.row(i)[0] = static_cast<float>(i + 1);
  BoostConfig cfg;
  cfg.weak_count = 2;
  cfg.max_depth = 1;
  cfg.min_sample_count = 1;
  const double want_alpha[] = {std::log(3.0), std::log(5.0)};
  const double want_w[2][4] = {{1.0 / 6, 1.0 / 6, 1.0 / 6, 0.5}, {0.5, 0.1, 0.1, 0.3}};
  std::size_t round = 0;
  train_boost(set, cfg, nullptr, [&](const BoostRound& r, std::span<const double> w) {
    if (round < 2) {
      o.require(std::abs(r.alpha - want_alpha[round]) <= 1e-9, "alpha mismatch in round " + std::to_string(round));
      double sum = 0;
      for (std::size_t i = 0; i < 4; ++i) {
        o.require(std::abs(w[i] - want_w[round][i]) <= 1e-9, "weight mismatch in round " + std::to_string(round));
        sum += w[i];
      }
      o.require(std::abs(sum - 1.0) <= 1e-12, "weights do not sum to 1");
    }
    ++round;
  });
  o.require(round == 2, "expected two rounds");
  o.require(std::abs(discrete_boost_alpha(0.25) - 1.098612) < 1e-6, "alpha(0.25)");

  // weight sums on a larger random problem
  Rng rng(1004);
  TrainingSet big{FeatureSpace::raw(3), FloatMatrix(200, 3), {}};
  for (std::size_t i = 0; i < 200; ++i) {
    for (auto& v : big.x.row(i)) v = static_cast<float>(rng.normal());
    big.y.push_back(big.x.row(i)[0] + 0.5 * rng.normal() > 0 ? 1 : -1);
  }
  BoostConfig many;
  many.weak_count = 50;
  many.max_depth = 2;
  train_boost(big, many, nullptr, [&](const BoostRound&, std::span<const double> w) {
    double sum = 0;
    for (double v : w) sum += v;
    o.require(std::abs(sum - 1.0) <= 1e-12, "weights do not sum to 1 on random data");
  });
}

void random_forest(Outcome& o) {
  const auto set = nt::separable_blobs(500, 10, 1005);
  ForestConfig cfg;
  cfg.active_var_count = 3;
  cfg.seed = 1005;
  const auto model = train_forest(set, cfg);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    hits += (predict_confidence(model, set.x.row(i)).neutral >= 0.5) == (set.y[i] > 0) ? 1 : 0;
  }
  o.require(hits == set.size(), "training accuracy " + std::to_string(hits) + "/500");
  o.require(serialize_model(model) == serialize_model(train_forest(set, cfg)), "same seed, different bytes");

  // constraints on a noisy problem where trees actually grow deep
  auto noisy = set;
  for (std::size_t i = 0; i < noisy.y.size(); i += 3) noisy.y[i] = static_cast<std::int8_t>(-noisy.y[i]);
  for (std::uint32_t depth : {3u, 25u}) {
    cfg.max_depth = depth;
    cfg.max_trees = 10;
    const auto m = train_forest(noisy, cfg);
    for (const auto& tree : std::get<ForestModel>(m.payload).trees) {
      std::vector<std::uint32_t> d(tree.nodes.size(), 0);
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        o.require(d[i] <= depth, "node deeper than max_depth");
        if (n.is_leaf()) continue;
        o.require(d[i] < depth, "split at max_depth");
        o.require(n.sample_count >= cfg.min_sample_count, "split below min_sample_count");
        d[n.left] = d[n.right] = d[i] + 1;
      }
    }
  }
}

void det(Outcome& o) {
  Rng rng(1006);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoredLabel> s{{rng.uniform01(), BinaryLabel::kNeutral}, {rng.uniform01(), BinaryLabel::kNonNeutral}};
    const std::size_t n = 2 + rng.uniform_index(49);
    const bool coarse = trial % 2 == 0;
    while (s.size() < n) {
      const double v = coarse ? static_cast<double>(rng.uniform_index(5)) / 4.0 : rng.uniform01();
      s.push_back({v, rng.uniform01() < 0.5 ? BinaryLabel::kNeutral : BinaryLabel::kNonNeutral});
    }
    const auto curve = det_curve(s);
    const auto oracle = nt::det_oracle(s);
    bool same = curve.points.size() == oracle.points.size();
    for (std::size_t k = 0; same && k < curve.points.size(); ++k) {
      same = curve.points[k].threshold == oracle.points[k].threshold && curve.points[k].fpr == oracle.points[k].fpr &&
             curve.points[k].fnr == oracle.points[k].fnr;
    }
    o.require(same, "DET points differ from the sweep oracle in set " + std::to_string(trial));
    o.require(std::abs(curve.eer - oracle.eer) <= 1e-15, "EER differs from the sweep oracle in set " + std::to_string(trial));
  }
  const std::vector<ScoredLabel> sep{{0.9, BinaryLabel::kNeutral}, {0.8, BinaryLabel::kNeutral},
                                     {0.1, BinaryLabel::kNonNeutral}, {0.2, BinaryLabel::kNonNeutral}};
  auto anti = sep;
  for (auto& x : anti) x.label = x.label == BinaryLabel::kNeutral ? BinaryLabel::kNonNeutral : BinaryLabel::kNeutral;
  o.require(det_curve(sep).eer == 0.0, "separable EER");
  o.require(det_curve(anti).eer == 1.0, "anti-separable EER");
}

void edc(Outcome& o) {
  std::unordered_map<std::string, double> q;
  std::vector<MatedComparison> cmp;
  for (int i = 0; i < 200; ++i) {
    q["p" + std::to_string(i)] = q["r" + std::to_string(i)] = 0.42;
    cmp.push_back({"p" + std::to_string(i), "r" + std::to_string(i), std::sin(i * 1.7)});
  }
  EdcConfig cfg;  // f0 = 0.05, d_max = 0.20
  const auto flat = edc_curve(q, cmp, cfg);
  o.require(std::abs(flat.pauc - 0.01) <= 1e-12, "flat pauc " + std::to_string(flat.pauc));

  Rng rng(1007);
  for (int trial = 0; trial < 10; ++trial) {
    const auto grid = discard_grid(0.1 + 0.4 * rng.uniform01(), 0.005 + 0.05 * rng.uniform01());
    std::vector<double> y;
    for (std::size_t i = 0; i < grid.size(); ++i) y.push_back(rng.uniform01());
    o.require(std::abs(pauc(grid, y).raw - nt::riemann_oracle(grid, y, 1'000'000)) <= 1e-9, "Riemann oracle");
  }

  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = nt::ten_pair_instance(rng);
    EdcConfig ten;
    ten.threshold = FixedThreshold{inst.tau};
    const auto curve = edc_curve(inst.qualities, inst.comparisons, ten);
    o.require(curve.fnmr_values[0] == 0.2, "ten-pair FNMR(0)");
    o.require(curve.discard_fractions[20] == 0.2 && curve.fnmr_values[20] == 0.0, "ten-pair FNMR(0.2)");
    o.require(curve.fnmr_values[19] > 0.0, "ten-pair FNMR before 0.2");
  }

  for (int trial = 0; trial < 30; ++trial) {
    std::unordered_map<std::string, double> qq;
    std::vector<MatedComparison> cc;
    const std::size_t n = 30 + rng.uniform_index(300);
    for (std::size_t i = 0; i < n; ++i) {
      const bool fail = rng.uniform01() < 0.2;
      const std::string p = "p" + std::to_string(i), r = "r" + std::to_string(i);
      qq[p] = fail ? 0.45 * rng.uniform01() : 0.55 + 0.45 * rng.uniform01();
      qq[r] = 0.5 + 0.5 * rng.uniform01();
      cc.push_back({p, r, fail ? -1.0 : 1.0});
    }
    EdcConfig mono;
    mono.d_max = 0.6;
    mono.threshold = FixedThreshold{0.0};
    const auto curve = edc_curve(qq, cc, mono);
    for (std::size_t k = 1; k < curve.fnmr_values.size(); ++k) {
      o.require(curve.fnmr_values[k] <= curve.fnmr_values[k - 1], "FNMR increased");
    }
  }
}

void flow(Outcome& o) {
  Rng rng(1008);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_non = 1 + rng.uniform_index(40), n_neu = 1 + rng.uniform_index(40);
    std::unordered_map<std::string, double> q;
    std::vector<SampleMeta> recs;
    for (std::size_t i = 0; i < n_non + n_neu; ++i) {
      SampleMeta m;
      m.sample_id = "x" + std::to_string(i);
      const bool neutral = i >= n_non;
      m.expression = neutral ? Expression::kNeutral : kAllExpressions[rng.uniform_index(5)];
      q[m.sample_id] = neutral ? 0.5 + 0.5 * rng.uniform01() : 0.49 * rng.uniform01();
      recs.push_back(m);
    }
    rng.shuffle(std::span<SampleMeta>(recs));
    const double predicted = static_cast<double>(n_non) / static_cast<double>(n_non + n_neu);
    auto grid = discard_grid(0.9, 0.01);
    grid.push_back(predicted);
    std::sort(grid.begin(), grid.end());
    const auto f = class_flow(q, recs, grid);
    const auto neutral_col = static_cast<std::size_t>(
        std::find(f.labels.begin(), f.labels.end(), Expression::kNeutral) - f.labels.begin());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double sum = 0;
      for (double p : f.proportions[k]) sum += p;
      if (f.retained[k] > 0) o.require(std::abs(sum - 1.0) <= 1e-9, "proportions do not sum to 1");
      if (grid[k] == predicted) o.require(f.proportions[k][neutral_col] == 1.0, "neutral share not 1 at the predicted fraction");
      if (grid[k] < predicted && f.retained[k] > 0 && discard_count(grid[k], recs.size()) < n_non) {
        o.require(f.proportions[k][neutral_col] < 1.0, "neutral share reached 1 too early");
      }
    }
  }
}

void split_balance(Outcome& o) {
  Rng rng(1009);
  for (int trial = 0; trial < 1000; ++trial) {
    auto samples = nt::random_labeled(rng, 2 + rng.uniform_index(40), 8, 1 + rng.uniform_index(3));
    std::size_t pos = 0;
    for (const auto& s : samples) pos += s.label == BinaryLabel::kNeutral ? 1 : 0;
    if (pos == 0 || pos == samples.size()) samples.front().label = samples.front().label == BinaryLabel::kNeutral ? BinaryLabel::kNonNeutral : BinaryLabel::kNeutral;
    const auto balanced = trial % 2 == 0 ? balance(samples, static_cast<std::uint64_t>(trial))
                                         : balance_per_dataset(samples, static_cast<std::uint64_t>(trial));
    std::size_t neutral = 0;
    for (const auto& s : balanced) neutral += s.label == BinaryLabel::kNeutral ? 1 : 0;
    o.require(2 * neutral == balanced.size(), "classes unequal after balancing in trial " + std::to_string(trial));

    const auto split = split_identity_disjoint(samples, {0.3, static_cast<std::uint64_t>(trial)});
    std::set<std::string> train_subjects;
    for (const auto& s : split.train) train_subjects.insert(s.record.meta.subject_id);
    for (const auto& s : split.validation) {
      o.require(train_subjects.count(s.record.meta.subject_id) == 0, "subject overlap in trial " + std::to_string(trial));
    }
    o.require(split.train.size() + split.validation.size() == samples.size(), "samples lost in split");
  }
}

// ---------------------------------------------------------------------------

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::vector<const char*> argv{"neutral-gate"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (code != 0) std::cerr << e.str();
  if (out) *out = o.str();
  return code;
}

// Runs the whole pipeline in `dir` and returns every artifact and summary in order.
std::vector<std::pair<std::string, std::vector<std::uint8_t>>> pipeline(const std::filesystem::path& dir, bool& ok) {
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> artifacts;
  auto keep_text = [&](const std::string& name, const std::string& text) {
    artifacts.emplace_back(name, std::vector<std::uint8_t>(text.begin(), text.end()));
  };
  const std::string d = dir.string();
  std::string out;
  ok = cli({"synth", "--out", d, "--subjects", "40", "--per-subject", "8"}, &out) == 0;
  keep_text("synth.txt", out);
  const std::string m = d + "/manifest.jsonl", f = d + "/features", c = d + "/comparisons.csv";
  for (const std::string model : {"svm", "rf", "adaboost"}) {
    const std::string p = d + "/" + model;
    // 8000 weak learners never hit zero error here; 500 keeps the run short
    ok = ok && cli({"train", "--manifest", m, "--features", f, "--combo", "hse2c", "--model", model, "--out", p + ".ngm",
                    "--boost-weak-count", "500"},
                   &out) == 0;
    keep_text(model + ".train.txt", out);
    ok = ok && cli({"score", "--model", p + ".ngm", "--manifest", m, "--features", f, "--out", p + ".scores.csv"}) == 0;
    ok = ok && cli({"eval-det", "--scores", p + ".scores.csv", "--manifest", m, "--out", p + ".det.csv"}, &out) == 0;
    keep_text(model + ".det.txt", out);
    ok = ok && cli({"eval-edc", "--scores", p + ".scores.csv", "--comparisons", c, "--starting-fnmr", "0.05", "--out",
                    p + ".edc.csv"},
                   &out) == 0;
    keep_text(model + ".edc.txt", out);
    ok = ok && cli({"class-flow", "--scores", p + ".scores.csv", "--manifest", m, "--out", p + ".flow.csv"}, &out) == 0;
    keep_text(model + ".flow.txt", out);
    for (const char* ext : {".ngm", ".scores.csv", ".det.csv", ".edc.csv", ".flow.csv"}) {
      if (ok) artifacts.emplace_back(model + ext, nt::read_bytes(p + ext));
    }
  }
  for (const char* name : {"manifest.jsonl", "comparisons.csv", "features/hse1.feat", "features/hse2.feat",
                           "features/softmax1.feat", "features/softmax2.feat"}) {
    if (ok) artifacts.emplace_back(name, nt::read_bytes(dir / name));
  }
  // summaries echo output paths, which differ between the two runs
  for (auto& [name, bytes] : artifacts) {
    std::string text(bytes.begin(), bytes.end());
    for (std::size_t at; (at = text.find(d)) != std::string::npos;) text.replace(at, d.size(), "<dir>");
    bytes.assign(text.begin(), text.end());
  }
  return artifacts;
}

void end_to_end(Outcome& o) {
  nt::TempDir a("acc-e2e-a"), b("acc-e2e-b");
  bool ok_a = false, ok_b = false;
  const auto first = pipeline(a.path(), ok_a);
  const auto second = pipeline(b.path(), ok_b);
  o.require(ok_a && ok_b, "pipeline step failed");
  o.require(first.size() == second.size(), "different artifact lists");
  for (std::size_t i = 0; i < std::min(first.size(), second.size()); ++i) {
    o.require(first[i] == second[i], "artifact differs: " + first[i].first);
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"codec: 1000 random .feat roundtrips bit-exact, malformed files rejected", 5.0, codec},
      {"combination: six schemes give 1280/1408/1288/1416/2688/2704 dims", 1.0, combination},
      {"svm: SMO objective within 1e-6 of brute-force QP, KKT within 1e-3 (30 instances)", 30.0, svm_oracle},
      {"adaboost: hand-computed alphas and weights to 1e-9, weights sum to 1", 0.0, adaboost},
      {"random forest: blobs accuracy 1.0, byte-identical per seed, depth/min-sample limits", 0.0, random_forest},
      {"det: brute-force oracle on 100 sets, separable EER 0, anti-separable EER 1", 0.0, det},
      {"edc: flat pauc 0.01, Riemann oracle 1e-9, ten-pair FNMR 0 at 0.2, monotone FNMR", 0.0, edc},
      {"class flow: proportions sum to 1, neutral share 1.0 at the predicted fraction", 0.0, flow},
      {"split/balance: 1000 trials, no subject overlap, equal classes", 0.0, split_balance},
      {"end-to-end: two full pipeline runs produce byte-identical artifacts", 120.0, end_to_end},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.check(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.require(false, "took " + std::to_string(secs) + " s, budget " + std::to_string(c.budget_s) + " s");
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.3f s", secs);
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << c.name << "  (" << timing << ")";
    if (!o.ok) std::cout << "  -- " << o.detail;
    std::cout << '\n';
    failed += o.ok ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
