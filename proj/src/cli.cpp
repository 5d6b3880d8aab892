#include "neutral_gate/cli.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "neutral_gate/adaboost.hpp"
#include "neutral_gate/biom_eval.hpp"
#include "neutral_gate/csv.hpp"
#include "neutral_gate/dataset.hpp"
#include "neutral_gate/error.hpp"
#include "neutral_gate/feature_codec.hpp"
#include "neutral_gate/forest.hpp"
#include "neutral_gate/model.hpp"
#include "neutral_gate/neutrality.hpp"
#include "neutral_gate/parallel.hpp"
#include "neutral_gate/svm.hpp"
#include "neutral_gate/synthetic.hpp"

namespace ngate {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

/// Sub-seed streams derived from --seed.
enum SeedStream : std::uint64_t { kBalanceStream = 1, kSplitStream = 2, kLearnerStream = 3 };

class Summary {
 public:
  explicit Summary(std::ostream& out) : out_(out) {}
  Summary& kv(std::string_view key, std::string_view value) {
    out_ << key << '=' << value << '\n';
    return *this;
  }
  Summary& kv(std::string_view key, const char* value) { return kv(key, std::string_view(value)); }
  Summary& kv(std::string_view key, double value) { return kv(key, csv::format_fixed9(value)); }
  Summary& kv(std::string_view key, std::size_t value) { return kv(key, std::to_string(value)); }
  Summary& kv(std::string_view key, std::uint32_t value) { return kv(key, std::to_string(value)); }
  Summary& kv(std::string_view key, unsigned long long value) { return kv(key, std::to_string(value)); }
  Summary& kv(std::string_view key, bool value) { return kv(key, value ? "true" : "false"); }

 private:
  std::ostream& out_;
};

struct TrainArgs {
  std::string manifest;
  std::string features;
  std::string combo;
  std::string model;
  std::string out;
  double validation_fraction = 0.30;
  bool balance_per_dataset = false;
  SvmConfig svm;
  ForestConfig forest;
  std::string forest_stop = "delta";
  BoostConfig boost;
};

struct ScoreArgs {
  std::string model;
  std::string manifest;
  std::string features;
  std::string out;
  std::string combo;
};

struct DetArgs {
  std::string scores;
  std::string manifest;
  std::string out;
};

struct EdcArgs {
  std::string scores;
  std::string comparisons;
  std::string out;
  double d_max = 0.20;
  double grid_step = 0.01;
  std::optional<double> threshold;
  std::optional<double> starting_fnmr;
  std::string ties = "groups";
};

struct FlowArgs {
  std::string scores;
  std::string manifest;
  std::string out;
  double d_max = 0.50;
  double grid_step = 0.01;
};

struct SynthArgs {
  std::string out;
  std::size_t subjects = 24;
  std::size_t per_subject = 6;
  double neutral_share = 0.4;
  std::string dataset = "synthetic";
};

const std::vector<std::string> kComboNames{"hse1", "hse2", "hse1c", "hse2c", "hse12", "hse12c"};

double accuracy(const TrainedClassifier& model, const TrainingSet& set) {
  if (set.size() == 0) return 0.0;
  const auto conf = predict_confidences(model, set.x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i) hits += ((conf[i] >= 0.5 ? 1 : -1) == set.y[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(set.size());
}

std::unordered_map<std::string, double> confidence_map(const std::vector<NeutralityQuality>& scores) {
  std::unordered_map<std::string, double> map;
  for (const auto& s : scores) map.emplace(s.sample_id, s.confidence);
  return map;
}

int cmd_train(const TrainArgs& a, std::uint64_t seed, std::ostream& out) {
  const auto scheme = *parse_scheme(a.combo);
  const auto kind = *parse_model_kind(a.model);
  SvmConfig svm = a.svm;
  ForestConfig forest = a.forest;
  forest.seed = mix_seed(seed, kLearnerStream);
  forest.stop_rule = a.forest_stop == "absolute" ? OobStopRule::kAbsolute : OobStopRule::kDelta;
  BoostConfig boost = a.boost;
  boost.seed = mix_seed(seed, kLearnerStream);
  if (!(a.validation_fraction > 0.0 && a.validation_fraction < 1.0)) {
    throw Error(ErrorKind::kConfig, "--validation-fraction must lie strictly between 0 and 1");
  }
  switch (kind) {
    case ModelKind::kSvm: svm.validate(); break;
    case ModelKind::kRandomForest: forest.validate(); break;
    case ModelKind::kAdaBoost: boost.validate(); break;
  }

  auto records = load_records(a.manifest, a.features);
  const std::size_t n_records = records.size();
  auto samples = binarize(std::move(records));
  samples = a.balance_per_dataset ? balance_per_dataset(std::move(samples), mix_seed(seed, kBalanceStream))
                                  : balance(std::move(samples), mix_seed(seed, kBalanceStream));
  const std::size_t n_balanced = samples.size();
  auto split = split_identity_disjoint(std::move(samples), {a.validation_fraction, mix_seed(seed, kSplitStream)});
  const auto train = make_training_set(split.train, scheme);
  const auto validation = make_training_set(split.validation, scheme);

  Summary s(out);
  s.kv("command", "train").kv("model", a.model).kv("combo", a.combo).kv("seed", seed);
  s.kv("records", n_records).kv("balanced", n_balanced);
  s.kv("balance_mode", a.balance_per_dataset ? "per_dataset" : "global");
  s.kv("validation_fraction", a.validation_fraction);
  s.kv("train_samples", train.size()).kv("validation_samples", validation.size());

  TrainedClassifier model;
  switch (kind) {
    case ModelKind::kSvm: {
      SvmTrainReport report;
      model = train_svm(train, validation, svm, &report);
      s.kv("svm_c", svm.c).kv("svm_gamma", svm.gamma).kv("svm_kkt_tolerance", svm.kkt_tolerance);
      s.kv("svm_gap_tolerance", svm.gap_tolerance).kv("svm_max_passes", svm.max_passes);
      s.kv("support_vectors", report.support_vectors).kv("smo_iterations", report.solution.iterations);
      s.kv("smo_violation_gap", report.solution.violation_gap).kv("smo_converged", report.solution.converged);
      s.kv("dual_objective", report.solution.dual_objective);
      s.kv("platt_on_validation", report.calibrated_on_validation);
      const auto& m = std::get<SvmModel>(model.payload);
      s.kv("platt_a", m.platt_a).kv("platt_b", m.platt_b);
      break;
    }
    case ModelKind::kRandomForest: {
      ForestTrainReport report;
      model = train_forest(train, forest, &report);
      s.kv("rf_max_trees", forest.max_trees).kv("rf_oob_epsilon", forest.oob_epsilon);
      s.kv("rf_stop_rule", a.forest_stop).kv("rf_active_var_count", forest.active_var_count);
      s.kv("rf_min_sample_count", forest.min_sample_count).kv("rf_max_depth", forest.max_depth);
      s.kv("trees", std::get<ForestModel>(model.payload).trees.size());
      s.kv("stopped_by_epsilon", report.stopped_by_epsilon);
      if (!report.oob_errors.empty()) s.kv("oob_error", report.oob_errors.back());
      break;
    }
    case ModelKind::kAdaBoost: {
      BoostTrainReport report;
      model = train_boost(train, boost, &report);
      s.kv("boost_weak_count", boost.weak_count).kv("boost_weight_trim_rate", boost.weight_trim_rate);
      s.kv("boost_min_sample_count", boost.min_sample_count).kv("boost_max_depth", boost.max_depth);
      s.kv("trees", std::get<BoostModel>(model.payload).trees.size());
      const char* stop = report.stop == BoostStop::kWeakCount        ? "weak_count"
                         : report.stop == BoostStop::kPerfectLearner ? "perfect_learner"
                                                                      : "no_better_than_chance";
      s.kv("stop_reason", stop);
      break;
    }
  }
  save_model(model, a.out);
  s.kv("train_accuracy", accuracy(model, train)).kv("validation_accuracy", accuracy(model, validation));
  s.kv("out", a.out);
  return kExitOk;
}

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  const auto model = load_model(a.model);
  if (!a.combo.empty() && model.space.scheme != parse_scheme(a.combo)) {
    throw Error(ErrorKind::kData, "scheme mismatch: model uses " +
                                      std::string(model.space.scheme ? to_string(*model.space.scheme) : "raw vectors") +
                                      ", --combo requested " + a.combo);
  }
  const auto records = load_records(a.manifest, a.features);
  const auto scores = score_samples(model, records);
  write_scores(a.out, scores);
  Summary(out).kv("command", "score").kv("model_kind", to_string(model.kind()))
      .kv("combo", to_string(*model.space.scheme)).kv("samples", scores.size()).kv("out", a.out);
  return kExitOk;
}

int cmd_eval_det(const DetArgs& a, std::ostream& out) {
  const auto conf = confidence_map(read_scores(a.scores));
  const auto manifest = read_manifest(a.manifest);
  std::vector<ScoredLabel> scored;
  scored.reserve(manifest.size());
  std::size_t neutral = 0;
  for (const auto& m : manifest) {
    const auto it = conf.find(m.sample_id);
    if (it == conf.end()) throw Error(ErrorKind::kData, "no score for sample '" + m.sample_id + "'");
    scored.push_back({it->second, binary_label(m.expression)});
    neutral += binary_label(m.expression) == BinaryLabel::kNeutral ? 1 : 0;
  }
  const auto curve = det_curve(scored);
  write_det_csv(a.out, curve);
  Summary(out).kv("command", "eval-det").kv("eer", curve.eer).kv("neutral", neutral)
      .kv("non_neutral", scored.size() - neutral).kv("points", curve.points.size()).kv("out", a.out);
  return kExitOk;
}

int cmd_eval_edc(const EdcArgs& a, std::ostream& out) {
  EdcConfig cfg;
  cfg.d_max = a.d_max;
  cfg.grid_step = a.grid_step;
  if (a.threshold) {
    cfg.threshold = FixedThreshold{*a.threshold};
  } else {
    cfg.threshold = StartingFnmr{*a.starting_fnmr};
  }
  cfg.ties = a.ties == "stable" ? TiePolicy::kStableOrder : TiePolicy::kWholeGroups;
  cfg.validate();

  const auto conf = confidence_map(read_scores(a.scores));
  const auto comparisons = read_comparisons(a.comparisons);
  const auto curve = edc_curve(conf, comparisons, cfg);
  write_edc_csv(a.out, curve);
  Summary s(out);
  s.kv("command", "eval-edc").kv("pauc", curve.pauc).kv("pauc_normalized", curve.pauc_normalized);
  s.kv("threshold", curve.threshold);
  s.kv("threshold_mode", a.threshold ? "fixed_threshold" : "starting_fnmr");
  if (a.starting_fnmr) s.kv("starting_fnmr", *a.starting_fnmr);
  s.kv("fnmr_at_zero", curve.fnmr_values.front()).kv("fnmr_at_end", curve.fnmr_values.back());
  s.kv("d_max", a.d_max).kv("grid_step", a.grid_step).kv("ties", a.ties);
  s.kv("comparisons", curve.comparisons).kv("truncated", curve.truncated).kv("out", a.out);
  return kExitOk;
}

int cmd_class_flow(const FlowArgs& a, std::ostream& out) {
  EdcConfig grid_check;
  grid_check.d_max = a.d_max;
  grid_check.grid_step = a.grid_step;
  grid_check.validate();
  const auto conf = confidence_map(read_scores(a.scores));
  const auto manifest = read_manifest(a.manifest);
  const auto grid = discard_grid(a.d_max, a.grid_step);
  const auto flow = class_flow(conf, manifest, grid);
  write_flow_csv(a.out, flow);
  Summary s(out);
  s.kv("command", "class-flow").kv("samples", manifest.size()).kv("d_max", a.d_max).kv("grid_step", a.grid_step);
  s.kv("points", flow.discard_fractions.size());
  for (std::size_t l = 0; l < flow.labels.size(); ++l) {
    s.kv("proportion_at_zero." + std::string(to_string(flow.labels[l])), flow.proportions.front()[l]);
    s.kv("proportion_at_end." + std::string(to_string(flow.labels[l])), flow.proportions.back()[l]);
  }
  s.kv("out", a.out);
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::uint64_t seed, std::ostream& out) {
  SyntheticSpec spec;
  spec.subjects = a.subjects;
  spec.samples_per_subject = a.per_subject;
  spec.neutral_share = a.neutral_share;
  spec.dataset_name = a.dataset;
  spec.seed = seed;
  const auto corpus = make_synthetic_corpus(spec);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_records(dir / "manifest.jsonl", dir / "features", corpus.records);
  write_comparisons(dir / "comparisons.csv", corpus.comparisons);
  Summary(out).kv("command", "synth").kv("seed", seed).kv("records", corpus.records.size())
      .kv("comparisons", corpus.comparisons.size()).kv("out", a.out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expression-neutrality quality estimation: train, score and evaluate", "neutral-gate"};
  app.require_subcommand(1);
  app.allow_config_extras(false);
  app.set_config("--config", "", "Config file (TOML/INI) with the same keys as the flags; flags win");
  std::uint64_t seed = 42;
  app.add_option("--seed", seed, "Master seed")->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a neutral vs. non-neutral classifier");
  t->add_option("--manifest", train.manifest, "Manifest (JSON Lines)")->required();
  t->add_option("--features", train.features, "Directory with hse1/hse2/softmax1/softmax2 .feat files")->required();
  t->add_option("--combo", train.combo, "Feature combination")->required()->check(CLI::IsMember(kComboNames));
  t->add_option("--model", train.model, "Classifier")->required()->check(CLI::IsMember({"svm", "rf", "adaboost"}));
  t->add_option("--out", train.out, "Model file to write")->required();
  t->add_option("--validation-fraction", train.validation_fraction)->capture_default_str();
  t->add_flag("--balance-per-dataset", train.balance_per_dataset, "Balance classes inside each dataset first");
  t->add_option("--svm-c", train.svm.c)->capture_default_str();
  t->add_option("--svm-gamma", train.svm.gamma)->capture_default_str();
  t->add_option("--svm-kkt-tol", train.svm.kkt_tolerance)->capture_default_str();
  t->add_option("--svm-gap-tol", train.svm.gap_tolerance)->capture_default_str();
  t->add_option("--svm-max-passes", train.svm.max_passes)->capture_default_str();
  t->add_option("--svm-cache-bytes", train.svm.cache_budget_bytes)->capture_default_str();
  t->add_option("--rf-max-trees", train.forest.max_trees)->capture_default_str();
  t->add_option("--rf-oob-eps", train.forest.oob_epsilon)->capture_default_str();
  t->add_option("--rf-stop-rule", train.forest_stop)->check(CLI::IsMember({"delta", "absolute"}))->capture_default_str();
  t->add_option("--rf-active-vars", train.forest.active_var_count)->capture_default_str();
  t->add_option("--rf-min-samples", train.forest.min_sample_count)->capture_default_str();
  t->add_option("--rf-max-depth", train.forest.max_depth)->capture_default_str();
  t->add_option("--boost-weak-count", train.boost.weak_count)->capture_default_str();
  t->add_option("--boost-trim-rate", train.boost.weight_trim_rate)->capture_default_str();
  t->add_option("--boost-min-samples", train.boost.min_sample_count)->capture_default_str();
  t->add_option("--boost-max-depth", train.boost.max_depth)->capture_default_str();

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "Write neutrality confidence and quality per sample");
  sc->add_option("--model", score.model)->required();
  sc->add_option("--manifest", score.manifest)->required();
  sc->add_option("--features", score.features)->required();
  sc->add_option("--out", score.out, "scores.csv")->required();
  sc->add_option("--combo", score.combo, "Assert the model's combination scheme")->check(CLI::IsMember(kComboNames));

  DetArgs det;
  auto* d = app.add_subcommand("eval-det", "DET curve and EER of neutral vs. non-neutral classification");
  d->add_option("--scores", det.scores)->required();
  d->add_option("--manifest", det.manifest)->required();
  d->add_option("--out", det.out, "det.csv")->required();

  EdcArgs edc;
  auto* e = app.add_subcommand("eval-edc", "Error-versus-discard curve and partial AUC");
  e->add_option("--scores", edc.scores)->required();
  e->add_option("--comparisons", edc.comparisons)->required();
  e->add_option("--out", edc.out, "edc.csv")->required();
  e->add_option("--dmax", edc.d_max)->capture_default_str();
  e->add_option("--grid-step", edc.grid_step)->capture_default_str();
  auto* thr = e->add_option("--threshold", edc.threshold, "Fixed similarity threshold");
  auto* f0 = e->add_option("--starting-fnmr", edc.starting_fnmr, "Solve the threshold for this FNMR at zero discard");
  thr->excludes(f0);
  f0->excludes(thr);
  e->add_option("--ties", edc.ties, "Quality ties: groups (kept together) or stable (id order)")
      ->check(CLI::IsMember({"groups", "stable"}))
      ->capture_default_str();

  FlowArgs flow;
  auto* f = app.add_subcommand("class-flow", "Expression-class proportions while discarding low-confidence samples");
  f->add_option("--scores", flow.scores)->required();
  f->add_option("--manifest", flow.manifest)->required();
  f->add_option("--out", flow.out, "flow.csv")->required();
  f->add_option("--dmax", flow.d_max)->capture_default_str();
  f->add_option("--grid-step", flow.grid_step)->capture_default_str();

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "Write a synthetic feature corpus (manifest, .feat files, comparisons)");
  sy->add_option("--out", synth.out, "Output directory")->required();
  sy->add_option("--subjects", synth.subjects)->capture_default_str();
  sy->add_option("--per-subject", synth.per_subject)->capture_default_str();
  sy->add_option("--neutral-share", synth.neutral_share)->capture_default_str();
  sy->add_option("--dataset-name", synth.dataset)->capture_default_str();

  try {
    app.parse(argc, argv);
    if (e->parsed() && !edc.threshold && !edc.starting_fnmr) {
      throw CLI::ValidationError("eval-edc needs one of --threshold or --starting-fnmr");
    }
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (!apply_thread_env()) {
    err << "error: NEUTRAL_GATE_THREADS must be a non-negative integer\n";
    return kExitUsage;
  }

  try {
    if (t->parsed()) return cmd_train(train, seed, out);
    if (sc->parsed()) return cmd_score(score, out);
    if (d->parsed()) return cmd_eval_det(det, out);
    if (e->parsed()) return cmd_eval_edc(edc, out);
    if (f->parsed()) return cmd_class_flow(flow, out);
    if (sy->parsed()) return cmd_synth(synth, seed, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return ex.kind() == ErrorKind::kConfig ? kExitUsage : kExitData;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ngate
