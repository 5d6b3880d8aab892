#include "neutral_gate/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include <zlib.h>

#include "byte_io.hpp"
#include "neutral_gate/error.hpp"
#include "neutral_gate/kernels.hpp"

namespace ngate {

namespace {

constexpr std::array<std::uint8_t, 4> kModelMagic{'N', 'G', 'M', 'D'};
constexpr std::size_t kContainerHeader = 4 + 4 + 1 + 1 + 8;

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_tree(detail::ByteWriter& w, const DecisionTree& tree) {
  w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
  for (const auto& n : tree.nodes) {
    w.i32(n.feature);
    w.f64(n.threshold);
    w.u32(n.left);
    w.u32(n.right);
    w.u8(static_cast<std::uint8_t>(n.vote));
    w.u32(n.sample_count);
  }
}

DecisionTree read_tree(detail::ByteReader& r, std::uint32_t dim) {
  DecisionTree tree;
  const auto count = r.u32();
  r.require(static_cast<std::size_t>(count) * 25);
  tree.nodes.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& n = tree.nodes[i];
    n.feature = r.i32();
    n.threshold = r.f64();
    n.left = r.u32();
    n.right = r.u32();
    n.vote = static_cast<std::int8_t>(r.u8());
    n.sample_count = r.u32();
    if (n.vote != 1 && n.vote != -1) throw Error(ErrorKind::kModel, "tree leaf vote must be +1 or -1");
    if (n.feature >= 0) {
      // children are always allocated after their parent, which also rules out cycles
      if (static_cast<std::uint32_t>(n.feature) >= dim || n.left <= i || n.right <= i || n.left >= count ||
          n.right >= count) {
        throw Error(ErrorKind::kModel, "malformed tree node " + std::to_string(i));
      }
    } else if (n.feature != -1) {
      throw Error(ErrorKind::kModel, "malformed tree node " + std::to_string(i));
    }
  }
  if (count == 0) throw Error(ErrorKind::kModel, "empty tree");
  return tree;
}

std::vector<std::uint8_t> encode_payload(const TrainedClassifier& model) {
  detail::ByteWriter w;
  w.u32(model.space.dim);
  if (const auto* svm = std::get_if<SvmModel>(&model.payload)) {
    w.f64(svm->c);
    w.f64(svm->gamma);
    w.u32(static_cast<std::uint32_t>(svm->support_vectors.rows));
    for (float v : svm->support_vectors.values) w.f32(v);
    for (double c : svm->dual_coefs) w.f64(c);
    w.f64(svm->bias);
    w.f64(svm->platt_a);
    w.f64(svm->platt_b);
  } else if (const auto* forest = std::get_if<ForestModel>(&model.payload)) {
    w.u32(forest->max_trees);
    w.u32(forest->max_depth);
    w.u32(forest->min_sample_count);
    w.u32(static_cast<std::uint32_t>(forest->trees.size()));
    for (const auto& t : forest->trees) write_tree(w, t);
  } else {
    const auto& boost = std::get<BoostModel>(model.payload);
    w.u32(boost.weak_count);
    w.u32(boost.max_depth);
    w.u32(boost.min_sample_count);
    w.u32(static_cast<std::uint32_t>(boost.trees.size()));
    for (std::size_t t = 0; t < boost.trees.size(); ++t) {
      w.f64(boost.alphas[t]);
      write_tree(w, boost.trees[t]);
    }
  }
  return std::move(w.buffer());
}

TrainedClassifier decode_payload(std::span<const std::uint8_t> payload, ModelKind kind,
                                 std::optional<ComboScheme> scheme) {
  detail::ByteReader r(payload, ErrorKind::kModel);
  TrainedClassifier model;
  model.space.scheme = scheme;
  model.space.dim = r.u32();
  switch (kind) {
    case ModelKind::kSvm: {
      SvmModel svm;
      svm.c = r.f64();
      svm.gamma = r.f64();
      const auto n_sv = r.u32();
      r.require(static_cast<std::size_t>(n_sv) * model.space.dim * 4);
      svm.support_vectors = FloatMatrix(n_sv, model.space.dim);
      for (auto& v : svm.support_vectors.values) v = r.f32();
      r.require(static_cast<std::size_t>(n_sv) * 8);
      svm.dual_coefs.resize(n_sv);
      for (auto& c : svm.dual_coefs) c = r.f64();
      svm.bias = r.f64();
      svm.platt_a = r.f64();
      svm.platt_b = r.f64();
      model.payload = std::move(svm);
      break;
    }
    case ModelKind::kRandomForest: {
      ForestModel forest;
      forest.max_trees = r.u32();
      forest.max_depth = r.u32();
      forest.min_sample_count = r.u32();
      const auto n = r.u32();
      for (std::uint32_t t = 0; t < n; ++t) forest.trees.push_back(read_tree(r, model.space.dim));
      model.payload = std::move(forest);
      break;
    }
    case ModelKind::kAdaBoost: {
      BoostModel boost;
      boost.weak_count = r.u32();
      boost.max_depth = r.u32();
      boost.min_sample_count = r.u32();
      const auto n = r.u32();
      for (std::uint32_t t = 0; t < n; ++t) {
        boost.alphas.push_back(r.f64());
        boost.trees.push_back(read_tree(r, model.space.dim));
      }
      model.payload = std::move(boost);
      break;
    }
  }
  if (r.remaining() != 0) throw Error(ErrorKind::kModel, "trailing bytes in model payload");
  return model;
}

void check_dim(const TrainedClassifier& model, std::size_t got) {
  if (got != model.space.dim) {
    throw Error(ErrorKind::kData, "feature dimension " + std::to_string(got) + " does not match model dimension " +
                                      std::to_string(model.space.dim));
  }
}

double confidence_unchecked(const TrainedClassifier& model, std::span<const float> x) {
  if (const auto* svm = std::get_if<SvmModel>(&model.payload)) {
    const double f = svm->decision_value(x);
    return logistic(-(svm->platt_a * f + svm->platt_b));
  }
  if (const auto* forest = std::get_if<ForestModel>(&model.payload)) {
    std::size_t neutral_votes = 0;
    for (const auto& t : forest->trees) neutral_votes += t.predict(x) > 0 ? 1 : 0;
    return static_cast<double>(neutral_votes) / static_cast<double>(forest->trees.size());
  }
  return logistic(2.0 * std::get<BoostModel>(model.payload).normalized_margin(x));
}

}  // namespace

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kSvm: return "svm";
    case ModelKind::kRandomForest: return "rf";
    case ModelKind::kAdaBoost: return "adaboost";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  if (name == "svm") return ModelKind::kSvm;
  if (name == "rf") return ModelKind::kRandomForest;
  if (name == "adaboost") return ModelKind::kAdaBoost;
  return std::nullopt;
}

void TrainingSet::validate() const {
  if (x.cols != space.dim) {
    throw Error(ErrorKind::kData, "training matrix has " + std::to_string(x.cols) + " columns, feature space has " +
                                      std::to_string(space.dim));
  }
  if (space.scheme && scheme_dimension(*space.scheme) != space.dim) {
    throw Error(ErrorKind::kData, "feature space dimension does not match its combination scheme");
  }
  if (x.values.size() != x.rows * x.cols || y.size() != x.rows) {
    throw Error(ErrorKind::kData, "training labels and rows disagree");
  }
  for (auto label : y) {
    if (label != 1 && label != -1) throw Error(ErrorKind::kData, "labels must be +1 or -1");
  }
}

bool TrainingSet::has_both_classes() const {
  const bool pos = std::find(y.begin(), y.end(), std::int8_t{1}) != y.end();
  const bool neg = std::find(y.begin(), y.end(), std::int8_t{-1}) != y.end();
  return pos && neg;
}

TrainingSet make_training_set(std::span<const LabeledSample> samples, ComboScheme scheme) {
  TrainingSet set;
  set.space = FeatureSpace::of(scheme);
  set.x = FloatMatrix(samples.size(), scheme_dimension(scheme));
  set.y.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto v = combine(samples[i].record, scheme);
    std::copy(v.values.begin(), v.values.end(), set.x.row(i).begin());
    set.y.push_back(static_cast<std::int8_t>(sign_of(samples[i].label)));
  }
  return set;
}

double SvmModel::decision_value(std::span<const float> x) const {
  double f = bias;
  for (std::size_t i = 0; i < support_vectors.rows; ++i) {
    f += dual_coefs[i] * std::exp(-gamma * kernels::squared_distance(support_vectors.row(i), x));
  }
  return f;
}

double BoostModel::normalized_margin(std::span<const float> x) const {
  double vote = 0.0, total = 0.0;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    vote += alphas[t] * trees[t].predict(x);
    total += alphas[t];
  }
  return total > 0.0 ? vote / total : 0.0;
}

double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Confidence predict_confidence(const TrainedClassifier& model, const ComboVector& x) {
  if (model.space.scheme != x.scheme) {
    throw Error(ErrorKind::kData, "model expects scheme " +
                                      std::string(model.space.scheme ? to_string(*model.space.scheme) : "raw") +
                                      ", got " + std::string(to_string(x.scheme)));
  }
  return predict_confidence(model, std::span<const float>(x.values));
}

Confidence predict_confidence(const TrainedClassifier& model, std::span<const float> x) {
  check_dim(model, x.size());
  return {confidence_unchecked(model, x)};
}

std::vector<double> predict_confidences(const TrainedClassifier& model, const FloatMatrix& batch) {
  check_dim(model, batch.cols);
  std::vector<double> out(batch.rows);
  const auto n = static_cast<std::int64_t>(batch.rows);
#pragma omp parallel for schedule(dynamic, 16) if (n > 32)
  for (std::int64_t i = 0; i < n; ++i) out[i] = confidence_unchecked(model, batch.row(i));
  return out;
}

namespace reference {

std::vector<double> predict_confidences(const TrainedClassifier& model, const FloatMatrix& batch) {
  check_dim(model, batch.cols);
  std::vector<double> out(batch.rows);
  for (std::size_t i = 0; i < batch.rows; ++i) out[i] = confidence_unchecked(model, batch.row(i));
  return out;
}

}  // namespace reference

void check_invariants(const TrainedClassifier& model) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kModel, what); };
  if (model.space.scheme && scheme_dimension(*model.space.scheme) != model.space.dim) {
    fail("model dimension does not match its combination scheme");
  }
  auto check_tree = [&](const DecisionTree& t, std::uint32_t max_depth, std::uint32_t min_samples) {
    if (t.depth() > max_depth) fail("tree deeper than max_depth");
    for (const auto& n : t.nodes) {
      if (!n.is_leaf() && n.sample_count < min_samples) fail("node split below min_sample_count");
    }
  };
  if (const auto* svm = std::get_if<SvmModel>(&model.payload)) {
    if (svm->support_vectors.rows == 0) fail("SVM without support vectors");
    if (svm->support_vectors.cols != model.space.dim || svm->dual_coefs.size() != svm->support_vectors.rows) {
      fail("SVM payload shape mismatch");
    }
    if (!(svm->c > 0.0) || !(svm->gamma > 0.0)) fail("SVM hyperparameters must be positive");
    for (double c : svm->dual_coefs) {
      if (!std::isfinite(c) || std::abs(c) > svm->c) fail("SVM dual coefficient outside [-C, C]");
    }
    if (!std::isfinite(svm->bias) || !std::isfinite(svm->platt_a) || !std::isfinite(svm->platt_b)) {
      fail("SVM bias or calibration not finite");
    }
  } else if (const auto* forest = std::get_if<ForestModel>(&model.payload)) {
    if (forest->trees.empty() || forest->trees.size() > forest->max_trees) fail("forest tree count out of range");
    for (const auto& t : forest->trees) check_tree(t, forest->max_depth, forest->min_sample_count);
  } else {
    const auto& boost = std::get<BoostModel>(model.payload);
    if (boost.trees.empty() || boost.trees.size() > boost.weak_count) fail("boost tree count out of range");
    if (boost.alphas.size() != boost.trees.size()) fail("boost weights do not match trees");
    for (double a : boost.alphas) {
      if (!std::isfinite(a)) fail("non-finite boosting weight");
    }
    for (const auto& t : boost.trees) check_tree(t, boost.max_depth, boost.min_sample_count);
  }
}

std::vector<std::uint8_t> serialize_model(const TrainedClassifier& model) {
  check_invariants(model);
  const auto payload = encode_payload(model);
  detail::ByteWriter w;
  w.bytes(kModelMagic);
  w.u32(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(model.kind()));
  w.u8(model.space.scheme ? static_cast<std::uint8_t>(*model.space.scheme) : kNoScheme);
  w.u64(payload.size());
  w.bytes(payload);
  w.u32(crc32_of(payload));
  return std::move(w.buffer());
}

TrainedClassifier deserialize_model(std::span<const std::uint8_t> bytes, std::optional<ModelKind> expected) {
  detail::ByteReader r(bytes, ErrorKind::kModel);
  if (bytes.size() < kContainerHeader || !std::equal(kModelMagic.begin(), kModelMagic.end(), bytes.begin())) {
    throw Error(ErrorKind::kModel, "not a model file (bad magic)");
  }
  r.take(4);
  const auto version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error(ErrorKind::kModel, "unsupported model format version " + std::to_string(version));
  }
  const auto kind_byte = r.u8();
  if (kind_byte > static_cast<std::uint8_t>(ModelKind::kAdaBoost)) {
    throw Error(ErrorKind::kModel, "unknown model kind " + std::to_string(kind_byte));
  }
  const auto kind = static_cast<ModelKind>(kind_byte);
  if (expected && *expected != kind) {
    throw Error(ErrorKind::kModel, "model kind mismatch: file holds " + std::string(to_string(kind)) +
                                       ", expected " + std::string(to_string(*expected)));
  }
  const auto scheme_byte = r.u8();
  std::optional<ComboScheme> scheme;
  if (scheme_byte != kNoScheme) {
    if (scheme_byte > static_cast<std::uint8_t>(ComboScheme::kHse12C)) {
      throw Error(ErrorKind::kModel, "unknown combination scheme " + std::to_string(scheme_byte));
    }
    scheme = static_cast<ComboScheme>(scheme_byte);
  }
  const auto length = r.u64();
  if (r.remaining() < 4 || length != r.remaining() - 4) {
    throw Error(ErrorKind::kModel, "model payload length does not match file size");
  }
  const auto payload = r.take(length);
  const auto stored_crc = r.u32();
  if (crc32_of(payload) != stored_crc) throw Error(ErrorKind::kModel, "model checksum mismatch");

  auto model = decode_payload(payload, kind, scheme);
  check_invariants(model);
  return model;
}

void save_model(const TrainedClassifier& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open for writing " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

TrainedClassifier load_model(const std::filesystem::path& path, std::optional<ModelKind> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open model " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_model(bytes, expected);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace ngate
