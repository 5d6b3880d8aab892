#include "neutral_gate/feature_codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "neutral_gate/error.hpp"

namespace ngate {

namespace {

constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIo, "read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open for writing " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

struct ExpressionName {
  Expression value;
  std::string_view name;
};

constexpr std::array<ExpressionName, 9> kExpressionNames{{
    {Expression::kAnger, "anger"},
    {Expression::kContempt, "contempt"},
    {Expression::kDisgust, "disgust"},
    {Expression::kFear, "fear"},
    {Expression::kHappiness, "happiness"},
    {Expression::kNeutral, "neutral"},
    {Expression::kSadness, "sadness"},
    {Expression::kSurprise, "surprise"},
    {Expression::kNonNeutralUnspecified, "non_neutral_unspecified"},
}};

constexpr std::array<std::string_view, 6> kSchemeNames{"hse1", "hse2", "hse1c", "hse2c", "hse12", "hse12c"};

void check_dim(std::string_view what, std::size_t got, std::size_t want) {
  if (got != want) {
    throw Error(ErrorKind::kData, std::string(what) + " has " + std::to_string(got) +
                                      " entries, expected " + std::to_string(want));
  }
}

void check_softmax(std::string_view what, std::span<const float> p) {
  double sum = 0.0;
  for (float v : p) {
    if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorKind::kData, std::string(what) + " entry outside [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-3) {
    throw Error(ErrorKind::kData, std::string(what) + " sums to " + std::to_string(sum) + ", not 1");
  }
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kData: return "data";
    case ErrorKind::kModel: return "model";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

std::vector<std::uint8_t> encode_matrix(const FloatMatrix& matrix) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (matrix.rows > kMax || matrix.cols > kMax) {
    throw Error(ErrorKind::kData, "matrix dimensions exceed 32-bit header fields");
  }
  if (matrix.values.size() != matrix.rows * matrix.cols) {
    throw Error(ErrorKind::kData, "matrix storage does not match rows*cols");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * matrix.values.size());
  out.insert(out.end(), kFeatMagic.begin(), kFeatMagic.end());
  put_u32(out, kFeatVersion);
  put_u32(out, static_cast<std::uint32_t>(matrix.rows));
  put_u32(out, static_cast<std::uint32_t>(matrix.cols));
  for (float v : matrix.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FloatMatrix decode_matrix(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw Error(ErrorKind::kFormat, "truncated .feat header");
  if (!std::equal(kFeatMagic.begin(), kFeatMagic.end(), bytes.begin())) {
    throw Error(ErrorKind::kFormat, "bad .feat magic");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kFeatVersion) {
    throw Error(ErrorKind::kFormat, "unsupported .feat version " + std::to_string(version));
  }
  const std::uint64_t rows = get_u32(bytes, 8);
  const std::uint64_t cols = get_u32(bytes, 12);
  const std::uint64_t expected = kHeaderBytes + 4 * rows * cols;
  if (bytes.size() != expected) {
    throw Error(ErrorKind::kFormat, "truncated .feat payload: " + std::to_string(bytes.size()) +
                                        " bytes, header implies " + std::to_string(expected));
  }
  FloatMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  }
  return m;
}

void write_matrix(const std::filesystem::path& path, const FloatMatrix& matrix) {
  write_file(path, encode_matrix(matrix));
}

FloatMatrix read_matrix(const std::filesystem::path& path) {
  try {
    return decode_matrix(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string_view to_string(Expression e) {
  for (const auto& n : kExpressionNames) {
    if (n.value == e) return n.name;
  }
  return "unknown";
}

std::optional<Expression> parse_expression(std::string_view name) {
  for (const auto& n : kExpressionNames) {
    if (n.name == name) return n.value;
  }
  return std::nullopt;
}

std::string_view to_string(ComboScheme s) { return kSchemeNames[static_cast<std::size_t>(s)]; }

std::optional<ComboScheme> parse_scheme(std::string_view name) {
  for (std::size_t i = 0; i < kSchemeNames.size(); ++i) {
    if (kSchemeNames[i] == name) return static_cast<ComboScheme>(i);
  }
  return std::nullopt;
}

void validate_record(const FeatureRecord& record) {
  check_dim("hse1", record.hse1.size(), kHse1Dim);
  check_dim("hse2", record.hse2.size(), kHse2Dim);
  check_dim("softmax1", record.softmax1.size(), kSoftmaxDim);
  check_dim("softmax2", record.softmax2.size(), kSoftmaxDim);
  check_softmax("softmax1", record.softmax1);
  check_softmax("softmax2", record.softmax2);
}

std::vector<SampleMeta> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open manifest " + path.string());
  std::vector<SampleMeta> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, where + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::kFormat, where + "expected a JSON object");
    SampleMeta m;
    try {
      const auto row = j.at("row").get<std::int64_t>();
      if (row < 0 || row > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorKind::kFormat, where + "row index out of range");
      }
      m.row = static_cast<std::uint32_t>(row);
      m.sample_id = j.at("sample_id").get<std::string>();
      m.subject_id = j.at("subject_id").get<std::string>();
      m.dataset_name = j.at("dataset_name").get<std::string>();
      const auto label = j.at("expression_label").get<std::string>();
      const auto e = parse_expression(label);
      if (!e) throw Error(ErrorKind::kFormat, where + "unknown expression label '" + label + "'");
      m.expression = *e;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, where + e.what());
    }
    if (j.size() != 5) throw Error(ErrorKind::kFormat, where + "unexpected keys in manifest record");
    entries.push_back(std::move(m));
  }
  std::unordered_set<std::string> seen;
  for (const auto& m : entries) {
    if (!seen.insert(m.sample_id).second) {
      throw Error(ErrorKind::kData, "duplicate sample_id '" + m.sample_id + "' in " + path.string());
    }
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, std::span<const SampleMeta> entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open for writing " + path.string());
  for (const auto& m : entries) {
    // ordered_json keeps the documented key order in the file
    nlohmann::ordered_json j;
    j["row"] = m.row;
    j["sample_id"] = m.sample_id;
    j["subject_id"] = m.subject_id;
    j["dataset_name"] = m.dataset_name;
    j["expression_label"] = std::string(to_string(m.expression));
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

std::vector<FeatureRecord> load_records(const std::filesystem::path& manifest,
                                        const std::filesystem::path& feature_dir) {
  auto entries = read_manifest(manifest);
  const auto hse1 = read_matrix(feature_dir / "hse1.feat");
  const auto hse2 = read_matrix(feature_dir / "hse2.feat");
  const auto sm1 = read_matrix(feature_dir / "softmax1.feat");
  const auto sm2 = read_matrix(feature_dir / "softmax2.feat");

  const std::size_t rows = hse1.rows;
  if (hse2.rows != rows || sm1.rows != rows || sm2.rows != rows) {
    throw Error(ErrorKind::kData, "row count mismatch across feature matrices (" +
                                      std::to_string(hse1.rows) + "/" + std::to_string(hse2.rows) + "/" +
                                      std::to_string(sm1.rows) + "/" + std::to_string(sm2.rows) + ")");
  }
  if (entries.size() != rows) {
    throw Error(ErrorKind::kData, "manifest has " + std::to_string(entries.size()) +
                                      " records but feature matrices have " + std::to_string(rows) + " rows");
  }
  if (rows > 0) {
    check_dim("hse1.feat columns", hse1.cols, kHse1Dim);
    check_dim("hse2.feat columns", hse2.cols, kHse2Dim);
    check_dim("softmax1.feat columns", sm1.cols, kSoftmaxDim);
    check_dim("softmax2.feat columns", sm2.cols, kSoftmaxDim);
  }

  std::vector<FeatureRecord> records;
  records.reserve(entries.size());
  for (auto& m : entries) {
    if (m.row >= rows) {
      throw Error(ErrorKind::kData, "row index " + std::to_string(m.row) + " out of range for sample '" +
                                        m.sample_id + "'");
    }
    FeatureRecord r;
    const auto h1 = hse1.row(m.row);
    const auto h2 = hse2.row(m.row);
    const auto s1 = sm1.row(m.row);
    const auto s2 = sm2.row(m.row);
    r.hse1.assign(h1.begin(), h1.end());
    r.hse2.assign(h2.begin(), h2.end());
    r.softmax1.assign(s1.begin(), s1.end());
    r.softmax2.assign(s2.begin(), s2.end());
    r.meta = std::move(m);
    try {
      validate_record(r);
    } catch (const Error& e) {
      throw Error(e.kind(), "sample '" + r.meta.sample_id + "': " + e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

void save_records(const std::filesystem::path& manifest, const std::filesystem::path& feature_dir,
                  std::span<const FeatureRecord> records) {
  FloatMatrix hse1(records.size(), kHse1Dim), hse2(records.size(), kHse2Dim);
  FloatMatrix sm1(records.size(), kSoftmaxDim), sm2(records.size(), kSoftmaxDim);
  std::vector<SampleMeta> entries;
  entries.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    validate_record(r);
    std::copy(r.hse1.begin(), r.hse1.end(), hse1.row(i).begin());
    std::copy(r.hse2.begin(), r.hse2.end(), hse2.row(i).begin());
    std::copy(r.softmax1.begin(), r.softmax1.end(), sm1.row(i).begin());
    std::copy(r.softmax2.begin(), r.softmax2.end(), sm2.row(i).begin());
    SampleMeta m = r.meta;
    m.row = static_cast<std::uint32_t>(i);
    entries.push_back(std::move(m));
  }
  std::filesystem::create_directories(feature_dir);
  write_matrix(feature_dir / "hse1.feat", hse1);
  write_matrix(feature_dir / "hse2.feat", hse2);
  write_matrix(feature_dir / "softmax1.feat", sm1);
  write_matrix(feature_dir / "softmax2.feat", sm2);
  write_manifest(manifest, entries);
}

ComboVector combine(const FeatureRecord& record, ComboScheme scheme) {
  auto one = combine_all(std::span<const FeatureRecord>(&record, 1), scheme);
  return ComboVector{scheme, std::move(one.values)};
}

FloatMatrix combine_all(std::span<const FeatureRecord> records, ComboScheme scheme) {
  FloatMatrix out(records.size(), scheme_dimension(scheme));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    std::vector<const std::vector<float>*> parts;
    switch (scheme) {
      case ComboScheme::kHse1: parts = {&r.hse1}; break;
      case ComboScheme::kHse2: parts = {&r.hse2}; break;
      case ComboScheme::kHse1C: parts = {&r.hse1, &r.softmax1}; break;
      case ComboScheme::kHse2C: parts = {&r.hse2, &r.softmax2}; break;
      case ComboScheme::kHse12: parts = {&r.hse1, &r.hse2}; break;
      case ComboScheme::kHse12C: parts = {&r.hse1, &r.hse2, &r.softmax1, &r.softmax2}; break;
    }
    check_dim("hse1", r.hse1.size(), kHse1Dim);
    check_dim("hse2", r.hse2.size(), kHse2Dim);
    check_dim("softmax1", r.softmax1.size(), kSoftmaxDim);
    check_dim("softmax2", r.softmax2.size(), kSoftmaxDim);
    auto dst = out.row(i).begin();
    for (const auto* p : parts) dst = std::copy(p->begin(), p->end(), dst);
  }
  return out;
}

}  // namespace ngate
