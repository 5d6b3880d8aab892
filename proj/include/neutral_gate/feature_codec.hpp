#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ngate {

inline constexpr std::size_t kHse1Dim = 1280;
inline constexpr std::size_t kHse2Dim = 1408;
inline constexpr std::size_t kSoftmaxDim = 8;

/// Row-major single-precision matrix; the in-memory side of a .feat file.
struct FloatMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  FloatMatrix() = default;
  FloatMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}

  std::span<float> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * cols, cols}; }

  bool operator==(const FloatMatrix&) const = default;
};

// .feat container: "FEAT" | u32 version=1 | u32 rows | u32 cols | rows*cols f32,
// everything little-endian, total length exactly 16 + 4*rows*cols.
inline constexpr std::array<char, 4> kFeatMagic{'F', 'E', 'A', 'T'};
inline constexpr std::uint32_t kFeatVersion = 1;

std::vector<std::uint8_t> encode_matrix(const FloatMatrix& matrix);
FloatMatrix decode_matrix(std::span<const std::uint8_t> bytes);

void write_matrix(const std::filesystem::path& path, const FloatMatrix& matrix);
FloatMatrix read_matrix(const std::filesystem::path& path);

enum class Expression : std::uint8_t {
  kAnger,
  kContempt,
  kDisgust,
  kFear,
  kHappiness,
  kNeutral,
  kSadness,
  kSurprise,
  kNonNeutralUnspecified,
};

inline constexpr std::array<Expression, 9> kAllExpressions{
    Expression::kAnger,   Expression::kContempt, Expression::kDisgust,
    Expression::kFear,    Expression::kHappiness, Expression::kNeutral,
    Expression::kSadness, Expression::kSurprise, Expression::kNonNeutralUnspecified};

std::string_view to_string(Expression e);
std::optional<Expression> parse_expression(std::string_view name);

/// Metadata of one sample, as carried by one manifest line.
struct SampleMeta {
  std::uint32_t row = 0;
  std::string sample_id;
  std::string subject_id;
  std::string dataset_name;
  Expression expression = Expression::kNeutral;

  bool operator==(const SampleMeta&) const = default;
};

struct FeatureRecord {
  SampleMeta meta;
  std::vector<float> hse1;
  std::vector<float> hse2;
  std::vector<float> softmax1;
  std::vector<float> softmax2;
};

/// Throws Error(kData) if dimensions are wrong or a softmax vector is not a
/// distribution (entries in [0,1], sum within 1e-3 of 1).
void validate_record(const FeatureRecord& record);

// Manifest: UTF-8 JSON Lines, one object per record with keys
// row, sample_id, subject_id, dataset_name, expression_label. Blank lines are skipped.
std::vector<SampleMeta> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const SampleMeta> entries);

/// Binds a manifest to hse1.feat, hse2.feat, softmax1.feat and softmax2.feat in
/// feature_dir. Records come back in manifest order.
std::vector<FeatureRecord> load_records(const std::filesystem::path& manifest,
                                        const std::filesystem::path& feature_dir);

/// Writes records as a manifest plus the four matrices (row i = record i).
void save_records(const std::filesystem::path& manifest, const std::filesystem::path& feature_dir,
                  std::span<const FeatureRecord> records);

enum class ComboScheme : std::uint8_t { kHse1, kHse2, kHse1C, kHse2C, kHse12, kHse12C };

inline constexpr std::array<ComboScheme, 6> kAllSchemes{
    ComboScheme::kHse1,  ComboScheme::kHse2,  ComboScheme::kHse1C,
    ComboScheme::kHse2C, ComboScheme::kHse12, ComboScheme::kHse12C};

constexpr std::size_t scheme_dimension(ComboScheme s) {
  switch (s) {
    case ComboScheme::kHse1: return kHse1Dim;
    case ComboScheme::kHse2: return kHse2Dim;
    case ComboScheme::kHse1C: return kHse1Dim + kSoftmaxDim;
    case ComboScheme::kHse2C: return kHse2Dim + kSoftmaxDim;
    case ComboScheme::kHse12: return kHse1Dim + kHse2Dim;
    case ComboScheme::kHse12C: return kHse1Dim + kHse2Dim + 2 * kSoftmaxDim;
  }
  return 0;
}

/// CLI spelling: hse1, hse2, hse1c, hse2c, hse12, hse12c.
std::string_view to_string(ComboScheme s);
std::optional<ComboScheme> parse_scheme(std::string_view name);

struct ComboVector {
  ComboScheme scheme = ComboScheme::kHse1;
  std::vector<float> values;
};

/// Concatenation order is backbone before softmax, HSE-1 before HSE-2:
///   HSE1C  = hse1 | softmax1
///   HSE2C  = hse2 | softmax2
///   HSE12  = hse1 | hse2
///   HSE12C = hse1 | hse2 | softmax1 | softmax2
/// Only dimensions are checked here; distribution checks belong to validate_record.
ComboVector combine(const FeatureRecord& record, ComboScheme scheme);

/// combine() for a batch, written straight into a rows x scheme_dimension matrix.
FloatMatrix combine_all(std::span<const FeatureRecord> records, ComboScheme scheme);

}  // namespace ngate
