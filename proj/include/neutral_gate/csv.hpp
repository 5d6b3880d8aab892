#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace ngate::csv {

/// Plain comma-separated rows, no quoting. The first line must equal `header`.
/// Throws Error(kFormat) on a header mismatch or a row with the wrong field count.
std::vector<std::vector<std::string>> read(const std::filesystem::path& path,
                                           std::initializer_list<std::string_view> header);

/// Rejects identifiers that cannot round-trip through unquoted CSV.
void check_field(std::string_view field);

double parse_double(std::string_view text, std::string_view what);

/// %.9g, with "inf" / "-inf" for infinities.
std::string format_sig9(double v);
/// %.9f, used for key=value summaries.
std::string format_fixed9(double v);

}  // namespace ngate::csv
