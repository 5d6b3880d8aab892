#include "neutral_gate/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "neutral_gate/error.hpp"

namespace ngate::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::vector<std::vector<std::string>> read(const std::filesystem::path& path,
                                           std::initializer_list<std::string_view> header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (!seen_header) {
      if (fields.size() != header.size() || !std::equal(header.begin(), header.end(), fields.begin())) {
        std::string want;
        for (auto h : header) want += (want.empty() ? "" : ",") + std::string(h);
        throw Error(ErrorKind::kFormat, path.string() + ": expected header '" + want + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::kFormat, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                          std::to_string(header.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  if (!seen_header) throw Error(ErrorKind::kFormat, path.string() + ": missing header");
  return rows;
}

void check_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") != std::string_view::npos) {
    throw Error(ErrorKind::kData, "identifier '" + std::string(field) + "' cannot be written to CSV");
  }
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorKind::kFormat, "cannot parse " + std::string(what) + " '" + s + "'");
  }
  return v;
}

std::string format_sig9(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string format_fixed9(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

}  // namespace ngate::csv
