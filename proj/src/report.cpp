// SPDX-License-Identifier: Apache-2.0
#include "elastic/report.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "elastic/error.hpp"
#include "elastic/image_io.hpp"

namespace elastic {

namespace {

constexpr const char* kMagic = "# elastic-report v1";
constexpr const char* kSeparator = "---";

void check_text(const std::string& s, bool allow_comma) {
  if (s.find('\n') != std::string::npos || s.find('\r') != std::string::npos) {
    fail(Errc::invalid_argument, "report text may not contain newlines");
  }
  if (!allow_comma && s.find(',') != std::string::npos) {
    fail(Errc::invalid_argument, "report cell may not contain commas: '" + s + "'");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string join_csv(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

double to_number(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    fail(Errc::invalid_argument, what + " is not numeric: '" + text + "'");
  }
  return v;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void RunReport::set(const std::string& key, const std::string& value) {
  check_text(key, false);
  check_text(value, true);
  if (key.empty() || key.find('=') != std::string::npos || key == kSeparator || key[0] == '#') {
    fail(Errc::invalid_argument, "invalid report key '" + key + "'");
  }
  for (auto& [k, v] : header_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  header_.emplace_back(key, value);
}

void RunReport::set(const std::string& key, double value) { set(key, format_number(value)); }

void RunReport::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

std::optional<std::string> RunReport::get(const std::string& key) const {
  for (const auto& [k, v] : header_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

double RunReport::number(const std::string& key) const {
  const auto v = get(key);
  if (!v) fail(Errc::invalid_argument, "report has no key '" + key + "'");
  return to_number(*v, key);
}

void RunReport::set_columns(std::vector<std::string> columns) {
  for (const auto& c : columns) check_text(c, false);
  if (!rows_.empty()) fail(Errc::invalid_argument, "columns must be set before rows");
  columns_ = std::move(columns);
}

void RunReport::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) fail(Errc::invalid_argument, "row width does not match columns");
  for (const auto& c : cells) check_text(c, false);
  rows_.push_back(std::move(cells));
}

int RunReport::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == name) return int(i);
  }
  return -1;
}

double RunReport::cell(std::size_t row, const std::string& column) const {
  const int idx = column_index(column);
  if (idx < 0 || row >= rows_.size()) fail(Errc::out_of_range, "no cell " + column + "[" + std::to_string(row) + "]");
  return to_number(rows_[row][idx], column);
}

std::string RunReport::serialize() const {
  std::string out = std::string(kMagic) + "\n";
  for (const auto& [k, v] : header_) out += k + "=" + v + "\n";
  out += std::string(kSeparator) + "\n";
  out += join_csv(columns_) + "\n";
  for (const auto& row : rows_) out += join_csv(row) + "\n";
  return out;
}

RunReport RunReport::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) fail(Errc::invalid_argument, "not an elastic report");
  RunReport report;
  bool table = false;
  while (std::getline(in, line)) {
    if (!table) {
      if (line == kSeparator) {
        table = true;
        if (!std::getline(in, line)) fail(Errc::invalid_argument, "report is missing its column line");
        report.columns_ = line.empty() ? std::vector<std::string>{} : split_csv(line);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(Errc::invalid_argument, "malformed report header line '" + line + "'");
      report.header_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    } else {
      auto cells = split_csv(line);
      if (cells.size() != report.columns_.size()) fail(Errc::invalid_argument, "report row has wrong width");
      report.rows_.push_back(std::move(cells));
    }
  }
  if (!table) fail(Errc::invalid_argument, "report is missing its table separator");
  return report;
}

void RunReport::save(const std::string& path) const { write_file(path, serialize()); }

RunReport RunReport::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open report '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace elastic
