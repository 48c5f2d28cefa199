// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace elastic {

/// Run report: ordered key=value header, a separator line, then a CSV table.
///
///     # elastic-report v1
///     key=value
///     ...
///     ---
///     col_a,col_b,...
///     1,2,...
///
/// Keys and cells may not contain newlines; cells may not contain commas.
/// Values are split at the first '='. Numbers use the shortest text that
/// parses back to the same double.
class RunReport {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  std::optional<std::string> get(const std::string& key) const;
  /// Throws Errc::invalid_argument when the key is missing or not numeric.
  double number(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& header() const { return header_; }

  void set_columns(std::vector<std::string> columns);
  void add_row(std::vector<std::string> cells);
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  int column_index(const std::string& name) const;
  /// Numeric value of one cell.
  double cell(std::size_t row, const std::string& column) const;

  std::string serialize() const;
  static RunReport parse(const std::string& text);

  void save(const std::string& path) const;
  static RunReport load(const std::string& path);

  bool operator==(const RunReport&) const = default;

 private:
  std::vector<std::pair<std::string, std::string>> header_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Shortest text that reads back as exactly `v`.
std::string format_number(double v);

}  // namespace elastic
