// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace blockveil {

/// Sample mean and standard error sd / sqrt(count) (sd with the n - 1
/// denominator; zero for a single sample).
struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
  long count = 0;
};

Summary summarize(const std::vector<double>& samples);
/// Same as summarize() on `trials` 0/1 outcomes with `hits` ones.
Summary summarize_rate(long hits, long trials);

struct ResultRow {
  /// Parameter point plus per-row annotations (tolerances, iteration
  /// counts), in column order.
  std::vector<std::pair<std::string, double>> point;
  std::string metric;
  double value = 0.0;
  long trials = 0;
  double std_error = 0.0;

  std::optional<double> get(const std::string& key) const;
};

class ResultTable {
 public:
  void add(ResultRow row);
  void add(std::vector<std::pair<std::string, double>> point, std::string metric, const Summary& s);
  /// Emitted as "# key=value" lines above the header.
  void set_note(const std::string& key, const std::string& value);

  const std::vector<ResultRow>& rows() const { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& notes() const { return notes_; }
  bool empty() const { return rows_.empty(); }
  /// Union of point keys in order of first appearance.
  std::vector<std::string> point_keys() const;

  /// Columns: point keys..., metric, value, trials, std_error. Keys a row
  /// lacks are left empty.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<ResultRow> rows_;
  std::vector<std::pair<std::string, std::string>> notes_;
};

}  // namespace blockveil
