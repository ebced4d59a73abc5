// SPDX-License-Identifier: Apache-2.0
//
// Self-contained SVG line charts of a ResultTable. Output depends only on
// the table and the ChartSpec, so identical inputs give identical bytes.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "blockveil/results.hpp"

namespace blockveil {

struct ChartSpec {
  std::string file_name = "chart.svg";
  std::string title;
  std::string x_key;  ///< point key on the horizontal axis
  std::string x_label;
  std::string y_label;
  std::vector<std::string> metrics;         ///< solid lines
  std::vector<std::string> dashed_metrics;  ///< dashed overlays
  /// Point key splitting each metric into one series per value; empty for
  /// a single series per metric.
  std::string series_key;
  bool log_x = false;
  bool log_y = false;  ///< non-positive values are left out
};

std::string render_svg(const ResultTable& table, const ChartSpec& spec);

/// Writes dir / spec.file_name and returns the path.
std::filesystem::path emit_chart(const ResultTable& table, const ChartSpec& spec, const std::filesystem::path& dir);

}  // namespace blockveil
