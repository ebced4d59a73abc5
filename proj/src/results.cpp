// SPDX-License-Identifier: Apache-2.0
#include "blockveil/results.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "blockveil/serialize.hpp"

namespace blockveil {

Summary summarize(const std::vector<double>& samples) {
  Summary s;
  s.count = static_cast<long>(samples.size());
  if (samples.empty()) return s;
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / static_cast<double>(s.count - 1)) / std::sqrt(static_cast<double>(s.count));
  }
  return s;
}

Summary summarize_rate(long hits, long trials) {
  if (trials < 0 || hits < 0 || hits > trials) throw std::invalid_argument("need 0 <= hits <= trials");
  Summary s;
  s.count = trials;
  if (trials == 0) return s;
  const double n = static_cast<double>(trials);
  s.mean = static_cast<double>(hits) / n;
  if (trials > 1) s.std_error = std::sqrt(s.mean * (1.0 - s.mean) * n / (n - 1.0)) / std::sqrt(n);
  return s;
}

std::optional<double> ResultRow::get(const std::string& key) const {
  for (const auto& [k, v] : point)
    if (k == key) return v;
  return std::nullopt;
}

void ResultTable::add(ResultRow row) {
  if (row.metric.empty()) throw std::invalid_argument("result row needs a metric name");
  rows_.push_back(std::move(row));
}

void ResultTable::add(std::vector<std::pair<std::string, double>> point, std::string metric, const Summary& s) {
  add(ResultRow{std::move(point), std::move(metric), s.mean, s.count, s.std_error});
}

void ResultTable::set_note(const std::string& key, const std::string& value) {
  for (auto& [k, v] : notes_)
    if (k == key) {
      v = value;
      return;
    }
  notes_.emplace_back(key, value);
}

std::vector<std::string> ResultTable::point_keys() const {
  std::vector<std::string> keys;
  for (const auto& row : rows_)
    for (const auto& kv : row.point)
      if (std::find(keys.begin(), keys.end(), kv.first) == keys.end()) keys.push_back(kv.first);
  return keys;
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  for (const auto& [k, v] : notes_) out << "# " << k << "=" << v << "\n";
  const auto keys = point_keys();
  for (const auto& k : keys) out << k << ",";
  out << "metric,value,trials,std_error\n";
  for (const auto& row : rows_) {
    for (const auto& k : keys) {
      if (auto v = row.get(k)) out << format_double(*v);
      out << ",";
    }
    out << row.metric << "," << format_double(row.value) << "," << row.trials << ","
        << format_double(row.std_error) << "\n";
  }
  return out.str();
}

void ResultTable::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_csv();
}

}  // namespace blockveil
