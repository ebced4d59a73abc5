// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration. The text format is one `key = value` per line,
// lists comma-separated, `#` starts a comment:
//
//   scenario = moment-attack
//   n = 200
//   m = 100
//   r = 5
//   beta = 2.5, 5
//   snapshots = 100, 1000, 10000
//   snr_db = 0
//   trials = 500
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "blockveil/eavesdrop.hpp"
#include "blockveil/protocol.hpp"
#include "blockveil/recovery.hpp"

namespace blockveil {

enum class Scenario { kSingleShot, kMomentAttack, kBerSweep, kCovarianceVerify, kCoherenceReport, kHoeffding };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view s);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::kSingleShot;
  int n = 0, m = 0, r = 0;
  std::vector<double> beta;
  std::vector<double> snapshots;  ///< L grid
  std::vector<double> snr_db;     ///< empty: noiseless
  int trials = 1;
  std::uint64_t master_seed = 1;
  SolverOptions solver;
  std::string output_dir = "out";

  Constellation constellation = Constellation::kGaussian;
  std::string channel = "gaussian";  ///< gaussian | isotropic
  bool fixed_channel = false;        ///< one A for every trial (structures still redrawn)
  Centering centering = Centering::kModelMean;
  MomentFormula formula = MomentFormula::kExact;  ///< exact | published

  // covariance-verify: explicit (p, sigma2) instead of (beta, snr)
  double p = 0.3;
  double sigma2 = 0.1;

  int messages = 10;              ///< ber-sweep: fresh messages decoded per trial
  int hoeffding_instances = 3;    ///< moment-attack: trials carrying the Hoeffding overlay
  int hoeffding_candidates = 0;   ///< 0: every single swap; otherwise a sample of this size
  double mu = 1.0, nu = 1.0;      ///< coherence-report
  bool desk = false;

  /// Scenario-specific checks; throws ConfigError.
  void validate() const;
  int d() const { return n / r; }
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Desk-scale dimensions, grids and trial counts for the scenario; keeps
/// the seed, solver options and output directory.
void apply_desk_preset(ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace blockveil
