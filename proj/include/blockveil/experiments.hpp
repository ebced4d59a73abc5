// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo harness. Every trial draws from its own seed, derived from
// the master seed and the trial index only, and results are reduced in
// trial order, so the thread count never changes a CSV byte.
//
// Trial t of a sweep uses master.derive(t) for its channel and secret
// structure (shared across the beta/SNR points of the sweep) and
// master.derive(t).derive(k, point) for its messages and noise.
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "blockveil/channel.hpp"
#include "blockveil/charts.hpp"
#include "blockveil/config.hpp"
#include "blockveil/protocol.hpp"
#include "blockveil/results.hpp"
#include "blockveil/rng.hpp"

namespace blockveil {

struct ExperimentOutput {
  ResultTable table;
  std::vector<ChartSpec> charts;
  nlohmann::json details = nlohmann::json::object();        ///< merged into manifest.json
  std::vector<std::pair<std::string, std::string>> files;  ///< additional files: name, contents
};

/// Runs body(i) for i in [0, count) on up to `threads` worker threads.
/// The first exception thrown by any call is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

struct TrialInstance {
  ChannelMatrix ch;
  BlockStructure bs;
};

/// (A, B) of trial `trial`. In fixed-channel mode A comes from the master
/// seed alone and only B changes between trials.
TrialInstance draw_instance(const ExperimentConfig& cfg, int trial);

/// Block-BP vs BP recovery rate per beta (noiseless unless snr_db is set).
ExperimentOutput run_single_shot(const ExperimentConfig& cfg, int threads = 1);
/// Failure probability of the moment attack per (beta, L), with the
/// Hoeffding rate of the first hoeffding_instances trials as overlay.
ExperimentOutput run_moment_attack(const ExperimentConfig& cfg, int threads = 1);
/// Bob's and Eve's BER per (beta, SNR, L); Eve decodes with the structure
/// her attack returned from L snapshots.
ExperimentOutput run_ber_sweep(const ExperimentConfig& cfg, int threads = 1);
/// Relative Frobenius error of the empirical z-covariance against the
/// analytic one per L, and the matching check of the mean.
ExperimentOutput run_covariance_verify(const ExperimentConfig& cfg, int threads = 1);
/// Coherence bounds of random channels, plus the isotropic expectation of P.
ExperimentOutput run_coherence_report(const ExperimentConfig& cfg, int threads = 1);
/// Hoeffding curves alone, per beta and instance.
ExperimentOutput run_hoeffding(const ExperimentConfig& cfg, int threads = 1);

ExperimentOutput run_experiment(const ExperimentConfig& cfg, int threads = 1);

/// results.csv, any extra CSVs, charts and manifest.json under dir.
void write_outputs(const ExperimentConfig& cfg, const ExperimentOutput& out, const std::filesystem::path& dir,
                   int threads);

std::string code_version();

}  // namespace blockveil
