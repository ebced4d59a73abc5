// SPDX-License-Identifier: Apache-2.0
#include "blockveil/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "blockveil/serialize.hpp"

namespace blockveil {

namespace {

constexpr std::pair<Scenario, std::string_view> kScenarioNames[] = {
    {Scenario::kSingleShot, "single-shot"},
    {Scenario::kMomentAttack, "moment-attack"},
    {Scenario::kBerSweep, "ber-sweep"},
    {Scenario::kCovarianceVerify, "covariance-verify"},
    {Scenario::kCoherenceReport, "coherence-report"},
    {Scenario::kHoeffding, "hoeffding"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_number(const std::string& v, int line, const std::string& key) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) fail(line, "bad value '" + v + "' for " + key);
  return out;
}

std::vector<double> parse_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (item.empty()) fail(line, "empty list entry for " + key);
    out.push_back(parse_number<double>(item, line, key));
  }
  return out;
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(line, "bad boolean '" + v + "' for " + key);
}

}  // namespace

std::string_view to_string(Scenario s) {
  for (auto [k, name] : kScenarioNames)
    if (k == s) return name;
  throw std::invalid_argument("unknown scenario");
}

Scenario parse_scenario(std::string_view s) {
  for (auto [k, name] : kScenarioNames)
    if (name == s) return k;
  throw ConfigError("unknown scenario '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(trials >= 1, "trials must be >= 1");
  need(n >= 1 && m >= 1 && r >= 1, "n, m and r must be positive");
  need(n % r == 0, "r must divide n");
  need(channel == "gaussian" || channel == "isotropic", "channel must be gaussian or isotropic");
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  for (double l : snapshots) need(l >= 1.0 && l == std::floor(l), "snapshot counts must be positive integers");

  switch (scenario) {
    case Scenario::kSingleShot:
      need(m < n, "single-shot needs m < n");
      need(!beta.empty(), "single-shot needs a beta sweep");
      break;
    case Scenario::kMomentAttack:
    case Scenario::kHoeffding:
      need(m < n, "the attack needs m < n");
      need(!beta.empty() && !snapshots.empty(), "needs beta and snapshots sweeps");
      need(snr_db.size() == 1, "needs exactly one snr_db value");
      need(hoeffding_candidates >= 0 && hoeffding_instances >= 0, "Hoeffding settings must be >= 0");
      need(r <= 20, "Hoeffding mixtures need r <= 20");
      break;
    case Scenario::kBerSweep:
      need(m < n, "ber-sweep needs m < n");
      need(!beta.empty() && !snapshots.empty() && !snr_db.empty(), "needs beta, snapshots and snr_db sweeps");
      need(messages >= 1, "messages must be >= 1");
      need(constellation == Constellation::kBpsk, "ber-sweep needs constellation = bpsk");
      break;
    case Scenario::kCovarianceVerify:
      need(n <= 16, "covariance-verify is limited to n <= 16");
      need(!snapshots.empty(), "needs a snapshots sweep");
      need(p >= 0.0 && p <= 1.0, "p must lie in [0, 1]");
      need(sigma2 >= 0.0, "sigma2 must be >= 0");
      break;
    case Scenario::kCoherenceReport:
      need(mu > 0.0 && nu > 0.0, "mu and nu must be > 0");
      break;
  }
  for (double b : beta) need(b > 0.0, "beta must be > 0");
  if (scenario != Scenario::kCovarianceVerify && scenario != Scenario::kCoherenceReport)
    for (double b : beta) need(p_for_beta(m, n, b) <= 1.0, "beta below m/n gives p > 1");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  bool have_scenario = false;
  using Setter = std::function<void(const std::string&, int, const std::string&)>;
  auto integer = [](int& dst) -> Setter {
    return [&dst](const std::string& v, int line, const std::string& k) { dst = parse_number<int>(v, line, k); };
  };
  auto real = [](double& dst) -> Setter {
    return [&dst](const std::string& v, int line, const std::string& k) { dst = parse_number<double>(v, line, k); };
  };
  auto list = [](std::vector<double>& dst) -> Setter {
    return [&dst](const std::string& v, int line, const std::string& k) { dst = parse_list(v, line, k); };
  };
  auto flag = [](bool& dst) -> Setter {
    return [&dst](const std::string& v, int line, const std::string& k) { dst = parse_bool(v, line, k); };
  };
  const std::map<std::string, Setter> setters = {
      {"scenario",
       [&](const std::string& v, int line, const std::string&) {
         try {
           cfg.scenario = parse_scenario(v);
         } catch (const ConfigError& e) {
           fail(line, e.what());
         }
         have_scenario = true;
       }},
      {"n", integer(cfg.n)},
      {"m", integer(cfg.m)},
      {"r", integer(cfg.r)},
      {"beta", list(cfg.beta)},
      {"snapshots", list(cfg.snapshots)},
      {"snr_db", list(cfg.snr_db)},
      {"trials", integer(cfg.trials)},
      {"seed",
       [&](const std::string& v, int line, const std::string& k) {
         cfg.master_seed = parse_number<std::uint64_t>(v, line, k);
       }},
      {"output_dir", [&](const std::string& v, int, const std::string&) { cfg.output_dir = v; }},
      {"constellation",
       [&](const std::string& v, int line, const std::string&) {
         try {
           cfg.constellation = parse_constellation(v);
         } catch (const std::exception& e) {
           fail(line, e.what());
         }
       }},
      {"channel", [&](const std::string& v, int, const std::string&) { cfg.channel = v; }},
      {"fixed_channel", flag(cfg.fixed_channel)},
      {"centering",
       [&](const std::string& v, int line, const std::string&) {
         if (v == "model-mean")
           cfg.centering = Centering::kModelMean;
         else if (v == "sample-mean")
           cfg.centering = Centering::kSampleMean;
         else
           fail(line, "centering must be model-mean or sample-mean");
       }},
      {"moment_formula",
       [&](const std::string& v, int line, const std::string&) {
         if (v == "exact")
           cfg.formula = MomentFormula::kExact;
         else if (v == "published")
           cfg.formula = MomentFormula::kPublished;
         else
           fail(line, "moment_formula must be exact or published");
       }},
      {"p", real(cfg.p)},
      {"sigma2", real(cfg.sigma2)},
      {"messages", integer(cfg.messages)},
      {"hoeffding_instances", integer(cfg.hoeffding_instances)},
      {"hoeffding_candidates", integer(cfg.hoeffding_candidates)},
      {"mu", real(cfg.mu)},
      {"nu", real(cfg.nu)},
      {"epsilon", real(cfg.solver.epsilon)},
      {"max_iterations", integer(cfg.solver.max_iterations)},
      {"rho", real(cfg.solver.rho)},
      {"relaxation", real(cfg.solver.relaxation)},
      {"adaptive_rho", flag(cfg.solver.adaptive_rho)},
      {"feas_tol", real(cfg.solver.feas_tol)},
      {"change_tol", real(cfg.solver.change_tol)},
      {"success_tol", real(cfg.solver.success_tol)},
  };

  std::istringstream in{std::string(text)};
  int line_no = 0;
  std::map<std::string, int> seen;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) fail(line_no, "unknown key '" + key + "'");
    if (auto [pos, fresh] = seen.emplace(key, line_no); !fresh)
      fail(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(pos->second) + ")");
    if (value.empty()) fail(line_no, "missing value for " + key);
    it->second(value, line_no, key);
  }
  if (!have_scenario) throw ConfigError("config does not set a scenario");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_desk_preset(ExperimentConfig& cfg) {
  cfg.desk = true;
  switch (cfg.scenario) {
    case Scenario::kSingleShot:
      cfg.n = 120, cfg.m = 60, cfg.r = 10;
      cfg.beta = {2.0, 2.5, 3.0, 3.5, 4.0};
      cfg.snr_db.clear();
      cfg.trials = 100;
      break;
    case Scenario::kMomentAttack:
      cfg.n = 64, cfg.m = 48, cfg.r = 4;
      cfg.beta = {2.0, 4.0};
      cfg.snapshots = {10, 100, 300, 1000, 3000, 10000};
      cfg.snr_db = {40.0};
      cfg.trials = 50;
      cfg.hoeffding_instances = 2;
      cfg.hoeffding_candidates = 0;
      break;
    case Scenario::kBerSweep:
      cfg.n = 128, cfg.m = 64, cfg.r = 8;
      cfg.beta = {10.0};
      cfg.snapshots = {100, 400, 10000};
      cfg.snr_db = {0.0};
      cfg.trials = 50;
      cfg.constellation = Constellation::kBpsk;
      break;
    case Scenario::kCovarianceVerify:
      cfg.n = 8, cfg.m = 4, cfg.r = 2;
      cfg.p = 0.3, cfg.sigma2 = 0.1;
      cfg.snapshots = {1000, 10000, 100000};
      cfg.trials = 5;
      break;
    case Scenario::kCoherenceReport:
      cfg.n = 64, cfg.m = 32, cfg.r = 8;
      cfg.trials = 20;
      break;
    case Scenario::kHoeffding:
      cfg.n = 64, cfg.m = 48, cfg.r = 4;
      cfg.beta = {2.0, 4.0};
      cfg.snapshots = {10, 100, 1000, 10000};
      cfg.snr_db = {40.0};
      cfg.trials = 2;
      break;
  }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  const auto& s = cfg.solver;
  return {
      {"scenario", std::string(to_string(cfg.scenario))},
      {"n", cfg.n},
      {"m", cfg.m},
      {"r", cfg.r},
      {"beta", cfg.beta},
      {"snapshots", cfg.snapshots},
      {"snr_db", cfg.snr_db},
      {"trials", cfg.trials},
      {"seed", cfg.master_seed},
      {"output_dir", cfg.output_dir},
      {"constellation", std::string(to_string(cfg.constellation))},
      {"channel", cfg.channel},
      {"fixed_channel", cfg.fixed_channel},
      {"centering", cfg.centering == Centering::kModelMean ? "model-mean" : "sample-mean"},
      {"moment_formula", cfg.formula == MomentFormula::kExact ? "exact" : "published"},
      {"p", cfg.p},
      {"sigma2", cfg.sigma2},
      {"messages", cfg.messages},
      {"hoeffding_instances", cfg.hoeffding_instances},
      {"hoeffding_candidates", cfg.hoeffding_candidates},
      {"mu", cfg.mu},
      {"nu", cfg.nu},
      {"desk", cfg.desk},
      {"solver",
       {{"epsilon", s.epsilon},
        {"max_iterations", s.max_iterations},
        {"rho", s.rho},
        {"relaxation", s.relaxation},
        {"adaptive_rho", s.adaptive_rho},
        {"feas_tol", s.feas_tol},
        {"change_tol", s.change_tol},
        {"success_tol", s.success_tol}}},
  };
}

}  // namespace blockveil
