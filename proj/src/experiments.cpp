// SPDX-License-Identifier: Apache-2.0
#include "blockveil/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "blockveil/baseline.hpp"
#include "blockveil/eavesdrop.hpp"
#include "blockveil/recovery.hpp"
#include "blockveil/serialize.hpp"

#ifndef BLOCKVEIL_VERSION
#define BLOCKVEIL_VERSION "0.0.0"
#endif

namespace blockveil {

using Point = std::vector<std::pair<std::string, double>>;

std::string code_version() { return BLOCKVEIL_VERSION; }

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

Seed trial_seed(const ExperimentConfig& cfg, int trial) {
  return Seed(cfg.master_seed).derive(static_cast<std::uint64_t>(trial));
}

// Streams: 0 channel, 1 structure, 2 attack snapshots, 3 single-shot
// message, 4 BER messages, 5 candidate sampling.
enum Stream : std::uint64_t { kChannel = 0, kStructure = 1, kSnapshots = 2, kMessage = 3, kBerMessages = 4, kCandidates = 5 };

std::vector<int> snapshot_grid(const ExperimentConfig& cfg) {
  std::vector<int> grid;
  for (double l : cfg.snapshots) grid.push_back(static_cast<int>(l));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

Point solver_fields(double epsilon, const SolverOptions& opts) {
  return {{"epsilon", epsilon}, {"feas_tol", opts.feas_tol}, {"success_tol", opts.success_tol}};
}

Point concat(Point a, const Point& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void note_solver(ResultTable& t, const SolverOptions& opts) {
  t.set_note("success_tol", format_double(opts.success_tol));
  t.set_note("feas_tol", format_double(opts.feas_tol));
  t.set_note("change_tol", format_double(opts.change_tol));
  t.set_note("max_iterations", std::to_string(opts.max_iterations));
}

CandidateSearch candidate_search(const ExperimentConfig& cfg, int trial, int point) {
  CandidateSearch s;
  if (cfg.hoeffding_candidates > 0) {
    s.kind = CandidateSearch::Kind::kSampledSingleSwaps;
    s.max_candidates = cfg.hoeffding_candidates;
    s.seed = trial_seed(cfg, trial).derive(kCandidates, static_cast<std::uint64_t>(point)).value();
  }
  return s;
}

std::string hoeffding_csv_header() { return "beta,instance,L,rate,d_star,argmin,search,candidates\n"; }

void append_hoeffding_csv(std::string& out, double beta, int instance, const HoeffdingCurve& c) {
  for (std::size_t i = 0; i < c.rate.size(); ++i)
    out += format_double(beta) + "," + std::to_string(instance) + "," + format_double(c.snapshots[i]) + "," +
           format_double(c.rate[i]) + "," + format_double(c.d_star) + ",\"" + c.argmin + "\",\"" + c.search +
           "\"," + std::to_string(c.candidates) + "\n";
}

// Moment attack on a growing snapshot prefix; reports the structure
// estimate at each checkpoint of the grid. Snapshots are generated in
// fixed-size batches so the accumulation order never depends on the grid.
class StreamingAttack {
 public:
  StreamingAttack(const ChannelMatrix& ch, const BlockStructure& bs, const TransmissionConfig& tcfg, Seed seed,
                  const AttackParams& params)
      : ch_(ch), bs_(bs), tcfg_(tcfg), seed_(seed), params_(params),
        center_(mean_z(ch, params.p, params.sigma2)), acc_(center_),
        zsum_(Vector::Zero(ch.cols())) {
    try {
      debiaser_.emplace(ch, DebiasParams{params.p, ch.cols() / params.r, params.sigma2, params.constellation, params.formula});
    } catch (const IllConditionedError&) {
      ill_conditioned_ = true;
    }
  }

  bool ill_conditioned() const { return ill_conditioned_; }

  /// Structure estimate from the first `l` snapshots (l non-decreasing
  /// across calls); nullopt when P is too ill-conditioned to debias.
  std::optional<MomentEstimate> estimate(int l) {
    constexpr int kBatch = 512;
    while (done_ < l) {
      const int count = std::min(kBatch - done_ % kBatch, l - done_);
      const auto batch = generate_snapshots(ch_, bs_, tcfg_, seed_, done_, count);
      const Matrix z = hadamard_square_transform(ch_, batch.y);
      acc_.add(z);
      zsum_ += z.rowwise().sum();
      done_ += count;
    }
    if (ill_conditioned_) return std::nullopt;
    Matrix cov = acc_.covariance();
    Vector z_bar = center_;
    if (params_.centering == Centering::kSampleMean) {
      z_bar = zsum_ / static_cast<double>(done_);
      const Vector delta = z_bar - center_;
      cov -= delta * delta.transpose();
    }
    Matrix b_tilde = debiaser_->apply(cov);
    auto eig = leading_eigenvectors(b_tilde, params_.r);
    BlockStructure b_hat = greedy_kmeans(eig.u, ch_.cols() / params_.r);
    const bool count_ok = b_hat.block_count() == params_.r;
    return MomentEstimate{std::move(z_bar), std::move(cov), std::move(b_tilde), std::move(eig.u),
                          std::move(eig.eigenvalues), std::move(b_hat), eig.unstable, count_ok};
  }

 private:
  const ChannelMatrix& ch_;
  const BlockStructure& bs_;
  TransmissionConfig tcfg_;
  Seed seed_;
  AttackParams params_;
  Vector center_;
  CovarianceAccumulator acc_;
  Vector zsum_;
  std::optional<Debiaser> debiaser_;
  bool ill_conditioned_ = false;
  int done_ = 0;
};

}  // namespace

TrialInstance draw_instance(const ExperimentConfig& cfg, int trial) {
  const Seed ts = trial_seed(cfg, trial);
  const Seed ch_seed = cfg.fixed_channel ? Seed(cfg.master_seed).derive(~std::uint64_t{0}) : ts.derive(kChannel);
  ChannelMatrix ch = cfg.channel == "isotropic" ? gen_isotropic_channel(cfg.m, cfg.n, ch_seed)
                                                : gen_gaussian_channel(cfg.m, cfg.n, ch_seed);
  return {std::move(ch), random_block_structure(cfg.n, cfg.r, ts.derive(kStructure))};
}

ExperimentOutput run_single_shot(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const bool noisy = !cfg.snr_db.empty();
  const std::vector<double> snrs = noisy ? cfg.snr_db : std::vector<double>{std::numeric_limits<double>::quiet_NaN()};
  const int nb = static_cast<int>(cfg.beta.size()), ns = static_cast<int>(snrs.size());
  const int points = nb * ns;

  struct Outcome {
    bool bob = false, eve = false, bob_conv = false, eve_conv = false;
    int bob_it = 0, eve_it = 0;
  };
  std::vector<Outcome> res(static_cast<std::size_t>(points) * static_cast<std::size_t>(cfg.trials));
  std::vector<double> eps(static_cast<std::size_t>(points));

  for (int pi = 0; pi < points; ++pi) {
    const double p = p_for_beta(cfg.m, cfg.n, cfg.beta[static_cast<std::size_t>(pi / ns)]);
    const double snr = snrs[static_cast<std::size_t>(pi % ns)];
    eps[static_cast<std::size_t>(pi)] =
        noisy ? noise_epsilon(sigma2_for_snr_db(p, cfg.n, cfg.m, snr), cfg.m) : cfg.solver.epsilon;
  }

  parallel_for(points * cfg.trials, threads, [&](int job) {
    const int pi = job / cfg.trials, t = job % cfg.trials;
    const double p = p_for_beta(cfg.m, cfg.n, cfg.beta[static_cast<std::size_t>(pi / ns)]);
    const double snr = snrs[static_cast<std::size_t>(pi % ns)];
    const auto inst = draw_instance(cfg, t);
    const Seed s = trial_seed(cfg, t).derive(kMessage, static_cast<std::uint64_t>(pi));
    const Vector x = encode(inst.bs, {p, cfg.constellation}, s.derive(0));
    Vector y = inst.ch.a() * x;
    if (noisy) y = transmit(inst.ch, x, sigma2_for_snr_db(p, cfg.n, cfg.m, snr), s.derive(1));
    SolverOptions opts = cfg.solver;
    opts.epsilon = eps[static_cast<std::size_t>(pi)];
    const auto bob = block_basis_pursuit(inst.ch, y, inst.bs, opts);
    const auto eve = basis_pursuit(inst.ch, y, opts);
    res[static_cast<std::size_t>(job)] = {recovery_success(bob, x, opts.success_tol),
                                          recovery_success(eve, x, opts.success_tol),
                                          bob.converged,
                                          eve.converged,
                                          bob.iterations,
                                          eve.iterations};
  });

  ExperimentOutput out;
  note_solver(out.table, cfg.solver);
  for (int pi = 0; pi < points; ++pi) {
    const double beta = cfg.beta[static_cast<std::size_t>(pi / ns)];
    long bob = 0, eve = 0, bob_conv = 0, eve_conv = 0;
    std::vector<double> bob_it, eve_it;
    for (int t = 0; t < cfg.trials; ++t) {
      const auto& o = res[static_cast<std::size_t>(pi * cfg.trials + t)];
      bob += o.bob, eve += o.eve, bob_conv += o.bob_conv, eve_conv += o.eve_conv;
      bob_it.push_back(o.bob_it);
      eve_it.push_back(o.eve_it);
    }
    Point base{{"beta", beta}, {"p", p_for_beta(cfg.m, cfg.n, beta)}};
    if (noisy) base.emplace_back("snr_db", snrs[static_cast<std::size_t>(pi % ns)]);
    const Point tol = solver_fields(eps[static_cast<std::size_t>(pi)], cfg.solver);
    const double bi = summarize(bob_it).mean, ei = summarize(eve_it).mean;
    out.table.add(concat(concat(base, tol), {{"mean_iterations", bi}}), "bob_success", summarize_rate(bob, cfg.trials));
    out.table.add(concat(concat(base, tol), {{"mean_iterations", ei}}), "eve_success", summarize_rate(eve, cfg.trials));
    out.table.add(concat(concat(base, tol), {{"mean_iterations", bi}}), "bob_converged",
                  summarize_rate(bob_conv, cfg.trials));
    out.table.add(concat(concat(base, tol), {{"mean_iterations", ei}}), "eve_converged",
                  summarize_rate(eve_conv, cfg.trials));
  }

  ChartSpec chart;
  chart.file_name = "success_vs_beta.svg";
  chart.title = "Recovery rate, Bob (Block-BP) vs Eve (BP)";
  chart.x_key = "beta";
  chart.y_label = "success rate";
  chart.metrics = {"bob_success", "eve_success"};
  if (ns > 1) chart.series_key = "snr_db";
  out.charts.push_back(chart);
  return out;
}

ExperimentOutput run_moment_attack(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const auto grid = snapshot_grid(cfg);
  const int nb = static_cast<int>(cfg.beta.size());
  const double snr = cfg.snr_db.front();

  struct Outcome {
    std::vector<char> fail;
    bool ill = false;
    std::optional<HoeffdingCurve> curve;
    Matrix u3;
    std::vector<int> labels;
  };
  std::vector<Outcome> res(static_cast<std::size_t>(nb) * static_cast<std::size_t>(cfg.trials));

  parallel_for(nb * cfg.trials, threads, [&](int job) {
    const int bi = job / cfg.trials, t = job % cfg.trials;
    const double p = p_for_beta(cfg.m, cfg.n, cfg.beta[static_cast<std::size_t>(bi)]);
    const double sigma2 = sigma2_for_snr_db(p, cfg.n, cfg.m, snr);
    const auto inst = draw_instance(cfg, t);
    Outcome& o = res[static_cast<std::size_t>(job)];

    const TransmissionConfig tcfg{{p, cfg.constellation}, sigma2, grid.back()};
    const AttackParams params{p, cfg.r, sigma2, cfg.constellation, cfg.centering, cfg.formula};
    StreamingAttack attack(inst.ch, inst.bs, tcfg,
                           trial_seed(cfg, t).derive(kSnapshots, static_cast<std::uint64_t>(bi)), params);
    o.ill = attack.ill_conditioned();
    for (int l : grid) {
      const auto est = attack.estimate(l);
      o.fail.push_back(!(est && attack_succeeded(*est, inst.bs)));
      if (t == 0 && l == grid.back() && est) {
        o.u3 = Matrix::Zero(cfg.n, 3);
        o.u3.leftCols(std::min(3, cfg.r)) = est->u_tilde.leftCols(std::min(3, cfg.r));
        o.labels = inst.bs.labels();
      }
    }
    if (t < cfg.hoeffding_instances)
      o.curve = hoeffding_rate(inst.ch, inst.bs, p, sigma2, as_doubles(grid), candidate_search(cfg, t, bi));
  });

  ExperimentOutput out;
  out.table.set_note("snr_db", format_double(snr));
  out.table.set_note("centering", cfg.centering == Centering::kModelMean ? "model-mean" : "sample-mean");
  std::string hoeff_csv = hoeffding_csv_header();
  std::string eig_csv = "beta,index,label,u1,u2,u3\n";
  nlohmann::json d_stars = nlohmann::json::array();

  for (int bi = 0; bi < nb; ++bi) {
    const double beta = cfg.beta[static_cast<std::size_t>(bi)];
    const double p = p_for_beta(cfg.m, cfg.n, beta);
    const double sigma2 = sigma2_for_snr_db(p, cfg.n, cfg.m, snr);
    const Point base{{"beta", beta}, {"p", p}, {"sigma2", sigma2}};
    long ill = 0;
    std::vector<const HoeffdingCurve*> curves;
    for (int t = 0; t < cfg.trials; ++t) {
      const auto& o = res[static_cast<std::size_t>(bi * cfg.trials + t)];
      ill += o.ill;
      if (o.curve) {
        curves.push_back(&*o.curve);
        append_hoeffding_csv(hoeff_csv, beta, t, *o.curve);
        d_stars.push_back({{"beta", beta}, {"instance", t}, {"d_star", o.curve->d_star}, {"argmin", o.curve->argmin}});
      }
      if (t == 0 && o.u3.size() > 0)
        for (int i = 0; i < cfg.n; ++i)
          eig_csv += format_double(beta) + "," + std::to_string(i + 1) + "," +
                     std::to_string(o.labels[static_cast<std::size_t>(i)] + 1) + "," + format_double(o.u3(i, 0)) +
                     "," + format_double(o.u3(i, 1)) + "," + format_double(o.u3(i, 2)) + "\n";
    }
    for (std::size_t li = 0; li < grid.size(); ++li) {
      long fails = 0;
      for (int t = 0; t < cfg.trials; ++t) fails += res[static_cast<std::size_t>(bi * cfg.trials + t)].fail[li];
      const Point pt = concat(base, {{"L", grid[li]}});
      out.table.add(pt, "failure", summarize_rate(fails, cfg.trials));
      if (!curves.empty()) {
        std::vector<double> rates;
        for (const auto* c : curves) rates.push_back(c->rate[li]);
        out.table.add(pt, "hoeffding_rate", summarize(rates));
      }
    }
    out.table.add(base, "ill_conditioned", summarize_rate(ill, cfg.trials));
  }

  out.details["hoeffding"] = d_stars;
  if (cfg.hoeffding_instances > 0) out.files.emplace_back("hoeffding.csv", hoeff_csv);
  out.files.emplace_back("eigenvector_rows.csv", eig_csv);

  ChartSpec chart;
  chart.file_name = "failure_vs_L.svg";
  chart.title = "Moment attack failure probability";
  chart.x_key = "L";
  chart.x_label = "snapshots L";
  chart.y_label = "P(failure)";
  chart.metrics = {"failure"};
  if (cfg.hoeffding_instances > 0) chart.dashed_metrics = {"hoeffding_rate"};
  chart.series_key = "beta";
  chart.log_x = true;
  chart.log_y = true;
  out.charts.push_back(chart);
  return out;
}

ExperimentOutput run_ber_sweep(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const auto grid = snapshot_grid(cfg);
  const int nb = static_cast<int>(cfg.beta.size()), ns = static_cast<int>(cfg.snr_db.size());
  const int points = nb * ns;

  struct Outcome {
    long active = 0, bob_errors = 0;
    std::vector<long> eve_errors;
    std::vector<char> attack_ok;
  };
  std::vector<Outcome> res(static_cast<std::size_t>(points) * static_cast<std::size_t>(cfg.trials));

  parallel_for(points * cfg.trials, threads, [&](int job) {
    const int pi = job / cfg.trials, t = job % cfg.trials;
    const double p = p_for_beta(cfg.m, cfg.n, cfg.beta[static_cast<std::size_t>(pi / ns)]);
    const double sigma2 = sigma2_for_snr_db(p, cfg.n, cfg.m, cfg.snr_db[static_cast<std::size_t>(pi % ns)]);
    const auto inst = draw_instance(cfg, t);
    const Seed ts = trial_seed(cfg, t);
    Outcome& o = res[static_cast<std::size_t>(job)];

    SolverOptions opts = cfg.solver;
    opts.epsilon = noise_epsilon(sigma2, cfg.m);
    const TransmissionConfig tcfg{{p, Constellation::kBpsk}, sigma2, grid.back()};
    const auto msgs = generate_snapshots(inst.ch, inst.bs, tcfg, ts.derive(kBerMessages, static_cast<std::uint64_t>(pi)),
                                         0, cfg.messages);
    std::vector<Vector> bob_hat;
    for (int k = 0; k < cfg.messages; ++k) {
      const Vector x = msgs.x.col(k);
      const auto sol = block_basis_pursuit(inst.ch, msgs.y.col(k), inst.bs, opts);
      bob_hat.push_back(sol.x_hat);
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x(i) != 0.0) {
          ++o.active;
          o.bob_errors += bpsk_decision(sol.x_hat(i)) != x(i);
        }
    }

    const AttackParams params{p, cfg.r, sigma2, Constellation::kBpsk, cfg.centering, cfg.formula};
    StreamingAttack attack(inst.ch, inst.bs, tcfg, ts.derive(kSnapshots, static_cast<std::uint64_t>(pi)), params);
    for (int l : grid) {
      const auto est = attack.estimate(l);
      const bool exact = est && attack_succeeded(*est, inst.bs);
      o.attack_ok.push_back(exact);
      long errors = 0;
      for (int k = 0; k < cfg.messages; ++k) {
        const Vector x = msgs.x.col(k);
        Vector x_hat;
        if (exact)
          x_hat = bob_hat[static_cast<std::size_t>(k)];  // same decoder, same structure
        else if (est)
          x_hat = block_basis_pursuit(inst.ch, msgs.y.col(k), est->b_hat, opts).x_hat;
        else
          x_hat = basis_pursuit(inst.ch, msgs.y.col(k), opts).x_hat;
        for (Eigen::Index i = 0; i < x.size(); ++i)
          if (x(i) != 0.0) errors += bpsk_decision(x_hat(i)) != x(i);
      }
      o.eve_errors.push_back(errors);
    }
  });

  ExperimentOutput out;
  note_solver(out.table, cfg.solver);
  out.table.set_note("decision", "3-level, threshold 1/2");
  out.table.set_note("messages_per_trial", std::to_string(cfg.messages));
  for (int pi = 0; pi < points; ++pi) {
    const double beta = cfg.beta[static_cast<std::size_t>(pi / ns)];
    const double snr = cfg.snr_db[static_cast<std::size_t>(pi % ns)];
    const double p = p_for_beta(cfg.m, cfg.n, beta);
    const double sigma2 = sigma2_for_snr_db(p, cfg.n, cfg.m, snr);
    const Point base = concat({{"beta", beta}, {"p", p}, {"snr_db", snr}, {"sigma2", sigma2}},
                              solver_fields(noise_epsilon(sigma2, cfg.m), cfg.solver));
    for (std::size_t li = 0; li < grid.size(); ++li) {
      std::vector<double> bob, eve;
      long ok = 0;
      for (int t = 0; t < cfg.trials; ++t) {
        const auto& o = res[static_cast<std::size_t>(pi * cfg.trials + t)];
        ok += o.attack_ok[li];
        if (o.active == 0) continue;  // no active entry: BER undefined for this trial
        bob.push_back(static_cast<double>(o.bob_errors) / static_cast<double>(o.active));
        eve.push_back(static_cast<double>(o.eve_errors[li]) / static_cast<double>(o.active));
      }
      const Point pt = concat(base, {{"L", grid[li]}});
      out.table.add(pt, "bob_ber", summarize(bob));
      out.table.add(pt, "eve_ber", summarize(eve));
      out.table.add(pt, "attack_success", summarize_rate(ok, cfg.trials));
    }
  }

  if (grid.size() > 1 && ns == 1) {
    ChartSpec chart;
    chart.file_name = "ber_vs_L.svg";
    chart.title = "BER vs snapshots (Bob solid, Eve dashed)";
    chart.x_key = "L";
    chart.x_label = "snapshots L";
    chart.y_label = "BER";
    chart.metrics = {"bob_ber"};
    chart.dashed_metrics = {"eve_ber"};
    chart.series_key = "beta";
    chart.log_x = true;
    chart.log_y = true;
    out.charts.push_back(chart);
  }
  if (ns > 1 && grid.size() == 1) {
    ChartSpec chart;
    chart.file_name = "ber_vs_snr.svg";
    chart.title = "BER vs SNR (Bob solid, Eve dashed)";
    chart.x_key = "snr_db";
    chart.x_label = "SNR (dB)";
    chart.y_label = "BER";
    chart.metrics = {"bob_ber"};
    chart.dashed_metrics = {"eve_ber"};
    chart.series_key = "beta";
    chart.log_y = true;
    out.charts.push_back(chart);
  }
  return out;
}

ExperimentOutput run_covariance_verify(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const auto grid = snapshot_grid(cfg);
  struct Outcome {
    std::vector<double> cov_err, mean_err;
  };
  std::vector<Outcome> res(static_cast<std::size_t>(cfg.trials));

  parallel_for(cfg.trials, threads, [&](int t) {
    const auto inst = draw_instance(cfg, t);
    const Matrix analytic = analytic_covariance(inst.ch, inst.bs, cfg.p, cfg.sigma2, cfg.constellation, cfg.formula).sigma_z;
    const Vector mean = mean_z(inst.ch, cfg.p, cfg.sigma2);
    const TransmissionConfig tcfg{{cfg.p, cfg.constellation}, cfg.sigma2, grid.back()};
    const Seed s = trial_seed(cfg, t).derive(kSnapshots);
    CovarianceAccumulator acc(mean);
    Vector zsum = Vector::Zero(cfg.n);
    int done = 0;
    auto& o = res[static_cast<std::size_t>(t)];
    for (int l : grid) {
      while (done < l) {
        const int count = std::min(4096 - done % 4096, l - done);
        const Matrix z = hadamard_square_transform(inst.ch, generate_snapshots(inst.ch, inst.bs, tcfg, s, done, count).y);
        acc.add(z);
        zsum += z.rowwise().sum();
        done += count;
      }
      o.cov_err.push_back(relative_frobenius_error(acc.covariance(), analytic));
      const Vector emp_mean = zsum / static_cast<double>(done);
      o.mean_err.push_back(mean.norm() > 0.0 ? (emp_mean - mean).norm() / mean.norm() : emp_mean.norm());
    }
  });

  ExperimentOutput out;
  out.table.set_note("p", format_double(cfg.p));
  out.table.set_note("sigma2", format_double(cfg.sigma2));
  for (std::size_t li = 0; li < grid.size(); ++li) {
    std::vector<double> cov, mean;
    for (int t = 0; t < cfg.trials; ++t) {
      const auto& o = res[static_cast<std::size_t>(t)];
      cov.push_back(o.cov_err[li]);
      mean.push_back(o.mean_err[li]);
      const Point pt{{"L", grid[li]}, {"instance", t}};
      out.table.add(pt, "rel_cov_error", Summary{o.cov_err[li], 0.0, 1});
      out.table.add(pt, "rel_mean_error", Summary{o.mean_err[li], 0.0, 1});
      if (li > 0) out.table.add(pt, "cov_error_ratio", Summary{o.cov_err[li] / o.cov_err[li - 1], 0.0, 1});
    }
    out.table.add({{"L", grid[li]}}, "mean_rel_cov_error", summarize(cov));
    out.table.add({{"L", grid[li]}}, "mean_rel_mean_error", summarize(mean));
  }
  ChartSpec chart;
  chart.file_name = "covariance_error_vs_L.svg";
  chart.title = "Empirical vs analytic z-covariance";
  chart.x_key = "L";
  chart.x_label = "snapshots L";
  chart.y_label = "relative Frobenius error";
  chart.metrics = {"mean_rel_cov_error", "mean_rel_mean_error"};
  chart.log_x = true;
  chart.log_y = true;
  out.charts.push_back(chart);
  return out;
}

ExperimentOutput run_coherence_report(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  std::vector<std::optional<CoherenceReport>> reports(static_cast<std::size_t>(cfg.trials));
  std::vector<Matrix> p_mats(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, threads, [&](int t) {
    const auto inst = draw_instance(cfg, t);
    reports[static_cast<std::size_t>(t)] = coherence_check(inst.ch, inst.bs, cfg.mu, cfg.nu);
    p_mats[static_cast<std::size_t>(t)] = inst.ch.gram_squared();
  });

  ExperimentOutput out;
  out.table.set_note("channel", cfg.channel);
  out.table.set_note("mu", format_double(cfg.mu));
  out.table.set_note("nu", format_double(cfg.nu));
  const Point base{{"n", cfg.n}, {"m", cfg.m}, {"r", cfg.r}};
  for (std::size_t k = 0; k < 7; ++k) {
    std::vector<double> lhs, req;
    long ok = 0;
    char label = 'a';
    for (const auto& rep : reports) {
      const auto& b = rep->bounds[k];
      label = b.label;
      lhs.push_back(b.lhs);
      if (!std::isnan(b.mu_required)) req.push_back(b.mu_required);
      ok += b.satisfied;
    }
    const std::string l(1, label);
    out.table.add(base, "lhs_" + l, summarize(lhs));
    if (!req.empty()) out.table.add(base, "mu_required_" + l, summarize(req));
    out.table.add(base, "satisfied_" + l, summarize_rate(ok, cfg.trials));
  }
  std::vector<double> mu_req, nu_req;
  long singular = 0;
  for (const auto& rep : reports) {
    mu_req.push_back(rep->mu_required());
    if (rep->p_singular)
      ++singular;
    else
      nu_req.push_back(rep->nu_required);
  }
  out.table.add(base, "mu_required", summarize(mu_req));
  if (!nu_req.empty()) out.table.add(base, "nu_required", summarize(nu_req));
  out.table.add(base, "p_singular", summarize_rate(singular, cfg.trials));

  // Sample mean of P against I + (J - I)/m.
  Matrix mean_p = Matrix::Zero(cfg.n, cfg.n);
  for (const auto& pm : p_mats) mean_p += pm;
  mean_p /= static_cast<double>(cfg.trials);
  Matrix expected = Matrix::Constant(cfg.n, cfg.n, 1.0 / cfg.m);
  expected.diagonal().setOnes();
  out.table.add(base, "mean_p_max_deviation", Summary{max_abs(mean_p - expected), 0.0, cfg.trials});
  out.details["gamma"] = reports.front()->gamma;
  out.details["gamma_definition_variant"] = reports.front()->gamma_alt;
  return out;
}

ExperimentOutput run_hoeffding(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const auto grid = snapshot_grid(cfg);
  const int nb = static_cast<int>(cfg.beta.size());
  const double snr = cfg.snr_db.front();
  std::vector<std::optional<HoeffdingCurve>> curves(static_cast<std::size_t>(nb) * static_cast<std::size_t>(cfg.trials));
  parallel_for(nb * cfg.trials, threads, [&](int job) {
    const int bi = job / cfg.trials, t = job % cfg.trials;
    const double p = p_for_beta(cfg.m, cfg.n, cfg.beta[static_cast<std::size_t>(bi)]);
    const auto inst = draw_instance(cfg, t);
    curves[static_cast<std::size_t>(job)] = hoeffding_rate(inst.ch, inst.bs, p, sigma2_for_snr_db(p, cfg.n, cfg.m, snr),
                                                           as_doubles(grid), candidate_search(cfg, t, bi));
  });

  ExperimentOutput out;
  out.table.set_note("snr_db", format_double(snr));
  std::string csv = hoeffding_csv_header();
  for (int bi = 0; bi < nb; ++bi) {
    const double beta = cfg.beta[static_cast<std::size_t>(bi)];
    std::vector<double> d;
    for (int t = 0; t < cfg.trials; ++t) {
      const auto& c = *curves[static_cast<std::size_t>(bi * cfg.trials + t)];
      append_hoeffding_csv(csv, beta, t, c);
      d.push_back(c.d_star);
    }
    out.table.add({{"beta", beta}}, "d_star", summarize(d));
    for (std::size_t li = 0; li < grid.size(); ++li) {
      std::vector<double> rates;
      for (int t = 0; t < cfg.trials; ++t) rates.push_back(curves[static_cast<std::size_t>(bi * cfg.trials + t)]->rate[li]);
      out.table.add({{"beta", beta}, {"L", grid[li]}}, "hoeffding_rate", summarize(rates));
    }
  }
  out.files.emplace_back("hoeffding.csv", csv);
  ChartSpec chart;
  chart.file_name = "hoeffding_vs_L.svg";
  chart.title = "Hoeffding rate exp(-L D*^2)";
  chart.x_key = "L";
  chart.x_label = "snapshots L";
  chart.y_label = "rate";
  chart.dashed_metrics = {"hoeffding_rate"};
  chart.series_key = "beta";
  chart.log_x = true;
  chart.log_y = true;
  out.charts.push_back(chart);
  return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg, int threads) {
  switch (cfg.scenario) {
    case Scenario::kSingleShot: return run_single_shot(cfg, threads);
    case Scenario::kMomentAttack: return run_moment_attack(cfg, threads);
    case Scenario::kBerSweep: return run_ber_sweep(cfg, threads);
    case Scenario::kCovarianceVerify: return run_covariance_verify(cfg, threads);
    case Scenario::kCoherenceReport: return run_coherence_report(cfg, threads);
    case Scenario::kHoeffding: return run_hoeffding(cfg, threads);
  }
  throw std::logic_error("unhandled scenario");
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentOutput& out, const std::filesystem::path& dir,
                   int threads) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  out.table.write_csv(dir / "results.csv");
  files.push_back("results.csv");
  for (const auto& [name, contents] : out.files) {
    std::ofstream f(dir / name, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << contents;
    files.push_back(name);
  }
  for (const auto& chart : out.charts) {
    emit_chart(out.table, chart, dir);
    files.push_back(chart.file_name);
  }
  nlohmann::json manifest = {
      {"scenario", std::string(to_string(cfg.scenario))},
      {"code_version", code_version()},
      {"seed", cfg.master_seed},
      {"threads", threads},
      {"config", to_json(cfg)},
      {"files", files},
      {"details", out.details},
  };
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  f << manifest.dump(2) << "\n";
}

}  // namespace blockveil
