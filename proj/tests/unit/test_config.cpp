#include "doctest.h"

#include "blockveil/config.hpp"

using namespace blockveil;

TEST_CASE("parses a full config") {
  auto cfg = parse_config(R"(# two attack curves
scenario = moment-attack
n = 200
m = 100
r = 5
beta = 2.5, 5      # two curves
snapshots = 100, 1000
snr_db = 0
trials = 500
seed = 18446744073709551615
centering = sample-mean
moment_formula = published
adaptive_rho = false
)");
  CHECK(cfg.scenario == Scenario::kMomentAttack);
  CHECK(cfg.beta == std::vector<double>{2.5, 5});
  CHECK(cfg.snapshots.size() == 2);
  CHECK(cfg.master_seed == 18446744073709551615ull);
  CHECK(cfg.centering == Centering::kSampleMean);
  CHECK(cfg.formula == MomentFormula::kPublished);
  CHECK_FALSE(cfg.solver.adaptive_rho);
  CHECK(cfg.d() == 40);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("n = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = single-shot\nfoo = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = single-shot\nn = 4\nn = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = single-shot\nn = four\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = nonsense\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = single-shot\nbeta = 1,,2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = single-shot\nn\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/blockveil.conf"), ConfigError);

  auto cfg = parse_config("scenario = ber-sweep\nn = 40\nm = 20\nr = 4\nbeta = 10\nsnapshots = 10\nsnr_db = 0\n");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // needs bpsk
  cfg.constellation = Constellation::kBpsk;
  CHECK_NOTHROW(cfg.validate());
  cfg.r = 7;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  auto cov = parse_config("scenario = covariance-verify\nn = 32\nm = 16\nr = 4\nsnapshots = 10\n");
  CHECK_THROWS_AS(cov.validate(), ConfigError);
  auto low = parse_config("scenario = single-shot\nn = 40\nm = 20\nr = 4\nbeta = 0.25\n");
  CHECK_THROWS_AS(low.validate(), ConfigError);
}

TEST_CASE("desk presets validate") {
  for (auto s : {Scenario::kSingleShot, Scenario::kMomentAttack, Scenario::kBerSweep, Scenario::kCovarianceVerify,
                 Scenario::kCoherenceReport, Scenario::kHoeffding}) {
    ExperimentConfig cfg;
    cfg.scenario = s;
    cfg.master_seed = 77;
    apply_desk_preset(cfg);
    CHECK(cfg.desk);
    CHECK(cfg.master_seed == 77);
    CHECK_NOTHROW(cfg.validate());
    CHECK(parse_scenario(to_string(s)) == s);
    CHECK(to_json(cfg)["scenario"] == std::string(to_string(s)));
  }
}
