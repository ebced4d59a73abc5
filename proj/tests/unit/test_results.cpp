#include <cmath>

#include "doctest.h"

#include "blockveil/charts.hpp"
#include "blockveil/results.hpp"

using namespace blockveil;

TEST_CASE("summaries") {
  auto s = summarize({1, 2, 3, 4});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(summarize({7}).std_error == 0.0);
  auto r = summarize_rate(30, 100);
  CHECK(r.mean == doctest::Approx(0.3));
  // Binomial: sqrt(p(1-p)/(n-1)) with the sample sd.
  CHECK(r.std_error == doctest::Approx(std::sqrt(0.3 * 0.7 / 99.0)));
  CHECK(summarize_rate(0, 10).std_error == 0.0);
  CHECK_THROWS(summarize_rate(11, 10));
}

TEST_CASE("result table csv") {
  ResultTable t;
  t.set_note("scenario", "demo");
  t.add({{"beta", 2.5}, {"L", 100}}, "failure", summarize_rate(3, 4));
  t.add({{"beta", 5}}, "ill_conditioned", summarize_rate(0, 4));
  CHECK(t.point_keys() == std::vector<std::string>{"beta", "L"});
  const std::string csv = t.to_csv();
  CHECK(csv ==
        "# scenario=demo\n"
        "beta,L,metric,value,trials,std_error\n"
        "2.5,100,failure,0.75,4,0.25\n"
        "5,,ill_conditioned,0,4,0\n");
  CHECK(t.rows()[0].get("L") == 100.0);
  CHECK_FALSE(t.rows()[1].get("L").has_value());
  CHECK_THROWS(t.add(ResultRow{}));
}

TEST_CASE("charts") {
  ResultTable t;
  ChartSpec spec;
  spec.x_key = "L";
  spec.metrics = {"failure"};
  spec.dashed_metrics = {"hoeffding_rate"};
  spec.series_key = "beta";
  spec.log_x = spec.log_y = true;
  CHECK_THROWS(render_svg(t, spec));
  t.add({{"beta", 2}, {"L", 10}}, "failure", summarize_rate(1, 1));
  const std::string single = render_svg(t, spec);
  CHECK(single.find("<svg") != std::string::npos);
  for (double l : {100.0, 1000.0}) {
    t.add({{"beta", 2}, {"L", l}}, "failure", summarize_rate(1, 2));
    t.add({{"beta", 4}, {"L", l}}, "failure", summarize_rate(0, 2));
    t.add({{"beta", 2}, {"L", l}}, "hoeffding_rate", Summary{1.0 / l, 0, 1});
  }
  const std::string a = render_svg(t, spec);
  CHECK(a == render_svg(t, spec));
  CHECK(a.find("stroke-dasharray") != std::string::npos);
  spec.metrics = {"missing"};
  spec.dashed_metrics.clear();
  CHECK_THROWS(render_svg(t, spec));
}
