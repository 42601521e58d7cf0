#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>

#include "baselines.hpp"
#include "error.hpp"
#include "support.hpp"

using namespace sava;

namespace {

double lordpp_oracle(double j) {
  return 0.0722 * std::log(std::max(j, 2.0)) / (j * std::exp(std::sqrt(std::log(j))));
}

}  // namespace

TEST_CASE("lordpp gamma and first level") {
  CHECK(gamma_lordpp(0) == 0.0);
  CHECK(gamma_lordpp(1) == doctest::Approx(0.0722 * std::log(2.0)));
  CHECK(gamma_lordpp(2) == doctest::Approx(0.010883).epsilon(1e-4));
  Spender s(default_params(BaselineRule::LordPP, 0.05));
  CHECK(std::abs(s.next_level() - 2.5023e-4) < 1e-7);
  CHECK(s.next_level() == doctest::Approx(0.005 * lordpp_oracle(1.0)).epsilon(1e-14));
}

TEST_CASE("lordpp level after a rejection") {
  Spender s(default_params(BaselineRule::LordPP, 0.05));
  CHECK(s.test(0.0));
  CHECK(s.rejections() == 1);
  CHECK(s.next_level() == doctest::Approx(0.005 * lordpp_oracle(2) + 0.045 * lordpp_oracle(1)));
  CHECK_FALSE(s.test(0.9));
  CHECK(s.test(0.0));
  // j = 4, rejections at 1 and 3.
  CHECK(s.next_level() ==
        doctest::Approx(0.005 * lordpp_oracle(4) + 0.045 * lordpp_oracle(3) + 0.05 * lordpp_oracle(1)));
}

TEST_CASE("power-law gamma normalization") {
  const double oracle = boost::math::zeta(1.6) - 1.0;
  CHECK(std::abs(gamma_power_normalizer() - oracle) < 1e-9);
  CHECK(gamma_power(0) == 0.0);
  CHECK(gamma_power(1) == doctest::Approx(std::pow(2.0, -1.6) / oracle));
}

TEST_CASE("saffron and addis first levels") {
  Spender saffron(default_params(BaselineRule::Saffron, 0.05));
  CHECK(saffron.next_level() == doctest::Approx(0.5 * 0.025 * gamma_power(1)));
  Spender addis(default_params(BaselineRule::Addis, 0.05));
  CHECK(addis.next_level() == 0.0);
  // A p-value below tau advances the ADDIS clock.
  addis.test(0.4);
  CHECK(addis.next_level() == doctest::Approx(0.25 * 0.025 * gamma_power(1)));
  // A discarded p-value (above tau) leaves it unchanged.
  Spender addis2(default_params(BaselineRule::Addis, 0.05));
  addis2.test(0.9);
  CHECK(addis2.next_level() == 0.0);
}

TEST_CASE("saffron level after a rejection") {
  Spender s(default_params(BaselineRule::Saffron, 0.05));
  CHECK(s.test(0.0));
  // j = 2, one rejection at 1: (1 - lambda)(w0 g(1) + (alpha - w0) g(1)).
  CHECK(s.next_level() == doctest::Approx(0.5 * (0.025 * gamma_power(1) + 0.025 * gamma_power(1))));
}

TEST_CASE("levels decay without rejections") {
  for (auto rule : {BaselineRule::LordPP, BaselineRule::Saffron}) {
    Spender s(default_params(rule, 0.05));
    double last = s.next_level();
    for (int i = 0; i < 50; ++i) {
      s.test(1.0);
      CHECK(s.next_level() <= last);
      last = s.next_level();
    }
  }
}

TEST_CASE("spender rejects bad inputs") {
  Spender s(default_params(BaselineRule::LordPP, 0.05));
  CHECK_THROWS_AS(s.test(1.5), Error);
  CHECK_THROWS_AS(default_params(BaselineRule::Addis, 0.0), Error);
  auto bad = default_params(BaselineRule::Addis, 0.05);
  bad.tau = 0.2;
  CHECK_THROWS_AS(Spender{bad}, Error);
  CHECK(baseline_rule_from_string(to_string(BaselineRule::Saffron)) == BaselineRule::Saffron);
  CHECK_THROWS_AS(baseline_rule_from_string("bonferroni"), Error);
}

TEST_CASE("directional combination") {
  CHECK(combine_directional(false, false, 0.1, 0.1) == Decision::D);
  CHECK(combine_directional(true, false, 0.1, 0.01) == Decision::A);
  CHECK(combine_directional(false, true, 0.01, 0.1) == Decision::B);
  CHECK(combine_directional(true, true, 0.01, 0.02) == Decision::A);
  CHECK(combine_directional(true, true, 0.02, 0.01) == Decision::B);
  CHECK(combine_directional(true, true, 0.01, 0.01) == Decision::B);
}

TEST_CASE("each task is tested once at its first decision time") {
  DecisionGrid grid{{2, 5, 9}, {1, 2, 3, 5, 6}};
  testing::Script script{7, {1, 0, 2, 0, 1}};
  testing::ScriptedSource src(script);
  const auto r = run_baseline({BaselineRule::LordPP, 0.05}, grid, src);
  REQUIRE(r.log.size() == 5);
  const std::vector<Time> expect{2, 2, 5, 5, 9};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r.log[i].task == i + 1);
    CHECK(r.log[i].time == expect[i]);
    CHECK(r.log[i].decision != Decision::C);
    CHECK(r.log[i].p_a == script.raw(i + 1, expect[i]).a);
  }
}
