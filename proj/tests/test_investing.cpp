#include <doctest.h>

#include <random>

#include "error.hpp"
#include "investing.hpp"
#include "support.hpp"

using namespace sava;

namespace {

SelectionLedger ledger_with(std::size_t n, std::initializer_list<std::pair<std::size_t, Arm>> sel) {
  SelectionLedger l(n);
  for (std::size_t j = 1; j <= n; ++j) l.mark_arrived(j);
  for (auto [j, arm] : sel) l.mark_selected(j, arm, 1);
  return l;
}

}  // namespace

TEST_CASE("ledger transitions") {
  SelectionLedger l(3);
  CHECK(l.flag(1) == TaskFlag::NotArrived);
  CHECK_THROWS_AS(l.mark_selected(1, Arm::A, 1), Error);
  l.mark_arrived(1);
  CHECK_THROWS_AS(l.mark_arrived(1), Error);
  l.mark_selected(1, Arm::B, 4);
  CHECK(l.is_selected(1));
  CHECK(l.is_selected(1, Arm::B));
  CHECK_FALSE(l.is_selected(1, Arm::A));
  CHECK(*l.stop_time(1) == 4);
  CHECK_THROWS_AS(l.mark_dropped(1, 5), Error);
  CHECK_THROWS_AS(l.flag(0), Error);
  CHECK_THROWS_AS(l.flag(4), Error);
  CHECK(l.first_selected() == 1);
  CHECK(l.first_selected(Arm::A) == 0);
}

TEST_CASE("neighborhood count skips the smallest selection") {
  const auto l = ledger_with(10, {{2, Arm::A}, {4, Arm::B}, {5, Arm::A}});
  CHECK(neighborhood_count(l, 3, 5) == 0);   // only task 2 below
  CHECK(neighborhood_count(l, 5, 5) == 1);   // {2, 4}: 4 counts
  CHECK(neighborhood_count(l, 6, 5) == 2);   // 4 and 5
  CHECK(neighborhood_count(l, 10, 5) == 1);  // window 5..9: only 5
  CHECK(neighborhood_count(l, 6, 5, Arm::A) == 1);  // {2, 5}: 5 counts
  CHECK(neighborhood_count(l, 6, 5, Arm::B) == 0);  // {4}: smallest only
}

TEST_CASE("window levels") {
  const auto l = ledger_with(40, {{2, Arm::A}, {4, Arm::B}, {5, Arm::A}});
  CHECK(levels_symmetric(l, 1, 25, 0.05).a == doctest::Approx(0.002));
  CHECK(levels_symmetric(l, 6, 25, 0.05).a == doctest::Approx(0.05 / 25 * 3));
  CHECK(levels_symmetric(l, 26, 25, 0.05).b == doctest::Approx(0.05 / 25 * 2));
  CHECK(levels_symmetric(l, 31, 25, 0.05).a == 0.0);
  CHECK(levels_classical(l, 6, 25, 0.05) == doctest::Approx(0.05 / 25 * 2));
  const auto arm = levels_arm_specific(l, 6, {0.05, 25}, {0.1, 10});
  CHECK(arm.a == doctest::Approx(0.05 / 25 * 2));
  CHECK(arm.b == doctest::Approx(0.1 / 10 * 1));
  CHECK_THROWS_AS(levels_symmetric(l, 1, 0, 0.05), Error);
  CHECK_THROWS_AS(levels_symmetric(l, 1, 5, 1.0), Error);
}

TEST_CASE("g weights sum to one") {
  for (std::size_t k = 1; k <= 40; ++k) {
    double s = 0;
    for (std::size_t i = 1; i <= k + 3; ++i) s += g_weight(i, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g_weight(k + 1, k) == 0.0);
  }
  CHECK(g_weight(0, 5) == 0.0);
  CHECK(g_weight(3, 5) == 0.125);
  CHECK(g_weight(5, 5) == 0.0625);
}

TEST_CASE("savaspecial levels") {
  const auto l = ledger_with(40, {{2, Arm::A}, {4, Arm::B}, {5, Arm::A}});
  // j = 6: alpha (g(6) + g(6-4) + g(6-5)), k = 25.
  CHECK(levels_savaspecial(l, 6, 25, 0.1).a == doctest::Approx(0.1 * (1.0 / 64 + 0.25 + 0.5)));
  CHECK(levels_savaspecial(l, 6, 3, 0.1).a == doctest::Approx(0.1 * (0.25 + 0.5)));
  CHECK(levels_savaspecial(l, 9, 3, 0.1).a == 0.0);
}

TEST_CASE("method1 slots rotate with time") {
  const auto l = ledger_with(5, {});
  const double a0 = levels_method1(l, 1, 3, 0.1, 10, 10).a;
  const double a1 = levels_method1(l, 1, 3, 0.1, 11, 10).a;
  const double a3 = levels_method1(l, 1, 3, 0.1, 13, 10).a;
  CHECK(a0 == doctest::Approx(0.05));
  CHECK(a1 == doctest::Approx(0.025));
  CHECK(a3 == doctest::Approx(a0));
}

TEST_CASE("fsr hat uses running maxima over arrived tasks") {
  auto l = ledger_with(3, {{1, Arm::A}, {2, Arm::B}});
  std::vector<LevelRecord> rec(3);
  rec[0].record({0.02, 0.02});
  rec[1].record({0.03, 0.01});
  rec[1].record({0.0, 0.0});
  rec[2].record({0.01, 0.04});
  CHECK(rec[1].a == 0.0);
  CHECK(rec[1].max_a == 0.03);
  CHECK(fsr_hat(rec, l) == doctest::Approx((0.02 + 0.03 + 0.04) / 2));
  CHECK(fsr_hat_arm(rec, l, Arm::A) == doctest::Approx(0.06 / 1));
  CHECK(fsr_hat_arm(rec, l, Arm::B) == doctest::Approx(0.07 / 1));
}

TEST_CASE("greedy wealth") {
  WealthState w{0.1};
  auto s = wealth_greedy_step(w, true, 0.04);
  CHECK(s.level == doctest::Approx(0.04));
  CHECK(s.wealth.w == doctest::Approx(0.06));
  s = wealth_greedy_step(s.wealth, true, 0.07);
  CHECK(s.level == 0.0);
  s = wealth_greedy_step(s.wealth, false, 0.001);
  CHECK(s.level == 0.0);
  CHECK(wealth_greedy_credit({0.0}, 0, 1, 0.1).w == 0.0);
  CHECK(wealth_greedy_credit({0.0}, 1, 3, 0.1).w == doctest::Approx(0.2));
  CHECK_THROWS_AS(wealth_greedy_step({-1.0}, true, 0.1), Error);
}

TEST_CASE("levels agree with direct counting") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 2 + rng() % 30;
    const std::size_t k = 1 + rng() % 8;
    const auto l = testing::random_ledger(rng, n);
    std::set<std::size_t> any, a, b;
    for (std::size_t j = 1; j <= n; ++j) {
      if (l.is_selected(j)) any.insert(j);
      if (l.is_selected(j, Arm::A)) a.insert(j);
      if (l.is_selected(j, Arm::B)) b.insert(j);
    }
    for (std::size_t j = 1; j <= n; ++j) {
      CHECK(levels_symmetric(l, j, k, 0.1).a == testing::ref::window_level(any, j, k, 0.1));
      CHECK(levels_classical(l, j, k, 0.1) == testing::ref::window_level(a, j, k, 0.1));
      CHECK(levels_arm_specific(l, j, {0.1, k}, {0.2, k}).b == testing::ref::window_level(b, j, k, 0.2));
      CHECK(levels_savaspecial(l, j, k, 0.1).a == doctest::Approx(testing::ref::special_level(any, j, k, 0.1)));
    }
  }
}

TEST_CASE("level monotonicity and locality on a small sample") {
  CHECK(testing::level_property_violations(500, 5) == 0);
}
