#pragma once
// Shared test machinery: scripted worlds, a from-scratch reference engine and
// the randomized property checks. Nothing here calls into the investing or
// policy code; the reference re-derives levels and decisions by direct counting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "engine.hpp"
#include "evidence.hpp"
#include "investing.hpp"
#include "policy.hpp"
#include "simgen.hpp"

namespace sava::testing {

// Raw p-value pair a scripted task reports at decision time t.
struct Script {
  std::uint64_t seed = 0;
  std::vector<int> signal;  // per task: 0 none, 1 favours A, 2 favours B

  PValuePair raw(std::size_t task, Time t) const {
    std::mt19937_64 rng(derive_seed(derive_seed(seed, task), static_cast<std::uint64_t>(t + 1000)));
    const double u1 = uniform_open(rng), u2 = uniform_open(rng);
    switch (signal[task - 1]) {
      case 1: return {std::pow(u1, 6.0), u2};
      case 2: return {u1, std::pow(u2, 6.0)};
      default: return {u1, u2};
    }
  }
};

class ScriptedSource : public StreamSource {
 public:
  explicit ScriptedSource(const Script& s) : script_(s) {}
  TaskBatch collect(std::size_t task, Time, Time to) override {
    TaskBatch b;
    b.task = task;
    b.direct = script_.raw(task, to);
    return b;
  }

 private:
  const Script& script_;
};

struct FuzzInstance {
  DecisionGrid grid;
  Script script;
  std::vector<double> tolerances;
  EngineMode mode;
};

inline FuzzInstance fuzz_instance(std::uint64_t seed, std::size_t max_tasks = 10,
                                  std::size_t max_times = 20) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
  };
  FuzzInstance f;
  const std::size_t n_times = pick(1, max_times);
  Time t = static_cast<Time>(pick(0, 3));
  for (std::size_t i = 0; i < n_times; ++i) {
    t += static_cast<Time>(pick(1, 3));
    f.grid.times.push_back(t);
  }
  const std::size_t n_tasks = pick(1, max_tasks);
  for (std::size_t j = 0; j < n_tasks; ++j)
    f.grid.arrivals.push_back(f.grid.times.front() - 2 +
                              static_cast<Time>(pick(0, static_cast<std::size_t>(t - f.grid.times.front() + 2))));
  std::sort(f.grid.arrivals.begin(), f.grid.arrivals.end());
  f.script.seed = rng();
  for (std::size_t j = 0; j < n_tasks; ++j) f.script.signal.push_back(static_cast<int>(pick(0, 2)));
  for (std::size_t j = 0; j < n_tasks; ++j)
    f.tolerances.push_back(pick(0, 3) == 0 ? static_cast<double>(pick(1, 12)) : kInfiniteTolerance);
  const double alphas[] = {0.05, 0.1, 0.2, 0.5};
  const double alpha = alphas[pick(0, 3)];
  const std::size_t k = pick(1, 6);
  switch (pick(0, 3)) {
    case 0: f.mode = mode::Symmetric{alpha, k}; break;
    case 1: f.mode = mode::Classical{alpha, k}; break;
    case 2: f.mode = mode::ArmSpecific{{alpha, k}, {alphas[pick(0, 3)], pick(1, 6)}}; break;
    default: f.mode = mode::SavaSpecial{alpha, k}; break;
  }
  return f;
}

// ---------------------------------------------------------------------------
// From-scratch reference: at every decision time the p-values are recomputed
// as the minimum over every raw pair the task has received, and the levels by
// counting selected indices in the current selection sets.

namespace ref {

inline double g(std::size_t i, std::size_t k) {
  if (i == 0 || i > k) return 0.0;
  double v = 1.0;
  for (std::size_t n = 0; n < (i < k ? i : k - 1); ++n) v *= 0.5;
  return v;
}

// #{s in sel : s < j, s >= j - k, s != min(sel below j)}
inline std::size_t window_count(const std::set<std::size_t>& sel, std::size_t j, std::size_t k) {
  std::vector<std::size_t> below;
  for (std::size_t s : sel)
    if (s < j) below.push_back(s);
  if (below.empty()) return 0;
  std::size_t c = 0;
  for (std::size_t n = 1; n < below.size(); ++n)
    if (below[n] + k >= j) ++c;
  return c;
}

inline double window_level(const std::set<std::size_t>& sel, std::size_t j, std::size_t k, double alpha) {
  return alpha / static_cast<double>(k) *
         ((j <= k ? 1.0 : 0.0) + static_cast<double>(window_count(sel, j, k)));
}

inline double special_level(const std::set<std::size_t>& sel, std::size_t j, std::size_t k, double alpha) {
  double level = j <= k ? alpha * g(j, k) : 0.0;
  std::vector<std::size_t> below;
  for (std::size_t s : sel)
    if (s < j) below.push_back(s);
  for (std::size_t n = 1; n < below.size(); ++n)
    if (j <= below[n] + k) level += alpha * g(j - below[n], k);
  return level;
}

}  // namespace ref

inline std::vector<DecisionRow> reference_log(const FuzzInstance& f) {
  const std::size_t n = f.grid.n_tasks();
  std::vector<char> decision(n + 1, 'N');  // N = not arrived
  std::vector<Time> first_active(n + 1, 0), stopped(n + 1, std::numeric_limits<Time>::max());
  std::set<std::size_t> sel_any, sel_a, sel_b;
  std::vector<DecisionRow> log;
  for (std::size_t i = 0; i < f.grid.times.size(); ++i) {
    const Time t = f.grid.times[i];
    const Time prev = i == 0 ? std::numeric_limits<Time>::min() : f.grid.times[i - 1];
    std::vector<std::size_t> active;
    for (std::size_t j = 1; j <= n; ++j) {
      const Time a = f.grid.arrivals[j - 1];
      if (decision[j] == 'C' || (decision[j] == 'N' && a > prev && a <= t)) {
        if (decision[j] == 'N') {
          decision[j] = 'C';
          first_active[j] = t;
        }
        active.push_back(j);
      }
    }
    for (std::size_t j : active) {
      // p-values from scratch over every grid time the task has been active.
      double pa = 1.0, pb = 1.0;
      for (std::size_t s = 0; s <= i; ++s) {
        const Time ts = f.grid.times[s];
        if (ts < first_active[j]) continue;
        const auto r = f.script.raw(j, ts);
        pa = std::min(pa, r.a);
        pb = std::min(pb, r.b);
      }
      double la = 0.0, lb = 0.0;
      bool classical = false;
      if (const auto* m = std::get_if<mode::Symmetric>(&f.mode)) {
        la = lb = ref::window_level(sel_any, j, m->k, m->alpha);
      } else if (const auto* m = std::get_if<mode::Classical>(&f.mode)) {
        la = ref::window_level(sel_a, j, m->k, m->alpha);
        classical = true;
      } else if (const auto* m = std::get_if<mode::ArmSpecific>(&f.mode)) {
        la = ref::window_level(sel_a, j, m->a.k, m->a.alpha);
        lb = ref::window_level(sel_b, j, m->b.k, m->b.alpha);
      } else if (const auto* m = std::get_if<mode::SavaSpecial>(&f.mode)) {
        la = lb = ref::special_level(sel_any, j, m->k, m->alpha);
      }
      const bool sig_a = pa <= la;
      const bool sig_b = !classical && pb <= lb;
      char d;
      if (sig_a && sig_b) d = pa <= pb ? 'A' : 'B';
      else if (sig_a) d = 'A';
      else if (sig_b) d = 'B';
      else d = static_cast<double>(t - f.grid.arrivals[j - 1]) < f.tolerances[j - 1] ? 'C' : 'D';
      decision[j] = d;
      if (d == 'A') {
        sel_any.insert(j);
        sel_a.insert(j);
      } else if (d == 'B') {
        sel_any.insert(j);
        sel_b.insert(j);
      }
      if (d != 'C') stopped[j] = t;
      log.push_back({i + 1, t, j, decision_from_char(d), pa, pb, la, lb});
    }
  }
  return log;
}

inline RunResult engine_log(const FuzzInstance& f) {
  ScriptedSource src(f.script);
  return run(f.mode, DirectPValues{}, f.grid, src, f.tolerances);
}

inline bool same_row(const DecisionRow& x, const DecisionRow& y) {
  return x.time_index == y.time_index && x.time == y.time && x.task == y.task &&
         x.decision == y.decision && x.p_a == y.p_a && x.p_b == y.p_b && x.level_a == y.level_a &&
         x.level_b == y.level_b;
}

inline bool logs_identical(const std::vector<DecisionRow>& x, const std::vector<DecisionRow>& y) {
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!same_row(x[i], y[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Property checks. Each returns the number of violations found.

// Every (p_a, p_b, l_a, l_b) on a boundary-inclusive grid lands in exactly one
// region, and the decision agrees with the region.
inline std::size_t region_violations(std::size_t points = 50) {
  std::vector<double> v;
  for (std::size_t i = 0; i < points; ++i) v.push_back(static_cast<double>(i) / static_cast<double>(points - 1));
  std::size_t bad = 0;
  for (double pa : v)
    for (double pb : v)
      for (double la : v)
        for (double lb : v) {
          const bool in1a = pa <= la && pb <= lb && pa <= pb;
          const bool in1b = pa <= la && pb <= lb && pb < pa;
          const bool in2a = pa <= la && pb > lb;
          const bool in2b = pa > la && pb <= lb;
          const bool in3 = pa > la && pb > lb;
          if (in1a + in1b + in2a + in2b + in3 != 1) {
            ++bad;
            continue;
          }
          const Region r = classify_region(pa, pb, la, lb);
          const Region expect = in1a ? Region::D1A : in1b ? Region::D1B : in2a ? Region::D2A
                                : in2b ? Region::D2B : Region::D3;
          const Decision d = decide(pa, pb, la, lb, 0.0, kInfiniteTolerance);
          const Decision expect_d = (in1a || in2a) ? Decision::A : (in1b || in2b) ? Decision::B : Decision::C;
          if (r != expect || d != expect_d) ++bad;
        }
  return bad;
}

// Running-minimum p-values never increase along random update sequences.
inline std::size_t pvalue_monotonicity_violations(std::size_t sequences, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (std::size_t s = 0; s < sequences; ++s) {
    const int kind = static_cast<int>(s % 3);
    EvidenceState st;
    const std::size_t len = 1 + rng() % 60;
    const double mu = (uniform_open(rng) - 0.5) * 2.0;
    for (std::size_t i = 0; i < len; ++i) {
      const EvidenceState before = st;
      if (kind == 0)
        st = update_hoeffding(st, sample_truncnorm(mu, 1.0, -2.0, 2.0, rng), HoeffdingBounded{2.0, 0.05});
      else if (kind == 1)
        st = update_gaussian_lr(st, mu + normal_quantile(uniform_open(rng)), GaussianLR{0.3});
      else
        st = update_direct(st, {uniform_open(rng), uniform_open(rng)});
      if (st.p_a > before.p_a || st.p_b > before.p_b || st.p_a < 0 || st.p_b < 0 || st.p_a > 1 || st.p_b > 1)
        ++bad;
    }
  }
  return bad;
}

// Random ledger with tasks 1..n, some selected (either arm), some dropped.
inline SelectionLedger random_ledger(std::mt19937_64& rng, std::size_t n) {
  SelectionLedger l(n);
  for (std::size_t j = 1; j <= n; ++j) {
    const auto roll = rng() % 10;
    if (roll == 0) continue;  // not arrived
    l.mark_arrived(j);
    if (roll <= 3) l.mark_selected(j, Arm::A, 1);
    else if (roll <= 5) l.mark_selected(j, Arm::B, 1);
    else if (roll == 6) l.mark_dropped(j, 1);
  }
  return l;
}

// Level monotonicity: adding selections never lowers any valid level.
// Locality: levels of task j ignore everything about tasks >= j.
inline std::size_t level_property_violations(std::size_t ledgers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (std::size_t s = 0; s < ledgers; ++s) {
    const std::size_t n = 2 + rng() % 40;
    const std::size_t k = 1 + rng() % 12;
    const double alpha = 0.01 + 0.4 * uniform_open(rng);
    SelectionLedger l = random_ledger(rng, n);
    auto levels = [&](const SelectionLedger& led, std::size_t j) {
      std::vector<double> v;
      const auto sym = levels_symmetric(led, j, k, alpha);
      const auto arm = levels_arm_specific(led, j, {alpha, k}, {alpha / 2, k + 1});
      const auto sp = levels_savaspecial(led, j, k, alpha);
      v = {sym.a, sym.b, levels_classical(led, j, k, alpha), arm.a, arm.b, sp.a};
      return v;
    };
    const std::size_t j = 1 + rng() % n;
    const auto base = levels(l, j);

    // Monotonicity: select one more continuing task with index below j.
    std::vector<std::size_t> open;
    for (std::size_t i = 1; i < j; ++i)
      if (l.flag(i) == TaskFlag::Continuing) open.push_back(i);
    if (!open.empty()) {
      SelectionLedger more = l;
      more.mark_selected(open[rng() % open.size()], rng() % 2 ? Arm::A : Arm::B, 2);
      const auto after = levels(more, j);
      for (std::size_t c = 0; c < base.size(); ++c)
        if (after[c] < base[c]) ++bad;
    }

    // Locality: rebuild the ledger with tasks >= j re-randomized.
    SelectionLedger other(n);
    for (std::size_t i = 1; i <= n; ++i) {
      const TaskFlag f = i < j ? l.flag(i) : static_cast<TaskFlag>(rng() % 5);
      if (f == TaskFlag::NotArrived) continue;
      other.mark_arrived(i);
      if (f == TaskFlag::SelectedA) other.mark_selected(i, Arm::A, 1);
      if (f == TaskFlag::SelectedB) other.mark_selected(i, Arm::B, 1);
      if (f == TaskFlag::Dropped) other.mark_dropped(i, 1);
    }
    if (levels(other, j) != base) ++bad;
  }
  return bad;
}

}  // namespace sava::testing
