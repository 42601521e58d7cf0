#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "error.hpp"

namespace sava {

namespace {

constexpr double kFsrHatSlack = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_classical(const EngineMode& m) { return std::holds_alternative<mode::Classical>(m); }

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const auto n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

void DecisionGrid::validate() const {
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1]) fail(ErrorCode::InvalidArgument, "decision times must strictly increase");
  for (std::size_t j = 1; j < arrivals.size(); ++j)
    if (arrivals[j] < arrivals[j - 1]) fail(ErrorCode::InvalidArgument, "arrivals must be in task order");
  if (!times.empty())
    for (Time a : arrivals)
      if (a > times.back())
        fail(ErrorCode::InvalidArgument, "a task arrives after the final decision time");
}

bool DecisionGrid::has_arrival_ties() const {
  return std::adjacent_find(arrivals.begin(), arrivals.end()) != arrivals.end();
}

std::string mode_name(const EngineMode& m) {
  return std::visit(overloaded{
                        [](const mode::Symmetric&) { return std::string("sava"); },
                        [](const mode::Classical&) { return std::string("sava-classical"); },
                        [](const mode::ArmSpecific&) { return std::string("sava-armspec"); },
                        [](const mode::SavaSpecial&) { return std::string("savaspecial"); },
                        [](const mode::AdversarialMethod1&) { return std::string("method1"); },
                        [](const mode::AdversarialMethod2&) { return std::string("method2"); },
                    },
                    m);
}

bool is_valid_mode(const EngineMode& m) {
  return !std::holds_alternative<mode::AdversarialMethod1>(m) &&
         !std::holds_alternative<mode::AdversarialMethod2>(m);
}

void validate(const EngineMode& m) {
  auto check = [](double alpha, std::size_t k) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
    if (k == 0) fail(ErrorCode::InvalidArgument, "window size k must be >= 1");
  };
  std::visit(overloaded{
                 [&](const mode::Symmetric& s) { check(s.alpha, s.k); },
                 [&](const mode::Classical& s) { check(s.alpha, s.k); },
                 [&](const mode::ArmSpecific& s) {
                   check(s.a.alpha, s.a.k);
                   check(s.b.alpha, s.b.k);
                 },
                 [&](const mode::SavaSpecial& s) { check(s.alpha, s.k); },
                 [&](const mode::AdversarialMethod1& s) { check(s.alpha, s.k); },
                 [&](const mode::AdversarialMethod2& s) { check(s.alpha, 1); },
             },
             m);
}

Engine::Engine(EngineMode mode, EvidenceKind evidence, DecisionGrid grid,
               std::vector<double> tolerances)
    : mode_(mode), evidence_(evidence), grid_(std::move(grid)), ledger_(grid_.n_tasks()) {
  sava::validate(mode_);
  sava::validate(evidence_);
  grid_.validate();
  if (!tolerances.empty() && tolerances.size() != grid_.n_tasks())
    fail(ErrorCode::InvalidArgument, "one tolerance per task expected");

  if (std::holds_alternative<mode::AdversarialMethod1>(mode_)) {
    for (std::size_t i = 1; i < grid_.times.size(); ++i)
      if (grid_.times[i] - grid_.times[i - 1] != 1)
        fail(ErrorCode::Unsupported,
             "method1 levels need decision times on a unit-spaced integer grid");
  }
  if (const auto* m2 = std::get_if<mode::AdversarialMethod2>(&mode_)) wealth_.w = m2->alpha;

  tasks_.resize(grid_.n_tasks());
  for (std::size_t j = 1; j <= tasks_.size(); ++j) {
    auto& task = tasks_[j - 1];
    task.id = j;
    task.arrival = grid_.arrivals[j - 1];
    if (!tolerances.empty()) {
      if (!(tolerances[j - 1] > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be positive");
      task.tolerance = tolerances[j - 1];
    }
  }
}

Time Engine::next_time() const {
  if (done()) fail(ErrorCode::Protocol, "decision grid exhausted");
  return grid_.times[next_];
}

Time Engine::previous_time() const {
  return next_ == 0 ? std::numeric_limits<Time>::min() : grid_.times[next_ - 1];
}

std::vector<std::size_t> Engine::upcoming_active() const {
  std::vector<std::size_t> active;
  if (done()) return active;
  const Time prev = previous_time();
  const Time t = grid_.times[next_];
  for (const auto& task : tasks_) {
    const auto flag = ledger_.flag(task.id);
    if (flag == TaskFlag::Continuing ||
        (flag == TaskFlag::NotArrived && task.arrival > prev && task.arrival <= t))
      active.push_back(task.id);
  }
  return active;
}

std::vector<LevelRecord> Engine::level_records() const {
  std::vector<LevelRecord> out;
  out.reserve(tasks_.size());
  for (const auto& task : tasks_) out.push_back(task.levels);
  return out;
}

LevelPair Engine::allocate(TaskState& task, Time t) {
  const std::size_t j = task.id;
  return std::visit(
      overloaded{
          [&](const mode::Symmetric& s) { return levels_symmetric(ledger_, j, s.k, s.alpha); },
          [&](const mode::Classical& s) {
            return LevelPair{levels_classical(ledger_, j, s.k, s.alpha), 0.0};
          },
          [&](const mode::ArmSpecific& s) { return levels_arm_specific(ledger_, j, s.a, s.b); },
          [&](const mode::SavaSpecial& s) { return levels_savaspecial(ledger_, j, s.k, s.alpha); },
          [&](const mode::AdversarialMethod1& s) {
            return levels_method1(ledger_, j, s.k, s.alpha, t, *task.first_eval_time);
          },
          [&](const mode::AdversarialMethod2&) {
            const bool eligible = task.active_last_step && task.levels.a == 0.0 && task.levels.b == 0.0;
            const double prev_min = std::min(task.last_pvalues.a, task.last_pvalues.b);
            const auto out = wealth_greedy_step(wealth_, eligible, prev_min);
            wealth_ = out.wealth;
            return LevelPair{out.level, out.level};
          },
      },
      mode_);
}

void Engine::check_fsr_hat(double value) const {
  const auto records = level_records();
  auto over = [&](double v, double alpha, const char* what) {
    if (v > alpha + kFsrHatSlack)
      fail(ErrorCode::Invariant, std::string("FSR-hat") + what + " = " + std::to_string(v) +
                                     " exceeds alpha = " + std::to_string(alpha) + " in mode " +
                                     mode_name(mode_));
  };
  std::visit(overloaded{
                 [&](const mode::Symmetric& s) { over(value, s.alpha, ""); },
                 [&](const mode::SavaSpecial& s) { over(value, s.alpha, ""); },
                 [&](const mode::Classical& s) {
                   over(fsr_hat_arm(records, ledger_, Arm::A), s.alpha, "^A");
                 },
                 [&](const mode::ArmSpecific& s) {
                   over(fsr_hat_arm(records, ledger_, Arm::A), s.a.alpha, "^A");
                   over(fsr_hat_arm(records, ledger_, Arm::B), s.b.alpha, "^B");
                 },
                 [](const auto&) {},
             },
             mode_);
}

std::vector<DecisionRow> Engine::step(Time t, std::span<const TaskBatch> batches) {
  if (done()) fail(ErrorCode::Protocol, "decision grid exhausted");
  if (t != grid_.times[next_])
    fail(ErrorCode::Protocol, "out-of-order decision time " + std::to_string(t) + " (expected " +
                                  std::to_string(grid_.times[next_]) + ")");

  // Step 1: active set.
  const auto active = upcoming_active();
  std::vector<char> is_active(tasks_.size() + 1, 0);
  for (std::size_t j : active) {
    is_active[j] = 1;
    if (ledger_.flag(j) == TaskFlag::NotArrived) ledger_.mark_arrived(j);
  }

  for (const auto& batch : batches) {
    if (batch.task == 0 || batch.task > tasks_.size())
      fail(ErrorCode::InvalidArgument, "observation for unknown task " + std::to_string(batch.task));
    if (!is_active[batch.task]) {
      const bool frozen = ledger_.has_arrived(batch.task);
      fail(ErrorCode::Protocol, "observation for " + std::string(frozen ? "frozen" : "not yet arrived") +
                                    " task " + std::to_string(batch.task));
    }
  }

  // Step 2: evidence.
  for (const auto& batch : batches) {
    auto& task = tasks_[batch.task - 1];
    if (batch.direct) {
      if (!std::holds_alternative<DirectPValues>(evidence_))
        fail(ErrorCode::Protocol, "direct p-values supplied to a sample-based engine");
      task.evidence = update_direct(task.evidence, *batch.direct);
    }
    task.evidence = absorb(task.evidence, batch.samples, evidence_);
  }

  // Step 3: ascending-index allocation and decisions; selections made earlier
  // in this loop already count toward later tasks' levels.
  const std::size_t selected_before = ledger_.count_selected();
  std::vector<DecisionRow> rows;
  rows.reserve(active.size());
  for (std::size_t j : active) {
    auto& task = tasks_[j - 1];
    if (!task.first_eval_time) task.first_eval_time = t;
    const LevelPair levels = allocate(task, t);
    task.levels.record(levels);
    const auto p = current_pvalues(task.evidence);
    const double elapsed = static_cast<double>(t - task.arrival);
    const Decision d = is_classical(mode_)
                           ? decide_classical(p.a, levels.a, elapsed, task.tolerance)
                           : decide(p.a, p.b, levels.a, levels.b, elapsed, task.tolerance);
    task.decision = d;
    if (d == Decision::A) ledger_.mark_selected(j, Arm::A, t);
    if (d == Decision::B) ledger_.mark_selected(j, Arm::B, t);
    if (d == Decision::D) ledger_.mark_dropped(j, t);
    rows.push_back({next_ + 1, t, j, d, p.a, p.b, levels.a, levels.b});
  }

  // Step 4 is implicit: frozen tasks are no longer continuing in the ledger.
  for (auto& task : tasks_) {
    task.active_last_step = is_active[task.id] != 0;
    if (task.active_last_step) task.last_pvalues = current_pvalues(task.evidence);
  }

  const std::size_t selected_now = ledger_.count_selected();
  if (const auto* m2 = std::get_if<mode::AdversarialMethod2>(&mode_))
    wealth_ = wealth_greedy_credit(wealth_, selected_before, selected_now, m2->alpha);

  const auto records = level_records();
  const double estimate = fsr_hat(records, ledger_);
  if (is_valid_mode(mode_)) {
    check_fsr_hat(estimate);
  } else {
    const double alpha = std::visit(
        overloaded{[](const mode::AdversarialMethod1& s) { return s.alpha; },
                   [](const mode::AdversarialMethod2& s) { return s.alpha; },
                   [](const auto&) { return 1.0; }},
        mode_);
    if (estimate > alpha + kFsrHatSlack) ++excursions_;
  }

  StepSummary summary;
  summary.time_index = next_ + 1;
  summary.time = t;
  summary.fsr_hat = estimate;
  summary.n_selected = selected_now;
  summary.n_selected_a = ledger_.count_selected(Arm::A);
  summary.n_selected_b = ledger_.count_selected(Arm::B);
  summary.n_dropped = ledger_.count_dropped();
  summary.n_active = active.size();
  summary.n_arrived = ledger_.count_arrived();
  summaries_.push_back(summary);
  log_.insert(log_.end(), rows.begin(), rows.end());
  ++next_;
  return rows;
}

RunResult run(EngineMode mode, EvidenceKind evidence, const DecisionGrid& grid,
              StreamSource& source, std::vector<double> tolerances) {
  Engine engine(mode, evidence, grid, std::move(tolerances));
  std::vector<TaskBatch> batches;
  while (!engine.done()) {
    const Time t = engine.next_time();
    const Time prev = engine.previous_time();
    batches.clear();
    for (std::size_t j : engine.upcoming_active()) {
      const Time arrival = grid.arrivals[j - 1];
      const Time from = std::max(prev, arrival - 1);
      auto batch = source.collect(j, from, t);
      batch.task = j;
      batches.push_back(std::move(batch));
    }
    engine.step(t, batches);
  }
  RunResult out;
  out.log = engine.log();
  out.summaries = engine.summaries();
  out.grid_times = grid.times;
  out.arrivals = grid.arrivals;
  out.fsr_hat_excursions = engine.fsr_hat_excursions();
  return out;
}

MetricsSeries compute_metrics(std::span<const DecisionRow> log, std::span<const Arm> truths,
                              std::span<const Time> grid_times, std::span<const Time> arrivals) {
  const std::size_t n = arrivals.size();
  if (truths.size() < n) fail(ErrorCode::InvalidArgument, "ground truth missing for some tasks");
  for (const auto& row : log)
    if (row.task == 0 || row.task > n) fail(ErrorCode::InvalidArgument, "decision log names an unknown task");

  std::vector<Decision> current(n, Decision::C);
  std::size_t arrived = 0, selected = 0, sel_a = 0, sel_b = 0, dropped = 0, false_sel = 0, correct = 0;
  auto account = [&](std::size_t j, Decision d, int sign) {
    const Arm truth = truths[j - 1];
    const auto s = static_cast<std::ptrdiff_t>(sign);
    auto bump = [s](std::size_t& c) { c = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(c) + s); };
    if (is_selection(d)) {
      bump(selected);
      bump(d == Decision::A ? sel_a : sel_b);
      const bool right = (d == Decision::A) == (truth == Arm::A);
      bump(right ? correct : false_sel);
    } else if (d == Decision::D) {
      bump(dropped);
    }
  };

  MetricsSeries out;
  out.points.reserve(grid_times.size());
  std::size_t row = 0;
  for (std::size_t i = 0; i < grid_times.size(); ++i) {
    const Time t = grid_times[i];
    while (arrived < n && arrivals[arrived] <= t) ++arrived;
    while (row < log.size() && log[row].time_index <= i + 1) {
      const auto& r = log[row++];
      account(r.task, current[r.task - 1], -1);
      current[r.task - 1] = r.decision;
      account(r.task, r.decision, +1);
    }
    MetricsPoint p;
    p.time_index = i + 1;
    p.time = t;
    p.n_false = false_sel;
    p.n_true = correct;
    p.n_selected = selected;
    p.n_selected_a = sel_a;
    p.n_selected_b = sel_b;
    p.n_dropped = dropped;
    p.n_arrived = arrived;
    p.fsp = static_cast<double>(false_sel) / static_cast<double>(std::max<std::size_t>(selected, 1));
    p.tsp = static_cast<double>(correct) / static_cast<double>(std::max<std::size_t>(arrived, 1));
    out.points.push_back(p);
  }
  return out;
}

Aggregate aggregate(std::span<const MetricsSeries> replications, std::size_t index_limit) {
  if (replications.empty()) fail(ErrorCode::InvalidArgument, "aggregate needs at least one replication");
  Aggregate out;
  out.replications = replications.size();
  out.degenerate = replications.size() == 1;

  std::size_t common = index_limit;
  for (const auto& r : replications) common = std::min(common, r.points.size());

  const std::size_t reps = replications.size();
  std::vector<double> fsp(reps), tsp(reps), falses(reps), denom(reps), sel(reps), resid(reps);
  auto summarize = [&](auto&& point_of) {
    for (std::size_t r = 0; r < reps; ++r) {
      const MetricsPoint& p = point_of(replications[r]);
      fsp[r] = p.fsp;
      tsp[r] = p.tsp;
      falses[r] = static_cast<double>(p.n_false);
      denom[r] = static_cast<double>(std::max<std::size_t>(p.n_selected, 1));
      sel[r] = static_cast<double>(p.n_selected);
    }
  };

  for (std::size_t i = 0; i < common; ++i) {
    summarize([i](const MetricsSeries& s) -> const MetricsPoint& { return s.points[i]; });
    AggregatePoint a;
    a.time_index = i + 1;
    a.fsr = mean_of(fsp);
    a.fsr_se = standard_error(fsp);
    a.tsr = mean_of(tsp);
    a.tsr_se = standard_error(tsp);
    const double mean_denom = mean_of(denom);
    a.mfsr = mean_of(falses) / mean_denom;
    for (std::size_t r = 0; r < reps; ++r) resid[r] = falses[r] - a.mfsr * denom[r];
    a.mfsr_se = standard_error(resid) / mean_denom;
    a.mean_selected = mean_of(sel);
    out.points.push_back(a);
  }

  bool all_nonempty = std::all_of(replications.begin(), replications.end(),
                                  [](const MetricsSeries& s) { return !s.points.empty(); });
  if (all_nonempty) {
    summarize([](const MetricsSeries& s) -> const MetricsPoint& { return s.points.back(); });
    out.final.fsr = mean_of(fsp);
    out.final.fsr_se = standard_error(fsp);
    out.final.tsr = mean_of(tsp);
    out.final.tsr_se = standard_error(tsp);
    out.final.mean_selected = mean_of(sel);
  }
  return out;
}

}  // namespace sava
