#include "investing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace sava {

namespace {

bool matches(TaskFlag f, std::optional<Arm> arm) {
  if (!arm) return f == TaskFlag::SelectedA || f == TaskFlag::SelectedB;
  return f == (*arm == Arm::A ? TaskFlag::SelectedA : TaskFlag::SelectedB);
}

double window_level(const SelectionLedger& ledger, std::size_t j, std::size_t k, double alpha,
                    std::optional<Arm> arm) {
  const double initial = j <= k ? 1.0 : 0.0;
  const auto n = static_cast<double>(neighborhood_count(ledger, j, k, arm));
  return alpha / static_cast<double>(k) * (initial + n);
}

void check_window(std::size_t k, double alpha) {
  if (k == 0) fail(ErrorCode::Domain, "window size k must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::Domain, "alpha must lie in (0,1)");
}

std::size_t positive_mod(Time a, std::size_t k) {
  const auto kk = static_cast<Time>(k);
  return static_cast<std::size_t>(((a % kk) + kk) % kk);
}

}  // namespace

SelectionLedger::SelectionLedger(std::size_t n_tasks)
    : flags_(n_tasks, TaskFlag::NotArrived), stop_(n_tasks) {}

void SelectionLedger::grow(std::size_t n_tasks) {
  if (n_tasks < flags_.size()) return;
  flags_.resize(n_tasks, TaskFlag::NotArrived);
  stop_.resize(n_tasks);
}

void SelectionLedger::check_index(std::size_t j) const {
  if (j == 0 || j > flags_.size())
    fail(ErrorCode::InvalidArgument, "task index " + std::to_string(j) + " outside ledger");
}

TaskFlag SelectionLedger::flag(std::size_t j) const {
  check_index(j);
  return flags_[j - 1];
}

std::optional<Time> SelectionLedger::stop_time(std::size_t j) const {
  check_index(j);
  return stop_[j - 1];
}

void SelectionLedger::mark_arrived(std::size_t j) {
  check_index(j);
  if (flags_[j - 1] != TaskFlag::NotArrived)
    fail(ErrorCode::Protocol, "task " + std::to_string(j) + " arrived twice");
  flags_[j - 1] = TaskFlag::Continuing;
}

void SelectionLedger::mark_selected(std::size_t j, Arm arm, Time when) {
  check_index(j);
  if (flags_[j - 1] != TaskFlag::Continuing)
    fail(ErrorCode::Protocol, "only a continuing task can be selected (task " + std::to_string(j) + ")");
  flags_[j - 1] = arm == Arm::A ? TaskFlag::SelectedA : TaskFlag::SelectedB;
  stop_[j - 1] = when;
  auto lower = [j](std::size_t& first) { first = first == 0 ? j : std::min(first, j); };
  lower(first_any_);
  lower(arm == Arm::A ? first_a_ : first_b_);
}

std::size_t SelectionLedger::first_selected(std::optional<Arm> arm) const {
  if (!arm) return first_any_;
  return *arm == Arm::A ? first_a_ : first_b_;
}

void SelectionLedger::mark_dropped(std::size_t j, Time when) {
  check_index(j);
  if (flags_[j - 1] != TaskFlag::Continuing)
    fail(ErrorCode::Protocol, "only a continuing task can be dropped (task " + std::to_string(j) + ")");
  flags_[j - 1] = TaskFlag::Dropped;
  stop_[j - 1] = when;
}

bool SelectionLedger::is_selected(std::size_t j, std::optional<Arm> arm) const {
  return matches(flag(j), arm);
}

bool SelectionLedger::has_arrived(std::size_t j) const { return flag(j) != TaskFlag::NotArrived; }

std::vector<std::size_t> SelectionLedger::selected_before(std::size_t j,
                                                          std::optional<Arm> arm) const {
  std::vector<std::size_t> out;
  const std::size_t end = std::min(j == 0 ? 0 : j - 1, flags_.size());
  for (std::size_t i = 1; i <= end; ++i)
    if (matches(flags_[i - 1], arm)) out.push_back(i);
  return out;
}

std::size_t SelectionLedger::count_selected(std::optional<Arm> arm) const {
  return static_cast<std::size_t>(
      std::count_if(flags_.begin(), flags_.end(), [&](TaskFlag f) { return matches(f, arm); }));
}

std::size_t SelectionLedger::count_arrived() const {
  return static_cast<std::size_t>(std::count_if(
      flags_.begin(), flags_.end(), [](TaskFlag f) { return f != TaskFlag::NotArrived; }));
}

std::size_t SelectionLedger::count_dropped() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), TaskFlag::Dropped));
}

void LevelRecord::record(LevelPair levels) {
  a = levels.a;
  b = levels.b;
  max_a = std::max(max_a, a);
  max_b = std::max(max_b, b);
}

std::size_t neighborhood_count(const SelectionLedger& ledger, std::size_t j, std::size_t k,
                               std::optional<Arm> arm) {
  if (k == 0) fail(ErrorCode::Domain, "window size k must be >= 1");
  const std::size_t end = std::min(j == 0 ? 0 : j - 1, ledger.size());
  const std::size_t first = ledger.first_selected(arm);
  if (first == 0 || first > end) return 0;
  const std::size_t lo = j > k ? j - k : 1;
  std::size_t count = 0;
  for (std::size_t i = std::max(lo, first + 1); i <= end; ++i)
    if (ledger.is_selected(i, arm)) ++count;
  return count;
}

LevelPair levels_symmetric(const SelectionLedger& ledger, std::size_t j, std::size_t k,
                           double alpha) {
  check_window(k, alpha);
  const double level = window_level(ledger, j, k, alpha, std::nullopt);
  return {level, level};
}

double levels_classical(const SelectionLedger& ledger, std::size_t j, std::size_t k, double alpha) {
  check_window(k, alpha);
  return window_level(ledger, j, k, alpha, Arm::A);
}

LevelPair levels_arm_specific(const SelectionLedger& ledger, std::size_t j, ArmBudget arm_a,
                              ArmBudget arm_b) {
  check_window(arm_a.k, arm_a.alpha);
  check_window(arm_b.k, arm_b.alpha);
  return {window_level(ledger, j, arm_a.k, arm_a.alpha, Arm::A),
          window_level(ledger, j, arm_b.k, arm_b.alpha, Arm::B)};
}

double g_weight(std::size_t i, std::size_t k) {
  if (i == 0 || i > k) return 0.0;
  if (i < k) return std::ldexp(1.0, -static_cast<int>(i));
  return std::ldexp(1.0, -static_cast<int>(k - 1));
}

LevelPair levels_savaspecial(const SelectionLedger& ledger, std::size_t j, std::size_t k,
                             double alpha) {
  check_window(k, alpha);
  double level = j <= k ? alpha * g_weight(j, k) : 0.0;
  const auto selected = ledger.selected_before(j);
  for (std::size_t n = 1; n < selected.size(); ++n) {
    const std::size_t i = selected[n];
    if (j <= i + k) level += alpha * g_weight(j - i, k);
  }
  return {level, level};
}

LevelPair levels_method1(const SelectionLedger& ledger, std::size_t j, std::size_t k, double alpha,
                         Time now, Time first_eval_time) {
  check_window(k, alpha);
  double level = j <= k ? alpha * g_weight(positive_mod(now - first_eval_time, k) + 1, k) : 0.0;
  const auto selected = ledger.selected_before(j);
  for (std::size_t n = 1; n < selected.size(); ++n) {
    const std::size_t i = selected[n];
    if (j > i + k) continue;
    const auto stopped = ledger.stop_time(i);
    level += alpha * g_weight(positive_mod(now - *stopped, k) + 1, k);
  }
  return {level, level};
}

double fsr_hat(std::span<const LevelRecord> records, const SelectionLedger& ledger) {
  double total = 0.0;
  const std::size_t n = std::min(records.size(), ledger.size());
  for (std::size_t j = 1; j <= n; ++j)
    if (ledger.has_arrived(j)) total += std::max(records[j - 1].max_a, records[j - 1].max_b);
  return total / static_cast<double>(std::max<std::size_t>(ledger.count_selected(), 1));
}

double fsr_hat_arm(std::span<const LevelRecord> records, const SelectionLedger& ledger, Arm arm) {
  double total = 0.0;
  const std::size_t n = std::min(records.size(), ledger.size());
  for (std::size_t j = 1; j <= n; ++j)
    if (ledger.has_arrived(j))
      total += arm == Arm::A ? records[j - 1].max_a : records[j - 1].max_b;
  return total / static_cast<double>(std::max<std::size_t>(ledger.count_selected(arm), 1));
}

GreedyStep wealth_greedy_step(WealthState wealth, bool prior_levels_were_zero, double prev_min_p) {
  if (wealth.w < 0.0) fail(ErrorCode::Invariant, "negative alpha-wealth");
  if (prior_levels_were_zero && wealth.w >= prev_min_p) {
    wealth.w = std::max(0.0, wealth.w - prev_min_p);
    return {wealth, prev_min_p};
  }
  return {wealth, 0.0};
}

WealthState wealth_greedy_credit(WealthState wealth, std::size_t selected_before,
                                 std::size_t selected_now, double alpha) {
  const auto before = static_cast<double>(std::max<std::size_t>(selected_before, 1));
  const auto now = static_cast<double>(std::max<std::size_t>(selected_now, 1));
  wealth.w += alpha * (now - before);
  return wealth;
}

}  // namespace sava
