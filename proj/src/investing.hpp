#pragma once
//
// Alpha-investing: per-task test levels, the conservative FSR estimate, and
// the two adversarial allocation rules used by the counterexample worlds.
//
// Task indices are 1-based arrival order throughout this header, matching
// the window arithmetic (j <= k, j - k <= I_n <= j - 1).
//

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "policy.hpp"

namespace sava {

enum class TaskFlag { NotArrived, Continuing, SelectedA, SelectedB, Dropped };

class SelectionLedger {
 public:
  SelectionLedger() = default;
  explicit SelectionLedger(std::size_t n_tasks);

  std::size_t size() const { return flags_.size(); }
  void grow(std::size_t n_tasks);

  TaskFlag flag(std::size_t j) const;
  // Time at which task j was selected or dropped; empty while continuing.
  std::optional<Time> stop_time(std::size_t j) const;

  void mark_arrived(std::size_t j);
  void mark_selected(std::size_t j, Arm arm, Time when);
  void mark_dropped(std::size_t j, Time when);

  // Selection of task j, optionally restricted to one arm.
  bool is_selected(std::size_t j, std::optional<Arm> arm = std::nullopt) const;
  bool has_arrived(std::size_t j) const;

  // Ascending indices i < j that are selected (S_{t,j-}, or its one-arm variant).
  std::vector<std::size_t> selected_before(std::size_t j,
                                           std::optional<Arm> arm = std::nullopt) const;
  std::size_t count_selected(std::optional<Arm> arm = std::nullopt) const;
  std::size_t count_arrived() const;
  std::size_t count_dropped() const;
  // Smallest selected index (optionally for one arm), 0 when nothing is selected.
  std::size_t first_selected(std::optional<Arm> arm = std::nullopt) const;

 private:
  void check_index(std::size_t j) const;

  std::vector<TaskFlag> flags_;
  std::vector<std::optional<Time>> stop_;
  std::size_t first_any_ = 0, first_a_ = 0, first_b_ = 0;
};

struct LevelPair {
  double a = 0.0;
  double b = 0.0;
};

// Current and running-maximum levels of one task.
struct LevelRecord {
  double a = 0.0;
  double b = 0.0;
  double max_a = 0.0;
  double max_b = 0.0;

  void record(LevelPair levels);
};

struct ArmBudget {
  double alpha = 0.05;
  std::size_t k = 25;
};

// Number of selections I_n, n >= 2, with j - k <= I_n <= j - 1, among
// selections with index below j. The smallest selected index never counts.
std::size_t neighborhood_count(const SelectionLedger& ledger, std::size_t j, std::size_t k,
                               std::optional<Arm> arm = std::nullopt);

LevelPair levels_symmetric(const SelectionLedger& ledger, std::size_t j, std::size_t k,
                           double alpha);
double levels_classical(const SelectionLedger& ledger, std::size_t j, std::size_t k, double alpha);
LevelPair levels_arm_specific(const SelectionLedger& ledger, std::size_t j, ArmBudget arm_a,
                              ArmBudget arm_b);

// g_k(i) = 2^-i for i < k, 2^-(k-1) for i = k, 0 otherwise; sums to 1 over 1..k.
double g_weight(std::size_t i, std::size_t k);

// Valid static-slot variant of the geometric allocation.
LevelPair levels_savaspecial(const SelectionLedger& ledger, std::size_t j, std::size_t k,
                             double alpha);

// Adversarial rotating-slot allocation. Slots depend on the current decision
// time, so levels are not monotone in time. Times must be integers on a unit grid.
LevelPair levels_method1(const SelectionLedger& ledger, std::size_t j, std::size_t k, double alpha,
                         Time now, Time first_eval_time);

// Sum over arrived tasks of max(max_a, max_b), divided by max(|S_t|, 1).
// records[j - 1] belongs to task j.
double fsr_hat(std::span<const LevelRecord> records, const SelectionLedger& ledger);
double fsr_hat_arm(std::span<const LevelRecord> records, const SelectionLedger& ledger, Arm arm);

struct WealthState {
  double w = 0.0;
};

struct GreedyStep {
  WealthState wealth;
  double level = 0.0;
};

// Greedy wealth spending: a task that was active at the previous decision time
// with zero levels receives min(p_a, p_b) from that time, if wealth allows.
GreedyStep wealth_greedy_step(WealthState wealth, bool prior_levels_were_zero, double prev_min_p);

// End-of-step credit alpha * (max(1,|S_now|) - max(1,|S_before|)).
WealthState wealth_greedy_credit(WealthState wealth, std::size_t selected_before,
                                 std::size_t selected_now, double alpha);

}  // namespace sava
