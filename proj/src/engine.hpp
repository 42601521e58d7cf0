#pragma once
//
// The decision engine: walks the global decision grid, feeds new observations
// into each task's evidence, allocates test levels in ascending task order and
// freezes every task that leaves C.
//

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evidence.hpp"
#include "investing.hpp"
#include "policy.hpp"

namespace sava {

struct DecisionGrid {
  std::vector<Time> times;     // strictly increasing decision times
  std::vector<Time> arrivals;  // arrivals[j - 1] = arrival time of task j, non-decreasing

  std::size_t n_tasks() const { return arrivals.size(); }
  void validate() const;
  // True when two tasks share an arrival time (ties resolved by index).
  bool has_arrival_ties() const;
};

namespace mode {
struct Symmetric {
  double alpha = 0.05;
  std::size_t k = 25;
};
struct Classical {
  double alpha = 0.05;
  std::size_t k = 25;
};
struct ArmSpecific {
  ArmBudget a;
  ArmBudget b;
};
struct SavaSpecial {
  double alpha = 0.1;
  std::size_t k = 25;
};
struct AdversarialMethod1 {
  double alpha = 0.1;
  std::size_t k = 25;
};
struct AdversarialMethod2 {
  double alpha = 0.1;
};
}  // namespace mode

using EngineMode = std::variant<mode::Symmetric, mode::Classical, mode::ArmSpecific,
                                mode::SavaSpecial, mode::AdversarialMethod1,
                                mode::AdversarialMethod2>;

std::string mode_name(const EngineMode& m);
// Valid modes carry the FSR-hat guarantee and have it checked after every step.
bool is_valid_mode(const EngineMode& m);
void validate(const EngineMode& m);

struct TaskBatch {
  std::size_t task = 0;  // 1-based
  std::vector<double> samples;
  std::optional<PValuePair> direct;
};

struct TaskState {
  std::size_t id = 0;
  Time arrival = 0;
  double tolerance = kInfiniteTolerance;
  Decision decision = Decision::C;
  EvidenceState evidence;
  LevelRecord levels;
  std::optional<Time> first_eval_time;
  bool active_last_step = false;
  PValuePair last_pvalues;  // p-values at the previous evaluation
};

struct DecisionRow {
  std::size_t time_index = 0;  // 1-based position in the grid
  Time time = 0;
  std::size_t task = 0;
  Decision decision = Decision::C;
  double p_a = 1.0;
  double p_b = 1.0;
  double level_a = 0.0;
  double level_b = 0.0;
};

struct StepSummary {
  std::size_t time_index = 0;
  Time time = 0;
  double fsr_hat = 0.0;
  std::size_t n_selected = 0;
  std::size_t n_selected_a = 0;
  std::size_t n_selected_b = 0;
  std::size_t n_dropped = 0;
  std::size_t n_active = 0;
  std::size_t n_arrived = 0;
};

class Engine {
 public:
  Engine(EngineMode mode, EvidenceKind evidence, DecisionGrid grid,
         std::vector<double> tolerances = {});

  // Processes the next grid time. Returns one row per active task.
  std::vector<DecisionRow> step(Time t, std::span<const TaskBatch> batches);

  bool done() const { return next_ >= grid_.times.size(); }
  std::size_t next_index() const { return next_; }
  Time next_time() const;
  // Previous grid time, or the lowest representable time before the first step.
  Time previous_time() const;
  // Tasks that will be active at the next grid time, ascending.
  std::vector<std::size_t> upcoming_active() const;

  const DecisionGrid& grid() const { return grid_; }
  const EngineMode& mode() const { return mode_; }
  const SelectionLedger& ledger() const { return ledger_; }
  const std::vector<TaskState>& tasks() const { return tasks_; }
  std::vector<LevelRecord> level_records() const;
  const std::vector<StepSummary>& summaries() const { return summaries_; }
  const std::vector<DecisionRow>& log() const { return log_; }
  double wealth() const { return wealth_.w; }
  // Steps after which FSR-hat exceeded alpha (adversarial modes only; valid modes throw).
  std::size_t fsr_hat_excursions() const { return excursions_; }

 private:
  LevelPair allocate(TaskState& task, Time t);
  void check_fsr_hat(double value) const;

  EngineMode mode_;
  EvidenceKind evidence_;
  DecisionGrid grid_;
  std::vector<TaskState> tasks_;
  SelectionLedger ledger_;
  WealthState wealth_;
  std::size_t next_ = 0;
  std::size_t excursions_ = 0;
  std::vector<StepSummary> summaries_;
  std::vector<DecisionRow> log_;
};

// Supplies the observations a task collected in (from_exclusive, to_inclusive].
class StreamSource {
 public:
  virtual ~StreamSource() = default;
  virtual TaskBatch collect(std::size_t task, Time from_exclusive, Time to_inclusive) = 0;
};

struct RunResult {
  std::vector<DecisionRow> log;
  std::vector<StepSummary> summaries;
  std::vector<Time> grid_times;
  std::vector<Time> arrivals;
  std::size_t fsr_hat_excursions = 0;
};

RunResult run(EngineMode mode, EvidenceKind evidence, const DecisionGrid& grid,
              StreamSource& source, std::vector<double> tolerances = {});

// ---------------------------------------------------------------------------
// Metrics

struct MetricsPoint {
  std::size_t time_index = 0;
  Time time = 0;
  double fsp = 0.0;
  double tsp = 0.0;
  std::size_t n_false = 0;
  std::size_t n_true = 0;
  std::size_t n_selected = 0;
  std::size_t n_selected_a = 0;
  std::size_t n_selected_b = 0;
  std::size_t n_dropped = 0;
  std::size_t n_arrived = 0;
};

struct MetricsSeries {
  std::vector<MetricsPoint> points;
};

// FSP and TSP at every grid time from a decision log. A task counts as arrived
// from its arrival time on; its decision is the latest logged one.
MetricsSeries compute_metrics(std::span<const DecisionRow> log, std::span<const Arm> truths,
                              std::span<const Time> grid_times, std::span<const Time> arrivals);

struct AggregatePoint {
  std::size_t time_index = 0;
  double fsr = 0.0;
  double fsr_se = 0.0;
  double mfsr = 0.0;
  double mfsr_se = 0.0;
  double tsr = 0.0;
  double tsr_se = 0.0;
  double mean_selected = 0.0;
};

struct FinalSummary {
  double fsr = 0.0;
  double fsr_se = 0.0;
  double tsr = 0.0;
  double tsr_se = 0.0;
  double mean_selected = 0.0;
};

struct Aggregate {
  std::vector<AggregatePoint> points;
  FinalSummary final;  // each replication's last grid time
  std::size_t replications = 0;
  bool degenerate = false;  // a single replication: standard errors are zero
};

inline constexpr std::size_t kDefaultIndexLimit = 800;

// Averages replications over the shortest common prefix of grid indices,
// capped at index_limit.
Aggregate aggregate(std::span<const MetricsSeries> replications,
                    std::size_t index_limit = kDefaultIndexLimit);

}  // namespace sava
