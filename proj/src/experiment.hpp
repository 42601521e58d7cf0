#pragma once
//
// Experiment harness behind the CLI: resolves a JSON run request, runs shared
// worlds through every requested method, aggregates replications and writes
// plot-ready tables.
//

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "engine.hpp"
#include "ingest.hpp"
#include "simgen.hpp"

namespace sava {

enum class Method { Sava, SavaClassical, SavaArmspec, LordPP, Saffron, Addis, Method1, Method2, SavaSpecial };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
bool is_baseline(Method m);

struct MethodParams {
  double alpha = 0.05;
  std::size_t k = 25;
  ArmBudget arm_a{0.05, 25};
  ArmBudget arm_b{0.05, 25};
};

// Runs one method on a world. Sample worlds use the Hoeffding e-process
// (truncated Gaussian) or the likelihood ratio (Gaussian); baselines use the
// Wilcoxon or z-test p-value respectively. Counterexample worlds use their
// static p-values throughout.
RunResult run_method(Method m, const World& world, const MethodParams& params);

// Seed of replication r (0-based); a prefix of replications never depends on their count.
std::uint64_t replication_seed(std::uint64_t root, std::size_t r);

struct ReplicationOutput {
  std::vector<MetricsSeries> series;             // one per method
  std::vector<std::size_t> fsr_hat_excursions;   // one per method
  std::vector<std::vector<DecisionRow>> logs;    // one per method, when requested
};

using WorldFactory = std::function<World(std::uint64_t seed)>;

// Replications run on `threads` workers; results are ordered by replication
// and do not depend on the thread count.
std::vector<ReplicationOutput> run_replications(const WorldFactory& make_world,
                                                const std::vector<Method>& methods,
                                                const MethodParams& params, std::size_t reps,
                                                std::uint64_t seed, std::size_t threads,
                                                bool keep_logs = false);

// ---------------------------------------------------------------------------
// Run requests

enum class Command { Simulate, Counterexample, SweepK, IngestRun, Report };

std::string to_string(Command c);

struct RunSpec {
  Command command = Command::Simulate;
  std::string model = "truncgauss";  // or "gauss"
  double mu = 1.0;
  double bound = 2.0;
  double pi_plus = 0.5;
  Time horizon = 300;
  double arrival_prob = 1.0 / 3.0;
  MethodParams params;
  std::vector<Method> methods;
  std::size_t reps = 50;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t index_limit = kDefaultIndexLimit;
  int which = 1;
  std::vector<std::size_t> k_list;
  std::vector<double> p_list;
  std::string input;
  std::size_t min_reviews = kDefaultMinReviews;
  ParseMode parse_mode = ParseMode::Strict;
  std::vector<std::string> inputs;
  std::string decision_log;
  std::vector<std::size_t> trace_tasks;
  std::string out_dir = ".";
  std::string prefix;
  bool write_decision_log = false;
};

// Fills command-specific defaults and validates; failures raise ErrorCode::Usage.
RunSpec resolve_spec(const nlohmann::json& request);
nlohmann::json to_json(const RunSpec& spec);

// Runs the request, writes its outputs and returns a JSON summary.
nlohmann::json execute(const RunSpec& spec);

// ---------------------------------------------------------------------------
// Tables

inline constexpr const char* kMetricsHeader = "# sava-metrics v1";
inline constexpr const char* kDecisionsHeader = "# sava-decisions v1";
inline constexpr const char* kSweepHeader = "# sava-sweep v1";

struct MetricRow {
  std::string run_id;          // empty unless merged
  std::string time_index;      // 1-based grid index, or "final"
  std::string method;
  std::string metric;
  double value = 0.0;
  double stderr_value = 0.0;

  bool operator==(const MetricRow&) const = default;
};

struct MetricTable {
  std::string spec_json;
  bool merged = false;
  std::vector<MetricRow> rows;

  bool operator==(const MetricTable&) const = default;
};

MetricTable metric_table(const Aggregate& agg, const std::string& method, const std::string& spec_json);
void write_metric_table(std::ostream& out, const MetricTable& table);
MetricTable read_metric_table(std::istream& in);

struct LoggedDecision {
  std::size_t rep = 1;
  std::string method;
  DecisionRow row;
};

void write_decision_header(std::ostream& out, const std::string& spec_json);
void write_decisions(std::ostream& out, std::size_t rep, const std::string& method,
                     const std::vector<DecisionRow>& log);
std::vector<LoggedDecision> read_decisions(std::istream& in);

std::string format_double(double v);

}  // namespace sava
