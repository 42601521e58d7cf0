// sava: command-line front end. Builds a run request from flags and hands it
// to the library; only options given on the command line are forwarded, so
// per-command defaults live in one place.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sava/sava.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr const char* kOutDirEnv = "SAVA_OUTPUT_DIR";

struct Common {
  std::string out_dir;
  std::string prefix;
  std::string methods;
  std::uint64_t seed = 1;
  long long reps = 0;
  long long threads = 1;
  double alpha = 0;
  long long k = 0;
  bool decision_log = false;
};

void add_common(CLI::App* sub, Common& c, bool runs) {
  sub->add_option("--out-dir", c.out_dir,
                  std::string("Output directory (default: $") + kOutDirEnv + " or .)");
  sub->add_option("--prefix", c.prefix, "File name prefix (default: the command name)");
  if (!runs) return;
  sub->add_option("--methods", c.methods,
                  "Comma list of sava, sava-classical, sava-armspec, savaspecial, method1, "
                  "method2, lordpp, saffron, addis");
  sub->add_option("--alpha", c.alpha, "Target FSR level");
  sub->add_option("--k", c.k, "Neighborhood window");
}

void add_replication(CLI::App* sub, Common& c) {
  sub->add_option("--reps", c.reps, "Replications (default 50)");
  sub->add_option("--seed", c.seed, "Root seed (default 1)");
  sub->add_option("--threads", c.threads, "Worker threads; results do not depend on it");
  sub->add_flag("--decision-log", c.decision_log, "Also write every replication's decision log");
}

template <class T>
void forward(nlohmann::json& req, const CLI::App* sub, const char* flag, const char* key, const T& v) {
  if (sub->count(flag) > 0) req[key] = v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly-sequential selective inference experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sava_version());

  Common c;
  std::string model;
  double mu = 0, bound = 0, pi_plus = 0, p = 0, alpha_a = 0, alpha_b = 0;
  long long horizon = 0, which = 0, index_limit = 0, k_a = 0, k_b = 0, min_reviews = 0;
  std::vector<long long> k_list, trace_tasks;
  std::vector<double> p_list;
  std::string input, parse_mode, decision_log;
  std::vector<std::string> inputs;

  auto* sim = app.add_subcommand("simulate", "Monte Carlo FSR/TSR series on synthetic worlds");
  auto* ce = app.add_subcommand("counterexample", "Adversarial allocation rules on the counterexample worlds");
  auto* sweep = app.add_subcommand("sweep-k", "Final-time FSR/TSR over a grid of k and arrival probabilities");
  auto* ing = app.add_subcommand("ingest-run", "Replay a rating-event file");
  auto* rep = app.add_subcommand("report", "Merge metric tables and extract level traces");

  for (auto* sub : {sim, ce, sweep}) {
    add_common(sub, c, true);
    add_replication(sub, c);
    sub->add_option("--T", horizon, "Horizon");
    sub->add_option("--index-limit", index_limit, "Report decision-time indices 1..N (default 800)");
  }
  for (auto* sub : {sim, sweep}) {
    sub->add_option("--model", model, "truncgauss or gauss")->check(CLI::IsMember({"truncgauss", "gauss"}));
    sub->add_option("--mu", mu, "Effect size |mu|");
    sub->add_option("--K", bound, "Truncation bound of the truncated Gaussian");
    sub->add_option("--pi-plus", pi_plus, "Proportion of tasks whose better arm is A");
  }
  for (auto* sub : {sim, ing}) {
    sub->add_option("--alpha-a", alpha_a, "Arm-A level for sava-armspec");
    sub->add_option("--alpha-b", alpha_b, "Arm-B level for sava-armspec");
    sub->add_option("--k-a", k_a, "Arm-A window for sava-armspec");
    sub->add_option("--k-b", k_b, "Arm-B window for sava-armspec");
  }
  sim->add_option("--p", p, "Arrival probability");
  ce->add_option("--which", which, "Counterexample 1 or 2")->required();
  sweep->add_option("--k-list", k_list, "Window sizes")->delimiter(',');
  sweep->add_option("--p-list", p_list, "Arrival probabilities")->delimiter(',');

  add_common(ing, c, true);
  ing->add_option("input", input, "Delimited file: item_id, user_id, rating, timestamp")->required();
  ing->add_option("--min-reviews", min_reviews, "Keep items with more than this many reviews (default 50)");
  ing->add_option("--parse-mode", parse_mode, "strict or skip")->check(CLI::IsMember({"strict", "skip"}));

  add_common(rep, c, false);
  rep->add_option("inputs", inputs, "Metric tables to merge");
  rep->add_option("--decision-log", decision_log, "Decision log to extract level traces from");
  rep->add_option("--trace-tasks", trace_tasks, "Task ids for level traces")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  nlohmann::json req;
  req["command"] = sub->get_name();

  if (c.out_dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    c.out_dir = env && *env ? env : ".";
  }
  req["out_dir"] = c.out_dir;
  forward(req, sub, "--prefix", "prefix", c.prefix);
  if (sub != rep) {
    forward(req, sub, "--methods", "methods", c.methods);
    forward(req, sub, "--alpha", "alpha", c.alpha);
    forward(req, sub, "--k", "k", c.k);
  }
  if (sub == sim || sub == ce || sub == sweep) {
    forward(req, sub, "--reps", "reps", c.reps);
    forward(req, sub, "--seed", "seed", c.seed);
    forward(req, sub, "--threads", "threads", c.threads);
    forward(req, sub, "--T", "T", horizon);
    forward(req, sub, "--index-limit", "index_limit", index_limit);
    if (c.decision_log) req["write_decision_log"] = true;
  }
  if (sub == sim || sub == sweep) {
    forward(req, sub, "--model", "model", model);
    forward(req, sub, "--mu", "mu", mu);
    forward(req, sub, "--K", "K", bound);
    forward(req, sub, "--pi-plus", "pi_plus", pi_plus);
  }
  if (sub == sim || sub == ing) {
    forward(req, sub, "--alpha-a", "alpha_a", alpha_a);
    forward(req, sub, "--alpha-b", "alpha_b", alpha_b);
    forward(req, sub, "--k-a", "k_a", k_a);
    forward(req, sub, "--k-b", "k_b", k_b);
  }
  forward(req, sim, "--p", "p", p);
  if (sub == ce) req["which"] = which;
  if (sub == sweep) {
    forward(req, sub, "--k-list", "k_list", k_list);
    forward(req, sub, "--p-list", "p_list", p_list);
  }
  if (sub == ing) {
    req["input"] = input;
    forward(req, sub, "--min-reviews", "min_reviews", min_reviews);
    forward(req, sub, "--parse-mode", "parse_mode", parse_mode);
  }
  if (sub == rep) {
    req["inputs"] = inputs;
    forward(req, sub, "--decision-log", "decision_log", decision_log);
    forward(req, sub, "--trace-tasks", "trace_tasks", trace_tasks);
  }

  char* summary = nullptr;
  const sava_status st = sava_run(req.dump().c_str(), &summary);
  if (st != SAVA_OK) {
    std::cerr << "sava " << sub->get_name() << ": " << sava_status_string(st) << ": "
              << sava_last_error() << '\n';
    return st == SAVA_ERR_USAGE ? kExitUsage : kExitRuntime;
  }
  std::cout << nlohmann::json::parse(summary).dump(2) << '\n';
  sava_string_free(summary);
  return 0;
}
