#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "error.hpp"

namespace sava {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kReplicationStream = 0x52455053ULL;

[[noreturn]] void usage(const std::string& what) { fail(ErrorCode::Usage, what); }

EngineMode engine_mode(Method m, const MethodParams& p) {
  switch (m) {
    case Method::Sava: return mode::Symmetric{p.alpha, p.k};
    case Method::SavaClassical: return mode::Classical{p.alpha, p.k};
    case Method::SavaArmspec: return mode::ArmSpecific{p.arm_a, p.arm_b};
    case Method::SavaSpecial: return mode::SavaSpecial{p.alpha, p.k};
    case Method::Method1: return mode::AdversarialMethod1{p.alpha, p.k};
    case Method::Method2: return mode::AdversarialMethod2{p.alpha};
    default: break;
  }
  fail(ErrorCode::InvalidArgument, to_string(m) + " is not an engine method");
}

BaselineRule baseline_rule(Method m) {
  switch (m) {
    case Method::LordPP: return BaselineRule::LordPP;
    case Method::Saffron: return BaselineRule::Saffron;
    case Method::Addis: return BaselineRule::Addis;
    default: break;
  }
  fail(ErrorCode::InvalidArgument, to_string(m) + " is not a baseline");
}

RunResult run_on(Method m, const DecisionGrid& grid, StreamSource& source,
                 const EvidenceKind& evidence, FixedPMethod pvalues, const MethodParams& params) {
  if (is_baseline(m)) {
    BaselineConfig c;
    c.rule = baseline_rule(m);
    c.alpha = params.alpha;
    c.pvalues = pvalues;
    return run_baseline(c, grid, source);
  }
  return run(engine_mode(m, params), evidence, grid, source);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path);
  return in;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

json final_json(const Aggregate& agg) {
  double max_fsr = 0.0, max_mfsr = 0.0;
  for (const auto& p : agg.points) {
    max_fsr = std::max(max_fsr, p.fsr);
    max_mfsr = std::max(max_mfsr, p.mfsr);
  }
  return {{"fsr", agg.final.fsr},         {"fsr_se", agg.final.fsr_se},
          {"tsr", agg.final.tsr},         {"tsr_se", agg.final.tsr_se},
          {"mean_selected", agg.final.mean_selected},
          {"max_fsr", max_fsr},           {"max_mfsr", max_mfsr},
          {"replications", agg.replications}};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

template <class T>
T get_number(const json& j, const char* key) {
  if (!j.is_number()) usage(std::string("'") + key + "' must be a number");
  return j.get<T>();
}

std::size_t get_count(const json& j, const char* key, std::size_t min) {
  if (!j.is_number_integer()) usage(std::string("'") + key + "' must be an integer");
  const auto v = j.get<long long>();
  if (v < static_cast<long long>(min))
    usage(std::string("'") + key + "' must be >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

std::vector<std::string> get_strings(const json& j, const char* key) {
  if (j.is_string()) return split_list(j.get<std::string>());
  if (!j.is_array()) usage(std::string("'") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) usage(std::string("'") + key + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

void write_sweep(std::ostream& out, const std::string& spec_json, const json& rows) {
  out << kSweepHeader << '\n' << "# spec: " << spec_json << '\n';
  out << "k\tp\tmethod\tfsr\tfsr_se\tmfsr\ttsr\ttsr_se\tmean_selected\n";
  for (const auto& r : rows) {
    out << r["k"].get<std::size_t>() << '\t' << format_double(r["p"]) << '\t'
        << r["method"].get<std::string>() << '\t' << format_double(r["fsr"]) << '\t'
        << format_double(r["fsr_se"]) << '\t' << format_double(r["mfsr"]) << '\t'
        << format_double(r["tsr"]) << '\t' << format_double(r["tsr_se"]) << '\t'
        << format_double(r["mean_selected"]) << '\n';
  }
}

// Aggregates, writes one metric file per method and returns the per-method summary.
json write_method_tables(const RunSpec& spec, const std::vector<ReplicationOutput>& outs,
                         json& files) {
  const auto dir = prepare_dir(spec.out_dir);
  const std::string spec_json = to_json(spec).dump();
  json methods = json::object();
  for (std::size_t i = 0; i < spec.methods.size(); ++i) {
    std::vector<MetricsSeries> series;
    std::size_t excursions = 0;
    for (const auto& o : outs) {
      series.push_back(o.series[i]);
      excursions += o.fsr_hat_excursions[i];
    }
    const auto agg = aggregate(series, spec.index_limit);
    const std::string name = to_string(spec.methods[i]);
    const auto path = dir / (spec.prefix + "_" + name + ".tsv");
    auto out = open_output(path);
    write_metric_table(out, metric_table(agg, name, spec_json));
    files.push_back(path.string());
    auto summary = final_json(agg);
    summary["fsr_hat_excursions"] = excursions;
    methods[name] = summary;
  }
  if (spec.write_decision_log) {
    const auto path = dir / (spec.prefix + "_decisions.tsv");
    auto out = open_output(path);
    write_decision_header(out, spec_json);
    for (std::size_t r = 0; r < outs.size(); ++r)
      for (std::size_t i = 0; i < spec.methods.size(); ++i)
        write_decisions(out, r + 1, to_string(spec.methods[i]), outs[r].logs[i]);
    files.push_back(path.string());
  }
  return methods;
}

void write_manifest(const RunSpec& spec, json& summary) {
  const auto dir = prepare_dir(spec.out_dir);
  const auto path = dir / (spec.prefix + "_manifest.json");
  summary["files"].push_back(path.string());
  json manifest = {{"format", "sava-manifest v1"}, {"spec", to_json(spec)}, {"results", summary}};
  auto out = open_output(path);
  out << manifest.dump(2) << '\n';
}

World make_stream_world(const RunSpec& spec, std::uint64_t seed, double p) {
  WorldConfig c;
  c.horizon = spec.horizon;
  c.arrival_prob = p;
  c.pi_plus = spec.pi_plus;
  if (spec.model == "gauss")
    c.model = model::Gauss{spec.mu};
  else
    c.model = model::TruncGauss{spec.mu, spec.bound};
  c.seed = seed;
  return gen_world(c);
}

json run_simulate(const RunSpec& spec) {
  auto outs = run_replications([&](std::uint64_t s) { return make_stream_world(spec, s, spec.arrival_prob); },
                               spec.methods, spec.params, spec.reps, spec.seed, spec.threads,
                               spec.write_decision_log);
  json summary = {{"command", to_string(spec.command)}, {"files", json::array()}};
  summary["methods"] = write_method_tables(spec, outs, summary["files"]);
  return summary;
}

json run_counterexample(const RunSpec& spec) {
  auto factory = [&](std::uint64_t s) {
    return spec.which == 1 ? gen_counterexample1(s, spec.horizon) : gen_counterexample2(s, spec.horizon);
  };
  auto outs = run_replications(factory, spec.methods, spec.params, spec.reps, spec.seed,
                               spec.threads, spec.write_decision_log);
  json summary = {{"command", to_string(spec.command)}, {"which", spec.which}, {"files", json::array()}};
  summary["methods"] = write_method_tables(spec, outs, summary["files"]);
  return summary;
}

json run_sweep(const RunSpec& spec) {
  json rows = json::array();
  for (double p : spec.p_list) {
    for (std::size_t k : spec.k_list) {
      MethodParams params = spec.params;
      params.k = k;
      params.arm_a.k = k;
      params.arm_b.k = k;
      auto outs = run_replications([&](std::uint64_t s) { return make_stream_world(spec, s, p); },
                                   spec.methods, params, spec.reps, spec.seed, spec.threads);
      for (std::size_t i = 0; i < spec.methods.size(); ++i) {
        std::vector<MetricsSeries> series;
        for (const auto& o : outs) series.push_back(o.series[i]);
        const auto agg = aggregate(series, spec.index_limit);
        // Final-time mFSR from each replication's last point.
        double falses = 0.0, denom = 0.0;
        for (const auto& s : series) {
          falses += static_cast<double>(s.points.back().n_false);
          denom += static_cast<double>(std::max<std::size_t>(s.points.back().n_selected, 1));
        }
        rows.push_back({{"k", k}, {"p", p}, {"method", to_string(spec.methods[i])},
                        {"fsr", agg.final.fsr}, {"fsr_se", agg.final.fsr_se},
                        {"mfsr", falses / denom}, {"tsr", agg.final.tsr},
                        {"tsr_se", agg.final.tsr_se}, {"mean_selected", agg.final.mean_selected}});
      }
    }
  }
  const auto dir = prepare_dir(spec.out_dir);
  const auto path = dir / (spec.prefix + "_sweep.tsv");
  auto out = open_output(path);
  write_sweep(out, to_json(spec).dump(), rows);
  return {{"command", to_string(spec.command)}, {"rows", rows}, {"files", json::array({path.string()})}};
}

json run_ingest(const RunSpec& spec) {
  auto in = open_input(spec.input);
  auto parsed = parse_records(in, spec.parse_mode);
  const auto kept = filter_items(parsed.records, spec.min_reviews);
  const Replay replay = build_streams(kept);

  ReplicationOutput one;
  const EvidenceKind evidence = HoeffdingBounded{2.0, spec.params.alpha};
  for (Method m : spec.methods) {
    ReplaySource source(replay);
    auto res = run_on(m, replay.grid, source, evidence, FixedPMethod::Wilcoxon, spec.params);
    one.series.push_back(compute_metrics(res.log, replay.truths, res.grid_times, res.arrivals));
    one.fsr_hat_excursions.push_back(res.fsr_hat_excursions);
    one.logs.push_back(std::move(res.log));
  }
  RunSpec with_log = spec;
  with_log.write_decision_log = true;
  json summary = {{"command", to_string(spec.command)},
                  {"records", parsed.records.size()},
                  {"skipped_rows", parsed.skipped.size()},
                  {"items", replay.item_ids.size()},
                  {"decision_times", replay.grid.times.size()},
                  {"first_review_ties", replay.first_review_ties},
                  {"files", json::array()}};
  summary["methods"] = write_method_tables(with_log, {one}, summary["files"]);
  for (std::size_t i = 0; i < spec.methods.size(); ++i)
    summary["methods"][to_string(spec.methods[i])]["selections"] = one.series[i].points.back().n_selected;
  return summary;
}

json run_report(const RunSpec& spec) {
  const auto dir = prepare_dir(spec.out_dir);
  json summary = {{"command", to_string(spec.command)}, {"files", json::array()}};
  if (!spec.inputs.empty()) {
    MetricTable merged;
    merged.merged = true;
    merged.spec_json = to_json(spec).dump();
    std::set<std::string> used;
    for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
      auto in = open_input(spec.inputs[i]);
      const auto table = read_metric_table(in);
      std::string id = fs::path(spec.inputs[i]).stem().string();
      if (!used.insert(id).second) id += "#" + std::to_string(i + 1);
      for (auto row : table.rows) {
        if (row.run_id.empty()) row.run_id = id;
        else row.run_id = id + "/" + row.run_id;
        merged.rows.push_back(std::move(row));
      }
    }
    const auto path = dir / (spec.prefix + "_merged.tsv");
    auto out = open_output(path);
    write_metric_table(out, merged);
    summary["files"].push_back(path.string());
    summary["merged_rows"] = merged.rows.size();
  }
  if (!spec.decision_log.empty()) {
    auto in = open_input(spec.decision_log);
    const auto decisions = read_decisions(in);
    // Traces come from the first replication in the log.
    std::size_t rep = 0;
    for (const auto& d : decisions) rep = rep == 0 ? d.rep : std::min(rep, d.rep);
    std::vector<std::string> methods;
    std::map<std::pair<std::string, std::size_t>, std::map<std::size_t, double>> cell;
    std::map<std::pair<std::string, std::size_t>, Time> times;
    for (const auto& d : decisions) {
      if (d.rep != rep) continue;
      if (std::find(methods.begin(), methods.end(), d.method) == methods.end()) methods.push_back(d.method);
      if (std::find(spec.trace_tasks.begin(), spec.trace_tasks.end(), d.row.task) == spec.trace_tasks.end())
        continue;
      const auto key = std::make_pair(d.method, d.row.time_index);
      cell[key][d.row.task] = std::max(d.row.level_a, d.row.level_b);
      times[key] = d.row.time;
    }
    const auto path = dir / (spec.prefix + "_traces.tsv");
    auto out = open_output(path);
    out << "# sava-traces v1\n# spec: " << to_json(spec).dump() << '\n';
    out << "method\tdecision_time_index\ttime";
    for (std::size_t t : spec.trace_tasks) out << "\ttask_" << t;
    out << '\n';
    for (const auto& m : methods) {
      for (const auto& [key, levels] : cell) {
        if (key.first != m) continue;
        out << m << '\t' << key.second << '\t' << times[key];
        for (std::size_t t : spec.trace_tasks) {
          const auto it = levels.find(t);
          out << '\t' << (it == levels.end() ? std::string("NA") : format_double(it->second));
        }
        out << '\n';
      }
    }
    summary["files"].push_back(path.string());
  }
  return summary;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Sava: return "sava";
    case Method::SavaClassical: return "sava-classical";
    case Method::SavaArmspec: return "sava-armspec";
    case Method::LordPP: return "lordpp";
    case Method::Saffron: return "saffron";
    case Method::Addis: return "addis";
    case Method::Method1: return "method1";
    case Method::Method2: return "method2";
    case Method::SavaSpecial: return "savaspecial";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::Sava, Method::SavaClassical, Method::SavaArmspec, Method::LordPP,
                   Method::Saffron, Method::Addis, Method::Method1, Method::Method2, Method::SavaSpecial})
    if (to_string(m) == s) return m;
  usage("unknown method '" + s + "'");
}

bool is_baseline(Method m) {
  return m == Method::LordPP || m == Method::Saffron || m == Method::Addis;
}

std::string to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Counterexample: return "counterexample";
    case Command::SweepK: return "sweep-k";
    case Command::IngestRun: return "ingest-run";
    case Command::Report: return "report";
  }
  return "?";
}

RunResult run_method(Method m, const World& world, const MethodParams& params) {
  WorldSource source(world);
  EvidenceKind evidence = DirectPValues{};
  FixedPMethod pvalues = FixedPMethod::Wilcoxon;
  if (world.kind == WorldKind::Stream) {
    if (const auto* tg = std::get_if<model::TruncGauss>(&world.config.model)) {
      evidence = HoeffdingBounded{tg->bound, params.alpha};
    } else {
      evidence = GaussianLR{std::get<model::Gauss>(world.config.model).mu};
      pvalues = FixedPMethod::ZTest;
    }
  }
  return run_on(m, world.grid, source, evidence, pvalues, params);
}

std::uint64_t replication_seed(std::uint64_t root, std::size_t r) {
  return derive_seed(derive_seed(root, kReplicationStream), r);
}

std::vector<ReplicationOutput> run_replications(const WorldFactory& make_world,
                                                const std::vector<Method>& methods,
                                                const MethodParams& params, std::size_t reps,
                                                std::uint64_t seed, std::size_t threads,
                                                bool keep_logs) {
  std::vector<ReplicationOutput> outs(reps);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    while (true) {
      const std::size_t r = next.fetch_add(1);
      if (r >= reps) return;
      try {
        const World world = make_world(replication_seed(seed, r));
        auto& o = outs[r];
        for (Method m : methods) {
          auto res = run_method(m, world, params);
          o.series.push_back(compute_metrics(res.log, world.truths, res.grid_times, res.arrivals));
          o.fsr_hat_excursions.push_back(res.fsr_hat_excursions);
          if (keep_logs) o.logs.push_back(std::move(res.log));
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(reps);
      }
    }
  };

  const std::size_t n = std::max<std::size_t>(1, std::min(threads, reps));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return outs;
}

RunSpec resolve_spec(const json& request) {
  if (!request.is_object()) usage("run request must be a JSON object");
  static const std::set<std::string> known = {
      "command", "model", "mu", "K", "pi_plus", "T", "p", "alpha", "k", "alpha_a", "alpha_b",
      "k_a", "k_b", "methods", "reps", "seed", "threads", "index_limit", "which", "k_list",
      "p_list", "input", "min_reviews", "parse_mode", "inputs", "decision_log", "trace_tasks",
      "out_dir", "prefix", "write_decision_log"};
  for (const auto& [key, _] : request.items())
    if (!known.count(key)) usage("unknown option '" + key + "'");

  RunSpec s;
  if (!request.contains("command") || !request["command"].is_string()) usage("missing command");
  const std::string cmd = request["command"];
  if (cmd == "simulate") s.command = Command::Simulate;
  else if (cmd == "counterexample") s.command = Command::Counterexample;
  else if (cmd == "sweep-k") s.command = Command::SweepK;
  else if (cmd == "ingest-run") s.command = Command::IngestRun;
  else if (cmd == "report") s.command = Command::Report;
  else usage("unknown command '" + cmd + "'");

  // Command defaults.
  std::vector<std::string> methods = {"sava", "lordpp", "saffron", "addis"};
  switch (s.command) {
    case Command::Counterexample:
      s.params.alpha = 0.1;
      s.horizon = 100;
      s.arrival_prob = 1.0;
      break;
    case Command::SweepK:
      s.model = "gauss";
      s.mu = 0.1;
      s.k_list = {2, 10, 25, 100};
      s.p_list = {1.0 / 20.0, 1.0 / 3.0, 2.0 / 3.0};
      methods = {"sava"};
      break;
    case Command::IngestRun:
      s.params.alpha = 0.2;
      s.params.k = 100;
      break;
    default: break;
  }

  auto has = [&](const char* key) { return request.contains(key) && !request[key].is_null(); };
  if (has("which")) {
    if (!request["which"].is_number_integer()) usage("'which' must be 1 or 2");
    s.which = request["which"].get<int>();
    if (s.which != 1 && s.which != 2) usage("--which must be 1 or 2");
  }
  if (s.command == Command::Counterexample)
    methods = {s.which == 1 ? "method1" : "method2", "savaspecial", "sava"};

  if (has("model")) {
    if (!request["model"].is_string()) usage("'model' must be a string");
    s.model = request["model"];
    if (s.model != "truncgauss" && s.model != "gauss") usage("model must be truncgauss or gauss");
  }
  if (has("mu")) s.mu = get_number<double>(request["mu"], "mu");
  if (has("K")) s.bound = get_number<double>(request["K"], "K");
  if (has("pi_plus")) s.pi_plus = get_number<double>(request["pi_plus"], "pi_plus");
  if (has("T")) s.horizon = static_cast<Time>(get_count(request["T"], "T", 1));
  if (has("p")) s.arrival_prob = get_number<double>(request["p"], "p");
  if (has("alpha")) s.params.alpha = get_number<double>(request["alpha"], "alpha");
  if (has("k")) s.params.k = get_count(request["k"], "k", 1);
  s.params.arm_a = {s.params.alpha, s.params.k};
  s.params.arm_b = {s.params.alpha, s.params.k};
  if (has("alpha_a")) s.params.arm_a.alpha = get_number<double>(request["alpha_a"], "alpha_a");
  if (has("alpha_b")) s.params.arm_b.alpha = get_number<double>(request["alpha_b"], "alpha_b");
  if (has("k_a")) s.params.arm_a.k = get_count(request["k_a"], "k_a", 1);
  if (has("k_b")) s.params.arm_b.k = get_count(request["k_b"], "k_b", 1);
  if (has("methods")) methods = get_strings(request["methods"], "methods");
  if (has("reps")) s.reps = get_count(request["reps"], "reps", 1);
  if (has("seed")) {
    if (!request["seed"].is_number_unsigned()) usage("'seed' must be a non-negative integer");
    s.seed = request["seed"].get<std::uint64_t>();
  }
  if (has("threads")) s.threads = get_count(request["threads"], "threads", 1);
  if (has("index_limit")) s.index_limit = get_count(request["index_limit"], "index_limit", 1);
  if (has("k_list")) {
    s.k_list.clear();
    if (!request["k_list"].is_array()) usage("'k_list' must be a list");
    for (const auto& e : request["k_list"]) s.k_list.push_back(get_count(e, "k_list", 1));
  }
  if (has("p_list")) {
    s.p_list.clear();
    if (!request["p_list"].is_array()) usage("'p_list' must be a list");
    for (const auto& e : request["p_list"]) s.p_list.push_back(get_number<double>(e, "p_list"));
  }
  if (has("input")) s.input = request["input"].get<std::string>();
  if (has("min_reviews")) s.min_reviews = get_count(request["min_reviews"], "min_reviews", 1);
  if (has("parse_mode")) {
    const std::string m = request["parse_mode"];
    if (m == "strict") s.parse_mode = ParseMode::Strict;
    else if (m == "skip") s.parse_mode = ParseMode::Skip;
    else usage("parse_mode must be strict or skip");
  }
  if (has("inputs")) s.inputs = get_strings(request["inputs"], "inputs");
  if (has("decision_log")) s.decision_log = request["decision_log"].get<std::string>();
  if (has("trace_tasks")) {
    if (!request["trace_tasks"].is_array()) usage("'trace_tasks' must be a list");
    for (const auto& e : request["trace_tasks"]) s.trace_tasks.push_back(get_count(e, "trace_tasks", 1));
  }
  if (has("out_dir")) s.out_dir = request["out_dir"].get<std::string>();
  s.prefix = has("prefix") ? request["prefix"].get<std::string>() : to_string(s.command);
  if (has("write_decision_log")) {
    if (!request["write_decision_log"].is_boolean()) usage("'write_decision_log' must be true or false");
    s.write_decision_log = request["write_decision_log"];
  }

  // Validation.
  auto in_unit = [](double a) { return a > 0.0 && a < 1.0; };
  if (!in_unit(s.params.alpha) || !in_unit(s.params.arm_a.alpha) || !in_unit(s.params.arm_b.alpha))
    usage("alpha must lie in (0,1)");
  if (!(s.mu > 0.0)) usage("mu must be positive");
  if (!(s.bound > 0.0)) usage("K must be positive");
  if (!(s.pi_plus >= 0.0 && s.pi_plus <= 1.0)) usage("pi_plus must lie in [0,1]");
  if (!(s.arrival_prob > 0.0 && s.arrival_prob <= 1.0)) usage("p must lie in (0,1]");
  for (double p : s.p_list)
    if (!(p > 0.0 && p <= 1.0)) usage("every p in the sweep must lie in (0,1]");
  if (s.prefix.empty() || s.prefix.find('/') != std::string::npos) usage("prefix must be a plain file name");
  if (s.command != Command::Report) {
    if (methods.empty()) usage("at least one method is required");
    for (const auto& m : methods) s.methods.push_back(method_from_string(m));
  }
  if (s.command == Command::SweepK && (s.k_list.empty() || s.p_list.empty()))
    usage("sweep-k needs non-empty k and p lists");
  if (s.command == Command::IngestRun && s.input.empty()) usage("ingest-run needs an input file");
  if (s.command == Command::Report) {
    if (s.inputs.empty() && s.decision_log.empty()) usage("report needs at least one input");
    if (!s.decision_log.empty() && s.trace_tasks.empty()) usage("level traces need task ids");
  }
  return s;
}

json to_json(const RunSpec& s) {
  json methods = json::array();
  for (Method m : s.methods) methods.push_back(to_string(m));
  json j = {{"command", to_string(s.command)},
            {"methods", methods},
            {"alpha", s.params.alpha},
            {"k", s.params.k},
            {"alpha_a", s.params.arm_a.alpha},
            {"alpha_b", s.params.arm_b.alpha},
            {"k_a", s.params.arm_a.k},
            {"k_b", s.params.arm_b.k},
            {"out_dir", s.out_dir},
            {"prefix", s.prefix}};
  switch (s.command) {
    case Command::Simulate:
    case Command::SweepK:
      j["model"] = s.model;
      j["mu"] = s.mu;
      if (s.model == "truncgauss") j["K"] = s.bound;
      j["pi_plus"] = s.pi_plus;
      j["T"] = s.horizon;
      if (s.command == Command::SweepK) {
        j["k_list"] = s.k_list;
        j["p_list"] = s.p_list;
      } else {
        j["p"] = s.arrival_prob;
      }
      j["reps"] = s.reps;
      j["seed"] = s.seed;
      j["index_limit"] = s.index_limit;
      j["write_decision_log"] = s.write_decision_log;
      break;
    case Command::Counterexample:
      j["which"] = s.which;
      j["T"] = s.horizon;
      j["p"] = 1.0;
      j["reps"] = s.reps;
      j["seed"] = s.seed;
      j["index_limit"] = s.index_limit;
      j["write_decision_log"] = s.write_decision_log;
      break;
    case Command::IngestRun:
      j["input"] = s.input;
      j["min_reviews"] = s.min_reviews;
      j["parse_mode"] = s.parse_mode == ParseMode::Strict ? "strict" : "skip";
      j["index_limit"] = s.index_limit;
      break;
    case Command::Report:
      j.erase("methods");
      j["inputs"] = s.inputs;
      j["decision_log"] = s.decision_log;
      j["trace_tasks"] = s.trace_tasks;
      break;
  }
  // Thread count is left out on purpose: outputs do not depend on it.
  return j;
}

json execute(const RunSpec& spec) {
  json summary;
  switch (spec.command) {
    case Command::Simulate: summary = run_simulate(spec); break;
    case Command::Counterexample: summary = run_counterexample(spec); break;
    case Command::SweepK: summary = run_sweep(spec); break;
    case Command::IngestRun: summary = run_ingest(spec); break;
    case Command::Report: summary = run_report(spec); break;
  }
  write_manifest(spec, summary);
  return summary;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MetricTable metric_table(const Aggregate& agg, const std::string& method, const std::string& spec_json) {
  MetricTable t;
  t.spec_json = spec_json;
  for (const auto& p : agg.points) {
    const std::string idx = std::to_string(p.time_index);
    t.rows.push_back({"", idx, method, "fsr", p.fsr, p.fsr_se});
    t.rows.push_back({"", idx, method, "mfsr", p.mfsr, p.mfsr_se});
    t.rows.push_back({"", idx, method, "tsr", p.tsr, p.tsr_se});
    t.rows.push_back({"", idx, method, "mean_selected", p.mean_selected, 0.0});
  }
  if (!agg.points.empty()) {
    t.rows.push_back({"", "final", method, "fsr", agg.final.fsr, agg.final.fsr_se});
    t.rows.push_back({"", "final", method, "tsr", agg.final.tsr, agg.final.tsr_se});
    t.rows.push_back({"", "final", method, "mean_selected", agg.final.mean_selected, 0.0});
  }
  return t;
}

void write_metric_table(std::ostream& out, const MetricTable& t) {
  out << kMetricsHeader << '\n' << "# spec: " << t.spec_json << '\n';
  if (t.merged) out << "run_id\t";
  out << "decision_time_index\tmethod\tmetric\tvalue\tstderr\n";
  for (const auto& r : t.rows) {
    if (t.merged) out << r.run_id << '\t';
    out << r.time_index << '\t' << r.method << '\t' << r.metric << '\t' << format_double(r.value)
        << '\t' << format_double(r.stderr_value) << '\n';
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, '\t')) out.push_back(f);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t lineno) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": bad number '" + s + "'");
  return v;
}

Time parse_time(const std::string& s, std::size_t lineno) {
  Time v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": bad time '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s, std::size_t lineno) {
  const double v = parse_double(s, lineno);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
    fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": bad count '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

MetricTable read_metric_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    fail(ErrorCode::Parse, "not a metric table (expected '" + std::string(kMetricsHeader) + "')");
  MetricTable t;
  std::size_t lineno = 1;
  bool have_columns = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# spec: ", 0) == 0) {
      t.spec_json = line.substr(8);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (!have_columns) {
      have_columns = true;
      if (f == std::vector<std::string>{"run_id", "decision_time_index", "method", "metric", "value", "stderr"})
        t.merged = true;
      else if (f != std::vector<std::string>{"decision_time_index", "method", "metric", "value", "stderr"})
        fail(ErrorCode::Parse, "metric table: unexpected columns on line " + std::to_string(lineno));
      continue;
    }
    const std::size_t off = t.merged ? 1 : 0;
    if (f.size() != 5 + off)
      fail(ErrorCode::Parse, "metric table line " + std::to_string(lineno) + ": wrong field count");
    MetricRow r;
    if (t.merged) r.run_id = f[0];
    r.time_index = f[off];
    r.method = f[off + 1];
    r.metric = f[off + 2];
    r.value = parse_double(f[off + 3], lineno);
    r.stderr_value = parse_double(f[off + 4], lineno);
    t.rows.push_back(std::move(r));
  }
  if (!have_columns) fail(ErrorCode::Parse, "metric table has no column header");
  return t;
}

void write_decision_header(std::ostream& out, const std::string& spec_json) {
  out << kDecisionsHeader << '\n' << "# spec: " << spec_json << '\n';
  out << "rep\tmethod\tdecision_time_index\ttime\ttask\tdecision\tp_a\tp_b\tlevel_a\tlevel_b\n";
}

void write_decisions(std::ostream& out, std::size_t rep, const std::string& method,
                     const std::vector<DecisionRow>& log) {
  for (const auto& r : log)
    out << rep << '\t' << method << '\t' << r.time_index << '\t' << r.time << '\t' << r.task << '\t'
        << to_char(r.decision) << '\t' << format_double(r.p_a) << '\t' << format_double(r.p_b)
        << '\t' << format_double(r.level_a) << '\t' << format_double(r.level_b) << '\n';
}

std::vector<LoggedDecision> read_decisions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDecisionsHeader)
    fail(ErrorCode::Parse, "not a decision log (expected '" + std::string(kDecisionsHeader) + "')");
  std::vector<LoggedDecision> out;
  std::size_t lineno = 1;
  bool have_columns = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!have_columns) {
      have_columns = true;
      continue;
    }
    const auto f = split_tabs(line);
    if (f.size() != 10 || f[5].size() != 1)
      fail(ErrorCode::Parse, "decision log line " + std::to_string(lineno) + ": malformed row");
    LoggedDecision d;
    d.rep = parse_size(f[0], lineno);
    d.method = f[1];
    d.row.time_index = parse_size(f[2], lineno);
    d.row.time = parse_time(f[3], lineno);
    d.row.task = parse_size(f[4], lineno);
    d.row.decision = decision_from_char(f[5][0]);
    d.row.p_a = parse_double(f[6], lineno);
    d.row.p_b = parse_double(f[7], lineno);
    d.row.level_a = parse_double(f[8], lineno);
    d.row.level_b = parse_double(f[9], lineno);
    out.push_back(d);
  }
  return out;
}

}  // namespace sava
