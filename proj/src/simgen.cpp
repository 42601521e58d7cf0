#include "simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace sava {

namespace {

constexpr const char* kWorldHeader = "# sava-world v1";

// Sub-stream tags under a task seed.
constexpr std::uint64_t kTruthStream = 1;
constexpr std::uint64_t kDataStream = 2;
constexpr std::uint64_t kArrivalStream = 0x41525256ULL;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double model_mu(const DataModel& m) {
  return std::visit([](const auto& x) { return x.mu; }, m);
}

DecisionGrid grid_from_arrivals(std::vector<Time> arrivals, Time horizon) {
  DecisionGrid g;
  for (std::size_t j = 1; j < arrivals.size(); ++j) g.times.push_back(arrivals[j] - 1);
  if (g.times.empty() || g.times.back() != horizon) g.times.push_back(horizon);
  g.arrivals = std::move(arrivals);
  return g;
}

World counterexample_world(WorldKind kind, std::uint64_t seed, Time horizon, std::size_t specs,
                           double (*mean_of)(std::size_t, std::uint64_t)) {
  if (horizon < 1) fail(ErrorCode::InvalidArgument, "horizon must be >= 1");
  World w;
  w.kind = kind;
  w.config.horizon = horizon;
  w.config.arrival_prob = 1.0;
  w.config.pi_plus = 0.5;
  w.config.model = model::Gauss{0.5};
  w.config.seed = seed;
  const std::size_t n = std::min<std::size_t>(specs, static_cast<std::size_t>(horizon));
  std::vector<Time> arrivals;
  for (std::size_t j = 1; j <= n; ++j) {
    const std::uint64_t ts = derive_seed(seed, j);
    const double mu = mean_of(j, ts);
    const Arm truth = mu >= 0.0 ? Arm::A : Arm::B;
    std::mt19937_64 rng(derive_seed(ts, kDataStream));
    // Y ~ N(mu, 0.25): variance 0.25, standard deviation 0.5.
    const double y = mu + 0.5 * normal_quantile(uniform_open(rng));
    const double u = uniform_open(rng);
    PValuePair p;
    if (truth == Arm::A) {
      p = {0.5 * std::erfc(y / std::sqrt(2.0)), u};
    } else {
      p = {u, normal_cdf(y)};
    }
    arrivals.push_back(static_cast<Time>(j));
    w.truths.push_back(truth);
    w.means.push_back(mu);
    w.task_seeds.push_back(ts);
    w.static_pvalues.push_back(p);
  }
  w.grid = grid_from_arrivals(std::move(arrivals), horizon);
  return w;
}

double ce1_mean(std::size_t, std::uint64_t task_seed) {
  std::mt19937_64 rng(derive_seed(task_seed, kTruthStream));
  return uniform_open(rng) < 0.5 ? 0.5 : -0.5;
}

double ce2_mean(std::size_t j, std::uint64_t) { return counterexample2_mean(j); }

nlohmann::json config_json(const World& w) {
  nlohmann::json m;
  if (const auto* tg = std::get_if<model::TruncGauss>(&w.config.model))
    m = {{"name", "truncgauss"}, {"mu", tg->mu}, {"bound", tg->bound}};
  else
    m = {{"name", "gauss"}, {"mu", model_mu(w.config.model)}};
  return {{"kind", to_string(w.kind)},
          {"horizon", w.config.horizon},
          {"arrival_prob", w.config.arrival_prob},
          {"pi_plus", w.config.pi_plus},
          {"model", m},
          {"seed", w.config.seed}};
}

}  // namespace

void WorldConfig::validate() const {
  if (horizon < 1) fail(ErrorCode::InvalidArgument, "horizon T must be >= 1");
  if (!(arrival_prob > 0.0 && arrival_prob <= 1.0))
    fail(ErrorCode::InvalidArgument, "arrival probability must lie in (0,1]");
  if (!(pi_plus >= 0.0 && pi_plus <= 1.0)) fail(ErrorCode::InvalidArgument, "pi_plus must lie in [0,1]");
  if (!(model_mu(model) > 0.0)) fail(ErrorCode::InvalidArgument, "mu must be positive");
  if (const auto* tg = std::get_if<model::TruncGauss>(&model))
    if (!(tg->bound > 0.0)) fail(ErrorCode::InvalidArgument, "truncation bound K must be positive");
}

std::string to_string(WorldKind k) {
  switch (k) {
    case WorldKind::Stream: return "stream";
    case WorldKind::Counterexample1: return "counterexample1";
    case WorldKind::Counterexample2: return "counterexample2";
  }
  return "?";
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return splitmix64(splitmix64(root) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double sample_truncnorm(double mu, double sigma, double lo, double hi, std::mt19937_64& rng) {
  if (!(sigma > 0.0)) fail(ErrorCode::Domain, "truncated normal needs sigma > 0");
  if (!(lo < hi)) fail(ErrorCode::Domain, "truncated normal needs lo < hi");
  const double a = normal_cdf((lo - mu) / sigma);
  const double b = normal_cdf((hi - mu) / sigma);
  if (!(b > a)) fail(ErrorCode::Domain, "truncation range carries no probability mass");
  const double u = a + uniform_open(rng) * (b - a);
  return std::clamp(mu + sigma * normal_quantile(u), lo, hi);
}

World gen_world(const WorldConfig& config) {
  config.validate();
  World w;
  w.kind = WorldKind::Stream;
  w.config = config;
  std::mt19937_64 arrival_rng(derive_seed(config.seed, kArrivalStream));
  std::vector<Time> arrivals{1};
  for (Time t = 2; t <= config.horizon; ++t)
    if (uniform_open(arrival_rng) < config.arrival_prob) arrivals.push_back(t);

  const double mu = model_mu(config.model);
  for (std::size_t j = 1; j <= arrivals.size(); ++j) {
    const std::uint64_t ts = derive_seed(config.seed, j);
    std::mt19937_64 truth_rng(derive_seed(ts, kTruthStream));
    const Arm truth = uniform_open(truth_rng) < config.pi_plus ? Arm::A : Arm::B;
    w.truths.push_back(truth);
    w.means.push_back(truth == Arm::A ? mu : -mu);
    w.task_seeds.push_back(ts);
  }
  w.grid = grid_from_arrivals(std::move(arrivals), config.horizon);
  return w;
}

double counterexample2_mean(std::size_t j) {
  if (j >= 1 && j <= 20) return 2.5;
  if (j <= 50) return 0.01;
  if (j <= 60) return 2.5;
  if (j <= 70) return 0.001;
  if (j <= 80) return 2.5;
  if (j <= 100) return 0.001;
  fail(ErrorCode::InvalidArgument, "counterexample 2 has tasks 1..100 only");
}

World gen_counterexample1(std::uint64_t seed, Time horizon) {
  return counterexample_world(WorldKind::Counterexample1, seed, horizon, kCounterexample1Tasks,
                              ce1_mean);
}

World gen_counterexample2(std::uint64_t seed, Time horizon) {
  return counterexample_world(WorldKind::Counterexample2, seed, horizon, kCounterexample2Tasks,
                              ce2_mean);
}

WorldSource::WorldSource(const World& world) : world_(world), drawn_(world.n_tasks()) {
  rngs_.reserve(world.n_tasks());
  for (std::uint64_t s : world.task_seeds) rngs_.emplace_back(derive_seed(s, kDataStream));
}

void WorldSource::fill(std::size_t task, std::size_t n) {
  auto& xs = drawn_[task - 1];
  auto& rng = rngs_[task - 1];
  const double mean = world_.means[task - 1];
  while (xs.size() < n) {
    if (const auto* tg = std::get_if<model::TruncGauss>(&world_.config.model))
      xs.push_back(sample_truncnorm(mean, 1.0, -tg->bound, tg->bound, rng));
    else
      xs.push_back(mean + normal_quantile(uniform_open(rng)));
  }
}

std::vector<double> WorldSource::prefix(std::size_t task, std::size_t n) {
  if (task == 0 || task > world_.n_tasks()) fail(ErrorCode::InvalidArgument, "unknown task");
  fill(task, n);
  const auto& xs = drawn_[task - 1];
  return {xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(n)};
}

TaskBatch WorldSource::collect(std::size_t task, Time from_exclusive, Time to_inclusive) {
  if (task == 0 || task > world_.n_tasks()) fail(ErrorCode::InvalidArgument, "unknown task");
  TaskBatch batch;
  batch.task = task;
  if (world_.kind != WorldKind::Stream) {
    batch.direct = world_.static_pvalues[task - 1];
    return batch;
  }
  const Time arrival = world_.grid.arrivals[task - 1];
  const Time lo = std::max(from_exclusive + 1, arrival);
  if (to_inclusive < lo) return batch;
  const auto first = static_cast<std::size_t>(lo - arrival);
  const auto last = static_cast<std::size_t>(to_inclusive - arrival);  // inclusive
  fill(task, last + 1);
  const auto& xs = drawn_[task - 1];
  batch.samples.assign(xs.begin() + static_cast<std::ptrdiff_t>(first),
                       xs.begin() + static_cast<std::ptrdiff_t>(last + 1));
  return batch;
}

void write_world(std::ostream& out, const World& w) {
  out << kWorldHeader << '\n';
  out << "# config " << config_json(w).dump() << '\n';
  out << "grid";
  for (Time t : w.grid.times) out << ' ' << t;
  out << '\n';
  for (std::size_t j = 1; j <= w.n_tasks(); ++j) {
    out << "task " << j << ' ' << w.grid.arrivals[j - 1] << ' '
        << (w.truths[j - 1] == Arm::A ? 'A' : 'B') << ' ' << fmt(w.means[j - 1]) << ' '
        << w.task_seeds[j - 1];
    if (!w.static_pvalues.empty())
      out << ' ' << fmt(w.static_pvalues[j - 1].a) << ' ' << fmt(w.static_pvalues[j - 1].b);
    out << '\n';
  }
}

World read_world(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line != kWorldHeader)
    fail(ErrorCode::Parse, "world fixture: missing '" + std::string(kWorldHeader) + "' header");
  World w;
  bool have_config = false;
  auto parse_error = [&](const std::string& what) {
    fail(ErrorCode::Parse, "world fixture line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# config ", 0) == 0) {
      try {
        const auto j = nlohmann::json::parse(line.substr(9));
        const std::string kind = j.at("kind");
        if (kind == "stream") w.kind = WorldKind::Stream;
        else if (kind == "counterexample1") w.kind = WorldKind::Counterexample1;
        else if (kind == "counterexample2") w.kind = WorldKind::Counterexample2;
        else parse_error("unknown world kind '" + kind + "'");
        w.config.horizon = j.at("horizon");
        w.config.arrival_prob = j.at("arrival_prob");
        w.config.pi_plus = j.at("pi_plus");
        w.config.seed = j.at("seed");
        const auto& m = j.at("model");
        if (m.at("name") == "truncgauss")
          w.config.model = model::TruncGauss{m.at("mu"), m.at("bound")};
        else
          w.config.model = model::Gauss{m.at("mu")};
      } catch (const nlohmann::json::exception& e) {
        parse_error(std::string("bad config: ") + e.what());
      }
      have_config = true;
      continue;
    }
    if (line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "grid") {
      Time t;
      while (ss >> t) w.grid.times.push_back(t);
      if (!ss.eof()) parse_error("bad grid time");
    } else if (tag == "task") {
      std::size_t j;
      Time arrival;
      char truth;
      double mean;
      std::uint64_t seed;
      if (!(ss >> j >> arrival >> truth >> mean >> seed)) parse_error("bad task row");
      if (j != w.n_tasks() + 1) parse_error("task rows must be numbered 1, 2, ...");
      if (truth != 'A' && truth != 'B') parse_error("truth must be A or B");
      w.grid.arrivals.push_back(arrival);
      w.truths.push_back(truth == 'A' ? Arm::A : Arm::B);
      w.means.push_back(mean);
      w.task_seeds.push_back(seed);
      PValuePair p;
      if (ss >> p.a >> p.b) w.static_pvalues.push_back(p);
    } else {
      parse_error("unknown row tag '" + tag + "'");
    }
  }
  if (!have_config) fail(ErrorCode::Parse, "world fixture: missing config line");
  if (w.kind != WorldKind::Stream && w.static_pvalues.size() != w.n_tasks())
    fail(ErrorCode::Parse, "world fixture: counterexample rows need p-values");
  w.grid.validate();
  return w;
}

}  // namespace sava
