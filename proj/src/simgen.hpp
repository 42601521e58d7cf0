#pragma once
//
// Synthetic doubly-sequential worlds: Bernoulli task arrivals on 1..T, the
// synchronized decision grid, ground truths, and per-task data streams.
//
// Every task owns a substream derived from the root seed and its index, so
// adding tasks never perturbs earlier tasks' data.
//

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "engine.hpp"

namespace sava {

namespace model {
// trN(+-mu, 1, -bound, bound)
struct TruncGauss {
  double mu = 1.0;
  double bound = 2.0;
};
// N(+-mu, 1)
struct Gauss {
  double mu = 0.1;
};
}  // namespace model

using DataModel = std::variant<model::TruncGauss, model::Gauss>;

struct WorldConfig {
  Time horizon = 300;
  double arrival_prob = 1.0 / 3.0;
  double pi_plus = 0.5;
  DataModel model = model::TruncGauss{};
  std::uint64_t seed = 1;

  void validate() const;
};

enum class WorldKind { Stream, Counterexample1, Counterexample2 };

struct World {
  WorldKind kind = WorldKind::Stream;
  WorldConfig config;
  DecisionGrid grid;
  std::vector<Arm> truths;                 // truths[j - 1]
  std::vector<double> means;               // signed mean of task j's stream
  std::vector<std::uint64_t> task_seeds;   // data substream seeds
  std::vector<PValuePair> static_pvalues;  // counterexample worlds only

  std::size_t n_tasks() const { return grid.n_tasks(); }
};

// splitmix64 finalizer applied to root ^ f(stream); distinct streams give
// statistically independent seeds.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

// Uniform on (0, 1), built from the top 53 bits; never returns 0 or 1.
double uniform_open(std::mt19937_64& rng);

// N(mu, sigma^2) conditioned on [lo, hi], by inverse CDF (one uniform per draw).
double sample_truncnorm(double mu, double sigma, double lo, double hi, std::mt19937_64& rng);

// Arrivals {1} u {t >= 2 : Ber(p)}; grid {t - 1 : arrival t >= 2} u {T}.
World gen_world(const WorldConfig& config);

// 500 task specs with mu in {-0.5, 0.5}; only tasks arriving by the horizon are kept.
World gen_counterexample1(std::uint64_t seed, Time horizon = 100);
// 100 tasks with the fixed block pattern of means (2.5 / 0.01 / 2.5 / 0.001 / 2.5 / 0.001).
World gen_counterexample2(std::uint64_t seed, Time horizon = 100);

inline constexpr std::size_t kCounterexample1Tasks = 500;
inline constexpr std::size_t kCounterexample2Tasks = 100;
double counterexample2_mean(std::size_t j);

// Serves a world's streams. Sample s of task j is the observation at time
// arrival + s, so any window can be replayed identically.
class WorldSource : public StreamSource {
 public:
  explicit WorldSource(const World& world);
  TaskBatch collect(std::size_t task, Time from_exclusive, Time to_inclusive) override;
  // The first n observations of task j.
  std::vector<double> prefix(std::size_t task, std::size_t n);

 private:
  void fill(std::size_t task, std::size_t n);

  const World& world_;
  std::vector<std::mt19937_64> rngs_;
  std::vector<std::vector<double>> drawn_;
};

// Versioned text fixture ("# sava-world v1").
void write_world(std::ostream& out, const World& world);
World read_world(std::istream& in);

std::string to_string(WorldKind k);

}  // namespace sava
