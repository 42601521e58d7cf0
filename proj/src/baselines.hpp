#pragma once
//
// Online FDR comparators (LORD++, SAFFRON, ADDIS) run once per direction in the
// synchronous regime: every task is tested exactly once, at the first decision
// time after it arrives, with a fixed-sample p-value.
//

#include <cstddef>
#include <string>
#include <vector>

#include "engine.hpp"

namespace sava {

enum class BaselineRule { LordPP, Saffron, Addis };

std::string to_string(BaselineRule r);
BaselineRule baseline_rule_from_string(const std::string& s);

// gamma_j = 0.0722 log(j v 2) / (j exp(sqrt(log j))); unnormalized. Zero for j < 1.
double gamma_lordpp(long j);

// Sum_{j>=1} (j+1)^-1.6, by direct summation to 1e6 plus an integral tail.
double gamma_power_normalizer();
// (j+1)^-1.6 / normalizer; zero for j < 1.
double gamma_power(long j);

struct SpenderParams {
  BaselineRule rule = BaselineRule::LordPP;
  double alpha = 0.05;
  double w0 = 0.005;
  double lambda = 0.0;  // SAFFRON candidacy cap, ADDIS candidacy threshold
  double tau = 0.0;     // ADDIS discarding threshold
};

// Defaults: LORD++ w0 = alpha/10; SAFFRON lambda = 0.5, w0 = alpha/2;
// ADDIS lambda = 0.25, tau = 0.5, w0 = alpha/2.
SpenderParams default_params(BaselineRule rule, double alpha);

// One directional stream of hypotheses.
class Spender {
 public:
  explicit Spender(SpenderParams params);

  // Level for the next hypothesis j = tested() + 1.
  double next_level() const;
  // Tests the next hypothesis; returns true on rejection (p <= level).
  bool test(double p);

  std::size_t tested() const { return p_.size(); }
  std::size_t rejections() const { return rejection_index_.size(); }
  const std::vector<double>& levels() const { return levels_; }
  const std::vector<double>& pvalues() const { return p_; }
  const SpenderParams& params() const { return params_; }

 private:
  double lordpp_level(long j) const;
  double saffron_level(long j) const;
  double addis_level(long j) const;

  SpenderParams params_;
  std::vector<double> p_;
  std::vector<double> levels_;
  std::vector<long> rejection_index_;  // tau_i, 1-based
};

// Neither rejected -> D; both -> A if p_a < p_b, else B; otherwise the rejected arm.
Decision combine_directional(bool reject_a, bool reject_b, double p_a, double p_b);

enum class FixedPMethod { Wilcoxon, ZTest };

struct BaselineConfig {
  BaselineRule rule = BaselineRule::LordPP;
  double alpha = 0.05;
  FixedPMethod pvalues = FixedPMethod::Wilcoxon;
  double sigma = 1.0;  // z-test noise level
};

RunResult run_baseline(const BaselineConfig& config, const DecisionGrid& grid,
                       StreamSource& source);

}  // namespace sava
