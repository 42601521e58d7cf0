#include "baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace sava {

namespace {

constexpr long kPowerSumTerms = 1000000;
constexpr double kPowerExponent = 1.6;

}  // namespace

std::string to_string(BaselineRule r) {
  switch (r) {
    case BaselineRule::LordPP: return "lordpp";
    case BaselineRule::Saffron: return "saffron";
    case BaselineRule::Addis: return "addis";
  }
  return "?";
}

BaselineRule baseline_rule_from_string(const std::string& s) {
  if (s == "lordpp") return BaselineRule::LordPP;
  if (s == "saffron") return BaselineRule::Saffron;
  if (s == "addis") return BaselineRule::Addis;
  fail(ErrorCode::InvalidArgument, "unknown baseline rule '" + s + "'");
}

double gamma_lordpp(long j) {
  if (j < 1) return 0.0;
  const double jd = static_cast<double>(j);
  return 0.0722 * std::log(std::max(jd, 2.0)) / (jd * std::exp(std::sqrt(std::log(jd))));
}

double gamma_power_normalizer() {
  static const double total = [] {
    // Summed smallest-first to limit rounding; the tail is the midpoint-rule
    // integral of x^-1.6 over [N + 1.5, inf).
    double tail = std::pow(static_cast<double>(kPowerSumTerms) + 1.5, 1.0 - kPowerExponent) /
                  (kPowerExponent - 1.0);
    double sum = 0.0;
    for (long j = kPowerSumTerms; j >= 1; --j)
      sum += std::pow(static_cast<double>(j + 1), -kPowerExponent);
    return sum + tail;
  }();
  return total;
}

double gamma_power(long j) {
  if (j < 1) return 0.0;
  return std::pow(static_cast<double>(j + 1), -kPowerExponent) / gamma_power_normalizer();
}

SpenderParams default_params(BaselineRule rule, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
  SpenderParams p;
  p.rule = rule;
  p.alpha = alpha;
  switch (rule) {
    case BaselineRule::LordPP: p.w0 = alpha / 10.0; break;
    case BaselineRule::Saffron:
      p.w0 = alpha / 2.0;
      p.lambda = 0.5;
      break;
    case BaselineRule::Addis:
      p.w0 = alpha / 2.0;
      p.lambda = 0.25;
      p.tau = 0.5;
      break;
  }
  return p;
}

Spender::Spender(SpenderParams params) : params_(params) {
  if (!(params_.alpha > 0.0 && params_.alpha < 1.0))
    fail(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
  if (!(params_.w0 >= 0.0 && params_.w0 <= params_.alpha))
    fail(ErrorCode::InvalidArgument, "w0 must lie in [0, alpha]");
  if (params_.rule == BaselineRule::Addis && !(params_.lambda < params_.tau))
    fail(ErrorCode::InvalidArgument, "ADDIS needs lambda < tau");
}

double Spender::lordpp_level(long j) const {
  const auto& p = params_;
  double level = p.w0 * gamma_lordpp(j);
  for (std::size_t i = 0; i < rejection_index_.size(); ++i) {
    const long tau = rejection_index_[i];
    level += (i == 0 ? p.alpha - p.w0 : p.alpha) * gamma_lordpp(j - tau);
  }
  return level;
}

double Spender::saffron_level(long j) const {
  const auto& p = params_;
  // The candidate indicator counts p_k <= alpha_k, i.e. earlier rejections, so
  // C_{i+}(j) is the number of rejections after the i-th one.
  const auto r = static_cast<long>(rejection_index_.size());
  double inner = p.w0 * gamma_power(j - r);
  double outer = 0.0;
  for (long i = 1; i <= r; ++i) {
    const long tau = rejection_index_[i - 1];
    const double g = gamma_power(j - tau - (r - i));
    if (i == 1)
      inner += (p.alpha - p.w0) * g;
    else
      outer += p.alpha * g;
  }
  return std::min(p.lambda, (1.0 - p.lambda) * inner + outer);
}

double Spender::addis_level(long j) const {
  const auto& p = params_;
  auto count = [&](long from, long to, double threshold) {  // #{k in [from, to]: p_k <= threshold}
    long c = 0;
    for (long k = std::max(from, 1L); k <= to; ++k)
      if (p_[k - 1] <= threshold) ++c;
    return c;
  };
  const long s = count(1, j - 1, p.tau);
  double hat = p.w0 * gamma_power(s - count(1, j - 1, p.lambda));
  for (std::size_t i = 0; i < rejection_index_.size(); ++i) {
    const long kappa = rejection_index_[i];
    const long kappa_star = count(1, kappa, p.tau);
    const long c = count(kappa + 1, j - 1, p.lambda);
    hat += (i == 0 ? p.alpha - p.w0 : p.alpha) * gamma_power(s - kappa_star - c);
  }
  return std::min(p.lambda, (p.tau - p.lambda) * hat);
}

double Spender::next_level() const {
  const auto j = static_cast<long>(p_.size()) + 1;
  switch (params_.rule) {
    case BaselineRule::LordPP: return lordpp_level(j);
    case BaselineRule::Saffron: return saffron_level(j);
    case BaselineRule::Addis: return addis_level(j);
  }
  return 0.0;
}

bool Spender::test(double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::Domain, "p-value outside [0,1]");
  const double level = next_level();
  p_.push_back(p);
  levels_.push_back(level);
  const bool reject = p <= level;
  if (reject) rejection_index_.push_back(static_cast<long>(p_.size()));
  return reject;
}

Decision combine_directional(bool reject_a, bool reject_b, double p_a, double p_b) {
  if (reject_a && reject_b) return p_a < p_b ? Decision::A : Decision::B;
  if (reject_a) return Decision::A;
  if (reject_b) return Decision::B;
  return Decision::D;
}

RunResult run_baseline(const BaselineConfig& config, const DecisionGrid& grid,
                       StreamSource& source) {
  grid.validate();
  Spender spend_a(default_params(config.rule, config.alpha));
  Spender spend_b(default_params(config.rule, config.alpha));

  RunResult out;
  out.grid_times = grid.times;
  out.arrivals = grid.arrivals;
  std::size_t next_task = 1;
  for (std::size_t i = 0; i < grid.times.size(); ++i) {
    const Time t = grid.times[i];
    const Time prev = i == 0 ? std::numeric_limits<Time>::min() : grid.times[i - 1];
    while (next_task <= grid.n_tasks() && grid.arrivals[next_task - 1] <= t) {
      const std::size_t j = next_task++;
      const Time arrival = grid.arrivals[j - 1];
      const auto batch = source.collect(j, std::max(prev, arrival - 1), t);
      PValuePair p;
      if (batch.direct) {
        p = *batch.direct;
      } else if (!batch.samples.empty()) {
        if (config.pvalues == FixedPMethod::ZTest) {
          p = fixed_p_ztest(batch.samples, config.sigma);
        } else {
          const auto w = fixed_p_wilcoxon(batch.samples);
          p = {w.p_a, w.p_b};
        }
      }
      const double level_a = spend_a.next_level();
      const double level_b = spend_b.next_level();
      const bool reject_a = spend_a.test(p.a);
      const bool reject_b = spend_b.test(p.b);
      const Decision d = combine_directional(reject_a, reject_b, p.a, p.b);
      out.log.push_back({i + 1, t, j, d, p.a, p.b, level_a, level_b});
    }
  }
  return out;
}

}  // namespace sava
