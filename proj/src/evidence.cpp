#include "evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "error.hpp"

namespace sava {

namespace {

void refresh_pvalues(EvidenceState& s) {
  s.max_log_e_a = std::max(s.max_log_e_a, s.log_e_a);
  s.max_log_e_b = std::max(s.max_log_e_b, s.log_e_b);
  s.p_a = std::min(1.0, std::exp(-s.max_log_e_a));
  s.p_b = std::min(1.0, std::exp(-s.max_log_e_b));
}

constexpr int kExactMaxN = 25;

// counts[n][s] = number of subsets of {1..n} summing to s.
const std::vector<std::vector<double>>& signed_rank_counts() {
  static const std::vector<std::vector<double>> table = [] {
    std::vector<std::vector<double>> t(kExactMaxN + 1);
    t[0] = {1.0};
    for (int n = 1; n <= kExactMaxN; ++n) {
      const auto& prev = t[n - 1];
      std::vector<double> cur(prev.size() + n, 0.0);
      for (std::size_t s = 0; s < prev.size(); ++s) {
        cur[s] += prev[s];
        cur[s + n] += prev[s];
      }
      t[n] = std::move(cur);
    }
    return t;
  }();
  return table;
}

}  // namespace

void validate(const EvidenceKind& kind) {
  if (const auto* h = std::get_if<HoeffdingBounded>(&kind)) {
    if (!(h->bound > 0.0)) fail(ErrorCode::Domain, "Hoeffding bound must be positive");
    if (!(h->alpha > 0.0 && h->alpha < 1.0))
      fail(ErrorCode::Domain, "Hoeffding alpha must lie in (0,1)");
  } else if (const auto* g = std::get_if<GaussianLR>(&kind)) {
    if (!(g->mu_abs > 0.0)) fail(ErrorCode::Domain, "Gaussian |mu| must be positive");
  }
}

double lambda_schedule(std::uint64_t r, double alpha) {
  if (r == 0) fail(ErrorCode::Domain, "lambda_schedule: r must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::Domain, "lambda_schedule: alpha must lie in (0,1)");
  const double rd = static_cast<double>(r);
  const double v = std::sqrt(8.0 * std::log(2.0 / alpha) / (rd * std::log(rd + 1.0)));
  return std::min(v, 1.0);
}

EvidenceState update_hoeffding(EvidenceState state, double x, const HoeffdingBounded& kind) {
  if (!(std::abs(x) <= kind.bound)) {
    fail(ErrorCode::OutOfSupport,
         "observation " + std::to_string(x) + " outside [-" + std::to_string(kind.bound) + ", " +
             std::to_string(kind.bound) + "]");
  }
  state.r += 1;
  const double lambda = lambda_schedule(state.r, kind.alpha);
  const double drift = lambda * x / (2.0 * kind.bound);
  const double penalty = lambda * lambda / 8.0;
  state.log_e_a += drift - penalty;
  state.log_e_b += -drift - penalty;
  refresh_pvalues(state);
  return state;
}

EvidenceState update_gaussian_lr(EvidenceState state, double x, const GaussianLR& kind) {
  // log phi(x - m) - log phi(x + m) = 2 m x for unit variance.
  const double step = 2.0 * kind.mu_abs * x;
  state.r += 1;
  state.log_e_a += step;
  state.log_e_b -= step;
  refresh_pvalues(state);
  return state;
}

EvidenceState update_direct(EvidenceState state, PValuePair raw) {
  if (!(raw.a >= 0.0 && raw.a <= 1.0 && raw.b >= 0.0 && raw.b <= 1.0))
    fail(ErrorCode::Domain, "direct p-values must lie in [0,1]");
  state.r += 1;
  state.log_e_a = -std::log(raw.a);
  state.log_e_b = -std::log(raw.b);
  state.max_log_e_a = std::max(state.max_log_e_a, state.log_e_a);
  state.max_log_e_b = std::max(state.max_log_e_b, state.log_e_b);
  // The raw minimum equals exp(-max log E) exactly, without the round trip.
  state.p_a = std::min(state.p_a, raw.a);
  state.p_b = std::min(state.p_b, raw.b);
  return state;
}

EvidenceState absorb(EvidenceState state, std::span<const double> xs, const EvidenceKind& kind) {
  if (const auto* h = std::get_if<HoeffdingBounded>(&kind)) {
    for (double x : xs) state = update_hoeffding(state, x, *h);
  } else if (const auto* g = std::get_if<GaussianLR>(&kind)) {
    for (double x : xs) state = update_gaussian_lr(state, x, *g);
  } else if (!xs.empty()) {
    fail(ErrorCode::Protocol, "sample observations supplied to a direct p-value task");
  }
  return state;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    if (u == 0.0) return -std::numeric_limits<double>::infinity();
    if (u == 1.0) return std::numeric_limits<double>::infinity();
    fail(ErrorCode::Domain, "normal_quantile: argument outside [0,1]");
  }
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

double wilcoxon_exact_upper(int n, int w) {
  if (n < 1 || n > kExactMaxN) fail(ErrorCode::Domain, "exact signed-rank table covers 1..25");
  const auto& counts = signed_rank_counts()[n];
  const int max_sum = n * (n + 1) / 2;
  if (w <= 0) return 1.0;
  if (w > max_sum) return 0.0;
  double tail = 0.0;
  for (int s = w; s <= max_sum; ++s) tail += counts[s];
  return tail / std::ldexp(1.0, n);
}

WilcoxonResult fixed_p_wilcoxon(std::span<const double> samples) {
  std::vector<double> nz;
  nz.reserve(samples.size());
  for (double x : samples)
    if (x != 0.0) nz.push_back(x);
  WilcoxonResult out;
  if (nz.empty()) {
    out.degenerate = true;
    return out;
  }

  const std::size_t n = nz.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::abs(nz[i]) < std::abs(nz[j]); });

  std::vector<double> rank(n);
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t e = i + 1;
    while (e < n && std::abs(nz[order[e]]) == std::abs(nz[order[i]])) ++e;
    const double mid = 0.5 * static_cast<double>(i + 1 + e);
    for (std::size_t q = i; q < e; ++q) rank[order[q]] = mid;
    const double t = static_cast<double>(e - i);
    if (e - i > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = e;
  }

  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (nz[i] > 0.0) w_plus += rank[i];

  const double nd = static_cast<double>(n);
  if (!ties && n <= static_cast<std::size_t>(kExactMaxN)) {
    const int ni = static_cast<int>(n);
    const int w = static_cast<int>(std::lround(w_plus));
    const int max_sum = ni * (ni + 1) / 2;
    out.p_a = wilcoxon_exact_upper(ni, w);
    out.p_b = wilcoxon_exact_upper(ni, max_sum - w);
    out.exact = true;
    return out;
  }

  const double mean = nd * (nd + 1.0) / 4.0;
  const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) return out;
  const double sd = std::sqrt(var);
  out.p_a = 0.5 * std::erfc((w_plus - mean - 0.5) / sd / std::sqrt(2.0));
  out.p_b = normal_cdf((w_plus - mean + 0.5) / sd);
  out.p_a = std::clamp(out.p_a, 0.0, 1.0);
  out.p_b = std::clamp(out.p_b, 0.0, 1.0);
  return out;
}

PValuePair fixed_p_ztest(std::span<const double> samples, double sigma) {
  if (samples.empty()) fail(ErrorCode::Domain, "z-test needs at least one sample");
  if (!(sigma > 0.0)) fail(ErrorCode::Domain, "z-test sigma must be positive");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  const double z = mean * std::sqrt(n) / sigma;
  // Upper tail via erfc keeps precision for large z.
  return {0.5 * std::erfc(z / std::sqrt(2.0)), normal_cdf(z)};
}

}  // namespace sava
