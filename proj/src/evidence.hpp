#pragma once
//
// Directional evidence for a single task.
//
// Two e-processes are tracked per task, one against each directional null:
// E^A grows when observations favour arm A (positive mean), E^B when they
// favour arm B. Always-valid p-values are p = min(1, 1 / max_s E_s), stored
// as a running minimum so they can only decrease.
//
// All e-process arithmetic is carried out in log space.
//

#include <cstdint>
#include <span>
#include <utility>
#include <variant>

namespace sava {

struct PValuePair {
  double a = 1.0;
  double b = 1.0;
};

struct EvidenceState {
  double log_e_a = 0.0;
  double log_e_b = 0.0;
  double max_log_e_a = 0.0;
  double max_log_e_b = 0.0;
  std::uint64_t r = 0;  // observations absorbed
  double p_a = 1.0;
  double p_b = 1.0;
};

// Sub-Gaussian betting e-process for observations bounded in [-bound, bound].
struct HoeffdingBounded {
  double bound = 2.0;
  double alpha = 0.05;
};

// Likelihood ratio of N(+mu_abs, 1) against N(-mu_abs, 1).
struct GaussianLR {
  double mu_abs = 0.1;
};

// P-values are supplied directly by the caller (static or scripted worlds).
struct DirectPValues {};

using EvidenceKind = std::variant<HoeffdingBounded, GaussianLR, DirectPValues>;

void validate(const EvidenceKind& kind);

// lambda_r = min(sqrt(8 log(2/alpha) / (r log(r+1))), 1), natural logs.
double lambda_schedule(std::uint64_t r, double alpha);

EvidenceState update_hoeffding(EvidenceState state, double x, const HoeffdingBounded& kind);
EvidenceState update_gaussian_lr(EvidenceState state, double x, const GaussianLR& kind);

// Absorbs a raw always-valid p-value pair; the stored p-values become the running
// minimum, which is exactly 1 / running max of the implied e-values 1 / rho.
EvidenceState update_direct(EvidenceState state, PValuePair raw);

// Absorbs a batch of observations under a sample-based kind.
EvidenceState absorb(EvidenceState state, std::span<const double> xs, const EvidenceKind& kind);

inline PValuePair current_pvalues(const EvidenceState& state) { return {state.p_a, state.p_b}; }

// ---------------------------------------------------------------------------
// Fixed-sample p-values used by the online FDR baselines.

double normal_cdf(double z);
double normal_quantile(double u);

struct WilcoxonResult {
  double p_a = 1.0;  // H0: mu <= 0 against mu > 0
  double p_b = 1.0;  // H0: mu >= 0 against mu < 0
  bool degenerate = false;  // every sample was exactly zero
  bool exact = false;
};

// One-sided signed-rank p-values. Exact null distribution for n <= 25 without
// ties, otherwise the normal approximation with midranks, tie-corrected
// variance and continuity correction.
WilcoxonResult fixed_p_wilcoxon(std::span<const double> samples);

// Exact upper tail P(W+ >= w) of the signed-rank statistic for n untied ranks.
double wilcoxon_exact_upper(int n, int w);

PValuePair fixed_p_ztest(std::span<const double> samples, double sigma);

}  // namespace sava
