#pragma once

#include <string>
#include <vector>

#include "mcaoi/aoi_analytics.hpp"
#include "mcaoi/fbl_channel.hpp"

// Selection of the number of connections K that maximises the EE-PAoI ratio
//
//   eta(K) = L (1 - eps_K)^2 / (M K P_t (1/lambda + M + M (1 - eps_K)))
//
// subject to K P_t <= P_max (C1) and Pr[A > zeta] <= Pr_max (C2).
//
// Two solvers are provided: exhaustive enumeration over the integer feasible
// set (the reference) and Dinkelbach's iteration on the continuous
// relaxation v(K) / g(K), v = (1 - eps_K) / K, g = Abar_K, followed by the
// comparison against K = 1 and K = 2.

namespace mcaoi {

struct OptimizerParams {
  double arrival_rate = 1.0;
  FblConfig channel = FblConfig::smart_grid_default();
  double noise_variance_dbm = 23.0;
  double transmit_power_dbm = 35.0;
  double max_total_power_dbm = 50.0;
  double max_violation = 1e-3;
  double paoi_threshold_ms = 8.0;
  int search_cap = 64;

  void validate() const;
  double service_time_ms() const { return channel.service_time_ms(); }
  double mean_snr() const { return dbm_to_linear(transmit_power_dbm - noise_variance_dbm); }
  TrafficParams traffic(double eps) const;
};

struct FeasibleRange {
  int k_min = 3;        // Dinkelbach lower end, never below 3
  int k_max = 1;        // floor(P_max / P_t), clipped to the search cap
  int k_violation = 1;  // smallest K meeting (C2); search_cap + 1 if none
  double blep_bound = 1.0;  // eps_K must not exceed this for (C2)
  bool capped = false;      // floor(P_max / P_t) exceeded search_cap

  bool empty() const noexcept { return k_min > k_max; }
  // Name of the constraint that empties the range ("" when non-empty).
  std::string binding_constraint() const;
  bool admits(int k) const noexcept { return k >= 1 && k <= k_max && k >= k_violation; }
};

struct KRow {
  int k;
  double avg_blep;
  double avg_paoi_ms;
  double violation;
  double eta;
  bool feasible;
};

enum class SolveMethod { kExhaustive, kDinkelbach, kFallback };
std::string to_string(SolveMethod m);

struct OptimizerResult {
  int k_opt = 1;
  double eta_opt = 0.0;
  FeasibleRange range;
  std::vector<KRow> table;  // K = 1 .. range.k_max
  SolveMethod method = SolveMethod::kExhaustive;
  int iterations = 0;
  // Dinkelbach only: continuous maximiser, its ratio and the parameter
  // sequence lambda_D.
  double k_relaxed = 0.0;
  double eta_relaxed = 0.0;
  double residual = 0.0;  // final H = v(K*) - lambda_D g(K*)
  std::vector<double> ratio_trace;
};

// eta for integer K; 0 when eps_K == 1.
double ee_paoi_ratio(int k, const OptimizerParams& p);
// Same objective for real K, with eps_K from the relaxed closed form.
double ee_paoi_ratio_relaxed(double k, const OptimizerParams& p);

// Per-K row: eps_K, Abar_K, violation, eta, feasibility.
KRow evaluate_k(int k, const OptimizerParams& p, const FeasibleRange& range);

FeasibleRange feasibility_bounds(const OptimizerParams& p);
// As above but throws InfeasibleError when [K_min, K_max] is empty.
FeasibleRange feasible_range(const OptimizerParams& p);

OptimizerResult optimize_exhaustive(const OptimizerParams& p);
OptimizerResult optimize_dinkelbach(const OptimizerParams& p);

// 2 e^R - 2: above this mean branch SNR a single connection wins.
double snr_threshold(const FblConfig& cfg);

struct EePaoiGain {
  double exact;
  double high_rate;  // (1-eK)^2 (2-e) / (K (1-e)^2 (2-eK))
};

// Ratio of eta(K) to eta(1) at the configured mean SNR.
EePaoiGain ee_paoi_gain(int k, const OptimizerParams& p);

struct ConcavityViolation {
  double mean_snr;
  double k;
  double second_difference;
};

// Second differences of v(K) = (1 - eps_K)/K on a unit grid of K over
// [k_lo, k_hi] for each mean SNR; entries above `tolerance` are returned.
std::vector<ConcavityViolation> concavity_audit(const FblConfig& cfg,
                                                const std::vector<double>& mean_snrs,
                                                double k_lo = 3.0, double k_hi = 32.0,
                                                double tolerance = 1e-6);

}  // namespace mcaoi
