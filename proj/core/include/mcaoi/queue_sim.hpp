#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mcaoi/aoi_analytics.hpp"
#include "mcaoi/fbl_channel.hpp"

// Event-driven Monte Carlo of the AoI sawtooth.
//
// The K synchronised links act as a single server with no buffer: an arrival
// that finds the server idle is admitted, arrivals during service are
// dropped. Service is M (MRC), N*M with N attempts until success (ARQ) or
// K*M (K-repetition). A completion at the same instant as an arrival is
// processed first, so the arrival is admitted.

namespace mcaoi {

struct SimConfig {
  Scheme scheme = Scheme::kMultiConnectivity;
  double arrival_rate = 1.0;  // packets per ms
  FblConfig channel = FblConfig::smart_grid_default();
  LinkBudget link = LinkBudget(35.0, 23.0, 1);
  std::int64_t n_packets = 100000;  // generated arrivals
  std::uint64_t seed = 1;
  double paoi_threshold_ms = 8.0;
  // Overrides the channel: every transmission (MRC packet, ARQ attempt,
  // repetition) decodes with this probability.
  std::optional<double> forced_success_prob;
  bool record_trace = false;

  double service_time_ms() const { return channel.service_time_ms(); }
};

// One linear piece of Delta(t).
struct AoiSegment {
  double t_start;
  double t_end;
  double aoi_start;
  double aoi_end;

  bool operator==(const AoiSegment&) const = default;
};

struct SimResult {
  // Sum of trapezoids Y^2/2 + Y*S_prev over complete inter-delivery cycles
  // divided by the observation window (first to last delivery).
  double time_avg_aoi = 0.0;
  // Same window integrated piece by piece at every event boundary.
  double time_avg_aoi_trapezoid = 0.0;
  double mean_paoi = 0.0;
  std::vector<double> paoi_samples;  // one per complete cycle, ms
  double violation_freq = 0.0;       // fraction of samples > threshold
  std::int64_t arrivals = 0;
  std::int64_t drops = 0;
  std::int64_t successes = 0;
  std::int64_t failures = 0;        // admitted packets that were lost
  std::int64_t transmissions = 0;   // service attempts (ARQ retries count)
  std::int64_t failed_attempts = 0;
  double sim_duration = 0.0;        // window length, ms
  double window_start = 0.0;        // first delivery time, ms
  std::uint64_t seed = 0;
  bool low_confidence = false;      // fewer than 100 deliveries
  std::vector<AoiSegment> trace;    // from t = 0, only with record_trace

  bool operator==(const SimResult&) const = default;
};

SimResult simulate(const SimConfig& cfg);

// Independent 64-bit stream seed for run `index` of a sweep seeded with
// `master` (splitmix64 of the pair).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

struct EmpiricalCdf {
  std::vector<double> x;  // sorted samples
  // Right-continuous: F(t) = #{samples <= t} / n.
  double operator()(double t) const;
  std::size_t size() const noexcept { return x.size(); }
};

EmpiricalCdf empirical_paoi_cdf(const SimResult& result);
EmpiricalCdf empirical_cdf(std::span<const double> samples);

// Two-sided Kolmogorov-Smirnov distance between the sample CDF and `cdf`.
template <class Cdf>
double ks_distance(const EmpiricalCdf& emp, Cdf&& cdf) {
  const double n = static_cast<double>(emp.x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < emp.x.size(); ++i) {
    const double f = cdf(emp.x[i]);
    const double above = (i + 1) / n - f;
    const double below = f - i / n;
    d = above > d ? above : d;
    d = below > d ? below : d;
  }
  return d;
}

struct ProportionEstimate {
  double value = 0.0;
  double ci_low = 0.0;   // Wilson 95%
  double ci_high = 0.0;
  std::int64_t hits = 0;
  std::int64_t trials = 0;

  bool contains(double p) const noexcept { return p >= ci_low && p <= ci_high; }
};

ProportionEstimate wilson_interval(std::int64_t hits, std::int64_t trials);

// Fraction of PAoI samples strictly above `zeta_ms`.
ProportionEstimate empirical_violation(const SimResult& result, double zeta_ms);

}  // namespace mcaoi
