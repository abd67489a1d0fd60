#include "mcaoi/queue_sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <string>

#include "mcaoi/errors.hpp"

namespace mcaoi {
namespace {

constexpr std::int64_t kMaxArqAttempts = 10'000'000;

class Channel {
 public:
  Channel(const SimConfig& cfg, std::mt19937_64& rng)
      : cfg_(cfg),
        rng_(rng),
        snr_(1.0 / cfg.link.mean_branch_snr()),
        forced_(cfg.forced_success_prob) {}

  // One decoding attempt over a single branch.
  bool single_attempt() { return decode(snr_(rng_)); }

  // K branches combined by MRC.
  bool combined_attempt(int k) {
    double snr = 0.0;
    for (int i = 0; i < k; ++i) snr += snr_(rng_);
    return decode(snr);
  }

 private:
  bool decode(double snr) {
    const double u = unit_(rng_);
    if (forced_) return u < *forced_;
    return u < 1.0 - blep_instantaneous(snr, cfg_.channel);
  }

  const SimConfig& cfg_;
  std::mt19937_64& rng_;
  std::exponential_distribution<double> snr_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::optional<double> forced_;
};

struct Service {
  double duration;
  bool delivered;
  std::int64_t attempts;
};

// Tracks Delta(t) = t - u(t) and integrates it along two paths: per-cycle
// trapezoids at deliveries, and piecewise at every event boundary.
class AgeTracker {
 public:
  explicit AgeTracker(bool record) : record_(record) {}

  void advance(double t) {
    if (t < now_) t = now_;
    const double a0 = now_ - freshest_;
    const double a1 = t - freshest_;
    if (started_) pending_area_ += 0.5 * (a0 + a1) * (t - now_);
    if (record_ && t > now_) trace_.push_back({now_, t, a0, a1});
    now_ = t;
  }

  void deliver(double t, double generated_at, SimResult& out) {
    advance(t);
    if (started_) {
      const double y = t - last_delivery_;
      const double s_prev = last_delivery_ - freshest_;
      cycle_area_ += 0.5 * y * y + y * s_prev;
      const double peak = t - freshest_;
      assert(std::abs(peak - (y + s_prev)) <= 1e-9 * (1.0 + peak));
      out.paoi_samples.push_back(peak);
      committed_area_ += pending_area_;
    } else {
      started_ = true;
      out.window_start = t;
    }
    pending_area_ = 0.0;
    last_delivery_ = t;
    freshest_ = generated_at;
  }

  double cycle_area() const { return cycle_area_; }
  double trapezoid_area() const { return committed_area_; }
  double last_delivery() const { return last_delivery_; }
  std::vector<AoiSegment> take_trace() { return std::move(trace_); }

 private:
  bool record_;
  bool started_ = false;
  double now_ = 0.0;
  double freshest_ = 0.0;  // u(t); Delta(0) = 0
  double last_delivery_ = 0.0;
  double cycle_area_ = 0.0;
  double pending_area_ = 0.0;
  double committed_area_ = 0.0;
  std::vector<AoiSegment> trace_;
};

void validate(const SimConfig& cfg) {
  if (cfg.n_packets < 1) throw DomainError("n_packets must be >= 1");
  if (!(cfg.arrival_rate > 0.0)) throw DomainError("arrival rate must be positive");
  if (cfg.forced_success_prob) {
    const double p = *cfg.forced_success_prob;
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("forced success probability must be in [0,1]");
    if (cfg.scheme == Scheme::kArq && p <= 0.0) {
      throw DomainError("ARQ with zero success probability never completes a packet");
    }
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ (index + 0x632be59bd9b4e019ULL));
}

SimResult simulate(const SimConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::exponential_distribution<double> interarrival(cfg.arrival_rate);
  Channel channel(cfg, rng);

  const double m = cfg.service_time_ms();
  const int k = cfg.link.connections();

  auto serve = [&]() -> Service {
    switch (cfg.scheme) {
      case Scheme::kMultiConnectivity:
        return {m, channel.combined_attempt(k), 1};
      case Scheme::kRepetition: {
        bool any = false;
        for (int i = 0; i < k; ++i) any = channel.single_attempt() || any;
        return {k * m, any, k};
      }
      case Scheme::kArq: {
        std::int64_t n = 1;
        while (!channel.single_attempt()) {
          if (++n > kMaxArqAttempts) {
            throw NumericError("ARQ exceeded " + std::to_string(kMaxArqAttempts) +
                               " attempts for one packet");
          }
        }
        return {n * m, true, n};
      }
    }
    throw DomainError("unknown scheme");
  };

  SimResult out;
  out.seed = cfg.seed;
  out.paoi_samples.reserve(static_cast<std::size_t>(cfg.n_packets / 2));
  AgeTracker age(cfg.record_trace);

  struct Pending {
    double completes_at;
    double generated_at;
    bool delivered;
  };
  std::optional<Pending> pending;

  auto complete = [&](const Pending& p) {
    if (p.delivered) {
      ++out.successes;
      age.deliver(p.completes_at, p.generated_at, out);
    } else {
      ++out.failures;
      age.advance(p.completes_at);
    }
  };

  double t = 0.0;
  for (std::int64_t i = 0; i < cfg.n_packets; ++i) {
    t += interarrival(rng);
    ++out.arrivals;
    if (pending && pending->completes_at <= t) {
      complete(*pending);
      pending.reset();
    }
    age.advance(t);
    if (pending) {
      ++out.drops;
      continue;
    }
    const Service s = serve();
    out.transmissions += s.attempts;
    out.failed_attempts += s.attempts - (s.delivered ? 1 : 0);
    pending = Pending{t + s.duration, t, s.delivered};
  }
  if (pending) complete(*pending);

  out.sim_duration = out.successes > 0 ? age.last_delivery() - out.window_start : 0.0;
  if (out.sim_duration > 0.0) {
    out.time_avg_aoi = age.cycle_area() / out.sim_duration;
    out.time_avg_aoi_trapezoid = age.trapezoid_area() / out.sim_duration;
  }
  if (!out.paoi_samples.empty()) {
    double sum = 0.0;
    std::int64_t above = 0;
    for (double a : out.paoi_samples) {
      sum += a;
      if (a > cfg.paoi_threshold_ms) ++above;
    }
    out.mean_paoi = sum / static_cast<double>(out.paoi_samples.size());
    out.violation_freq = static_cast<double>(above) / static_cast<double>(out.paoi_samples.size());
  }
  out.low_confidence = out.successes < 100;
  out.trace = age.take_trace();
  return out;
}

double EmpiricalCdf::operator()(double t) const {
  if (x.empty()) throw DomainError("empirical CDF of an empty sample");
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  return static_cast<double>(it - x.begin()) / static_cast<double>(x.size());
}

EmpiricalCdf empirical_cdf(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("empirical CDF needs at least one sample");
  EmpiricalCdf cdf;
  cdf.x.assign(samples.begin(), samples.end());
  std::sort(cdf.x.begin(), cdf.x.end());
  return cdf;
}

EmpiricalCdf empirical_paoi_cdf(const SimResult& result) {
  return empirical_cdf(result.paoi_samples);
}

ProportionEstimate wilson_interval(std::int64_t hits, std::int64_t trials) {
  if (trials <= 0) throw DomainError("Wilson interval needs at least one trial");
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  // The bounds are exactly 0 and 1 at the extremes; rounding must not move them.
  const double lo = hits == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = hits == trials ? 1.0 : std::min(1.0, centre + half);
  return {p, lo, hi, hits, trials};
}

ProportionEstimate empirical_violation(const SimResult& result, double zeta_ms) {
  const auto& s = result.paoi_samples;
  const auto hits = std::count_if(s.begin(), s.end(), [zeta_ms](double a) { return a > zeta_ms; });
  return wilson_interval(hits, static_cast<std::int64_t>(s.size()));
}

}  // namespace mcaoi
