// Acceptance checks. Usage: mcaoi_acceptance <1..11|all>
// Prints one "PASS" or "FAIL" line per criterion (plus indented detail lines)
// and exits non-zero when any requested criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcaoi/aoi_analytics.hpp"
#include "mcaoi/control_plant.hpp"
#include "mcaoi/diagnostics.hpp"
#include "mcaoi/errors.hpp"
#include "mcaoi/experiments.hpp"
#include "mcaoi/fbl_channel.hpp"
#include "mcaoi/optimizer.hpp"
#include "mcaoi/queue_sim.hpp"

using namespace mcaoi;

namespace {

constexpr std::uint64_t kSeed = 20240101;

class Report {
 public:
  void detail(const std::string& line) { details_.push_back(line); }
  void check(bool ok, const std::string& what) {
    if (!ok) {
      ok_ = false;
      details_.push_back("violated: " + what);
    }
  }
  bool ok() const { return ok_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  bool ok_ = true;
  std::vector<std::string> details_;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

TrafficParams default_traffic(double eps) {
  TrafficParams tp;
  tp.avg_blep = eps;
  return tp;
}

// 1. Closed-form vs quadrature average BLEP.
void criterion1(Report& r) {
  const auto cfg = FblConfig::smart_grid_default();
  const auto t0 = std::chrono::steady_clock::now();
  double worst_diff = 0.0, worst_err = 0.0;
  int points = 0;
  for (int k = 1; k <= 8; ++k) {
    for (double g : log_grid(0.1, 100.0, 61)) {
      const auto b = LinkBudget::from_mean_snr(g, k);
      const auto q = avg_blep_quadrature_estimate(b, cfg);
      worst_diff = std::max(worst_diff, std::abs(avg_blep_mrc(b, cfg) - q.value));
      worst_err = std::max(worst_err, q.abs_error);
      ++points;
    }
  }
  const double dt = seconds_since(t0);
  r.detail(std::to_string(points) + " points, max |closed - quadrature| = " + num(worst_diff) +
           ", max quadrature error = " + num(worst_err) + ", runtime " + num(dt) + " s");
  r.check(worst_diff <= 1e-3, "|closed - quadrature| <= 1e-3");
  r.check(worst_err <= 1e-8, "quadrature self-error <= 1e-8");
  r.check(dt < 5.0, "runtime < 5 s");
}

// 2. Average AoI / PAoI closed forms vs simulation.
void criterion2(Report& r) {
  struct Point {
    std::string label;
    SimConfig sim;
    double eps;
  };
  const auto ch = FblConfig::smart_grid_default();
  std::vector<Point> pts;
  std::uint64_t idx = 0;
  for (double eps : {0.0, 0.3, 0.5}) {
    SimConfig s;
    s.forced_success_prob = 1.0 - eps;
    s.seed = derive_seed(kSeed, 200 + idx++);
    pts.push_back({"forced eps=" + num(eps), s, eps});
  }
  for (double pt : {32.0, 35.0}) {
    for (int k : {1, 4}) {
      SimConfig s;
      s.link = LinkBudget(pt, 23.0, k);
      s.seed = derive_seed(kSeed, 200 + idx++);
      pts.push_back({"P_t=" + num(pt) + " K=" + std::to_string(k), s, avg_blep_mrc(s.link, ch)});
    }
  }
  for (const auto& p : pts) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = simulate(p.sim);
    const double dt = seconds_since(t0);
    const auto m = metrics_nr(default_traffic(p.eps));
    const double ea = std::abs(res.time_avg_aoi / m.avg_aoi_ms - 1.0);
    const double ep = std::abs(res.mean_paoi / m.avg_paoi_ms - 1.0);
    r.detail(p.label + ": AoI sim " + num(res.time_avg_aoi) + " vs " + num(m.avg_aoi_ms) +
             " (" + num(100 * ea) + "%), PAoI sim " + num(res.mean_paoi) + " vs " +
             num(m.avg_paoi_ms) + " (" + num(100 * ep) + "%), " + num(dt) + " s");
    r.check(ea <= 0.02, p.label + " AoI within 2%");
    r.check(ep <= 0.02, p.label + " PAoI within 2%");
    r.check(dt < 30.0, p.label + " runtime < 30 s");
  }
}

// 3. PAoI distribution: KS distance at 35 dBm, K = 4.
void criterion3(Report& r) {
  ExperimentConfig cfg;
  cfg.transmit_power_dbm = 35.0;
  cfg.connections = 4;
  cfg.seed = kSeed;
  const auto eps = avg_blep_mrc(cfg.link(4), cfg.channel());
  const auto sim = simulate(cfg.simulation(4, derive_seed(kSeed, 300)));
  const auto tp = cfg.traffic(eps, 4);
  const double ks = ks_distance(empirical_paoi_cdf(sim), [&](double x) { return paoi_cdf(x, tp); });
  r.detail("P_t=35 dBm K=4: eps=" + num(eps) + ", " + std::to_string(sim.paoi_samples.size()) +
           " peaks, KS = " + num(ks));
  r.check(ks <= 0.02, "KS <= 0.02 at P_t=35 dBm, K=4");

  // Reported only: the shifted-exponential law against a lossy link.
  SimConfig half;
  half.forced_success_prob = 0.5;
  half.seed = derive_seed(kSeed, 301);
  const auto hs = simulate(half);
  const auto htp = default_traffic(0.5);
  const double hks = ks_distance(empirical_paoi_cdf(hs), [&](double x) { return paoi_cdf(x, htp); });
  r.detail("reported, not asserted: eps=0.5 KS = " + num(hks) + "; sim mean PAoI " +
           num(hs.mean_paoi) + ", distribution mean " + num(paoi_distribution_mean(htp)) +
           ", average-PAoI closed form " + num(metrics_nr(htp).avg_paoi_ms));
}

// 4. Violation reduction at zeta = 3 ms and Wilson coverage.
void criterion4(Report& r) {
  const auto ch = FblConfig::smart_grid_default();
  const double zeta = 3.0;
  double best_ratio = 1.0, best_pt = 0.0;
  for (double pt = 30.0; pt <= 36.0; pt += 1.0) {
    const double e1 = avg_blep_mrc(LinkBudget(pt, 23.0, 1), ch);
    const double e2 = avg_blep_mrc(LinkBudget(pt, 23.0, 2), ch);
    const double ratio = paoi_violation(zeta, default_traffic(e2)) /
                         paoi_violation(zeta, default_traffic(e1));
    r.detail("P_t=" + num(pt) + ": violation K=1 " +
             num(paoi_violation(zeta, default_traffic(e1))) + ", K=2 " +
             num(paoi_violation(zeta, default_traffic(e2))) + ", ratio " + num(ratio));
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best_pt = pt;
    }
  }
  r.detail("best K=2/K=1 ratio " + num(best_ratio) + " at " + num(best_pt) + " dBm (needs <= 0.25)");
  r.check(best_ratio <= 0.25, "some P_t in 30-36 dBm with K=2 violation <= 1/4 of K=1");

  std::uint64_t idx = 0;
  for (double pt = 30.0; pt <= 36.0; pt += 1.0) {
    for (int k : {1, 2, 4}) {
      SimConfig s;
      s.link = LinkBudget(pt, 23.0, k);
      const double eps = avg_blep_mrc(s.link, ch);
      // The shifted-exponential law is exact only without losses; its bias
      // grows with the BLEP and passes the interval half-width (~2.6e-3)
      // near eps = 0.015, so only points below 1e-2 count as low BLEP.
      if (eps > 1e-2) continue;
      s.seed = derive_seed(kSeed, 400 + idx++);
      const auto sim = simulate(s);
      const auto est = empirical_violation(sim, zeta);
      const double ana = paoi_violation(zeta, default_traffic(eps));
      r.detail("P_t=" + num(pt) + " K=" + std::to_string(k) + " eps=" + num(eps) + ": sim " +
               num(est.value) + " [" + num(est.ci_low) + ", " + num(est.ci_high) + "], analytic " +
               num(ana));
      r.check(est.contains(ana), "Wilson 95% interval covers the analytic violation at P_t=" +
                                     num(pt) + " K=" + std::to_string(k));
    }
  }
}

// 5. High-SNR threshold of the two-link EE-PAoI gain.
void criterion5(Report& r) {
  for (double rate : {1.0, 1.6, 2.0}) {
    const auto ch = FblConfig::with_rate(rate);
    const double thr_db = linear_to_db(snr_threshold(ch));
    if (rate == 1.6) {
      r.detail("threshold at R=1.6: " + num(thr_db) + " dB");
      r.check(std::abs(thr_db - 8.98) < 0.005, "threshold at R=1.6 is 8.98 dB");
    }
    for (double lm : {10.0, 100.0}) {
      OptimizerParams p;
      p.channel = ch;
      p.arrival_rate = lm / ch.service_time_ms();
      p.noise_variance_dbm = 0.0;
      auto gain_minus_one = [&](double snr_db) {
        p.transmit_power_dbm = snr_db;
        p.max_total_power_dbm = snr_db + 30.0;
        return ee_paoi_gain(2, p).exact - 1.0;
      };
      double lo = thr_db - 10.0, hi = thr_db + 10.0;
      if (!(gain_minus_one(lo) > 0.0 && gain_minus_one(hi) < 0.0)) {
        r.check(false, "gain does not cross 1 within +-10 dB at R=" + num(rate));
        continue;
      }
      for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gain_minus_one(mid) > 0.0 ? lo : hi) = mid;
      }
      const double cross = 0.5 * (lo + hi);
      r.detail("R=" + num(rate) + " lambda*M=" + num(lm) + ": crossing " + num(cross) +
               " dB, threshold " + num(thr_db) + " dB, offset " + num(cross - thr_db));
      r.check(std::abs(cross - thr_db) <= 1.5, "crossing within 1.5 dB at R=" + num(rate));
    }
  }
}

// 6. Dinkelbach vs exhaustive search on random feasible draws.
void criterion6(Report& r) {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int feasible = 0, drawn = 0, max_iter = 0, dinkel = 0;
  while (feasible < 50 && drawn < 10000) {
    ++drawn;
    OptimizerParams p;
    p.transmit_power_dbm = 25.0 + 20.0 * u(rng);
    p.noise_variance_dbm = 15.0 + 15.0 * u(rng);
    p.arrival_rate = 0.2 + 1.8 * u(rng);
    p.paoi_threshold_ms = 3.0 + 9.0 * u(rng);
    p.max_violation = std::pow(10.0, -4.0 + 3.0 * u(rng));
    p.max_total_power_dbm = p.transmit_power_dbm + 3.0 + 17.0 * u(rng);
    if (feasibility_bounds(p).empty()) continue;
    OptimizerResult ex, dk;
    try {
      ex = optimize_exhaustive(p);
    } catch (const InfeasibleError&) {
      continue;
    }
    try {
      dk = optimize_dinkelbach(p);
    } catch (const std::exception& e) {
      r.check(false, std::string("Dinkelbach failed: ") + e.what());
      ++feasible;
      continue;
    }
    ++feasible;
    if (dk.method == SolveMethod::kDinkelbach) ++dinkel;
    max_iter = std::max(max_iter, dk.iterations);
    const bool same = ex.k_opt == dk.k_opt || std::abs(ex.eta_opt - dk.eta_opt) <= 1e-9;
    if (!same) {
      r.detail("draw " + std::to_string(drawn) + ": exhaustive K=" + std::to_string(ex.k_opt) +
               " vs Dinkelbach K=" + std::to_string(dk.k_opt));
    }
    r.check(same, "same k_opt on draw " + std::to_string(drawn));
    r.check(dk.iterations <= 100, "<= 100 iterations on draw " + std::to_string(drawn));
  }
  r.detail(std::to_string(feasible) + " feasible draws out of " + std::to_string(drawn) + ", " +
           std::to_string(dinkel) + " solved by iteration, max iterations " +
           std::to_string(max_iter));
  r.check(feasible == 50, "50 feasible draws");
}

// 7. Monotonicity suite.
void criterion7(Report& r) {
  const auto ch = FblConfig::smart_grid_default();
  int bad = 0;
  for (double gbar : log_grid(0.5, 50.0, 15)) {
    double prev_aoi = INFINITY, prev_v = INFINITY;
    for (int k = 1; k <= 16; ++k) {
      const double eps = avg_blep_mrc(LinkBudget::from_mean_snr(gbar, k), ch);
      const double a = metrics_nr(default_traffic(eps)).avg_aoi_ms;
      const double v = paoi_violation(8.0, default_traffic(eps));
      if (a > prev_aoi + 1e-12 || v > prev_v + 1e-15) ++bad;
      prev_aoi = a;
      prev_v = v;
    }
  }
  r.detail("AoI / violation non-increasing in K: " + std::to_string(bad) + " breaks");
  r.check(bad == 0, "average AoI and violation non-increasing in K = 1..16");

  int arq_bad = 0, arq_points = 0;
  for (double lambda : {0.1, 0.25, 0.5, 1.0, 1.5, 2.0}) {
    for (double m : {0.1, 0.25, 0.5}) {
      if (1.0 / lambda < m) continue;
      for (double eps : {0.0, 0.05, 0.2, 0.5, 0.8, 0.95}) {
        TrafficParams tp{lambda, m, eps, 1};
        ++arq_points;
        if (metrics_arq(tp).avg_aoi_ms > metrics_nr(tp).avg_aoi_ms + 1e-12) ++arq_bad;
      }
    }
  }
  r.detail("ARQ <= single-shot AoI: " + std::to_string(arq_bad) + " breaks over " +
           std::to_string(arq_points) + " points");
  r.check(arq_bad == 0, "ARQ average AoI <= multi-connectivity form");

  int kr_bad = 0;
  for (double gbar : log_grid(0.5, 50.0, 25)) {
    const double e1 = avg_blep_single(gbar, ch);
    for (int k : {2, 3, 4}) {
      const double ek = avg_blep_mrc(LinkBudget::from_mean_snr(gbar, k), ch);
      TrafficParams nr = default_traffic(ek);
      TrafficParams kr = default_traffic(e1);
      kr.repetitions = k;
      if (!(metrics_nr(nr).avg_aoi_ms < metrics_kr(kr).avg_aoi_ms)) ++kr_bad;
    }
  }
  r.detail("multi-connectivity < K-repetition AoI: " + std::to_string(kr_bad) + " breaks");
  r.check(kr_bad == 0, "multi-connectivity AoI < K-repetition AoI for K = 2..4");
}

struct ScanRow {
  double pt;
  int k_opt;
  double gain;
  int k_free;
  double gain_free;
};

std::vector<ScanRow> power_scan() {
  std::vector<ScanRow> rows;
  for (double pt = 28.0; pt <= 40.0; pt += 1.0) {
    OptimizerParams p;
    p.transmit_power_dbm = pt;
    const double eta1 = ee_paoi_ratio(1, p);
    const auto c = optimize_exhaustive(p);
    OptimizerParams f = p;
    f.max_violation = 1.0;
    const auto u = optimize_exhaustive(f);
    rows.push_back({pt, c.k_opt, c.eta_opt / eta1, u.k_opt, u.eta_opt / eta1});
  }
  return rows;
}

// 8. EE-PAoI gain of the optimal K over a single link.
void criterion8(Report& r) {
  double best = 0.0, best_pt = 0.0, best_free = 0.0, best_free_pt = 0.0;
  for (const auto& s : power_scan()) {
    if (s.gain > best) {
      best = s.gain;
      best_pt = s.pt;
    }
    if (s.gain_free > best_free) {
      best_free = s.gain_free;
      best_free_pt = s.pt;
    }
  }
  r.detail("max eta(k_opt)/eta(1) = " + num(best) + " at " + num(best_pt) +
           " dBm; violation constraint relaxed: " + num(best_free) + " at " + num(best_free_pt) +
           " dBm");
  r.check(best >= 10.0, "max gain >= 10 over 28-40 dBm at sigma2 = 23 dBm");
}

// 9. Optimal K against transmit power.
void criterion9(Report& r) {
  const double thr_db = linear_to_db(snr_threshold(FblConfig::smart_grid_default()));
  const auto scan = power_scan();
  std::ostringstream ks, kf;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    ks << scan[i].k_opt << ' ';
    kf << scan[i].k_free << ' ';
    if (i > 0) {
      r.check(scan[i].k_free <= scan[i - 1].k_free,
              "k_opt non-increasing at " + num(scan[i].pt) + " dBm");
      r.check(scan[i].k_opt <= scan[i - 1].k_opt,
              "constrained k_opt non-increasing at " + num(scan[i].pt) + " dBm");
    }
    const double g_db = scan[i].pt - 23.0;
    if (g_db >= thr_db + 1.5) {
      r.check(scan[i].k_free == 1, "k_opt = 1 at " + num(scan[i].pt) + " dBm");
    }
  }
  r.detail("k_opt (Pr_max = 1) over 28..40 dBm: " + kf.str());
  r.detail("k_opt (Pr_max = 0.1%) over 28..40 dBm: " + ks.str());
  r.detail("threshold " + num(thr_db) + " dB, k_opt = 1 required from " +
           num(thr_db + 1.5 + 23.0) + " dBm");
}

// 10. Control bridge.
void criterion10(Report& r) {
  const auto plant = PlantModel::smart_grid_default();
  for (int delta : {1, 2, 4, 8}) {
    const std::vector<int> aoi(1000000, delta);
    ClosedLoopOptions opt;
    opt.keep_trace = false;
    const auto tr = simulate_closed_loop(plant, aoi, derive_seed(kSeed, 1000 + delta), aoi.size(), opt);
    const Eigen::MatrixXd ref = estimation_error_covariance(delta, plant);
    const double rel = (tr.error_second_moment - ref).norm() / ref.norm();
    r.detail("Delta=" + std::to_string(delta) + ": ||Cov_emp - Cov||/||Cov|| = " + num(rel));
    r.check(rel <= 0.05, "error covariance within 5% at Delta=" + std::to_string(delta));
  }
  double prev = 0.0;
  bool mono = true;
  for (int d = 0; d <= 32; ++d) {
    const double t = covariance_from_aoi(d, plant).trace();
    mono = mono && t >= prev;
    prev = t;
  }
  r.check(mono, "trace of the state covariance non-decreasing in Delta");

  ExperimentConfig cfg;
  cfg.seed = kSeed;
  const auto out = cmd_control(cfg);
  const auto& s = out.table("control_summary.csv");
  auto col = [&](const std::string& name) {
    const auto& h = s.header();
    return std::stod(s.row(0).at(static_cast<std::size_t>(std::find(h.begin(), h.end(), name) - h.begin())));
  };
  const double pv = col("paoi_violation_freq");
  const double sv = col("state_violation_freq");
  r.detail("case study at 35 dBm: K=" + num(col("K")) + ", PAoI violation " + num(pv) +
           ", state violation " + num(sv) + " over " + num(col("steps")) + " steps");
  r.check(pv <= 1e-3, "PAoI violation <= 0.1%");
  r.check(sv <= 1e-3, "state violation <= 0.1%");
}

// 11. Determinism of every simulation-backed CSV.
void criterion11(Report& r) {
  ExperimentConfig cfg;
  cfg.seed = kSeed;
  cfg.n_packets = 20000;
  cfg.pt_sweep_dbm = {32, 35};
  cfg.k_sweep = {1, 4};
  cfg.record_trace = true;
  using Cmd = std::function<CommandOutput()>;
  const std::vector<std::pair<std::string, Cmd>> cmds{
      {"simulate", [&] { return cmd_simulate(cfg); }},
      {"paoi-dist", [&] { return cmd_paoi_dist(cfg); }},
      {"control", [&] { return cmd_control(cfg); }},
      {"fig3", [&] { return cmd_figures(cfg, "fig3"); }},
      {"fig4", [&] { return cmd_figures(cfg, "fig4"); }},
      {"fig5", [&] { return cmd_figures(cfg, "fig5"); }}};
  for (const auto& [name, fn] : cmds) {
    const auto a = fn();
    const auto b = fn();
    bool same = a.tables.size() == b.tables.size() && a.report == b.report;
    for (std::size_t i = 0; same && i < a.tables.size(); ++i) {
      same = a.tables[i].second.str() == b.tables[i].second.str();
    }
    r.detail(name + ": " + std::to_string(a.tables.size()) + " tables " +
             (same ? "identical" : "DIFFER"));
    r.check(same, name + " bit-identical on rerun");
  }
  cfg.seed = kSeed + 1;
  const auto other = cmd_simulate(cfg);
  cfg.seed = kSeed;
  r.check(other.table("paoi_samples.csv").str() != cmd_simulate(cfg).table("paoi_samples.csv").str(),
          "a different seed changes the samples");
}

const std::vector<std::pair<std::string, void (*)(Report&)>> kCriteria{
    {"closed-form BLEP vs quadrature", criterion1},
    {"average AoI/PAoI vs simulation", criterion2},
    {"PAoI distribution KS distance", criterion3},
    {"violation reduction at zeta = 3 ms", criterion4},
    {"high-SNR threshold of the EE-PAoI gain", criterion5},
    {"Dinkelbach / exhaustive parity", criterion6},
    {"monotonicity suite", criterion7},
    {"EE-PAoI gain >= 10", criterion8},
    {"optimal K trend", criterion9},
    {"control bridge", criterion10},
    {"determinism", criterion11}};

bool run(std::size_t i) {
  Report r;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    kCriteria[i].second(r);
  } catch (const std::exception& e) {
    r.check(false, std::string("exception: ") + e.what());
  }
  std::printf("%s criterion %zu: %s (%.2f s)\n", r.ok() ? "PASS" : "FAIL", i + 1,
              kCriteria[i].first.c_str(), seconds_since(t0));
  for (const auto& d : r.details()) std::printf("    %s\n", d.c_str());
  std::fflush(stdout);
  return r.ok();
}

}  // namespace

int main(int argc, char** argv) {
  set_warning_sink({});
  const std::string which = argc > 1 ? argv[1] : "all";
  bool ok = true;
  if (which == "all") {
    for (std::size_t i = 0; i < kCriteria.size(); ++i) ok = run(i) && ok;
  } else {
    const int n = std::atoi(which.c_str());
    if (n < 1 || n > static_cast<int>(kCriteria.size())) {
      std::fprintf(stderr, "usage: %s <1..%zu|all>\n", argv[0], kCriteria.size());
      return 2;
    }
    ok = run(static_cast<std::size_t>(n - 1));
  }
  return ok ? 0 : 1;
}
