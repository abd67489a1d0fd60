#include "mcaoi/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mcaoi/errors.hpp"

namespace mcaoi {
namespace {

using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(0..n-1) on a small worker pool and returns results in index order,
// so output never depends on completion order.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min(hw, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, const char* name) {
  if (rows.empty() || rows.front().empty()) {
    throw DomainError(std::string(name) + " must be a non-empty matrix");
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != c) {
      throw DomainError(std::string(name) + " has ragged rows");
    }
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

void require_nonempty(bool empty, const char* axis) {
  if (empty) throw UsageError(std::string("sweep axis '") + axis + "' is empty");
}

// Seed for sweep point (a, b) of experiment `tag`.
std::uint64_t point_seed(std::uint64_t master, std::uint64_t tag, std::size_t a, std::size_t b) {
  return derive_seed(derive_seed(master, tag), (static_cast<std::uint64_t>(a) << 20) + b);
}

Scheme config_scheme(const ExperimentConfig& cfg) {
  try {
    return scheme_from_string(cfg.scheme);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

// Average BLEP seen by the analytic model for `scheme`: the combined-SNR value
// for multi-connectivity, the single-link value for ARQ and K-repetition, or
// 1 - p when the success probability is forced.
double model_blep(const ExperimentConfig& cfg, Scheme scheme, double pt_dbm, int k) {
  if (cfg.forced_success_prob) return 1.0 - *cfg.forced_success_prob;
  const FblConfig ch = cfg.channel();
  if (scheme == Scheme::kMultiConnectivity) {
    return avg_blep_mrc(LinkBudget(pt_dbm, cfg.noise_variance_dbm, k), ch);
  }
  return avg_blep_single(LinkBudget(pt_dbm, cfg.noise_variance_dbm, 1), ch);
}

ExperimentConfig at_power(const ExperimentConfig& cfg, double pt_dbm) {
  ExperimentConfig c = cfg;
  c.transmit_power_dbm = pt_dbm;
  return c;
}

std::string fmt(double v) { return CsvTable::format(v); }

// Analytic and empirical PAoI density / CDF on a uniform grid. The grid ends
// where the analytic CDF reaches 1 - 1e-5 (at most 100 ms).
CsvTable paoi_distribution_table(const TrafficParams& tp, const SimResult& sim) {
  CsvTable t({"x", "pdf_analytic", "cdf_analytic", "pdf_empirical", "cdf_empirical"});
  double hi = 0.5;
  while (hi < 100.0 && paoi_cdf(hi, tp) < 1.0 - 1e-5) hi += 0.5;
  constexpr int kPoints = 241;
  const double dx = hi / (kPoints - 1);
  const EmpiricalCdf emp = empirical_paoi_cdf(sim);
  const double n = static_cast<double>(emp.size());
  for (int i = 0; i < kPoints; ++i) {
    const double x = i * dx;
    double pdf_emp = kNaN;
    if (n > 0) {
      const auto lo_it = std::lower_bound(emp.x.begin(), emp.x.end(), x - 0.5 * dx);
      const auto hi_it = std::lower_bound(emp.x.begin(), emp.x.end(), x + 0.5 * dx);
      pdf_emp = static_cast<double>(hi_it - lo_it) / (n * dx);
    }
    t.add(x, paoi_pdf(x, tp), paoi_cdf(x, tp), pdf_emp, n > 0 ? emp(x) : kNaN);
  }
  return t;
}

// ---- JSON ------------------------------------------------------------------

template <class T>
void read_field(const json& obj, const char* key, T& field) {
  if (auto it = obj.find(key); it != obj.end()) field = it->get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const char* where) {
  if (!obj.is_object()) throw UsageError(std::string(where) + " must be a JSON object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!known.count(k)) throw UsageError("unknown config key '" + std::string(where) + "." + k + "'");
  }
}

const json& section(const json& root, const char* name) {
  static const json kEmpty = json::object();
  auto it = root.find(name);
  return it == root.end() ? kEmpty : *it;
}

}  // namespace

// ---- ExperimentConfig ------------------------------------------------------

FblConfig ExperimentConfig::channel() const {
  FblConfig c(info_bits, blocklength, symbol_duration_ms);
  c.modulation_order = modulation_order;
  return c;
}

LinkBudget ExperimentConfig::link(int k) const {
  return LinkBudget(transmit_power_dbm, noise_variance_dbm, k);
}

TrafficParams ExperimentConfig::traffic(double eps, int k) const {
  TrafficParams tp;
  tp.arrival_rate = arrival_rate;
  tp.service_time_ms = service_time_ms();
  tp.avg_blep = eps;
  tp.repetitions = k;
  return tp;
}

OptimizerParams ExperimentConfig::optimizer() const {
  OptimizerParams p;
  p.arrival_rate = arrival_rate;
  p.channel = channel();
  p.noise_variance_dbm = noise_variance_dbm;
  p.transmit_power_dbm = transmit_power_dbm;
  p.max_total_power_dbm = max_total_power_dbm;
  p.max_violation = max_violation;
  p.paoi_threshold_ms = paoi_threshold_ms;
  p.search_cap = search_cap;
  return p;
}

SimConfig ExperimentConfig::simulation(int k, std::uint64_t sim_seed) const {
  SimConfig s;
  s.scheme = config_scheme(*this);
  s.arrival_rate = arrival_rate;
  s.channel = channel();
  s.link = link(s.scheme == Scheme::kArq ? 1 : k);
  s.n_packets = n_packets;
  s.seed = sim_seed;
  s.paoi_threshold_ms = paoi_threshold_ms;
  s.forced_success_prob = forced_success_prob;
  s.record_trace = record_trace;
  return s;
}

PlantModel ExperimentConfig::plant() const {
  PlantModel p;
  p.system = to_matrix(system_matrix, "system_matrix");
  p.input = to_matrix(input_matrix, "input_matrix");
  p.noise_cov = to_matrix(noise_covariance, "noise_covariance");
  auto g = control_gain_lsq(p.system, p.input);
  p.gain = std::move(g.gain);
  p.gain_residual = g.residual;
  p.timestep_ms = control_timestep_ms > 0.0 ? control_timestep_ms : service_time_ms();
  p.validate();
  const int delta = threshold_delta_steps > 0
                        ? threshold_delta_steps
                        : static_cast<int>(std::lround(paoi_threshold_ms / p.timestep_ms));
  p.state_threshold = calibrated_state_threshold(p, delta, threshold_quantile);
  return p;
}

std::vector<double> ExperimentConfig::gamma_bars() const {
  if (!gamma_bar_sweep.empty()) return gamma_bar_sweep;
  std::vector<double> out;
  out.reserve(pt_sweep_dbm.size());
  for (double pt : pt_sweep_dbm) out.push_back(dbm_to_linear(pt - noise_variance_dbm));
  return out;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["channel"] = {{"info_bits", c.info_bits},
                  {"blocklength", c.blocklength},
                  {"symbol_duration_ms", c.symbol_duration_ms},
                  {"modulation_order", c.modulation_order},
                  {"transmit_power_dbm", c.transmit_power_dbm},
                  {"noise_variance_dbm", c.noise_variance_dbm},
                  {"connections", c.connections}};
  j["traffic"] = {{"arrival_rate", c.arrival_rate},
                  {"paoi_threshold_ms", c.paoi_threshold_ms},
                  {"max_violation", c.max_violation},
                  {"max_total_power_dbm", c.max_total_power_dbm},
                  {"search_cap", c.search_cap}};
  j["simulation"] = {{"scheme", c.scheme},
                     {"n_packets", c.n_packets},
                     {"forced_success_prob", c.forced_success_prob
                                                 ? json(*c.forced_success_prob)
                                                 : json(nullptr)},
                     {"record_trace", c.record_trace}};
  j["plant"] = {{"system_matrix", c.system_matrix},
                {"input_matrix", c.input_matrix},
                {"noise_covariance", c.noise_covariance},
                {"control_timestep_ms", c.control_timestep_ms},
                {"threshold_quantile", c.threshold_quantile},
                {"threshold_delta_steps", c.threshold_delta_steps},
                {"control_steps", c.control_steps}};
  j["sweeps"] = {{"pt_dbm", c.pt_sweep_dbm},
                 {"k", c.k_sweep},
                 {"zeta_ms", c.zeta_sweep_ms},
                 {"gamma_bar", c.gamma_bar_sweep}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json root = json::parse(text);
    reject_unknown(root, {"channel", "traffic", "simulation", "plant", "sweeps", "seed", "output_dir"},
                   "config");

    const json& ch = section(root, "channel");
    reject_unknown(ch, {"info_bits", "blocklength", "symbol_duration_ms", "modulation_order",
                        "transmit_power_dbm", "noise_variance_dbm", "connections"},
                   "channel");
    read_field(ch, "info_bits", c.info_bits);
    read_field(ch, "blocklength", c.blocklength);
    read_field(ch, "symbol_duration_ms", c.symbol_duration_ms);
    read_field(ch, "modulation_order", c.modulation_order);
    read_field(ch, "transmit_power_dbm", c.transmit_power_dbm);
    read_field(ch, "noise_variance_dbm", c.noise_variance_dbm);
    read_field(ch, "connections", c.connections);

    const json& tr = section(root, "traffic");
    reject_unknown(tr, {"arrival_rate", "paoi_threshold_ms", "max_violation",
                        "max_total_power_dbm", "search_cap"},
                   "traffic");
    read_field(tr, "arrival_rate", c.arrival_rate);
    read_field(tr, "paoi_threshold_ms", c.paoi_threshold_ms);
    read_field(tr, "max_violation", c.max_violation);
    read_field(tr, "max_total_power_dbm", c.max_total_power_dbm);
    read_field(tr, "search_cap", c.search_cap);

    const json& sim = section(root, "simulation");
    reject_unknown(sim, {"scheme", "n_packets", "forced_success_prob", "record_trace"},
                   "simulation");
    read_field(sim, "scheme", c.scheme);
    read_field(sim, "n_packets", c.n_packets);
    if (auto it = sim.find("forced_success_prob"); it != sim.end()) {
      c.forced_success_prob =
          it->is_null() ? std::nullopt : std::optional<double>(it->get<double>());
    }
    read_field(sim, "record_trace", c.record_trace);

    const json& pl = section(root, "plant");
    reject_unknown(pl, {"system_matrix", "input_matrix", "noise_covariance",
                        "control_timestep_ms", "threshold_quantile", "threshold_delta_steps",
                        "control_steps"},
                   "plant");
    read_field(pl, "system_matrix", c.system_matrix);
    read_field(pl, "input_matrix", c.input_matrix);
    read_field(pl, "noise_covariance", c.noise_covariance);
    read_field(pl, "control_timestep_ms", c.control_timestep_ms);
    read_field(pl, "threshold_quantile", c.threshold_quantile);
    read_field(pl, "threshold_delta_steps", c.threshold_delta_steps);
    read_field(pl, "control_steps", c.control_steps);

    const json& sw = section(root, "sweeps");
    reject_unknown(sw, {"pt_dbm", "k", "zeta_ms", "gamma_bar"}, "sweeps");
    read_field(sw, "pt_dbm", c.pt_sweep_dbm);
    read_field(sw, "k", c.k_sweep);
    read_field(sw, "zeta_ms", c.zeta_sweep_ms);
    read_field(sw, "gamma_bar", c.gamma_bar_sweep);

    read_field(root, "seed", c.seed);
    read_field(root, "output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

// ---- CommandOutput ---------------------------------------------------------

std::vector<std::filesystem::path> CommandOutput::write(const std::filesystem::path& dir) const {
  std::vector<std::filesystem::path> paths;
  for (const auto& [name, table] : tables) {
    paths.push_back(dir / name);
    table.write(paths.back());
  }
  return paths;
}

const CsvTable& CommandOutput::table(const std::string& name) const {
  for (const auto& [n, t] : tables) {
    if (n == name) return t;
  }
  throw std::out_of_range("no table named " + name);
}

// ---- commands --------------------------------------------------------------

CommandOutput cmd_blep(const ExperimentConfig& cfg) {
  require_nonempty(cfg.k_sweep.empty(), "k");
  const auto gbars = cfg.gamma_bars();
  require_nonempty(gbars.empty(), "gamma_bar");
  const FblConfig ch = cfg.channel();

  struct Point {
    double gbar;
    int k;
  };
  std::vector<Point> points;
  for (int k : cfg.k_sweep) {
    for (double g : gbars) points.push_back({g, k});
  }
  const auto rows = parallel_map(points.size(), [&](std::size_t i) {
    const LinkBudget b = LinkBudget::from_mean_snr(points[i].gbar, points[i].k);
    return std::pair{avg_blep_mrc(b, ch), avg_blep_quadrature(b, ch)};
  });

  CommandOutput out;
  CsvTable t({"gamma_bar", "K", "eps_closed", "eps_quadrature", "abs_diff"});
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double diff = std::abs(rows[i].first - rows[i].second);
    worst = std::max(worst, diff);
    t.add(points[i].gbar, points[i].k, rows[i].first, rows[i].second, diff);
  }
  std::ostringstream os;
  os << "blep: " << points.size() << " points, max |closed - quadrature| = " << fmt(worst) << "\n";
  out.report = os.str();
  out.tables.emplace_back("blep.csv", std::move(t));
  return out;
}

CommandOutput cmd_aoi(const ExperimentConfig& cfg) {
  require_nonempty(cfg.k_sweep.empty(), "k");
  require_nonempty(cfg.pt_sweep_dbm.empty(), "pt_dbm");
  CsvTable t({"pt_dbm", "K", "gamma_bar", "eps_nr", "eps_single", "avg_aoi_nr_ms",
              "avg_paoi_nr_ms", "avg_aoi_arq_ms", "avg_paoi_arq_ms", "avg_aoi_kr_ms",
              "avg_paoi_kr_ms"});
  for (double pt : cfg.pt_sweep_dbm) {
    for (int k : cfg.k_sweep) {
      const double eps_nr = model_blep(cfg, Scheme::kMultiConnectivity, pt, k);
      const double eps_1 = model_blep(cfg, Scheme::kArq, pt, 1);
      const auto nr = metrics_nr(cfg.traffic(eps_nr, k));
      const auto arq = metrics_arq(cfg.traffic(eps_1, 1));
      const auto kr = metrics_kr(cfg.traffic(eps_1, k));
      t.add(pt, k, dbm_to_linear(pt - cfg.noise_variance_dbm), eps_nr, eps_1, nr.avg_aoi_ms,
            nr.avg_paoi_ms, arq.avg_aoi_ms, arq.avg_paoi_ms, kr.avg_aoi_ms, kr.avg_paoi_ms);
    }
  }
  CommandOutput out;
  out.report = "aoi: " + std::to_string(t.rows()) + " rows\n";
  out.tables.emplace_back("aoi.csv", std::move(t));
  return out;
}

CommandOutput cmd_paoi_dist(const ExperimentConfig& cfg) {
  const int k = cfg.connections;
  const double eps = model_blep(cfg, Scheme::kMultiConnectivity, cfg.transmit_power_dbm, k);
  ExperimentConfig sim_cfg = cfg;
  sim_cfg.scheme = "nr";
  const SimResult sim = simulate(sim_cfg.simulation(k, derive_seed(cfg.seed, 4)));
  const TrafficParams tp = cfg.traffic(eps, k);
  const EmpiricalCdf emp = empirical_paoi_cdf(sim);
  const double ks = ks_distance(emp, [&](double x) { return paoi_cdf(x, tp); });

  CsvTable v({"zeta_ms", "violation_analytic", "violation_sim", "ci_low", "ci_high"});
  for (double z : cfg.zeta_sweep_ms) {
    const auto e = empirical_violation(sim, z);
    v.add(z, paoi_violation(z, tp), e.value, e.ci_low, e.ci_high);
  }

  CommandOutput out;
  std::ostringstream os;
  os << "paoi-dist: P_t = " << fmt(cfg.transmit_power_dbm) << " dBm, K = " << k
     << ", eps = " << fmt(eps) << ", samples = " << emp.size() << ", KS = " << fmt(ks) << "\n";
  out.report = os.str();
  out.tables.emplace_back("paoi_dist.csv", paoi_distribution_table(tp, sim));
  out.tables.emplace_back("paoi_violation.csv", std::move(v));
  return out;
}

CommandOutput cmd_simulate(const ExperimentConfig& cfg) {
  const Scheme scheme = config_scheme(cfg);
  const int k = cfg.connections;
  const SimResult sim = simulate(cfg.simulation(k, cfg.seed));
  const double eps = model_blep(cfg, scheme, cfg.transmit_power_dbm, k);
  const TrafficParams tp = cfg.traffic(eps, k);
  const AoiMetrics ana = metrics(scheme, tp);
  const double viol = scheme == Scheme::kMultiConnectivity
                          ? paoi_violation(cfg.paoi_threshold_ms, tp)
                          : kNaN;
  const auto emp = empirical_violation(sim, cfg.paoi_threshold_ms);

  CsvTable s({"scheme", "pt_dbm", "K", "seed", "arrivals", "successes", "drops", "failures",
              "eps_model", "avg_aoi_sim_ms", "avg_aoi_analytic_ms", "avg_paoi_sim_ms",
              "avg_paoi_analytic_ms", "zeta_ms", "violation_sim", "violation_analytic",
              "ci_low", "ci_high", "low_confidence"});
  s.add(std::string(to_string(scheme)), cfg.transmit_power_dbm, k, sim.seed, sim.arrivals,
        sim.successes, sim.drops, sim.failures, eps, sim.time_avg_aoi, ana.avg_aoi_ms,
        sim.mean_paoi, ana.avg_paoi_ms, cfg.paoi_threshold_ms, emp.value, viol, emp.ci_low,
        emp.ci_high, sim.low_confidence);

  CsvTable samples({"index", "paoi_ms"});
  for (std::size_t i = 0; i < sim.paoi_samples.size(); ++i) samples.add(i, sim.paoi_samples[i]);

  CommandOutput out;
  std::ostringstream os;
  os << "simulate: scheme " << to_string(scheme) << ", K = " << k << ", seed " << sim.seed << "\n"
     << "  avg AoI  sim " << fmt(sim.time_avg_aoi) << " ms, analytic " << fmt(ana.avg_aoi_ms)
     << " ms\n"
     << "  avg PAoI sim " << fmt(sim.mean_paoi) << " ms, analytic " << fmt(ana.avg_paoi_ms)
     << " ms\n"
     << "  Pr[PAoI > " << fmt(cfg.paoi_threshold_ms) << " ms] sim " << fmt(emp.value)
     << ", analytic " << fmt(viol) << "\n";
  if (sim.low_confidence) os << "  warning: fewer than 100 deliveries\n";
  out.report = os.str();
  out.tables.emplace_back("simulate.csv", std::move(s));
  out.tables.emplace_back("paoi_samples.csv", std::move(samples));
  if (cfg.record_trace) {
    CsvTable tr({"t_start", "t_end", "aoi_start", "aoi_end"});
    for (const auto& seg : sim.trace) tr.add(seg.t_start, seg.t_end, seg.aoi_start, seg.aoi_end);
    out.tables.emplace_back("aoi_trace.csv", std::move(tr));
  }
  return out;
}

namespace {

CsvTable k_table(const std::vector<KRow>& rows) {
  CsvTable t({"K", "epsilon_K", "avg_paoi_ms", "violation", "eta", "feasible"});
  for (const auto& r : rows) t.add(r.k, r.avg_blep, r.avg_paoi_ms, r.violation, r.eta, r.feasible);
  return t;
}

}  // namespace

CommandOutput cmd_optimize(const ExperimentConfig& cfg) {
  const OptimizerParams p = cfg.optimizer();
  p.validate();
  const FeasibleRange range = feasibility_bounds(p);

  CommandOutput out;
  std::ostringstream os;
  os << "optimize: P_t = " << fmt(p.transmit_power_dbm) << " dBm, sigma2 = "
     << fmt(p.noise_variance_dbm) << " dBm, P_max = " << fmt(p.max_total_power_dbm)
     << " dBm, Pr_max = " << fmt(p.max_violation) << ", zeta = " << fmt(p.paoi_threshold_ms)
     << " ms\n"
     << "  power bound K_max = " << range.k_max << (range.capped ? " (search cap)" : "") << "\n"
     << "  violation bound K >= " << range.k_violation << " (eps_K <= " << fmt(range.blep_bound)
     << ")\n"
     << "  Dinkelbach range [" << range.k_min << ", " << range.k_max << "]"
     << (range.empty() ? " empty, candidates {1, 2} only" : "") << "\n";

  std::optional<OptimizerResult> ex;
  std::optional<OptimizerResult> dk;
  std::string infeasible;
  try {
    ex = optimize_exhaustive(p);
  } catch (const InfeasibleError& e) {
    infeasible = e.constraint();
  }
  try {
    dk = optimize_dinkelbach(p);
  } catch (const InfeasibleError& e) {
    if (infeasible.empty()) infeasible = e.constraint();
  }

  std::vector<KRow> rows;
  for (int k = 1; k <= std::max(range.k_max, 2); ++k) rows.push_back(evaluate_k(k, p, range));
  for (const auto& r : rows) {
    os << "    K=" << std::setw(2) << r.k << "  eps=" << fmt(r.avg_blep)
       << "  paoi=" << fmt(r.avg_paoi_ms) << "  viol=" << fmt(r.violation)
       << "  eta=" << fmt(r.eta) << (r.feasible ? "" : "  (infeasible)") << "\n";
  }
  if (ex) os << "  exhaustive: k_opt = " << ex->k_opt << ", eta = " << fmt(ex->eta_opt) << "\n";
  if (dk) {
    os << "  " << to_string(dk->method) << ": k_opt = " << dk->k_opt << ", eta = "
       << fmt(dk->eta_opt);
    if (dk->method == SolveMethod::kDinkelbach) {
      os << ", iterations = " << dk->iterations << ", relaxed K* = " << fmt(dk->k_relaxed);
    }
    os << "\n";
  }
  if (ex && dk) {
    const bool agree =
        ex->k_opt == dk->k_opt || std::abs(ex->eta_opt - dk->eta_opt) <= 1e-9;
    os << "  agreement: " << (agree ? "yes" : "NO") << "\n";
  }
  if (!infeasible.empty()) {
    os << "  infeasible: " << infeasible << "\n";
    out.exit_code = kExitInfeasible;
  }
  out.report = os.str();
  out.tables.emplace_back("optimize.csv", k_table(rows));
  return out;
}

CommandOutput cmd_control(const ExperimentConfig& cfg) {
  const OptimizerParams p = cfg.optimizer();
  const OptimizerResult opt = optimize_exhaustive(p);
  const int k = opt.k_opt;

  ExperimentConfig sim_cfg = cfg;
  sim_cfg.scheme = "nr";
  sim_cfg.record_trace = true;
  const SimResult sim = simulate(sim_cfg.simulation(k, derive_seed(cfg.seed, 10)));
  const auto paoi_viol = empirical_violation(sim, cfg.paoi_threshold_ms);

  const PlantModel plant = cfg.plant();
  const std::size_t capacity = trace_step_capacity(sim.trace, plant.timestep_ms);
  std::size_t steps = cfg.control_steps > 0 ? static_cast<std::size_t>(cfg.control_steps) : capacity;
  steps = std::min(steps, capacity);
  const auto aoi = aoi_trace_to_steps(sim.trace, plant.timestep_ms, steps);
  const StateTrace tr = simulate_closed_loop(plant, aoi, derive_seed(cfg.seed, 11), steps);

  const int d = plant.state_dim();
  std::vector<std::string> header{"n"};
  for (int i = 1; i <= d; ++i) header.push_back("x_" + std::to_string(i));
  for (int i = 1; i <= d; ++i) header.push_back("xhat_" + std::to_string(i));
  header.push_back("aoi_steps");
  header.push_back("violated");
  CsvTable t(std::move(header));
  for (std::size_t n = 0; n < tr.steps; ++n) {
    std::vector<std::string> row{CsvTable::format(n)};
    const auto c = static_cast<Eigen::Index>(n);
    for (int i = 0; i < d; ++i) row.push_back(fmt(tr.states(i, c)));
    for (int i = 0; i < d; ++i) row.push_back(fmt(tr.estimates(i, c)));
    row.push_back(CsvTable::format(tr.aoi_steps[n]));
    row.push_back(CsvTable::format(static_cast<int>(tr.violated[n])));
    t.push(std::move(row));
  }

  CsvTable s({"K", "eta", "steps", "state_threshold", "state_violation_freq",
              "paoi_violation_freq", "paoi_ci_low", "paoi_ci_high", "max_state_norm"});
  s.add(k, opt.eta_opt, tr.steps, plant.state_threshold, tr.violation_frequency(),
        paoi_viol.value, paoi_viol.ci_low, paoi_viol.ci_high, tr.max_state_norm);

  CommandOutput out;
  std::ostringstream os;
  os << "control: P_t = " << fmt(cfg.transmit_power_dbm) << " dBm, optimized K = " << k << "\n"
     << "  PAoI violation frequency  " << fmt(paoi_viol.value) << " (limit "
     << fmt(cfg.max_violation) << ")\n"
     << "  state violation frequency " << fmt(tr.violation_frequency()) << " over " << tr.steps
     << " steps, threshold " << fmt(plant.state_threshold) << "\n";
  out.report = os.str();
  out.tables.emplace_back("control_summary.csv", std::move(s));
  out.tables.emplace_back("control_trace.csv", std::move(t));
  return out;
}

// ---- figures ---------------------------------------------------------------

namespace {

// Average AoI / PAoI against transmit power, analytic and simulated.
CommandOutput figure3(const ExperimentConfig& cfg) {
  require_nonempty(cfg.pt_sweep_dbm.empty(), "pt_dbm");
  require_nonempty(cfg.k_sweep.empty(), "k");
  const auto& pts = cfg.pt_sweep_dbm;
  const auto& ks = cfg.k_sweep;
  const auto sims = parallel_map(pts.size() * ks.size(), [&](std::size_t i) {
    const std::size_t a = i / ks.size();
    const std::size_t b = i % ks.size();
    ExperimentConfig c = at_power(cfg, pts[a]);
    c.scheme = "nr";
    c.record_trace = false;
    const SimResult r = simulate(c.simulation(ks[b], point_seed(cfg.seed, 3, a, b)));
    return std::pair{r.time_avg_aoi, r.mean_paoi};
  });
  CsvTable t({"pt_dbm", "K", "eps_K", "avg_aoi_analytic_ms", "avg_paoi_analytic_ms",
              "avg_aoi_sim_ms", "avg_paoi_sim_ms"});
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = 0; b < ks.size(); ++b) {
      const double eps = model_blep(cfg, Scheme::kMultiConnectivity, pts[a], ks[b]);
      const auto m = metrics_nr(cfg.traffic(eps, ks[b]));
      const auto& s = sims[a * ks.size() + b];
      t.add(pts[a], ks[b], eps, m.avg_aoi_ms, m.avg_paoi_ms, s.first, s.second);
    }
  }
  CommandOutput out;
  out.report = "fig3: " + std::to_string(t.rows()) + " rows\n";
  out.tables.emplace_back("fig3.csv", std::move(t));
  return out;
}

// PAoI density and CDF at the configured operating point.
CommandOutput figure4(const ExperimentConfig& cfg) {
  auto out = cmd_paoi_dist(cfg);
  CommandOutput fig;
  fig.report = "fig4: " + out.report;
  fig.tables.emplace_back("fig4.csv", out.table("paoi_dist.csv"));
  return fig;
}

// PAoI violation probability against transmit power for every (zeta, K).
CommandOutput figure5(const ExperimentConfig& cfg) {
  require_nonempty(cfg.pt_sweep_dbm.empty(), "pt_dbm");
  require_nonempty(cfg.k_sweep.empty(), "k");
  require_nonempty(cfg.zeta_sweep_ms.empty(), "zeta_ms");
  const auto& pts = cfg.pt_sweep_dbm;
  const auto& ks = cfg.k_sweep;
  const auto& zs = cfg.zeta_sweep_ms;
  const auto est = parallel_map(pts.size() * ks.size(), [&](std::size_t i) {
    const std::size_t a = i / ks.size();
    const std::size_t b = i % ks.size();
    ExperimentConfig c = at_power(cfg, pts[a]);
    c.scheme = "nr";
    c.record_trace = false;
    const SimResult r = simulate(c.simulation(ks[b], point_seed(cfg.seed, 5, a, b)));
    std::vector<ProportionEstimate> v;
    for (double z : zs) v.push_back(empirical_violation(r, z));
    return v;
  });
  CsvTable t({"zeta_ms", "pt_dbm", "K", "eps_K", "violation_analytic", "violation_sim",
              "ci_low", "ci_high"});
  for (std::size_t zi = 0; zi < zs.size(); ++zi) {
    for (std::size_t a = 0; a < pts.size(); ++a) {
      for (std::size_t b = 0; b < ks.size(); ++b) {
        const double eps = model_blep(cfg, Scheme::kMultiConnectivity, pts[a], ks[b]);
        const double ana = paoi_violation(zs[zi], cfg.traffic(eps, ks[b]));
        const auto& e = est[a * ks.size() + b][zi];
        t.add(zs[zi], pts[a], ks[b], eps, ana, e.value, e.ci_low, e.ci_high);
      }
    }
  }
  CommandOutput out;
  out.report = "fig5: " + std::to_string(t.rows()) + " rows\n";
  out.tables.emplace_back("fig5.csv", std::move(t));
  return out;
}

// Average PAoI against the number of connections, with the single-link and
// error-free limits and the K-repetition / ARQ comparison.
CommandOutput figure6(const ExperimentConfig& cfg) {
  require_nonempty(cfg.pt_sweep_dbm.empty(), "pt_dbm");
  constexpr int kMaxK = 16;
  CsvTable t({"pt_dbm", "K", "eps_K", "avg_paoi_nr_ms", "avg_paoi_kr_ms", "avg_paoi_arq_ms",
              "paoi_single_ms", "paoi_limit_ms"});
  for (double pt : cfg.pt_sweep_dbm) {
    const double eps_1 = model_blep(cfg, Scheme::kArq, pt, 1);
    const double arq = metrics_arq(cfg.traffic(eps_1, 1)).avg_paoi_ms;
    const auto lim = paoi_limits_nr(cfg.traffic(0.0), cfg.channel(),
                                    LinkBudget(pt, cfg.noise_variance_dbm, 1));
    for (int k = 1; k <= kMaxK; ++k) {
      const double eps = model_blep(cfg, Scheme::kMultiConnectivity, pt, k);
      t.add(pt, k, eps, metrics_nr(cfg.traffic(eps, k)).avg_paoi_ms,
            metrics_kr(cfg.traffic(eps_1, k)).avg_paoi_ms, arq, lim.single.avg_paoi_ms,
            lim.infinite.avg_paoi_ms);
    }
  }
  CommandOutput out;
  out.report = "fig6: " + std::to_string(t.rows()) + " rows\n";
  out.tables.emplace_back("fig6.csv", std::move(t));
  return out;
}

// Energy efficiency (delivered bits per ms per mW) against average PAoI.
CommandOutput figure7(const ExperimentConfig& cfg) {
  require_nonempty(cfg.pt_sweep_dbm.empty(), "pt_dbm");
  require_nonempty(cfg.k_sweep.empty(), "k");
  const double m = cfg.service_time_ms();
  CsvTable t({"pt_dbm", "K", "eps_K", "avg_paoi_ms", "energy_efficiency", "eta"});
  for (double pt : cfg.pt_sweep_dbm) {
    const OptimizerParams p = at_power(cfg, pt).optimizer();
    for (int k : cfg.k_sweep) {
      const double eps = model_blep(cfg, Scheme::kMultiConnectivity, pt, k);
      const double ee = cfg.info_bits * (1.0 - eps) / (m * k * dbm_to_linear(pt));
      t.add(pt, k, eps, metrics_nr(cfg.traffic(eps, k)).avg_paoi_ms, ee, ee_paoi_ratio(k, p));
    }
  }
  CommandOutput out;
  out.report = "fig7: " + std::to_string(t.rows()) + " rows\n";
  out.tables.emplace_back("fig7.csv", std::move(t));
  return out;
}

// EE-PAoI ratio against K, integer and relaxed, with constraint feasibility.
CommandOutput figure8(const ExperimentConfig& cfg) {
  require_nonempty(cfg.pt_sweep_dbm.empty(), "pt_dbm");
  constexpr int kMaxK = 16;
  CsvTable t({"pt_dbm", "K", "eta", "eta_relaxed", "violation", "feasible"});
  for (double pt : cfg.pt_sweep_dbm) {
    const OptimizerParams p = at_power(cfg, pt).optimizer();
    const FeasibleRange range = feasibility_bounds(p);
    for (int k = 1; k <= kMaxK; ++k) {
      const KRow r = evaluate_k(k, p, range);
      t.add(pt, k, r.eta, ee_paoi_ratio_relaxed(k, p), r.violation, r.feasible);
    }
  }
  CommandOutput out;
  out.report = "fig8: " + std::to_string(t.rows()) + " rows\n";
  out.tables.emplace_back("fig8.csv", std::move(t));
  return out;
}

struct PowerPoint {
  double pt;
  int k_opt = -1;       // constrained, -1 when infeasible
  double eta_opt = kNaN;
  int k_dinkelbach = -1;
  int k_free = 1;       // violation constraint relaxed (Pr_max = 1)
  double eta_free = kNaN;
  double eta_one = kNaN;
};

std::vector<PowerPoint> power_scan(const ExperimentConfig& cfg) {
  require_nonempty(cfg.pt_sweep_dbm.empty(), "pt_dbm");
  return parallel_map(cfg.pt_sweep_dbm.size(), [&](std::size_t i) {
    PowerPoint pp;
    pp.pt = cfg.pt_sweep_dbm[i];
    const OptimizerParams p = at_power(cfg, pp.pt).optimizer();
    try {
      const auto r = optimize_exhaustive(p);
      pp.k_opt = r.k_opt;
      pp.eta_opt = r.eta_opt;
    } catch (const InfeasibleError&) {
    }
    try {
      pp.k_dinkelbach = optimize_dinkelbach(p).k_opt;
    } catch (const InfeasibleError&) {
    }
    OptimizerParams free = p;
    free.max_violation = 1.0;
    const auto r = optimize_exhaustive(free);
    pp.k_free = r.k_opt;
    pp.eta_free = r.eta_opt;
    pp.eta_one = ee_paoi_ratio(1, p);
    return pp;
  });
}

// EE-PAoI ratio of the optimal K against transmit power and its gain over K = 1.
CommandOutput figure9(const ExperimentConfig& cfg) {
  const auto scan = power_scan(cfg);
  CsvTable t({"pt_dbm", "eta_k1", "k_opt", "eta_opt", "gain", "k_opt_unconstrained",
              "eta_opt_unconstrained", "gain_unconstrained"});
  for (const auto& s : scan) {
    t.add(s.pt, s.eta_one, s.k_opt, s.eta_opt, s.eta_opt / s.eta_one, s.k_free, s.eta_free,
          s.eta_free / s.eta_one);
  }
  CommandOutput out;
  out.report = "fig9: " + std::to_string(t.rows()) + " rows\n";
  out.tables.emplace_back("fig9.csv", std::move(t));
  return out;
}

// Optimal K against transmit power with the high-SNR threshold marked.
CommandOutput figure10(const ExperimentConfig& cfg) {
  const auto scan = power_scan(cfg);
  const double thr_db = linear_to_db(snr_threshold(cfg.channel()));
  CsvTable t({"pt_dbm", "gamma_bar_db", "threshold_db", "above_threshold", "k_opt",
              "k_opt_dinkelbach", "k_opt_unconstrained"});
  for (const auto& s : scan) {
    const double g_db = s.pt - cfg.noise_variance_dbm;
    t.add(s.pt, g_db, thr_db, g_db > thr_db, s.k_opt, s.k_dinkelbach, s.k_free);
  }
  CommandOutput out;
  out.report = "fig10: threshold " + fmt(thr_db) + " dB, " + std::to_string(t.rows()) + " rows\n";
  out.tables.emplace_back("fig10.csv", std::move(t));
  return out;
}

}  // namespace

std::vector<std::string> figure_ids() {
  return {"fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"};
}

CommandOutput cmd_figures(const ExperimentConfig& cfg, const std::string& id) {
  std::string key = id;
  if (!key.empty() && std::all_of(key.begin(), key.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
    key = "fig" + key;
  }
  if (key == "all") {
    CommandOutput all;
    for (const auto& f : figure_ids()) {
      auto one = cmd_figures(cfg, f);
      all.report += one.report;
      for (auto& tbl : one.tables) all.tables.push_back(std::move(tbl));
    }
    return all;
  }
  using Fig = CommandOutput (*)(const ExperimentConfig&);
  static const std::vector<std::pair<std::string, Fig>> kFigures{
      {"fig3", figure3}, {"fig4", figure4}, {"fig5", figure5}, {"fig6", figure6},
      {"fig7", figure7}, {"fig8", figure8}, {"fig9", figure9}, {"fig10", figure10}};
  for (const auto& [name, fn] : kFigures) {
    if (name == key) return fn(cfg);
  }
  throw UsageError("unknown figure id '" + id + "' (expected fig3 .. fig10 or all)");
}

}  // namespace mcaoi
