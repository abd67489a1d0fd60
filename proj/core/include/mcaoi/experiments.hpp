#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <utility>
#include <string>
#include <vector>

#include "mcaoi/control_plant.hpp"
#include "mcaoi/csv.hpp"
#include "mcaoi/fbl_channel.hpp"
#include "mcaoi/optimizer.hpp"
#include "mcaoi/queue_sim.hpp"

// Experiment configuration, sweeps and CSV emitters behind the `mcaoi`
// command-line tool. Defaults describe the smart-grid load-frequency case:
// L = 160, m = 100, Ts = 0.005 ms, lambda = 1 /ms, zeta = 8 ms,
// Pr_max = 0.1 %, P_max = 50 dBm, 100000 packets.

namespace mcaoi {

struct ExperimentConfig {
  // Channel and coding.
  int info_bits = 160;
  int blocklength = 100;
  double symbol_duration_ms = 0.005;
  int modulation_order = 0;  // documentation only
  double transmit_power_dbm = 35.0;
  double noise_variance_dbm = 23.0;
  int connections = 4;

  // Traffic and constraints.
  double arrival_rate = 1.0;
  double paoi_threshold_ms = 8.0;
  double max_violation = 1e-3;
  double max_total_power_dbm = 50.0;
  int search_cap = 64;

  // Simulation.
  std::string scheme = "nr";
  std::int64_t n_packets = 100000;
  std::optional<double> forced_success_prob;
  bool record_trace = false;

  // Plant.
  std::vector<std::vector<double>> system_matrix{{1.17, 0.67}, {0.67, 0.37}};
  std::vector<std::vector<double>> input_matrix{{0.67}, {0.37}};
  std::vector<std::vector<double>> noise_covariance{{1e-6, 0.0}, {0.0, 1e-6}};
  double control_timestep_ms = 0.0;    // 0: one service time
  double threshold_quantile = 3.890591886;
  int threshold_delta_steps = 0;       // 0: zeta / timestep
  std::int64_t control_steps = 0;      // 0: everything the AoI trace covers

  // Sweep axes.
  std::vector<double> pt_sweep_dbm{28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40};
  std::vector<int> k_sweep{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> zeta_sweep_ms{3, 4, 5, 6, 8};
  std::vector<double> gamma_bar_sweep;  // linear; empty: derive from pt_sweep_dbm

  std::uint64_t seed = 20240101;
  std::string output_dir = ".";

  FblConfig channel() const;
  LinkBudget link(int k) const;
  LinkBudget link() const { return link(connections); }
  double service_time_ms() const { return channel().service_time_ms(); }
  TrafficParams traffic(double eps, int k = 1) const;
  OptimizerParams optimizer() const;
  SimConfig simulation(int k, std::uint64_t seed) const;
  PlantModel plant() const;
  std::vector<double> gamma_bars() const;

  bool operator==(const ExperimentConfig&) const = default;
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Usage errors (bad figure id, empty sweep axis) map to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exit codes: 0 success, 2 usage, 3 infeasible, 4 numeric failure.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitInfeasible = 3, kExitNumeric = 4 };

struct CommandOutput {
  int exit_code = kExitOk;  // nonzero when the command reports a failure itself
  std::string report;  // human-readable summary for stdout
  std::vector<std::pair<std::string, CsvTable>> tables;  // file name -> table

  // Writes every table into `dir`, returning the written paths.
  std::vector<std::filesystem::path> write(const std::filesystem::path& dir) const;
  const CsvTable& table(const std::string& name) const;
};

CommandOutput cmd_blep(const ExperimentConfig& cfg);
CommandOutput cmd_aoi(const ExperimentConfig& cfg);
CommandOutput cmd_paoi_dist(const ExperimentConfig& cfg);
CommandOutput cmd_simulate(const ExperimentConfig& cfg);
CommandOutput cmd_optimize(const ExperimentConfig& cfg);
CommandOutput cmd_control(const ExperimentConfig& cfg);
// id: fig3 .. fig10 (or 3 .. 10).
CommandOutput cmd_figures(const ExperimentConfig& cfg, const std::string& id);

std::vector<std::string> figure_ids();

}  // namespace mcaoi
