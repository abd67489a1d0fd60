// mcaoi: command-line front end for the multi-connectivity AoI toolkit.
//
//   mcaoi <blep|aoi|paoi-dist|simulate|optimize|control|figures> [options]
//
// Every subcommand prints a short report on stdout and writes its CSV tables
// into --out (default: the config's output_dir). Exit codes: 0 success,
// 2 usage error, 3 infeasible constraints, 4 numeric failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcaoi/errors.hpp"
#include "mcaoi/experiments.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string figure = "all";
  std::vector<double> pt_dbm;
  std::vector<int> k;
  std::vector<double> zeta_ms;
  std::optional<double> lambda;
  std::optional<double> sigma2_dbm;
  bool print_config = false;
};

// A single value overrides the operating point; several values replace the
// sweep axis as well.
mcaoi::ExperimentConfig resolve(const Overrides& o) {
  mcaoi::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = mcaoi::load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (o.lambda) cfg.arrival_rate = *o.lambda;
  if (o.sigma2_dbm) cfg.noise_variance_dbm = *o.sigma2_dbm;
  if (!o.pt_dbm.empty()) {
    cfg.pt_sweep_dbm = o.pt_dbm;
    cfg.transmit_power_dbm = o.pt_dbm.front();
  }
  if (!o.k.empty()) {
    cfg.k_sweep = o.k;
    cfg.connections = o.k.front();
  }
  if (!o.zeta_ms.empty()) {
    cfg.zeta_sweep_ms = o.zeta_ms;
    cfg.paoi_threshold_ms = o.zeta_ms.front();
  }
  return cfg;
}

int run(const std::string& name, const mcaoi::ExperimentConfig& cfg, const Overrides& o) {
  mcaoi::CommandOutput out;
  if (name == "blep") out = mcaoi::cmd_blep(cfg);
  else if (name == "aoi") out = mcaoi::cmd_aoi(cfg);
  else if (name == "paoi-dist") out = mcaoi::cmd_paoi_dist(cfg);
  else if (name == "simulate") out = mcaoi::cmd_simulate(cfg);
  else if (name == "optimize") out = mcaoi::cmd_optimize(cfg);
  else if (name == "control") out = mcaoi::cmd_control(cfg);
  else if (name == "figures") out = mcaoi::cmd_figures(cfg, o.figure);
  else throw mcaoi::UsageError("unknown subcommand " + name);

  std::cout << out.report;
  for (const auto& path : out.write(cfg.output_dir)) std::cout << "wrote " << path.string() << "\n";
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-connectivity AoI / PAoI toolkit for short-packet control links"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master random seed (unsigned 64-bit)");
    sub->add_option("--out", o.out_dir, "Output directory for CSV files");
    sub->add_option("--pt-dbm", o.pt_dbm, "Transmit power per link in dBm (one or a sweep)");
    sub->add_option("--k", o.k, "Number of connections (one or a sweep)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--zeta-ms", o.zeta_ms, "PAoI threshold in ms (one or a sweep)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--lambda", o.lambda, "Arrival rate in packets per ms")
        ->check(CLI::PositiveNumber);
    sub->add_option("--sigma2-dbm", o.sigma2_dbm, "Noise variance in dBm");
    sub->add_flag("--print-config", o.print_config,
                  "Print the resolved configuration as JSON and exit");
  };

  const std::vector<std::pair<std::string, std::string>> commands{
      {"blep", "Closed-form vs quadrature average BLEP over the K and mean-SNR axes"},
      {"aoi", "Average AoI and PAoI of multi-connectivity, ARQ and K-repetition"},
      {"paoi-dist", "PAoI density, CDF and violation probability with simulation overlay"},
      {"simulate", "Discrete-event simulation at the configured operating point"},
      {"optimize", "Feasible range, per-K table and optimal number of connections"},
      {"control", "Closed-loop plant driven by the simulated AoI of the optimal K"},
      {"figures", "CSV data behind one figure (--figure fig3 .. fig10, or all)"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    if (name == "figures") sub->add_option("--figure", o.figure, "Figure id");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? mcaoi::kExitOk : mcaoi::kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = resolve(o);
    if (o.print_config) {
      std::cout << mcaoi::config_to_json(cfg);
      return mcaoi::kExitOk;
    }
    return run(name, cfg, o);
  } catch (const mcaoi::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return mcaoi::kExitUsage;
  } catch (const mcaoi::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << " [" << e.constraint() << "]\n";
    return mcaoi::kExitInfeasible;
  } catch (const mcaoi::DomainError& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return mcaoi::kExitUsage;
  } catch (const mcaoi::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return mcaoi::kExitNumeric;
  } catch (const mcaoi::DivergenceError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return mcaoi::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mcaoi::kExitNumeric;
  }
}
