#include <CLI11.hpp>
#include <iostream>

#include "dnp/errors.hpp"
#include "dnp/runner.hpp"

using namespace dnp;

int main(int argc, char** argv) {
  CLI::App app{"dnpsim - triplet-DNP simulator and pulse optimizer"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::string grid_csv, pulse_csv;
  double synthetic_gamma_mhz = -1.0;
  std::vector<std::string> sample_csvs;
  long long seed = -1;
  int workers = -1;

  app.add_option("--config", config_path, "run configuration file (key = value)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--workers", workers, "override the worker count");

  auto* simulate = app.add_subcommand("simulate", "ensemble polarization trace for one pulse");
  simulate->add_option("--pulse-csv", pulse_csv, "load the pulse from this CSV");

  auto* calibrate = app.add_subcommand("calibrate", "cavity response factor from a Rabi grid");
  calibrate->add_option("--grid", grid_csv, "measured spectrum grid CSV");
  calibrate->add_option("--synthetic-gamma-mhz", synthetic_gamma_mhz,
                        "generate the measured grid at this gamma instead of reading one");

  auto* arise_cmd = app.add_subcommand("arise", "three-step sweep tuning plus dCRAB optimization");

  auto* buildup = app.add_subcommand("buildup", "fit long-term build-up curves");
  buildup->add_option("--samples", sample_csvs, "build-up CSV (repeat for a comparison)")
      ->expected(1, 2);

  auto* pulse_gen = app.add_subcommand("pulse-gen", "emit a pulse family as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    RunContext ctx;
    if (!config_path.empty()) {
      ctx.config = RunConfig::load(config_path);
      ctx.config_path = config_path;
    }
    ctx.out_dir = out_dir;
    if (seed >= 0) ctx.config.seed = static_cast<std::uint64_t>(seed);
    if (workers > 0) ctx.config.workers = workers;
    if (!pulse_csv.empty()) {
      ctx.config.pulse_family = "csv";
      ctx.config.pulse_csv = pulse_csv;
    }

    if (simulate->parsed()) return cmd_simulate(ctx);
    if (calibrate->parsed()) return cmd_calibrate(ctx, grid_csv, synthetic_gamma_mhz);
    if (arise_cmd->parsed()) return cmd_arise(ctx);
    if (buildup->parsed()) return cmd_buildup(ctx, sample_csvs);
    if (pulse_gen->parsed()) return cmd_pulse_gen(ctx);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const SolverError& err) {
    std::cerr << "solver error: " << err.what() << "\n";
    return 3;
  } catch (const FitError& err) {
    std::cerr << "fit error: " << err.what() << "\n";
    return 4;
  } catch (const BudgetError& err) {
    std::cerr << "optimizer error: " << err.what() << "\n";
    return 5;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
