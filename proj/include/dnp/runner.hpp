#pragma once

#include <string>
#include <vector>

#include "dnp/config.hpp"
#include "dnp/optimizer.hpp"

namespace dnp {

// Pulse file format: t_us, omega_ext_MHz, phi_rad, delta_MHz (the detuning
// column is redundant, emitted for plotting).
void write_pulse_csv(const std::string& path, const Pulse& pulse);
Pulse read_pulse_csv(const std::string& path, double omega_max);

struct RunContext {
  RunConfig config;
  std::string out_dir = "out";
  std::string config_path;  // raw bytes feed the manifest hash
};

// Subcommand bodies; each writes a manifest and its artifacts into
// ctx.out_dir and returns a process exit code.
int cmd_simulate(const RunContext& ctx);
int cmd_calibrate(const RunContext& ctx, const std::string& grid_csv, double synthetic_gamma_mhz);
int cmd_arise(const RunContext& ctx);
int cmd_buildup(const RunContext& ctx, const std::vector<std::string>& sample_csvs);
int cmd_pulse_gen(const RunContext& ctx);

}  // namespace dnp
