#pragma once

#include <iosfwd>
#include <string>

#include "beamsr/config.hpp"

namespace beamsr {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

/// Runs the ensemble, writes per-trajectory records, correlations, spectra and
/// summary.json into cfg.output_dir.
int cmd_simulate(const RunConfig& cfg, std::ostream& log);

/// Mean-field dipole, threshold table, dispersion roots and linewidth.
int cmd_theory(const RunConfig& cfg, std::ostream& log);

/// Phase classification over the (collective_linewidth, doppler_width) sweep.
/// Completed points are kept under <output_dir>/points and skipped on rerun.
int cmd_phase_diagram(const RunConfig& cfg, std::ostream& log);

/// Correlations and spectra from binary records in cfg.input_dir.
int cmd_spectra(const RunConfig& cfg, std::ostream& log);

/// Command-line entry point: beamsr <subcommand> --config PATH
/// [--seed U64] [--workers INT] [--out DIR].
int run_cli(int argc, char** argv);

}  // namespace beamsr
