#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamsr/beamsim.hpp"
#include "beamsr/dispersion.hpp"
#include "beamsr/model.hpp"
#include "beamsr/numerics.hpp"
#include "beamsr/observables.hpp"

namespace beamsr {

/// Invalid configuration; `field` is the JSON path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SweepAxis {
  std::string name;  // a ModelParams field name
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  /// count equally spaced values from min to max inclusive.
  std::vector<double> values() const;
  bool operator==(const SweepAxis&) const = default;
};

struct AnalysisConfig {
  double t0 = 10.0;
  double max_lag = 20.0;
  double tf = 20.0;
  std::array<double, 2> fit_window{5.0, 15.0};
  FitModel fit_model = FitModel::ExpTail;
  double omega_max = 20.0;
  int omega_oversample = 4;
  OriginComb comb;

  bool operator==(const AnalysisConfig&) const = default;
};

struct TheoryConfig {
  std::vector<double> threshold_deltas;
  ScanBox scan_box;
  QuadratureSpec quadrature;

  bool operator==(const TheoryConfig&) const = default;
};

struct RunConfig {
  ModelParams params;
  SimConfig sim;
  int n_traj = 1;
  AnalysisConfig analysis;
  TheoryConfig theory;
  std::vector<SweepAxis> sweep;
  std::string output_dir = "out";
  std::string input_dir;  // records to post-process; default <output_dir>/records
  bool csv_records = true;
  bool binary_records = true;
  int workers = 1;

  bool operator==(const RunConfig&) const = default;
};

/// Strict parse: unknown keys and missing required keys are errors.
/// Required: params.n_atoms, params.collective_linewidth, params.doppler_width.
RunConfig parse_config(const nlohmann::json& j);

/// Reads and parses a file; JSON syntax errors report line and column.
RunConfig load_config(const std::string& path);

nlohmann::json to_json(const RunConfig& cfg);

/// FNV-1a 64-bit hash (hex) of the canonical JSON of the configuration with
/// the execution-only fields (workers, output_dir, input_dir) removed.
std::string config_hash(const RunConfig& cfg);

const char* to_string(FitModel m);

}  // namespace beamsr
