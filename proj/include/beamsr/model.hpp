#pragma once

#include <cmath>
#include <cstdint>

#include "beamsr/random.hpp"

namespace beamsr {

/// Dimensionless configuration, all rates in units of 1/tau (tau = 1).
struct ModelParams {
  std::int64_t n_atoms = 1000;        // mean intracavity atom number N
  double collective_linewidth = 0.0;  // N * Gamma_c
  double doppler_width = 0.0;         // delta_D
  double gamma1 = 0.0;                // spontaneous emission
  double gamma2 = 0.0;                // dephasing, 2 / T2

  static constexpr double transit_time = 1.0;

  double gamma_c() const { return collective_linewidth / double(n_atoms); }

  /// Builds parameters from the single-atom linewidth.
  static ModelParams from_single_atom(std::int64_t n, double gamma_c,
                                      double doppler, double g1 = 0.0,
                                      double g2 = 0.0);

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

struct Spin {
  double x = 0.0, y = 0.0, z = 0.0;
  double norm_sq() const { return x * x + y * y + z * z; }
  bool operator==(const Spin&) const = default;
};

struct AtomState {
  double xi = 0.0;   // transit progress in [0, 1]
  double phi = 0.0;  // standing-wave phase k z
  double u = 0.0;    // axial Doppler shift k p_z / m
  Spin spin;
};

/// Box profile times standing wave.
inline double mode_eta(double xi, double phi) {
  return (xi >= 0.0 && xi <= 1.0) ? std::cos(phi) : 0.0;
}

Spin sample_initial_spin(Engine& rng);

AtomState sample_arrival(Engine& rng, const ModelParams& params);

struct BallisticityReport {
  double ratio_axial = 0.0;
  double ratio_transverse_y = 0.0;
  double ratio_longitudinal_x = 0.0;
  double threshold = 0.1;
  bool axial_ok = true;
  bool transverse_y_ok = true;
  bool longitudinal_x_ok = true;
  bool ok = true;
};

/// Compares the three precomputed force-to-momentum-spread ratios with the
/// threshold. Example for the axial ratio from lab numbers:
///   ratio_axial = hbar * k * (N Gamma_c) * tau / Delta p_z.
BallisticityReport check_ballistic_validity(double ratio_axial,
                                            double ratio_transverse_y,
                                            double ratio_longitudinal_x,
                                            double threshold = 0.1);

}  // namespace beamsr

