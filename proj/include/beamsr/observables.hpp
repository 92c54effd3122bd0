#pragma once

#include <stdexcept>
#include <vector>

#include "beamsr/beamsim.hpp"
#include "beamsr/model.hpp"
#include "beamsr/numerics.hpp"

namespace beamsr {

class ObservableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorrelationSeries {
  std::vector<double> lags;  // lags[0] = 0
  std::vector<cplx> values;
  double t0 = 0.0;
  int n_traj = 0;
  int n_origins = 1;  // time origins per trajectory

  std::size_t size() const { return lags.size(); }
};

struct SpectrumResult {
  std::vector<double> omega;  // symmetric about 0
  std::vector<cplx> values;
  double tf = 0.0;
  double resolution() const;  // 2 pi / tf
};

/// Time origins used for the ensemble average. The default is a single origin
/// at t0 with trajectory averaging only. count > 1 adds origins
/// t0 + m * spacing: a variance-reduction mode that assumes stationarity.
struct OriginComb {
  int count = 1;
  double spacing = 0.0;
  bool operator==(const OriginComb&) const = default;
};

/// g1(lag) = < J*(t0 + lag) J(t0) >, J = (Jx - i Jy) / 2.
CorrelationSeries g1(const std::vector<DipoleRecord>& records, double t0,
                     double max_lag, const OriginComb& comb = {});

/// g2(lag) = < |J(t0 + lag)|^2 |J(t0)|^2 > / < |J(t0)|^2 >^2.
CorrelationSeries g2(const std::vector<DipoleRecord>& records, double t0,
                     double max_lag, const OriginComb& comb = {});

enum class SpectrumKind { S1, S2 };

struct SpectrumGrid {
  double omega_max = 20.0;
  int oversample = 4;  // omega spacing = 2 pi / (tf * oversample)
};

/// S(omega) = int_0^tf e^{i omega t} f(t) dt by the trapezoid rule on the lag
/// grid; f = g1 for S1 and g2 - 1 for S2.
SpectrumResult spectrum(const CorrelationSeries& series, double tf,
                        SpectrumKind which, const SpectrumGrid& grid = {});

enum class FitModel { ExpTail, Linewidth };

struct FitResult {
  double rate = 0.0;    // c for ExpTail, Gamma = -2c for Linewidth
  double std_error = 0.0;
  int n_points = 0;
};

/// Least squares of log|values| against lag over [t_a, t_b].
FitResult fit_exponent(const CorrelationSeries& series, double t_a, double t_b,
                       FitModel model);

struct DipoleStats {
  double mean = 0.0;    // < J* J >
  double std_error = 0.0;  // across trajectories
  int n_traj = 0;
};

/// Time and ensemble average of |J|^2 = (Jx^2 + Jy^2) / 4 for t >= t0.
/// With n_atoms > 0 the result is divided by n_atoms^2.
DipoleStats dipole_correlation(const std::vector<DipoleRecord>& records,
                               double t0, double n_atoms = 0.0);

/// Gamma_c^2 < J* J >.
double effective_rabi_sq(const std::vector<DipoleRecord>& records,
                         const ModelParams& params, double t0);

/// Local maxima of |values| with omega in [lo, hi], strongest first.
std::vector<double> spectral_peaks(const SpectrumResult& s, double lo, double hi);

}  // namespace beamsr
