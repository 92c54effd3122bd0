#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "beamsr/meanfield.hpp"
#include "beamsr/model.hpp"
#include "beamsr/numerics.hpp"

namespace beamsr {

enum class RootKind { NSR, Higgs, Goldstone };
enum class Phase { NSR, SSR, MCSR, Unclassified };

const char* to_string(RootKind k);
const char* to_string(Phase p);

struct DispersionRoot {
  cplx nu{0.0, 0.0};       // reported with Im >= 0
  RootKind kind = RootKind::NSR;
  cplx derivative{0.0, 0.0};  // D'(nu0) = lim D(nu) / (nu - nu0)
  double residue = 0.0;       // |D'(nu0)|
  bool converged = false;
  bool multiple = false;      // residue below 1e-6: not a first-order zero
  double residual = 0.0;      // |D(nu0)|
};

/// Rectangular search region in the complex nu plane (units 1/tau).
struct ScanBox {
  double re_min = -30.0, re_max = 30.0;
  double im_min = 0.0, im_max = 40.0;
  int n_re = 61, n_im = 41;

  ScanBox doubled() const;
  bool operator==(const ScanBox&) const = default;
};

struct RootSearch {
  std::optional<DispersionRoot> root;  // maximal real part
  std::vector<DispersionRoot> roots;   // all distinct converged roots, by Re
  ScanBox box;
  int seeds = 0;

  bool found() const { return root.has_value(); }
  /// Human-readable outcome, including the scanned box when nothing was found.
  std::string describe() const;
};

/// int_0^1 (1 - t) exp(-nu t - delta^2 t^2 / 2) dt in closed form.
cplx nsr_transit_integral(cplx nu, double delta);

/// D(nu) = 1 - (N Gamma_c / 4) * nsr_transit_integral(nu, delta_D).
cplx d_nsr_closed(cplx nu, const ModelParams& params);

/// Grid scan of |D| over the box, Newton refinement from every local minimum,
/// selection of the converged zero with the largest real part. D must satisfy
/// D(conj nu) = conj D(nu).
RootSearch find_root(const std::function<cplx(cplx)>& D, RootKind kind,
                     const ScanBox& box = {});

RootSearch find_nsr_root(const ModelParams& params, const ScanBox& box = {});

/// N Gamma_c tau at which D(0) = 0, i.e. the onset of superradiance.
double threshold_nsr(double delta_tau);

/// Amplitude-mode dispersion, 1 - (N Gamma_c / 4) int_0^1 dt e^{-nu t} h(t).
cplx d_higgs(cplx nu, const MeanFieldSolution& sol);
RootSearch find_higgs_root(const MeanFieldSolution& sol, const ScanBox& box = {});

/// Phase-mode dispersion, (nu / j) int_0^1 dt e^{-nu t} g(t).
cplx d_goldstone(cplx nu, const MeanFieldSolution& sol);
RootSearch find_goldstone_root(const MeanFieldSolution& sol,
                               const ScanBox& box = {});

/// Transit kernel sampled on quadrature nodes in t.
struct TimeKernel {
  std::vector<double> t, w, value;
  cplx laplace(cplx nu) const;  // sum_k w_k value_k exp(-nu t_k)
};

const TimeKernel& higgs_kernel(const MeanFieldSolution& sol);
const TimeKernel& goldstone_kernel(const MeanFieldSolution& sol);

struct PhasePoint {
  double n_gamma_tau = 0.0;
  double delta_tau = 0.0;
  Phase phase = Phase::Unclassified;
  double j_par0 = 0.0;
  std::optional<DispersionRoot> nsr_root;
  std::optional<DispersionRoot> higgs_root;
  std::string diagnostic;

  /// Root that decides the phase: Higgs when superradiant, else NSR.
  std::optional<DispersionRoot> leading_root() const;
};

/// NSR if j_par0 = 0 and Re(nsr root) < 0; SSR if j_par0 > 0 and
/// Re(higgs root) < 0; MCSR if j_par0 > 0 and Re(higgs root) >= 0.
/// Root-finder failures give Phase::Unclassified with a diagnostic.
PhasePoint classify_phase(double n_gamma_tau, double delta_tau,
                          const ModelParams& base = {}, const ScanBox& box = {},
                          const QuadratureSpec& quad = {});

}  // namespace beamsr
