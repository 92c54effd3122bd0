#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>

#include "beamsr/model.hpp"
#include "beamsr/numerics.hpp"

namespace beamsr {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KernelCache;  // dispersion kernels built lazily from a solution

/// Stationary superradiant state. j_par0 = J_par0 / N; zero below threshold.
struct MeanFieldSolution {
  double j_par0 = 0.0;
  double residual = 0.0;  // |j - rhs(j)| at j_par0
  ModelParams params;
  QuadratureSpec quad;
  std::shared_ptr<KernelCache> cache;

  /// Solution with a prescribed dipole, e.g. for probing limits of the
  /// dispersion relations. Residual is left at zero.
  static MeanFieldSolution with_dipole(const ModelParams& params, double j_par0,
                                       const QuadratureSpec& quad = {});

  bool superradiant() const { return j_par0 > 0.0; }
  /// kappa = N Gamma_c j_par0 / 2, the amplitude of the K field per unit xi.
  double kappa() const { return 0.5 * params.collective_linewidth * j_par0; }
};

struct LinewidthPrediction {
  double t_char = 0.0;      // units tau, proportional to N
  double c_perp = 0.0;
  double gamma_line = 0.0;  // units 1/tau
  double j_par0 = 0.0;
};

/// 1 - J0(x), accurate for small x.
double one_minus_j0(double x);

/// K = (Gamma_c J_par0 / (2u)) [sin(phi) - sin(phi - u xi)].
double k_field(double xi, double phi, double u, double j_par0,
               const ModelParams& params);

/// (s_par0, s_z0) per unit density: (sin K, cos K).
std::pair<double, double> stationary_densities(double xi, double phi, double u,
                                               const MeanFieldSolution& sol);

/// <[1 - J0(kappa sinc(u/2))] / kappa>_u with kappa = N Gamma_c j / 2.
/// With check = true the result is recomputed with doubled nodes and a
/// QuadratureError is thrown if the two differ by more than 1e-10.
double dipole_selfconsistency_rhs(double j, const ModelParams& params,
                                  const QuadratureSpec& quad = {},
                                  bool check = false);

/// Largest fixed point of j = rhs(j) on [1e-8, 1], or 0 when none exists.
/// Throws QuadratureError if rhs at the solution moves by more than 1e-10
/// under node doubling.
MeanFieldSolution solve_dipole(const ModelParams& params,
                               const QuadratureSpec& quad = {});

/// t_char = N * int_0^1 (1 - t) exp(-delta^2 t^2 / 2) dt.
double t_char(const ModelParams& params, const QuadratureSpec& quad = {});

/// C_perp = (1/j) int dxi <J1(A) [sin(u(1 - xi/2)) - sin(u xi/2)] / u>_u,
/// A = kappa xi sinc(u xi / 2). Throws std::invalid_argument for j_par0 = 0.
double c_perp(const MeanFieldSolution& sol);

/// Gamma = 4 / (Gamma_c C^2 J^2) + t_char / (C^2 J^2), J = N j_par0.
/// std::nullopt means the parameters are not in the superradiant phase.
std::optional<LinewidthPrediction> linewidth_ssr(const ModelParams& params,
                                                 const QuadratureSpec& quad = {});

}  // namespace beamsr
