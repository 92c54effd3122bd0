#include "beamsr/meanfield.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <sstream>
#include <vector>

#include "kernel_cache.hpp"

namespace beamsr {

double one_minus_j0(double x) {
  if (std::abs(x) < 0.5) {
    const double q = 0.25 * x * x;
    double term = q, sum = q;
    for (int k = 1; k < 30; ++k) {
      term *= -q / double((k + 1) * (k + 1));
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return 1.0 - boost::math::cyl_bessel_j(0, x);
}

double k_field(double xi, double phi, double u, double j_par0,
               const ModelParams& params) {
  // (a/u)[sin(phi) - sin(phi - u xi)] = a xi sinc(u xi / 2) cos(phi - u xi / 2)
  const double a = 0.5 * params.collective_linewidth * j_par0;
  return a * xi * sinc(0.5 * u * xi) * std::cos(phi - 0.5 * u * xi);
}

std::pair<double, double> stationary_densities(double xi, double phi, double u,
                                               const MeanFieldSolution& sol) {
  const double K = k_field(xi, phi, u, sol.j_par0, sol.params);
  return {std::sin(K), std::cos(K)};
}

namespace {

double rhs_raw(double j, const ModelParams& params, const Rule& ru) {
  const double kappa = 0.5 * params.collective_linewidth * j;
  double sum = 0.0;
  for (std::size_t i = 0; i < ru.size(); ++i)
    sum += ru.w[i] * one_minus_j0(kappa * sinc(0.5 * ru.x[i]));
  return sum / kappa;
}

double solve_raw(const ModelParams& params, const QuadratureSpec& quad,
                 double* residual) {
  const Rule ru = folded_gaussian_rule(params.doppler_width, quad);
  auto g = [&](double j) { return rhs_raw(j, params, ru) - j; };
  *residual = 0.0;
  if (!(params.collective_linewidth > 0.0)) return 0.0;

  constexpr int kScan = 400;
  constexpr double kLow = 1e-8;
  double hi = 1.0, ghi = g(hi);
  double lo = 0.0, glo = 0.0;
  bool bracketed = false;
  for (int k = kScan - 1; k >= 0; --k) {
    lo = k == 0 ? kLow : double(k) / kScan;
    glo = g(lo);
    if (glo > 0.0 && ghi <= 0.0) {
      bracketed = true;
      break;
    }
    hi = lo;
    ghi = glo;
  }
  if (!bracketed) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double j = 0.5 * (lo + hi);
  *residual = std::abs(g(j));
  return j;
}

}  // namespace

double dipole_selfconsistency_rhs(double j, const ModelParams& params,
                                  const QuadratureSpec& quad, bool check) {
  if (!(j > 0.0)) throw std::invalid_argument("dipole_selfconsistency_rhs: j must be > 0");
  if (!(params.collective_linewidth > 0.0))
    throw std::invalid_argument("dipole_selfconsistency_rhs: collective_linewidth must be > 0");
  const double r = rhs_raw(j, params, folded_gaussian_rule(params.doppler_width, quad));
  if (check) {
    const QuadratureSpec fine = quad.refined();
    const double r2 =
        rhs_raw(j, params, folded_gaussian_rule(params.doppler_width, fine));
    if (std::abs(r2 - r) > 1e-10) {
      std::ostringstream msg;
      msg << "self-consistency integral not converged at j=" << j
          << " (node doubling shift " << std::abs(r2 - r) << ")";
      throw QuadratureError(msg.str());
    }
  }
  return r;
}

MeanFieldSolution MeanFieldSolution::with_dipole(const ModelParams& params,
                                                 double j_par0,
                                                 const QuadratureSpec& quad) {
  MeanFieldSolution sol;
  sol.params = params;
  sol.quad = quad;
  sol.j_par0 = j_par0;
  sol.cache = std::make_shared<KernelCache>();
  return sol;
}

MeanFieldSolution solve_dipole(const ModelParams& params,
                               const QuadratureSpec& quad) {
  params.validate();
  MeanFieldSolution sol = MeanFieldSolution::with_dipole(params, 0.0, quad);
  sol.j_par0 = solve_raw(params, quad, &sol.residual);
  // convergence is judged on the integral itself; near threshold j is
  // ill-conditioned and a j-shift criterion would reject valid inputs
  if (sol.superradiant()) dipole_selfconsistency_rhs(sol.j_par0, params, quad, true);
  return sol;
}

double t_char(const ModelParams& params, const QuadratureSpec& quad) {
  const double d = params.doppler_width;
  const double tmax = d > 0.0 ? std::min(1.0, 9.0 / d) : 1.0;
  const Rule r = composite_gauss_legendre(4, 2 * quad.t_nodes, 0.0, tmax);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double t = r.x[i];
    sum += r.w[i] * (1.0 - t) * std::exp(-0.5 * d * d * t * t);
  }
  return double(params.n_atoms) * sum;
}

double c_perp(const MeanFieldSolution& sol) {
  if (!sol.superradiant())
    throw std::invalid_argument("c_perp: requires a nonzero dipole");
  const double d = sol.params.doppler_width;
  const Rule ru = folded_gaussian_rule(d, sol.quad);
  const Rule rx =
      composite_gauss_legendre(xi_panels(d, sol.quad), sol.quad.xi_nodes, 0.0, 1.0);
  const double kappa = sol.kappa();
  double sum = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double xi = rx.x[i];
    double inner = 0.0;
    for (std::size_t k = 0; k < ru.size(); ++k) {
      const double u = ru.x[k];
      const double A = kappa * xi * sinc(0.5 * u * xi);
      // [sin(u(1 - xi/2)) - sin(u xi/2)] / u
      const double f = (1.0 - xi) * std::cos(0.5 * u) * sinc(0.5 * u * (1.0 - xi));
      inner += ru.w[k] * boost::math::cyl_bessel_j(1, A) * f;
    }
    sum += rx.w[i] * inner;
  }
  return sum / sol.j_par0;
}

std::optional<LinewidthPrediction> linewidth_ssr(const ModelParams& params,
                                                 const QuadratureSpec& quad) {
  const MeanFieldSolution sol = solve_dipole(params, quad);
  if (!sol.superradiant()) return std::nullopt;
  LinewidthPrediction p;
  p.j_par0 = sol.j_par0;
  p.t_char = t_char(params, quad);
  p.c_perp = c_perp(sol);
  const double J = double(params.n_atoms) * sol.j_par0;
  const double c2j2 = p.c_perp * p.c_perp * J * J;
  p.gamma_line = 4.0 / (params.gamma_c() * c2j2) + p.t_char / c2j2;
  return p;
}

}  // namespace beamsr
