#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace beamsr {

using cplx = std::complex<double>;

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz).
/// Rational expansion in (L+iz)/(L-iz) with 40 terms for Im z >= 0; the lower
/// half plane uses w(z) = 2 exp(-z^2) - w(-z).
cplx faddeeva_w(cplx z);

/// Scaled complementary error function erfcx(z) = exp(z^2) erfc(z) = w(iz).
cplx erfcx(cplx z);

/// Quadrature rule on a real interval: sum_i w[i] f(x[i]).
struct Rule {
  std::vector<double> x;
  std::vector<double> w;
  std::size_t size() const { return x.size(); }
};

/// n-point Gauss-Legendre rule mapped to [a, b]. Nodes are cached per n.
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre: `panels` equal panels on [a, b], n nodes each.
Rule composite_gauss_legendre(int panels, int n, double a, double b);

/// Numerical controls for the Gaussian velocity average and the transit
/// integrals. `refined()` doubles every node count for convergence checks.
struct QuadratureSpec {
  int u_nodes_per_panel = 8;
  double u_panel_width = 3.0;  // in units of 1/tau
  double u_cutoff_sigmas = 8.5;
  int xi_nodes = 48;           // per xi panel
  double xi_panel_doppler = 8.0;  // one extra xi panel per this much Doppler width
  int t_nodes = 48;            // per t panel
  int t_base_panels = 2;

  QuadratureSpec refined() const;
  bool operator==(const QuadratureSpec&) const = default;
};

/// Rule for <f(u)> with u ~ Normal(0, delta^2), restricted to u >= 0 for even
/// integrands: weights already include the factor 2 from folding and sum to 1.
/// delta == 0 gives the single node u = 0 with weight 1.
Rule folded_gaussian_rule(double delta, const QuadratureSpec& q);

/// Panel counts in xi and t for a given Doppler width.
int xi_panels(double delta, const QuadratureSpec& q);
int t_panels(double delta, const QuadratureSpec& q);

/// (1 - exp(-w)) / w with the removable singularity handled.
cplx phi1(cplx w);

/// sin(x)/x with sinc(0) = 1.
double sinc(double x);

}  // namespace beamsr
