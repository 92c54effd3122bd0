#include "beamsr/dispersion.hpp"

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kernel_cache.hpp"

namespace beamsr {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// int_0^1 (1 - t) exp(-nu t) dt
cplx transit_only(cplx nu) {
  if (std::abs(nu) < 0.1) {
    cplx sum = 0.0, p = 1.0;
    double fact = 1.0;
    for (int m = 0; m < 20; ++m) {
      if (m > 0) {
        p *= -nu;
        fact *= m;
      }
      sum += p / (fact * (m + 1.0) * (m + 2.0));
    }
    return sum;
  }
  return (nu - 1.0 + std::exp(-nu)) / (nu * nu);
}

// int_0^1 exp(-nu t - a t^2 / 2) dt, bounded-factor form
cplx gauss_e0(cplx nu, double a) {
  const double s = std::sqrt(0.5 * a);
  const double r2a = std::sqrt(2.0 * a);
  const cplx y0 = nu / r2a;
  const cplx y1 = (nu + a) / r2a;
  const cplx tail = std::exp(-nu - 0.5 * a);
  cplx bracket;
  if (y0.real() >= 0.0) {
    bracket = erfcx(y0) - tail * erfcx(y1);
  } else if (y1.real() <= 0.0) {
    bracket = tail * erfcx(-y1) - erfcx(-y0);
  } else {
    bracket = 2.0 * std::exp(y0 * y0) - erfcx(-y0) - tail * erfcx(y1);
  }
  return kSqrtPi / (2.0 * s) * bracket;
}

double bessel_j0(double x) { return boost::math::cyl_bessel_j(0, x); }
double bessel_j1(double x) { return boost::math::cyl_bessel_j(1, x); }

double bessel_j2(double x, double j0, double j1) {
  if (std::abs(x) < 1e-3) {
    const double q = x * x;
    return q / 8.0 - q * q / 96.0;
  }
  return 2.0 * j1 / x - j0;
}

TimeKernel build_higgs_kernel(const MeanFieldSolution& sol) {
  const QuadratureSpec& q = sol.quad;
  const double d = sol.params.doppler_width;
  const Rule ru = folded_gaussian_rule(d, q);
  const Rule rt = composite_gauss_legendre(t_panels(d, q), q.t_nodes, 0.0, 1.0);
  const int nxp = xi_panels(d, q);
  const double kappa = sol.kappa();
  TimeKernel k{rt.x, rt.w, std::vector<double>(rt.size(), 0.0)};
  for (std::size_t it = 0; it < rt.size(); ++it) {
    const double t = rt.x[it];
    const Rule rx = composite_gauss_legendre(nxp, q.xi_nodes, t, 1.0);
    double h = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
      const double xi = rx.x[i];
      double inner = 0.0;
      for (std::size_t m = 0; m < ru.size(); ++m) {
        const double u = ru.x[m];
        const double A = kappa * xi * sinc(0.5 * u * xi);
        const double j0 = bessel_j0(A);
        const double j2 = bessel_j2(A, j0, bessel_j1(A));
        inner += ru.w[m] * (j0 * std::cos(u * t) - j2 * std::cos(u * (xi - t)));
      }
      h += rx.w[i] * inner;
    }
    k.value[it] = h;
  }
  return k;
}

TimeKernel build_goldstone_kernel(const MeanFieldSolution& sol) {
  const QuadratureSpec& q = sol.quad;
  const double d = sol.params.doppler_width;
  const Rule ru = folded_gaussian_rule(d, q);
  const Rule rt = composite_gauss_legendre(t_panels(d, q), q.t_nodes, 0.0, 1.0);
  const int nxp = xi_panels(d, q);
  const double kappa = sol.kappa();
  TimeKernel k{rt.x, rt.w, std::vector<double>(rt.size(), 0.0)};
  for (std::size_t it = 0; it < rt.size(); ++it) {
    const double t = rt.x[it];
    const Rule rx = composite_gauss_legendre(nxp, q.xi_nodes, 0.0, 1.0 - t);
    double g = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
      const double xi = rx.x[i];
      double inner = 0.0;
      for (std::size_t m = 0; m < ru.size(); ++m) {
        const double u = ru.x[m];
        const double A = kappa * xi * sinc(0.5 * u * xi);
        inner += ru.w[m] * bessel_j1(A) * std::cos(u * t + 0.5 * u * xi);
      }
      g += rx.w[i] * inner;
    }
    k.value[it] = g;
  }
  return k;
}

void require_dipole(const MeanFieldSolution& sol, const char* what) {
  if (!sol.superradiant())
    throw std::invalid_argument(std::string(what) + ": requires a nonzero dipole");
}

cplx derivative(const std::function<cplx(cplx)>& D, cplx nu) {
  const double h = 1e-6 * std::max(1.0, std::abs(nu));
  return (D(nu + h) - D(nu - h)) / (2.0 * h);
}

}  // namespace

const char* to_string(RootKind k) {
  switch (k) {
    case RootKind::NSR: return "NSR";
    case RootKind::Higgs: return "Higgs";
    case RootKind::Goldstone: return "Goldstone";
  }
  return "?";
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::NSR: return "NSR";
    case Phase::SSR: return "SSR";
    case Phase::MCSR: return "MCSR";
    case Phase::Unclassified: return "unclassified";
  }
  return "?";
}

ScanBox ScanBox::doubled() const {
  ScanBox b = *this;
  b.n_re = 2 * n_re - 1;
  b.n_im = 2 * n_im - 1;
  return b;
}

std::string RootSearch::describe() const {
  std::ostringstream os;
  if (root) {
    os << to_string(root->kind) << " root nu0 = " << root->nu.real()
       << (root->nu.imag() >= 0 ? " + " : " - ") << std::abs(root->nu.imag())
       << "i (residual " << root->residual << ")";
  } else {
    os << "no root located in Re nu in [" << box.re_min << ", " << box.re_max
       << "], Im nu in [" << box.im_min << ", " << box.im_max << "] on a "
       << box.n_re << "x" << box.n_im << " grid (" << seeds << " seeds)";
  }
  return os.str();
}

cplx TimeKernel::laplace(cplx nu) const {
  cplx sum = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k)
    sum += w[k] * value[k] * std::exp(-nu * t[k]);
  return sum;
}

cplx nsr_transit_integral(cplx nu, double delta) {
  const double a = delta * delta;
  if (delta < 1e-3) {
    // exp(-a t^2/2) = 1 - a t^2/2 + O(a^2); the O(a) moment by quadrature
    cplx corr = 0.0;
    if (a > 0.0) {
      const Rule r = gauss_legendre(48, 0.0, 1.0);
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double t = r.x[i];
        corr += r.w[i] * (1.0 - t) * t * t * std::exp(-nu * t);
      }
    }
    return transit_only(nu) - 0.5 * a * corr;
  }
  // The closed form below divides a difference of size |e^{-nu}| by a, which
  // cancels badly once |nu|^2 >> a. There the integrand is smooth enough for
  // panel Gauss-Legendre.
  if (a < 1e-2 * std::norm(nu)) {
    const int panels = 1 + int(std::min(std::abs(nu), 2000.0) / 8.0);
    static const Rule base = gauss_legendre(24, 0.0, 1.0);
    const double h = 1.0 / panels;
    cplx sum = 0.0;
    for (int p = 0; p < panels; ++p)
      for (std::size_t i = 0; i < base.size(); ++i) {
        const double t = h * (p + base.x[i]);
        sum += h * base.w[i] * (1.0 - t) * std::exp(-nu * t - 0.5 * a * t * t);
      }
    return sum;
  }
  // I = E0 - E1 with E1 from (nu + a t) e^{...} = -d/dt e^{...}
  const cplx e0 = gauss_e0(nu, a);
  return ((a + nu) * e0 - 1.0 + std::exp(-nu - 0.5 * a)) / a;
}

cplx d_nsr_closed(cplx nu, const ModelParams& params) {
  return 1.0 - 0.25 * params.collective_linewidth *
                   nsr_transit_integral(nu, params.doppler_width);
}

RootSearch find_root(const std::function<cplx(cplx)>& D, RootKind kind,
                     const ScanBox& box) {
  RootSearch out;
  out.box = box;
  const int nr = std::max(2, box.n_re), ni = std::max(2, box.n_im);
  const double dre = (box.re_max - box.re_min) / (nr - 1);
  const double dim = (box.im_max - box.im_min) / (ni - 1);
  auto node = [&](int k, int l) {
    return cplx(box.re_min + k * dre, box.im_min + l * dim);
  };
  std::vector<double> mag(std::size_t(nr) * ni);
  for (int k = 0; k < nr; ++k)
    for (int l = 0; l < ni; ++l) {
      const double m = std::abs(D(node(k, l)));
      mag[std::size_t(k) * ni + l] = std::isfinite(m) ? m : INFINITY;
    }

  const double cap = 2.0 * std::max(dre, dim);
  const double margin_re = dre, margin_im = dim;
  auto inside = [&](cplx z) {
    return z.real() >= box.re_min - margin_re && z.real() <= box.re_max + margin_re &&
           std::abs(z.imag()) <= box.im_max + margin_im &&
           std::abs(z.imag()) >= box.im_min - margin_im;
  };

  for (int k = 0; k < nr; ++k)
    for (int l = 0; l < ni; ++l) {
      const double m = mag[std::size_t(k) * ni + l];
      if (!std::isfinite(m)) continue;
      bool minimum = true;
      for (int dk = -1; dk <= 1 && minimum; ++dk)
        for (int dl = -1; dl <= 1; ++dl) {
          if (dk == 0 && dl == 0) continue;
          const int kk = k + dk, ll = l + dl;
          if (kk < 0 || kk >= nr || ll < 0 || ll >= ni) continue;
          if (mag[std::size_t(kk) * ni + ll] < m) {
            minimum = false;
            break;
          }
        }
      if (!minimum) continue;
      ++out.seeds;

      cplx nu = node(k, l);
      bool ok = true;
      for (int it = 0; it < 80; ++it) {
        const cplx f = D(nu);
        if (!std::isfinite(f.real()) || !std::isfinite(f.imag())) {
          ok = false;
          break;
        }
        if (std::abs(f) < 1e-15) break;
        const cplx df = derivative(D, nu);
        if (std::abs(df) == 0.0) {
          ok = false;
          break;
        }
        cplx stepv = f / df;
        if (std::abs(stepv) > cap) stepv *= cap / std::abs(stepv);
        nu -= stepv;
        if (!inside(nu)) {
          ok = false;
          break;
        }
        if (std::abs(stepv) < 1e-14 * (1.0 + std::abs(nu))) break;
      }
      if (!ok) continue;
      DispersionRoot r;
      r.kind = kind;
      r.residual = std::abs(D(nu));
      r.converged = r.residual < 1e-8;
      if (!r.converged) continue;
      if (nu.imag() < 0.0) nu = std::conj(nu);
      r.nu = nu;
      r.derivative = derivative(D, nu);
      r.residue = std::abs(r.derivative);
      r.multiple = r.residue < 1e-6;
      bool dup = false;
      for (const auto& e : out.roots)
        if (std::abs(e.nu - nu) < 1e-6 * (1.0 + std::abs(nu))) dup = true;
      if (!dup) out.roots.push_back(r);
    }
  std::sort(out.roots.begin(), out.roots.end(),
            [](const DispersionRoot& a, const DispersionRoot& b) {
              if (a.nu.real() != b.nu.real()) return a.nu.real() > b.nu.real();
              return a.nu.imag() < b.nu.imag();
            });
  if (!out.roots.empty()) out.root = out.roots.front();
  return out;
}

RootSearch find_nsr_root(const ModelParams& params, const ScanBox& box) {
  return find_root([&](cplx nu) { return d_nsr_closed(nu, params); },
                   RootKind::NSR, box);
}

double threshold_nsr(double delta_tau) {
  if (delta_tau < 0.0) throw std::invalid_argument("threshold_nsr: delta_tau must be >= 0");
  if (delta_tau < 1e-6) return 8.0;
  const double d = delta_tau;
  const double den = std::sqrt(2.0 * std::numbers::pi) * d * std::erf(d / std::sqrt(2.0)) +
                     2.0 * std::expm1(-0.5 * d * d);
  return 8.0 * d * d / den;
}

const TimeKernel& higgs_kernel(const MeanFieldSolution& sol) {
  require_dipole(sol, "higgs_kernel");
  if (!sol.cache) throw std::invalid_argument("higgs_kernel: solution has no kernel cache");
  std::call_once(sol.cache->higgs_once, [&] { sol.cache->higgs = build_higgs_kernel(sol); });
  return sol.cache->higgs;
}

const TimeKernel& goldstone_kernel(const MeanFieldSolution& sol) {
  require_dipole(sol, "goldstone_kernel");
  if (!sol.cache) throw std::invalid_argument("goldstone_kernel: solution has no kernel cache");
  std::call_once(sol.cache->goldstone_once,
                 [&] { sol.cache->goldstone = build_goldstone_kernel(sol); });
  return sol.cache->goldstone;
}

cplx d_higgs(cplx nu, const MeanFieldSolution& sol) {
  return 1.0 - 0.25 * sol.params.collective_linewidth * higgs_kernel(sol).laplace(nu);
}

cplx d_goldstone(cplx nu, const MeanFieldSolution& sol) {
  return nu / sol.j_par0 * goldstone_kernel(sol).laplace(nu);
}

RootSearch find_higgs_root(const MeanFieldSolution& sol, const ScanBox& box) {
  const TimeKernel& k = higgs_kernel(sol);
  const double g4 = 0.25 * sol.params.collective_linewidth;
  return find_root([&](cplx nu) { return 1.0 - g4 * k.laplace(nu); },
                   RootKind::Higgs, box);
}

RootSearch find_goldstone_root(const MeanFieldSolution& sol, const ScanBox& box) {
  const TimeKernel& k = goldstone_kernel(sol);
  const double inv_j = 1.0 / sol.j_par0;
  return find_root([&](cplx nu) { return nu * inv_j * k.laplace(nu); },
                   RootKind::Goldstone, box);
}

std::optional<DispersionRoot> PhasePoint::leading_root() const {
  return j_par0 > 0.0 ? higgs_root : nsr_root;
}

PhasePoint classify_phase(double n_gamma_tau, double delta_tau,
                          const ModelParams& base, const ScanBox& box,
                          const QuadratureSpec& quad) {
  PhasePoint pt;
  pt.n_gamma_tau = n_gamma_tau;
  pt.delta_tau = delta_tau;
  ModelParams p = base;
  p.collective_linewidth = n_gamma_tau;
  p.doppler_width = delta_tau;
  try {
    const RootSearch nsr = find_nsr_root(p, box);
    pt.nsr_root = nsr.root;
    const MeanFieldSolution sol = solve_dipole(p, quad);
    pt.j_par0 = sol.j_par0;
    if (!sol.superradiant()) {
      if (!nsr.root) {
        pt.diagnostic = nsr.describe();
      } else if (nsr.root->nu.real() < 0.0) {
        pt.phase = Phase::NSR;
      } else {
        pt.diagnostic = "no superradiant solution but Re(nu0) >= 0: " + nsr.describe();
      }
      return pt;
    }
    const RootSearch higgs = find_higgs_root(sol, box);
    pt.higgs_root = higgs.root;
    if (!higgs.root) {
      pt.diagnostic = higgs.describe();
      return pt;
    }
    pt.phase = higgs.root->nu.real() < 0.0 ? Phase::SSR : Phase::MCSR;
  } catch (const std::exception& e) {
    pt.phase = Phase::Unclassified;
    pt.diagnostic = e.what();
  }
  return pt;
}

}  // namespace beamsr
