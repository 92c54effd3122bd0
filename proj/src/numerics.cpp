#include "beamsr/numerics.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace beamsr {

namespace {

constexpr int kWeidemanN = 40;

struct WeidemanTable {
  double L;
  std::array<double, kWeidemanN> a;  // a[m-1] multiplies Z^(m-1)

  WeidemanTable() {
    const int M = 2 * kWeidemanN;
    const int M2 = 2 * M;
    L = std::sqrt(kWeidemanN / std::sqrt(2.0));
    // f sampled at k = -M+1 .. M-1 with a leading zero, length 2M
    std::vector<double> f(2 * M, 0.0);
    for (int k = -M + 1; k <= M - 1; ++k) {
      const double theta = k * std::numbers::pi / M;
      const double t = L * std::tan(theta / 2);
      f[k + M] = std::exp(-t * t) * (L * L + t * t);
    }
    // fftshift on an even-length vector rotates by M
    std::vector<double> g(2 * M);
    for (int j = 0; j < 2 * M; ++j) g[j] = f[(j + M) % (2 * M)];
    for (int m = 1; m <= kWeidemanN; ++m) {
      double re = 0.0;
      for (int j = 0; j < 2 * M; ++j)
        re += g[j] * std::cos(2.0 * std::numbers::pi * double(j) * m / (2 * M));
      a[m - 1] = re / M2;
    }
  }
};

const WeidemanTable& weideman() {
  static const WeidemanTable table;
  return table;
}

cplx w_upper(cplx z) {
  const auto& tb = weideman();
  const cplx iz(-z.imag(), z.real());
  const cplx den = tb.L - iz;
  const cplx Z = (tb.L + iz) / den;
  cplx p = tb.a[kWeidemanN - 1];
  for (int m = kWeidemanN - 2; m >= 0; --m) p = p * Z + tb.a[m];
  return 2.0 * p / (den * den) + (1.0 / std::sqrt(std::numbers::pi)) / den;
}

// Returns (P_n(x), P_n'(x)).
std::pair<double, double> legendre_p(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

Rule legendre_unit(int n) {
  Rule r;
  r.x.assign(n, 0.0);
  r.w.assign(n, 0.0);
  if (n == 1) return Rule{{0.0}, {2.0}};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre_p(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre_p(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

}  // namespace

cplx faddeeva_w(cplx z) {
  if (z.imag() >= 0.0) return w_upper(z);
  return 2.0 * std::exp(-z * z) - w_upper(-z);
}

cplx erfcx(cplx z) { return faddeeva_w(cplx(-z.imag(), z.real())); }

Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  static std::mutex mu;
  static std::map<int, Rule> cache;
  Rule unit;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, legendre_unit(n)).first;
    unit = it->second;
  }
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    unit.x[i] = mid + half * unit.x[i];
    unit.w[i] *= half;
  }
  return unit;
}

Rule composite_gauss_legendre(int panels, int n, double a, double b) {
  Rule out;
  out.x.reserve(std::size_t(panels) * n);
  out.w.reserve(std::size_t(panels) * n);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const Rule r = gauss_legendre(n, a + p * h, a + (p + 1) * h);
    out.x.insert(out.x.end(), r.x.begin(), r.x.end());
    out.w.insert(out.w.end(), r.w.begin(), r.w.end());
  }
  return out;
}

QuadratureSpec QuadratureSpec::refined() const {
  QuadratureSpec q = *this;
  q.u_nodes_per_panel *= 2;
  q.xi_nodes *= 2;
  q.t_nodes *= 2;
  return q;
}

Rule folded_gaussian_rule(double delta, const QuadratureSpec& q) {
  if (!(delta > 0.0)) return Rule{{0.0}, {1.0}};
  const int panels = std::max(
      4, int(std::ceil(q.u_cutoff_sigmas * delta / q.u_panel_width)));
  Rule r = composite_gauss_legendre(panels, q.u_nodes_per_panel, 0.0,
                                    q.u_cutoff_sigmas);
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double s = r.x[i];
    r.w[i] *= 2.0 * std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi);
    r.x[i] = delta * s;
    total += r.w[i];
  }
  for (double& w : r.w) w /= total;
  return r;
}

int xi_panels(double delta, const QuadratureSpec& q) {
  return 1 + int(std::floor(delta / q.xi_panel_doppler));
}

int t_panels(double delta, const QuadratureSpec& q) {
  return q.t_base_panels + int(std::floor(delta / q.xi_panel_doppler));
}

cplx phi1(cplx w) {
  if (std::abs(w) < 1e-3)
    return 1.0 - w / 2.0 + w * w / 6.0 - w * w * w / 24.0 + w * w * w * w / 120.0;
  return (1.0 - std::exp(-w)) / w;
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace beamsr
