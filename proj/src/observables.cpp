#include "beamsr/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace beamsr {

namespace {

struct Layout {
  std::size_t i0;       // index of first origin
  std::size_t stride;   // comb spacing in samples
  std::size_t origins;  // comb size
  std::size_t n_lag;    // number of lags including 0
  double dt;
};

Layout layout(const std::vector<DipoleRecord>& records, double t0, double max_lag,
              const OriginComb& comb) {
  if (records.empty()) throw ObservableError("correlation: no records");
  const DipoleRecord& r0 = records.front();
  if (r0.size() < 2) throw ObservableError("correlation: record too short");
  for (const auto& r : records)
    if (r.size() != r0.size() || r.times.front() != r0.times.front() ||
        r.times.back() != r0.times.back())
      throw ObservableError("correlation: records have different time grids");
  if (comb.count < 1) throw ObservableError("correlation: comb count must be >= 1");
  Layout L;
  L.dt = (r0.times.back() - r0.times.front()) / double(r0.size() - 1);
  const double f0 = (t0 - r0.times.front()) / L.dt;
  if (f0 < -1e-9) throw ObservableError("correlation: t0 precedes the record");
  L.i0 = std::size_t(std::llround(std::max(0.0, f0)));
  L.n_lag = std::size_t(std::floor(max_lag / L.dt + 1e-9)) + 1;
  L.stride = comb.count > 1 ? std::max<std::size_t>(1, std::llround(comb.spacing / L.dt)) : 0;
  L.origins = std::size_t(comb.count);
  const std::size_t last = L.i0 + (L.origins - 1) * L.stride + (L.n_lag - 1);
  if (last >= r0.size()) {
    std::ostringstream msg;
    msg << "correlation: insufficient record length (need t up to "
        << r0.times.front() + double(last) * L.dt << ", have " << r0.times.back()
        << ")";
    throw ObservableError(msg.str());
  }
  return L;
}

inline cplx dipole_j(const DipoleRecord& r, std::size_t i) {
  return cplx(0.5 * r.jx[i], -0.5 * r.jy[i]);
}

}  // namespace

double SpectrumResult::resolution() const {
  return 2.0 * std::numbers::pi / tf;
}

CorrelationSeries g1(const std::vector<DipoleRecord>& records, double t0,
                     double max_lag, const OriginComb& comb) {
  const Layout L = layout(records, t0, max_lag, comb);
  CorrelationSeries s;
  s.t0 = records.front().times[L.i0];
  s.n_traj = int(records.size());
  s.n_origins = int(L.origins);
  s.lags.resize(L.n_lag);
  s.values.assign(L.n_lag, 0.0);
  for (std::size_t k = 0; k < L.n_lag; ++k) s.lags[k] = double(k) * L.dt;
  for (const auto& r : records)
    for (std::size_t m = 0; m < L.origins; ++m) {
      const std::size_t o = L.i0 + m * L.stride;
      const cplx j0 = dipole_j(r, o);
      for (std::size_t k = 0; k < L.n_lag; ++k)
        s.values[k] += std::conj(dipole_j(r, o + k)) * j0;
    }
  const double norm = 1.0 / double(records.size() * L.origins);
  for (auto& v : s.values) v *= norm;
  s.values[0] = cplx(s.values[0].real(), 0.0);
  return s;
}

CorrelationSeries g2(const std::vector<DipoleRecord>& records, double t0,
                     double max_lag, const OriginComb& comb) {
  const Layout L = layout(records, t0, max_lag, comb);
  CorrelationSeries s;
  s.t0 = records.front().times[L.i0];
  s.n_traj = int(records.size());
  s.n_origins = int(L.origins);
  s.lags.resize(L.n_lag);
  s.values.assign(L.n_lag, 0.0);
  for (std::size_t k = 0; k < L.n_lag; ++k) s.lags[k] = double(k) * L.dt;
  double denom = 0.0;
  for (const auto& r : records)
    for (std::size_t m = 0; m < L.origins; ++m) {
      const std::size_t o = L.i0 + m * L.stride;
      const double i0 = std::norm(dipole_j(r, o));
      denom += i0;
      for (std::size_t k = 0; k < L.n_lag; ++k)
        s.values[k] += std::norm(dipole_j(r, o + k)) * i0;
    }
  const double n = double(records.size() * L.origins);
  denom /= n;
  if (!(denom > 0.0)) throw ObservableError("g2: degenerate denominator <J*J> = 0");
  for (auto& v : s.values) v /= n * denom * denom;
  return s;
}

SpectrumResult spectrum(const CorrelationSeries& series, double tf,
                        SpectrumKind which, const SpectrumGrid& grid) {
  if (series.size() < 2) throw ObservableError("spectrum: series too short");
  if (!(tf > 0.0)) throw ObservableError("spectrum: tf must be positive");
  const double dt = series.lags[1] - series.lags[0];
  const std::size_t n = std::size_t(std::floor(tf / dt + 1e-9));
  if (n >= series.size())
    throw ObservableError("spectrum: insufficient lag coverage for tf");
  const double tf_used = double(n) * dt;
  const double dw = 2.0 * std::numbers::pi / (tf_used * std::max(1, grid.oversample));
  const int K = int(std::floor(grid.omega_max / dw));
  SpectrumResult out;
  out.tf = tf_used;
  out.omega.resize(2 * K + 1);
  out.values.resize(2 * K + 1);
  std::vector<cplx> f(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    f[k] = which == SpectrumKind::S1 ? series.values[k] : series.values[k] - 1.0;
  for (int m = -K; m <= K; ++m) {
    const double w = m * dw;
    cplx sum = 0.5 * (f[0] + f[n] * std::exp(cplx(0.0, w * series.lags[n])));
    for (std::size_t k = 1; k < n; ++k)
      sum += f[k] * std::exp(cplx(0.0, w * series.lags[k]));
    out.omega[m + K] = w;
    out.values[m + K] = sum * dt;
  }
  return out;
}

FitResult fit_exponent(const CorrelationSeries& series, double t_a, double t_b,
                       FitModel model) {
  if (!(t_b > t_a)) throw ObservableError("fit_exponent: empty window");
  if (series.size() == 0 || t_a < series.lags.front() - 1e-12 ||
      t_b > series.lags.back() + 1e-9)
    throw ObservableError("fit_exponent: window outside lag range");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double t = series.lags[k];
    if (t < t_a - 1e-12 || t > t_b + 1e-12) continue;
    const double m = std::abs(series.values[k]);
    if (!(m > 0.0)) throw ObservableError("fit_exponent: non-positive magnitude in window");
    x.push_back(t);
    y.push_back(std::log(m));
  }
  const std::size_t n = x.size();
  if (n < 3) throw ObservableError("fit_exponent: underdetermined fit (fewer than 3 points)");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double c = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (my + c * (x[i] - mx));
    rss += e * e;
  }
  const double se = std::sqrt(rss / double(n - 2) / sxx);
  FitResult r;
  r.n_points = int(n);
  if (model == FitModel::ExpTail) {
    r.rate = c;
    r.std_error = se;
  } else {
    r.rate = -2.0 * c;
    r.std_error = 2.0 * se;
  }
  return r;
}

DipoleStats dipole_correlation(const std::vector<DipoleRecord>& records,
                               double t0, double n_atoms) {
  DipoleStats st;
  if (records.empty()) return st;
  std::vector<double> per;
  for (const auto& r : records) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r.times[i] >= t0 - 1e-12) {
        sum += 0.25 * (r.jx[i] * r.jx[i] + r.jy[i] * r.jy[i]);
        ++cnt;
      }
    if (cnt == 0) throw ObservableError("dipole_correlation: no samples after t0");
    per.push_back(sum / double(cnt));
  }
  const double scale = n_atoms > 0.0 ? 1.0 / (n_atoms * n_atoms) : 1.0;
  double mean = 0.0;
  for (double v : per) mean += v;
  mean /= double(per.size());
  double var = 0.0;
  for (double v : per) var += (v - mean) * (v - mean);
  st.n_traj = int(per.size());
  st.mean = mean * scale;
  st.std_error = per.size() > 1
                  ? std::sqrt(var / double(per.size() - 1) / double(per.size())) * scale
                  : 0.0;
  return st;
}

double effective_rabi_sq(const std::vector<DipoleRecord>& records,
                         const ModelParams& params, double t0) {
  const double gc = params.gamma_c();
  return gc * gc * dipole_correlation(records, t0).mean;
}

std::vector<double> spectral_peaks(const SpectrumResult& s, double lo, double hi) {
  std::vector<std::pair<double, double>> peaks;
  for (std::size_t i = 1; i + 1 < s.omega.size(); ++i) {
    const double w = s.omega[i];
    if (w < lo || w > hi) continue;
    const double m = std::abs(s.values[i]);
    if (m >= std::abs(s.values[i - 1]) && m > std::abs(s.values[i + 1]))
      peaks.emplace_back(m, w);
  }
  std::sort(peaks.begin(), peaks.end(), std::greater<>());
  std::vector<double> out;
  for (const auto& p : peaks) out.push_back(p.second);
  return out;
}

}  // namespace beamsr
