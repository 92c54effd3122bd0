#include "beamsr/beamsim.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace beamsr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phi) {
  if (phi < 0.0 || phi >= kTwoPi) phi -= kTwoPi * std::floor(phi / kTwoPi);
  return phi;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("invalid SimConfig field: dt");
  if (!(t_sim >= dt) || !std::isfinite(t_sim))
    throw std::invalid_argument("invalid SimConfig field: t_sim");
  if (record_stride < 1)
    throw std::invalid_argument("invalid SimConfig field: record_stride");
}

std::int64_t SimConfig::n_steps() const { return std::llround(t_sim / dt); }

void DipoleRecord::validate() const {
  const std::size_t n = times.size();
  if (jx.size() != n || jy.size() != n || n_snapshot.size() != n)
    throw std::invalid_argument("DipoleRecord: column lengths differ");
  for (std::size_t i = 1; i < n; ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("DipoleRecord: times not strictly increasing");
}

Frame Frame::rotation(double angle) {
  return Frame{std::cos(angle), std::sin(angle)};
}

namespace {

// Rotation with the round-off pull back written as 1 + (n - |s'|^2) inv_n / 2;
// |s'|^2 = n up to round-off, so 1/n stands in for 1/|s'|^2.
inline void rotate_projected(double ax, double ay, double norm_sq, double inv_norm_sq,
                             double& sx, double& sy, double& sz) {
  const double th2 = ax * ax + ay * ay;
  double C, S, V;
  if (th2 < 1e-4) {
    C = 1.0 - th2 / 2.0 + th2 * th2 / 24.0 - th2 * th2 * th2 / 720.0;
    S = 1.0 - th2 / 6.0 + th2 * th2 / 120.0 - th2 * th2 * th2 / 5040.0;
    V = 0.5 - th2 / 24.0 + th2 * th2 / 720.0 - th2 * th2 * th2 / 40320.0;
  } else {
    const double th = std::sqrt(th2);
    C = std::cos(th);
    S = std::sin(th) / th;
    V = (1.0 - C) / th2;
  }
  const double dot = -ay * sx + ax * sy;
  const double cx = ax * sz, cy = ay * sz, cz = -ax * sx - ay * sy;
  const double nx = sx * C + cx * S - ay * dot * V;
  const double ny = sy * C + cy * S + ax * dot * V;
  const double nz = sz * C + cz * S;
  const double n1 = nx * nx + ny * ny + nz * nz;
  const double f = 1.0 + 0.5 * (norm_sq - n1) * inv_norm_sq;
  sx = nx * f;
  sy = ny * f;
  sz = nz * f;
}

inline double safe_inverse(double n) { return n > 0.0 ? 1.0 / n : 0.0; }

}  // namespace

void rotate_spin(double ax, double ay, double norm_sq, double& sx, double& sy,
                 double& sz) {
  rotate_projected(ax, ay, norm_sq, safe_inverse(norm_sq), sx, sy, sz);
}

void rotate_spin(Spin& s, double ax, double ay, double norm_sq) {
  rotate_spin(ax, ay, norm_sq, s.x, s.y, s.z);
}

std::pair<double, double> collective_dipole(const std::vector<AtomState>& atoms) {
  double jx = 0.0, jy = 0.0;
  for (const auto& a : atoms) {
    const double eta = mode_eta(a.xi, a.phi);
    jx += eta * a.spin.x;
    jy += eta * a.spin.y;
  }
  return {jx, jy};
}

Beam::Beam(const ModelParams& params, double dt, RngStreams streams, Frame frame)
    : params_(params),
      dt_(dt),
      gc_(params.gamma_c()),
      sigma_w_(std::sqrt(params.gamma_c() * dt)),
      rng_(std::move(streams)),
      frame_(frame),
      arrivals_(double(params.n_atoms) * dt / ModelParams::transit_time) {
  params_.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("Beam: dt must be positive");
}

Beam::Slot Beam::make_slot(const AtomState& a) const {
  Slot s;
  s.xi = a.xi;
  s.phi = a.phi;
  s.u = a.u;
  s.c = std::cos(a.phi);
  s.s = std::sin(a.phi);
  s.cu = std::cos(a.u * dt_);
  s.su = std::sin(a.u * dt_);
  s.sx = a.spin.x;
  s.sy = a.spin.y;
  s.sz = a.spin.z;
  s.n2 = a.spin.norm_sq();
  s.inv_n2 = safe_inverse(s.n2);
  return s;
}

void Beam::add_atom(const AtomState& atom) {
  const Slot s = make_slot(atom);
  const double eta = mode_eta(s.xi, s.phi);
  jx_ += eta * s.sx;
  jy_ += eta * s.sy;
  slots_.push_back(s);
}

void Beam::warm_start() {
  const auto count = std::poisson_distribution<std::int64_t>(
      double(params_.n_atoms))(rng_.beam);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::int64_t i = 0; i < count; ++i) {
    AtomState a = sample_arrival(rng_.beam, params_);
    a.xi = unit(rng_.beam);
    std::tie(a.spin.x, a.spin.y) = frame_.apply(a.spin.x, a.spin.y);
    add_atom(a);
  }
}

void Beam::inject(std::uint64_t count) {
  for (std::uint64_t i = 0; i < count; ++i) {
    AtomState a = sample_arrival(rng_.beam, params_);
    std::tie(a.spin.x, a.spin.y) = frame_.apply(a.spin.x, a.spin.y);
    add_atom(a);
  }
  diag_.injected += count;
}

void Beam::local_noise(Slot& a, double sx0, double sy0, double sz0) {
  const double g1 = params_.gamma1, g2 = params_.gamma2;
  const double n1 = local_normal_(rng_.local);
  const double n2 = local_normal_(rng_.local);
  const double n3 = local_normal_(rng_.local);
  // covariance dt * [[g1+g2, 0, g1 sx], [0, g1+g2, g1 sy], [g1 sx, g1 sy, 2 g1 (1+sz)]]
  const double d = (g1 + g2) * dt_;
  const double cxz = g1 * sx0 * dt_, cyz = g1 * sy0 * dt_;
  const double czz = 2.0 * g1 * (1.0 + sz0) * dt_;
  const double la = std::sqrt(d);
  const double l31 = cxz / la, l32 = cyz / la;
  const double r = czz - l31 * l31 - l32 * l32;
  if (r >= 0.0) {
    a.sx += la * n1;
    a.sy += la * n2;
    a.sz += l31 * n1 + l32 * n2 + std::sqrt(r) * n3;
    return;
  }
  ++diag_.clamped_covariances;
  Eigen::Matrix3d m;
  m << d, 0.0, cxz, 0.0, d, cyz, cxz, cyz, czz;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
  es.computeDirect(m);
  const Eigen::Vector3d lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Vector3d noise =
      es.eigenvectors() * lam.cwiseProduct(Eigen::Vector3d(n1, n2, n3));
  a.sx += noise(0);
  a.sy += noise(1);
  a.sz += noise(2);
}

void Beam::step() {
  const auto [dwx, dwy] = frame_.apply(sigma_w_ * normal_(rng_.beam),
                                       sigma_w_ * normal_(rng_.beam));
  const double h = 0.5 * gc_ * dt_;
  const double fx = h * jx_ + dwx, fy = h * jy_ + dwy;
  const bool local = params_.gamma1 > 0.0 || params_.gamma2 > 0.0;
  const double damp_t = 0.5 * (params_.gamma1 + params_.gamma2) * dt_;
  const double damp_z = params_.gamma1 * dt_;

  double jx = 0.0, jy = 0.0;
  std::size_t out = 0;
  const std::size_t n = slots_.size();
  for (std::size_t i = 0; i < n; ++i) {
    Slot a = slots_[i];
    const double eta = (a.xi >= 0.0 && a.xi <= 1.0) ? a.c : 0.0;
    rotate_projected(eta * fx, eta * fy, a.n2, a.inv_n2, a.sx, a.sy, a.sz);
    if (local) {
      const double sx0 = a.sx, sy0 = a.sy, sz0 = a.sz;
      a.sx -= damp_t * sx0;
      a.sy -= damp_t * sy0;
      a.sz -= damp_z * (sz0 + 1.0);
      local_noise(a, sx0, sy0, sz0);
      a.n2 = a.sx * a.sx + a.sy * a.sy + a.sz * a.sz;
      a.inv_n2 = safe_inverse(a.n2);
    }
    if (!std::isfinite(a.sx) || !std::isfinite(a.sy) || !std::isfinite(a.sz)) {
      std::ostringstream msg;
      msg << "non-finite spin at t=" << time() << " (atom xi=" << a.xi
          << ", u=" << a.u << ")";
      throw NonFiniteSpin(msg.str());
    }
    a.xi += dt_ / ModelParams::transit_time;
    if (a.xi > 1.0) {
      ++diag_.removed;
      continue;
    }
    a.phi = wrap_phase(a.phi + a.u * dt_);
    const double c = a.c * a.cu - a.s * a.su;
    a.s = a.s * a.cu + a.c * a.su;
    a.c = c;
    if (a.xi >= 0.0) {
      jx += a.c * a.sx;
      jy += a.c * a.sy;
    }
    slots_[out++] = a;
  }
  slots_.resize(out);
  jx_ = jx;
  jy_ = jy;
  ++diag_.steps;
  inject(std::uint64_t(arrivals_(rng_.beam)));
}

std::vector<AtomState> Beam::atoms() const {
  std::vector<AtomState> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_)
    out.push_back(AtomState{s.xi, s.phi, s.u, Spin{s.sx, s.sy, s.sz}});
  return out;
}

void step(std::vector<AtomState>& atoms, double dt, RngStreams& rng,
          const ModelParams& params, Frame frame) {
  Beam beam(params, dt, std::move(rng), frame);
  for (const auto& a : atoms) beam.add_atom(a);
  beam.step();
  atoms = beam.atoms();
  rng = std::move(beam.streams());
}

DipoleRecord run_trajectory(const ModelParams& params, const SimConfig& config,
                            std::uint64_t trajectory, Frame frame,
                            StepDiagnostics* diagnostics) {
  params.validate();
  config.validate();
  Beam beam(params, config.dt, RngStreams::for_trajectory(config.seed, trajectory),
            frame);
  if (config.warm_start) beam.warm_start();
  const std::int64_t n_steps = config.n_steps();
  DipoleRecord rec;
  rec.trajectory = trajectory;
  const std::size_t n_rec = std::size_t(n_steps / config.record_stride) + 1;
  rec.times.reserve(n_rec);
  rec.jx.reserve(n_rec);
  rec.jy.reserve(n_rec);
  rec.n_snapshot.reserve(n_rec);
  for (std::int64_t n = 0;; ++n) {
    if (n % config.record_stride == 0) {
      const auto [jx, jy] = beam.dipole();
      rec.times.push_back(double(n) * config.dt);
      rec.jx.push_back(jx);
      rec.jy.push_back(jy);
      rec.n_snapshot.push_back(std::int64_t(beam.size()));
    }
    if (n == n_steps) break;
    beam.step();
  }
  if (diagnostics) *diagnostics = beam.diagnostics();
  return rec;
}

EnsembleResult run_ensemble(const ModelParams& params, const SimConfig& config,
                            int n_traj, int workers) {
  if (n_traj < 1) throw std::invalid_argument("run_ensemble: n_traj must be >= 1");
  params.validate();
  config.validate();
  workers = std::max(1, std::min(workers, n_traj));

  std::vector<DipoleRecord> slots(n_traj);
  std::vector<std::string> errors(n_traj);
  std::vector<char> ok(n_traj, 0);
  std::vector<std::uint64_t> clamps(n_traj, 0);
  std::atomic<int> next{0};

  auto worker = [&]() {
    for (int k = next++; k < n_traj; k = next++) {
      try {
        StepDiagnostics diag;
        slots[k] = run_trajectory(params, config, std::uint64_t(k), Frame{}, &diag);
        clamps[k] = diag.clamped_covariances;
        ok[k] = 1;
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EnsembleResult res;
  for (int k = 0; k < n_traj; ++k) {
    if (ok[k]) {
      res.records.push_back(std::move(slots[k]));
      res.clamped_covariances += clamps[k];
    } else {
      res.failures.push_back({std::uint64_t(k), errors[k]});
    }
  }
  return res;
}

}  // namespace beamsr
