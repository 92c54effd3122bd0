#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "beamsr/model.hpp"
#include "beamsr/random.hpp"

namespace beamsr {

struct SimConfig {
  double dt = 1e-3;
  double t_sim = 10.0;
  int record_stride = 10;
  std::uint64_t seed = 1;
  bool warm_start = true;

  void validate() const;
  std::int64_t n_steps() const;
  bool operator==(const SimConfig&) const = default;
};

/// Sampled collective dipole of one trajectory.
struct DipoleRecord {
  std::vector<double> times;
  std::vector<double> jx;
  std::vector<double> jy;
  std::vector<std::int64_t> n_snapshot;
  std::uint64_t trajectory = 0;

  std::size_t size() const { return times.size(); }
  /// Throws std::invalid_argument if lengths differ or times are not
  /// strictly increasing.
  void validate() const;
};

/// Fixed rotation (c, s) of the transverse plane applied to every injected
/// spin and to the shared cavity noise. c = -1, s = 0 is the exact sign flip.
struct Frame {
  double c = 1.0;
  double s = 0.0;

  static Frame rotation(double angle);
  static Frame flip() { return Frame{-1.0, 0.0}; }
  std::pair<double, double> apply(double x, double y) const {
    return {c * x - s * y, s * x + c * y};
  }
};

struct StepDiagnostics {
  std::uint64_t steps = 0;
  std::uint64_t clamped_covariances = 0;  // eigenvalue clamps of the local noise
  std::uint64_t injected = 0;
  std::uint64_t removed = 0;
};

class NonFiniteSpin : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rotates s about (-ay, ax, 0) by the angle |(ax, ay)|, then removes
/// round-off by rescaling onto |s|^2 = norm_sq (pass the pre-rotation norm).
void rotate_spin(Spin& s, double ax, double ay, double norm_sq);
void rotate_spin(double ax, double ay, double norm_sq, double& sx, double& sy,
                 double& sz);

/// (J^x, J^y) = sum_j eta(xi_j, phi_j) (s_j^x, s_j^y).
std::pair<double, double> collective_dipole(const std::vector<AtomState>& atoms);

/// Intracavity ensemble advanced by a fixed step. Atoms keep their insertion
/// order; those leaving the box are dropped in place.
class Beam {
 public:
  Beam(const ModelParams& params, double dt, RngStreams streams,
       Frame frame = {});

  /// Pre-populates Poisson(N) atoms with uniform xi and fresh spins.
  void warm_start();
  void add_atom(const AtomState& atom);

  /// Advances by dt: shared-noise rotation, local damping and noise,
  /// advection, removal, injection.
  void step();

  std::pair<double, double> dipole() const { return {jx_, jy_}; }
  std::size_t size() const { return slots_.size(); }
  std::vector<AtomState> atoms() const;
  const StepDiagnostics& diagnostics() const { return diag_; }
  double time() const { return double(diag_.steps) * dt_; }
  RngStreams& streams() { return rng_; }

 private:
  struct Slot {
    double xi, phi, u;
    double c, s;    // cos, sin of phi
    double cu, su;  // cos, sin of u dt
    double sx, sy, sz;
    double n2, inv_n2;  // |s|^2 held by the rotation, and its inverse
  };

  Slot make_slot(const AtomState& a) const;
  void inject(std::uint64_t count);
  void local_noise(Slot& a, double sx0, double sy0, double sz0);

  ModelParams params_;
  double dt_;
  double gc_;
  double sigma_w_;
  RngStreams rng_;
  Frame frame_;
  std::vector<Slot> slots_;
  double jx_ = 0.0, jy_ = 0.0;
  std::normal_distribution<double> normal_{0.0, 1.0};
  boost::random::normal_distribution<double> local_normal_{0.0, 1.0};
  std::poisson_distribution<std::int64_t> arrivals_;
  StepDiagnostics diag_;
};

/// One step on an explicit atom list (convenience form of Beam::step).
void step(std::vector<AtomState>& atoms, double dt, RngStreams& rng,
          const ModelParams& params, Frame frame = {});

DipoleRecord run_trajectory(const ModelParams& params, const SimConfig& config,
                            std::uint64_t trajectory = 0, Frame frame = {},
                            StepDiagnostics* diagnostics = nullptr);

struct TrajectoryFailure {
  std::uint64_t trajectory;
  std::string message;
};

struct EnsembleResult {
  std::vector<DipoleRecord> records;  // successful trajectories, by index
  std::vector<TrajectoryFailure> failures;
  std::uint64_t clamped_covariances = 0;
};

/// Trajectory k uses RngStreams::for_trajectory(config.seed, k). Output does
/// not depend on `workers`.
EnsembleResult run_ensemble(const ModelParams& params, const SimConfig& config,
                            int n_traj, int workers = 1);

}  // namespace beamsr
