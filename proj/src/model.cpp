#include "beamsr/model.hpp"

#include <numbers>
#include <stdexcept>

namespace beamsr {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Engine make_stream(std::uint64_t master_seed, std::uint64_t trajectory,
                   int stream) {
  const std::uint64_t key = splitmix64_mix(
      master_seed + (2 * trajectory + std::uint64_t(stream) + 1) * kGolden);
  std::uint32_t words[8];
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t v = splitmix64_mix(key + std::uint64_t(i + 1) * kGolden);
    words[2 * i] = std::uint32_t(v);
    words[2 * i + 1] = std::uint32_t(v >> 32);
  }
  std::seed_seq seq(std::begin(words), std::end(words));
  return Engine(seq);
}

RngStreams RngStreams::for_trajectory(std::uint64_t master_seed,
                                      std::uint64_t trajectory) {
  return RngStreams{make_stream(master_seed, trajectory, 0),
                    make_stream(master_seed, trajectory, 1)};
}

ModelParams ModelParams::from_single_atom(std::int64_t n, double gamma_c,
                                          double doppler, double g1,
                                          double g2) {
  ModelParams p;
  p.n_atoms = n;
  p.collective_linewidth = gamma_c * double(n);
  p.doppler_width = doppler;
  p.gamma1 = g1;
  p.gamma2 = g2;
  return p;
}

void ModelParams::validate() const {
  auto check = [](bool ok, const char* field) {
    if (!ok)
      throw std::invalid_argument(std::string("invalid ModelParams field: ") +
                                  field);
  };
  check(n_atoms >= 1, "n_atoms");
  check(std::isfinite(collective_linewidth) && collective_linewidth >= 0.0,
        "collective_linewidth");
  check(std::isfinite(doppler_width) && doppler_width >= 0.0, "doppler_width");
  check(std::isfinite(gamma1) && gamma1 >= 0.0, "gamma1");
  check(std::isfinite(gamma2) && gamma2 >= 0.0, "gamma2");
}

Spin sample_initial_spin(Engine& rng) {
  const std::uint64_t bits = rng();
  return Spin{(bits & 1) ? 1.0 : -1.0, (bits & 2) ? 1.0 : -1.0, 1.0};
}

AtomState sample_arrival(Engine& rng, const ModelParams& params) {
  AtomState a;
  a.xi = 0.0;
  a.phi = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  a.u = params.doppler_width > 0.0
            ? std::normal_distribution<double>(0.0, params.doppler_width)(rng)
            : 0.0;
  a.spin = sample_initial_spin(rng);
  return a;
}

BallisticityReport check_ballistic_validity(double ratio_axial,
                                            double ratio_transverse_y,
                                            double ratio_longitudinal_x,
                                            double threshold) {
  if (ratio_axial < 0.0 || ratio_transverse_y < 0.0 || ratio_longitudinal_x < 0.0)
    throw std::invalid_argument("ballisticity ratios must be non-negative");
  BallisticityReport r;
  r.ratio_axial = ratio_axial;
  r.ratio_transverse_y = ratio_transverse_y;
  r.ratio_longitudinal_x = ratio_longitudinal_x;
  r.threshold = threshold;
  r.axial_ok = ratio_axial < threshold;
  r.transverse_y_ok = ratio_transverse_y < threshold;
  r.longitudinal_x_ok = ratio_longitudinal_x < threshold;
  r.ok = r.axial_ok && r.transverse_y_ok && r.longitudinal_x_ok;
  return r;
}

}  // namespace beamsr
