#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "beamsr/beamsim.hpp"
#include "beamsr/record_io.hpp"

using namespace beamsr;

namespace {

ModelParams params(std::int64_t n, double G, double d, double g1 = 0, double g2 = 0) {
  ModelParams p;
  p.n_atoms = n;
  p.collective_linewidth = G;
  p.doppler_width = d;
  p.gamma1 = g1;
  p.gamma2 = g2;
  return p;
}

}  // namespace

TEST_CASE("collective_dipole examples") {
  CHECK(collective_dipole({}) == std::pair<double, double>{0.0, 0.0});
  AtomState a{0.5, 0.0, 0.0, Spin{1.0, -1.0, 1.0}};
  CHECK(collective_dipole({a}) == std::pair<double, double>{1.0, -1.0});
  AtomState b = a;
  b.phi = std::numbers::pi;
  const auto [jx, jy] = collective_dipole({a, b});
  CHECK(std::abs(jx) < 1e-15);
  CHECK(std::abs(jy) < 1e-15);

  // uniform phases with a common s_par: jx ~ N <cos phi> s_par, direct sum oracle
  std::vector<AtomState> atoms;
  double ref = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * std::numbers::pi * (i + 0.5) / n;
    atoms.push_back({0.3, phi, 0.0, Spin{0.8, 0.0, 0.6}});
    ref += std::cos(phi) * 0.8;
  }
  atoms.push_back({1.5, 0.0, 0.0, Spin{1.0, 1.0, 1.0}});  // outside the box
  CHECK(collective_dipole(atoms).first == doctest::Approx(ref).epsilon(1e-12));
  CHECK(collective_dipole(atoms).second == 0.0);
}

TEST_CASE("free streaming without coupling: spins fixed, atoms advect and leave") {
  const ModelParams p = params(1, 0.0, 0.0);
  RngStreams rng = RngStreams::for_trajectory(1, 0);
  std::vector<AtomState> atoms{{0.99, 1.0, 2.0, Spin{1.0, -1.0, 1.0}},
                               {0.10, 0.5, -3.0, Spin{-1.0, 1.0, 1.0}}};
  step(atoms, 0.02, rng, p);
  REQUIRE(atoms.size() >= 1);
  CHECK(atoms[0].xi == doctest::Approx(0.12));
  CHECK(atoms[0].phi == doctest::Approx(0.5 - 3.0 * 0.02));
  CHECK(atoms[0].spin == Spin{-1.0, 1.0, 1.0});
  for (std::size_t i = 1; i < atoms.size(); ++i) CHECK(atoms[i].xi == 0.0);  // fresh arrivals
}

TEST_CASE("constant applied field: norm held to 1e-14 over 1e5 rotations") {
  for (double a : {1e-5, 1e-3, 0.05, 0.4}) {
    Spin s{1.0, -1.0, 1.0};
    double worst = 0.0;
    for (int n = 0; n < 100000; ++n) {
      rotate_spin(s, 0.6 * a, -0.8 * a, 3.0);
      worst = std::max(worst, std::abs(s.norm_sq() - 3.0));
    }
    CAPTURE(a);
    CHECK(worst < 1e-14);
  }
  // the rotation itself: quarter turn about y takes z to x
  Spin s{0.0, 0.0, 1.0};
  rotate_spin(s, std::numbers::pi / 2, 0.0, 1.0);
  CHECK(s.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(s.y) < 1e-15);
  CHECK(std::abs(s.z) < 1e-15);
  // small-angle branch agrees with the closed form across the switch
  Spin p{0.3, -0.4, 0.5}, q = p;
  rotate_spin(p, 0.99e-2 * 0.6, 0.99e-2 * 0.8, p.norm_sq());
  const double th = 0.99e-2, nx = -0.8, ny = 0.6;
  const double dot = nx * q.x + ny * q.y;
  const double rx = q.x * std::cos(th) + (ny * q.z) * std::sin(th) + nx * dot * (1 - std::cos(th));
  CHECK(std::abs(p.x - rx) < 1e-15);
  Spin z{};
  rotate_spin(z, 0.1, 0.1, 0.0);
  CHECK(z == Spin{});
}

TEST_CASE("single atom in its own field: exact rotation keeps the norm") {
  // 1e5 steps inside the box with cavity noise on
  const ModelParams p = params(1, 5.0, 0.0);
  Beam beam(p, 1e-5, RngStreams::for_trajectory(3, 0));
  beam.add_atom({0.0, 0.2, 0.0, Spin{1.0, 1.0, 1.0}});
  double worst = 0.0;
  for (int n = 0; n < 99999; ++n) {
    beam.step();
    if (n % 1000 == 999)
      for (const auto& a : beam.atoms()) worst = std::max(worst, std::abs(a.spin.norm_sq() - 3.0));
  }
  for (const auto& a : beam.atoms()) worst = std::max(worst, std::abs(a.spin.norm_sq() - 3.0));
  CHECK(worst < 1e-14);
  MESSAGE("norm drift over 1e5 steps: " << worst);
}

TEST_CASE("spin norm conserved over full transits in the superradiant regime") {
  const ModelParams p = params(400, 20.0, 1.0);
  Beam beam(p, 1e-3, RngStreams::for_trajectory(8, 0));
  beam.warm_start();
  double worst = 0.0;
  for (int n = 0; n < 2500; ++n) {
    beam.step();
    if (n % 50 == 0)
      for (const auto& a : beam.atoms()) worst = std::max(worst, std::abs(a.spin.norm_sq() - 3.0));
  }
  CHECK(worst < 1e-8);
  CHECK(beam.diagnostics().clamped_covariances == 0);
}

TEST_CASE("U(1) equivariance of trajectories") {
  const ModelParams p = params(300, 20.0, 1.0);
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_sim = 5.0;
  cfg.record_stride = 5;
  cfg.seed = 21;
  for (double ang : {0.7, 2.0, -1.3}) {
    const Frame f = Frame::rotation(ang);
    const DipoleRecord a = run_trajectory(p, cfg, 0);
    const DipoleRecord b = run_trajectory(p, cfg, 0, f);
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto [rx, ry] = f.apply(a.jx[i], a.jy[i]);
      worst = std::max({worst, std::abs(rx - b.jx[i]), std::abs(ry - b.jy[i])});
      CHECK(a.n_snapshot[i] == b.n_snapshot[i]);
    }
    CAPTURE(ang);
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("Z2 sign flip is exact") {
  const ModelParams p = params(300, 20.0, 3.0);
  SimConfig cfg;
  cfg.t_sim = 4.0;
  cfg.seed = 4;
  const DipoleRecord a = run_trajectory(p, cfg, 2);
  const DipoleRecord b = run_trajectory(p, cfg, 2, Frame::flip());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(b.jx[i] == -a.jx[i]);
    REQUIRE(b.jy[i] == -a.jy[i]);
  }
}

TEST_CASE("spontaneous emission: <sz>(t) = 2 exp(-g1 t) - 1") {
  const double g1 = 2.0, dt = 1e-3;
  const ModelParams p = params(1, 0.0, 0.0, g1, 0.0);
  Beam beam(p, dt, RngStreams::for_trajectory(17, 0));
  const int n0 = 20000;
  Engine rng = make_stream(99, 0, 0);
  for (int i = 0; i < n0; ++i) {
    AtomState a = sample_arrival(rng, p);
    beam.add_atom(a);
  }
  for (int n = 1; n <= 900; ++n) {
    beam.step();
    if (n % 150 != 0) continue;
    const double t = n * dt;
    double s = 0, ss = 0;
    int cnt = 0;
    for (const auto& a : beam.atoms())
      if (std::abs(a.xi - t) < 0.5 * dt) {
        s += a.spin.z;
        ss += a.spin.z * a.spin.z;
        ++cnt;
      }
    REQUIRE(cnt == n0);
    const double mean = s / cnt;
    const double se = std::sqrt((ss / cnt - mean * mean) / cnt);
    CAPTURE(t);
    CHECK(std::abs(mean - (2.0 * std::exp(-g1 * t) - 1.0)) < 4.0 * se + 2e-3);
  }
}

TEST_CASE("dephasing damps the transverse spin at rate g2 / 2") {
  const double g2 = 3.0, dt = 1e-3;
  const ModelParams p = params(1, 0.0, 0.0, 0.0, g2);
  Beam beam(p, dt, RngStreams::for_trajectory(18, 0));
  for (int i = 0; i < 20000; ++i) beam.add_atom({0.0, 0.0, 0.0, Spin{1.0, -1.0, 1.0}});
  for (int n = 0; n < 600; ++n) beam.step();
  double sx = 0, sz = 0;
  int cnt = 0;
  for (const auto& a : beam.atoms())
    if (std::abs(a.xi - 0.6) < 0.5 * dt) {
      sx += a.spin.x;
      sz += a.spin.z;
      ++cnt;
    }
  // per-atom variance of sx grows as g2 t, so the standard error is ~0.01
  CHECK(std::abs(sx / cnt - std::exp(-0.5 * g2 * 0.6)) < 0.04);
  CHECK(sz / cnt == 1.0);
  CHECK(beam.diagnostics().clamped_covariances == 0);
}

TEST_CASE("determinism and worker independence") {
  const ModelParams p = params(200, 20.0, 1.0, 0.2, 0.1);
  SimConfig cfg;
  cfg.t_sim = 2.0;
  cfg.seed = 77;
  const DipoleRecord a = run_trajectory(p, cfg, 5);
  const DipoleRecord b = run_trajectory(p, cfg, 5);
  CHECK(a.jx == b.jx);
  CHECK(a.jy == b.jy);
  CHECK(a.n_snapshot == b.n_snapshot);

  const EnsembleResult s = run_ensemble(p, cfg, 6, 1);
  const EnsembleResult m = run_ensemble(p, cfg, 6, 4);
  REQUIRE(s.records.size() == 6);
  REQUIRE(m.records.size() == 6);
  CHECK(s.clamped_covariances == m.clamped_covariances);
  for (int k = 0; k < 6; ++k) {
    CHECK(s.records[k].trajectory == std::uint64_t(k));
    CHECK(s.records[k].jx == m.records[k].jx);
    CHECK(s.records[k].jy == m.records[k].jy);
    CHECK(s.records[k].times == s.records[0].times);
  }
  CHECK(s.records[5].jx == a.jx);

  SimConfig other = cfg;
  other.seed = 78;
  CHECK(run_trajectory(p, other, 5).jx != a.jx);
}

TEST_CASE("record grid") {
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.t_sim = 1.0;
  cfg.record_stride = 7;
  const DipoleRecord r = run_trajectory(params(50, 4.0, 0.1), cfg);
  CHECK_NOTHROW(r.validate());
  CHECK(r.size() == 100 / 7 + 1);
  CHECK(r.times[0] == 0.0);
  CHECK(r.times[1] == doctest::Approx(0.07));
}

TEST_CASE("intracavity atom count is N within 3 sqrt(N)") {
  const std::int64_t n = 1000;
  SimConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_sim = 20.0;
  cfg.record_stride = 50;
  const DipoleRecord r = run_trajectory(params(n, 0.0, 0.0), cfg);
  double mean = 0.0;
  for (auto c : r.n_snapshot) mean += double(c);
  mean /= double(r.size());
  CHECK(std::abs(mean - double(n)) < 3.0 * std::sqrt(double(n)));
}

TEST_CASE("NSR ensemble mean dipole vanishes") {
  SimConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_sim = 3.0;
  cfg.record_stride = 500;
  const EnsembleResult e = run_ensemble(params(300, 4.0, 0.1), cfg, 40);
  const std::size_t i = e.records[0].size() - 1;
  double s = 0, ss = 0;
  for (const auto& r : e.records) {
    s += r.jx[i];
    ss += r.jx[i] * r.jx[i];
  }
  const double n = double(e.records.size());
  const double mean = s / n, se = std::sqrt((ss / n - mean * mean) / n);
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("ensemble aggregates trajectory failures") {
  const ModelParams p = params(20, 0.0, 0.0, 1e6, 0.0);  // Euler factor 1 - 1e4 per step
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.t_sim = 10.0;
  const EnsembleResult e = run_ensemble(p, cfg, 3, 2);
  CHECK(e.records.empty());
  REQUIRE(e.failures.size() == 3);
  CHECK(e.failures[1].trajectory == 1);
  CHECK(e.failures[0].message.find("non-finite") != std::string::npos);
  CHECK_THROWS_AS(run_trajectory(p, cfg), NonFiniteSpin);
}

TEST_CASE("config and record validation") {
  SimConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("dt"), std::invalid_argument);
  cfg = SimConfig{};
  cfg.record_stride = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("record_stride"), std::invalid_argument);
  cfg = SimConfig{};
  cfg.t_sim = 1e-4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  DipoleRecord r;
  r.times = {0.0, 0.0};
  r.jx = r.jy = {1.0, 2.0};
  r.n_snapshot = {1, 1};
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  CHECK_THROWS_AS(run_ensemble(params(10, 1, 0), SimConfig{}, 0), std::invalid_argument);
}

TEST_CASE("record serialization round trips") {
  SimConfig cfg;
  cfg.t_sim = 1.0;
  const DipoleRecord r = run_trajectory(params(100, 20.0, 1.0), cfg, 12);
  FileHeader h;
  h.config_hash = "00ff00ff00ff00ff";
  h.extra = {{"note", "round trip"}};

  std::stringstream csv;
  write_record_csv(csv, r, h);
  CHECK(csv.str().find("# config_hash: 00ff00ff00ff00ff") != std::string::npos);
  CHECK(csv.str().find("# beamsr_version: ") == 0);
  CHECK(csv.str().find("t,jx,jy,n_atoms") != std::string::npos);
  const DipoleRecord c = read_record_csv(csv);
  CHECK(c.times == r.times);
  CHECK(c.jx == r.jx);
  CHECK(c.jy == r.jy);
  CHECK(c.n_snapshot == r.n_snapshot);
  CHECK(c.trajectory == 12);

  std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
  write_record_binary(bin, r, h);
  FileHeader back;
  const DipoleRecord b = read_record_binary(bin, &back);
  CHECK(back.config_hash == h.config_hash);
  CHECK(back.version == h.version);
  CHECK(b.jx == r.jx);
  CHECK(b.jy == r.jy);
  CHECK(b.times == r.times);
  CHECK(b.n_snapshot == r.n_snapshot);
  CHECK(b.trajectory == 12);

  std::stringstream junk("not a record");
  CHECK_THROWS(read_record_binary(junk));
}

TEST_CASE("format_double round trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 123456789.123456789}) {
    const std::string s = format_double(x);
    CHECK(std::stod(s) == x);
  }
}
