#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <unistd.h>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "beamsr/config.hpp"
#include "beamsr/dispersion.hpp"
#include "beamsr/record_io.hpp"

using namespace beamsr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("beamsr_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args, const fs::path& dir) {
  const char* exe = std::getenv("BEAMSR_CLI");
  REQUIRE_MESSAGE(exe, "BEAMSR_CLI must point at the command-line binary");
  const fs::path log = dir / "stderr.txt";
  const std::string cmd = std::string(exe) + " " + args + " 2> " + log.string() + " > /dev/null";
  const int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(log)};
}

json small_sim(const fs::path& out) {
  return json{{"params", {{"n_atoms", 60}, {"collective_linewidth", 20.0}, {"doppler_width", 1.0}}},
              {"sim", {{"dt", 0.01}, {"t_sim", 6.0}, {"record_stride", 5}, {"seed", 77}}},
              {"n_traj", 6},
              {"analysis", {{"t0", 1.0}, {"max_lag", 4.0}, {"tf", 4.0}, {"fit_window", {0.5, 3.0}}}},
              {"output_dir", out.string()}};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) m[fs::relative(e.path(), root).string()] = slurp(e.path());
  return m;
}

}  // namespace

TEST_CASE("missing and unknown fields are config errors naming the field") {
  const fs::path d = scratch("missing");
  json j = small_sim(d / "out");
  j["params"].erase("doppler_width");
  write(d / "c.json", j.dump());
  Run r = cli("simulate --config " + (d / "c.json").string(), d);
  CHECK(r.code == 2);
  CHECK(r.err.find("params.doppler_width") != std::string::npos);

  j = small_sim(d / "out");
  j["sim"]["d_t"] = 0.1;
  write(d / "c.json", j.dump());
  r = cli("simulate --config " + (d / "c.json").string(), d);
  CHECK(r.code == 2);
  CHECK(r.err.find("sim.d_t") != std::string::npos);

  write(d / "bad.json", "{\n  \"params\": {\n    \"n_atoms\": 10,,\n  }\n}\n");
  r = cli("theory --config " + (d / "bad.json").string(), d);
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);

  CHECK(cli("simulate", d).code == 2);
  CHECK(cli("simulate --config " + (d / "c.json").string() + " --workers 0", d).code == 2);
  CHECK(cli("frobnicate", d).code == 2);
  CHECK(cli("theory --config " + (d / "nope.json").string(), d).code == 2);
}

TEST_CASE("simulate output is independent of the worker count") {
  const fs::path d = scratch("workers");
  write(d / "c.json", small_sim(d / "out").dump());
  REQUIRE(cli("simulate --config " + (d / "c.json").string() + " --workers 1 --out " + (d / "w1").string(), d).code == 0);
  REQUIRE(cli("simulate --config " + (d / "c.json").string() + " --workers 8 --out " + (d / "w8").string(), d).code == 0);
  const auto a = tree(d / "w1"), b = tree(d / "w8");
  REQUIRE(a.size() == b.size());
  CHECK(a.count("summary.json") == 1);
  CHECK(a.count("g1.csv") == 1);
  CHECK(a.count("s2.csv") == 1);
  CHECK(a.count("records/traj_00005.csv") == 1);
  CHECK(a.count("records/traj_00005.bin") == 1);
  for (const auto& [name, content] : a) {
    CAPTURE(name);
    REQUIRE(b.count(name) == 1);
    CHECK(content == b.at(name));
  }

  // a different seed changes the trajectories
  REQUIRE(cli("simulate --config " + (d / "c.json").string() + " --seed 78 --out " + (d / "s78").string(), d).code == 0);
  CHECK(slurp(d / "s78/records/traj_00000.csv") != a.at("records/traj_00000.csv"));

  const json s = json::parse(a.at("summary.json"));
  CHECK(s["n_traj_completed"] == 6);
  CHECK(s["failures"].empty());
  CHECK(s.contains("dipole_correlation_over_n2"));
  CHECK(s["fit"].contains("rate"));

  // post-processing the stored records reproduces the analysis
  REQUIRE(cli("spectra --config " + (d / "c.json").string() + " --out " + (d / "w1").string(), d).code == 0);
  CHECK(slurp(d / "w1/g1.csv") == a.at("g1.csv"));
  CHECK(slurp(d / "w1/s1.csv") == a.at("s1.csv"));
}

TEST_CASE("every output file carries the header block") {
  const fs::path d = scratch("headers");
  json j = small_sim(d / "out");
  j["theory"] = {{"threshold_deltas", {0.0, 1.0}}};
  write(d / "c.json", j.dump());
  REQUIRE(cli("simulate --config " + (d / "c.json").string(), d).code == 0);
  REQUIRE(cli("theory --config " + (d / "c.json").string(), d).code == 0);
  const std::string hash = config_hash(load_config((d / "c.json").string()));
  int n = 0;
  for (const auto& [name, content] : tree(d / "out")) {
    CAPTURE(name);
    ++n;
    if (name.ends_with(".csv")) {
      CHECK(content.rfind("# beamsr_version: ", 0) == 0);
      CHECK(content.find("# config_hash: " + hash) != std::string::npos);
    } else if (name.ends_with(".json")) {
      const json m = json::parse(content)["meta"];
      CHECK(m["config_hash"] == hash);
      CHECK(m["beamsr_version"].is_string());
    } else if (name.ends_with(".bin")) {
      FileHeader h;
      load_record_binary((d / "out" / name).string(), &h);
      CHECK(h.config_hash == hash);
    }
  }
  CHECK(n > 10);
}

TEST_CASE("config round trip and hash") {
  json j = small_sim("somewhere");
  j["sweep"] = json::array({json{{"name", "doppler_width"}, {"min", 0.0}, {"max", 3.0}, {"count", 4}}});
  j["theory"] = {{"threshold_deltas", {0.0, 5.0}}, {"scan_box", {{"n_re", 31}}}};
  j["analysis"]["comb_count"] = 3;
  j["analysis"]["comb_spacing"] = 0.5;
  const RunConfig a = parse_config(j);
  const json ja = to_json(a);
  const RunConfig b = parse_config(ja);
  CHECK(a == b);
  CHECK(to_json(b) == ja);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);

  RunConfig c = a;
  c.workers = 7;
  c.output_dir = "elsewhere";
  CHECK(config_hash(c) == config_hash(a));
  c.sim.seed += 1;
  CHECK(config_hash(c) != config_hash(a));

  json bad = j;
  bad["sweep"][0]["name"] = "n_gamma";
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = j;
  bad["workers"] = 0;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("theory subcommand") {
  const fs::path d = scratch("theory");
  json j{{"params", {{"n_atoms", 1000}, {"collective_linewidth", 20.0}, {"doppler_width", 1.0}}},
         {"theory", {{"threshold_deltas", {0.0, 1.0, 5.0, 20.0}}}},
         {"output_dir", (d / "ssr").string()}};
  write(d / "ssr.json", j.dump());
  REQUIRE(cli("theory --config " + (d / "ssr.json").string(), d).code == 0);
  const json t = json::parse(slurp(d / "ssr/theory.json"));
  CHECK(t["j_par0"].get<double>() > 0.0);
  CHECK(t["phase"] == "SSR");
  CHECK(t["linewidth"]["gamma_line"].get<double>() > 0.0);
  CHECK(t["linewidth"]["gamma_over_gamma_c"].get<double>() == doctest::Approx(1.2361).epsilon(1e-3));
  REQUIRE(t["thresholds"].size() == 4);
  const std::vector<double> deltas{0.0, 1.0, 5.0, 20.0};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t["thresholds"][i]["delta_tau"].get<double>() == deltas[i]);
    CHECK(t["thresholds"][i]["threshold_n_gamma_tau"].get<double>() == threshold_nsr(deltas[i]));
  }
  const std::string csv = slurp(d / "ssr/thresholds.csv");
  CHECK(csv.find("delta_tau,threshold_n_gamma_tau") != std::string::npos);
  CHECK(csv.find("\n20,") != std::string::npos);

  j["params"]["collective_linewidth"] = 4.0;
  j["params"]["doppler_width"] = 0.1;
  j["output_dir"] = (d / "nsr").string();
  write(d / "nsr.json", j.dump());
  REQUIRE(cli("theory --config " + (d / "nsr.json").string(), d).code == 0);
  const json n = json::parse(slurp(d / "nsr/theory.json"));
  CHECK(n["phase"] == "NSR");
  CHECK(n["j_par0"].get<double>() == 0.0);
  CHECK(std::abs(n["nsr_root"]["re_nu0"].get<double>() + 1.8) < 0.05);
  CHECK(n["nsr_root"]["im_nu0"].get<double>() == 0.0);
}

TEST_CASE("phase diagram: threshold boundary and resume") {
  const fs::path d = scratch("phase");
  json j{{"params", {{"n_atoms", 1000}, {"collective_linewidth", 1.0}, {"doppler_width", 0.0}}},
         {"sweep",
          {{{"name", "collective_linewidth"}, {"min", 2.0}, {"max", 30.0}, {"count", 15}},
           {{"name", "doppler_width"}, {"min", 0.0}, {"max", 6.0}, {"count", 4}}}},
         {"output_dir", (d / "out").string()}};
  write(d / "c.json", j.dump());
  REQUIRE(cli("phase-diagram --config " + (d / "c.json").string() + " --workers 2", d).code == 0);
  const std::string first = slurp(d / "out/phase_diagram.csv");

  std::istringstream in(first);
  std::string line;
  int rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      CHECK(line == "n_gamma_tau,delta_tau,phase,re_nu0,im_nu0,j_par0");
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string f[6];
    for (auto& x : f) std::getline(row, x, ',');
    const double G = std::stod(f[0]), dl = std::stod(f[1]), jp = std::stod(f[5]);
    const double thr = threshold_nsr(dl), cell = 2.0;
    CAPTURE(line);
    if (G < thr - cell) CHECK(f[2] == "NSR");
    if (G > thr + cell) {
      CHECK(jp > 0.0);
      CHECK((f[2] == "SSR" || f[2] == "MCSR"));
    }
    ++rows;
  }
  CHECK(rows == 60);

  // interrupted run: drop a few finished points and the table
  for (int k : {3, 17, 40, 41, 59}) {
    char name[32];
    std::snprintf(name, sizeof name, "point_%06d.json", k);
    REQUIRE(fs::remove(d / "out/points" / name));
  }
  fs::remove(d / "out/phase_diagram.csv");
  const Run r = cli("phase-diagram --config " + (d / "c.json").string(), d);
  REQUIRE(r.code == 0);
  CHECK(r.err.find("60 points, 55 already complete, computing 5") != std::string::npos);
  CHECK(slurp(d / "out/phase_diagram.csv") == first);

  // a changed configuration does not reuse stale points
  j["params"]["n_atoms"] = 2000;
  write(d / "c.json", j.dump());
  const Run r2 = cli("phase-diagram --config " + (d / "c.json").string(), d);
  REQUIRE(r2.code == 0);
  CHECK(r2.err.find("60 points, 0 already complete, computing 60") != std::string::npos);

  j["sweep"][1]["name"] = "gamma1";
  write(d / "c.json", j.dump());
  CHECK(cli("phase-diagram --config " + (d / "c.json").string(), d).code == 2);
}
