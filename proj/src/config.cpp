#include "beamsr/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace beamsr {

using nlohmann::json;

namespace {

const std::set<std::string> kParamNames = {"n_atoms", "collective_linewidth",
                                           "doppler_width", "gamma1", "gamma2"};

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& node(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out, bool required = false) {
    if (!has(key)) {
      if (required) throw ConfigError(at(key), "missing required field");
      return;
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(at(key), "wrong type");
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

FitModel parse_fit_model(const std::string& s, const std::string& path) {
  if (s == "exp_tail") return FitModel::ExpTail;
  if (s == "linewidth") return FitModel::Linewidth;
  throw ConfigError(path, "expected \"exp_tail\" or \"linewidth\"");
}

void require(bool ok, const std::string& path, const char* msg) {
  if (!ok) throw ConfigError(path, msg);
}

}  // namespace

const char* to_string(FitModel m) {
  return m == FitModel::ExpTail ? "exp_tail" : "linewidth";
}

std::vector<double> SweepAxis::values() const {
  std::vector<double> v;
  if (count == 1) return {min};
  for (int i = 0; i < count; ++i)
    v.push_back(min + (max - min) * double(i) / double(count - 1));
  return v;
}

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  Reader root(j, "");

  if (!root.has("params")) throw ConfigError("params", "missing required field");
  {
    Reader r(root.node("params"), "params");
    r.get("n_atoms", cfg.params.n_atoms, true);
    r.get("collective_linewidth", cfg.params.collective_linewidth, true);
    r.get("doppler_width", cfg.params.doppler_width, true);
    r.get("gamma1", cfg.params.gamma1);
    r.get("gamma2", cfg.params.gamma2);
    r.finish();
    require(cfg.params.n_atoms >= 1, "params.n_atoms", "must be >= 1");
    require(cfg.params.collective_linewidth >= 0.0, "params.collective_linewidth", "must be >= 0");
    require(cfg.params.doppler_width >= 0.0, "params.doppler_width", "must be >= 0");
    require(cfg.params.gamma1 >= 0.0, "params.gamma1", "must be >= 0");
    require(cfg.params.gamma2 >= 0.0, "params.gamma2", "must be >= 0");
  }
  if (root.has("sim")) {
    Reader r(root.node("sim"), "sim");
    r.get("dt", cfg.sim.dt);
    r.get("t_sim", cfg.sim.t_sim);
    r.get("record_stride", cfg.sim.record_stride);
    r.get("seed", cfg.sim.seed);
    r.get("warm_start", cfg.sim.warm_start);
    r.finish();
    require(cfg.sim.dt > 0.0, "sim.dt", "must be > 0");
    require(cfg.sim.t_sim >= cfg.sim.dt, "sim.t_sim", "must be >= dt");
    require(cfg.sim.record_stride >= 1, "sim.record_stride", "must be >= 1");
  }
  root.get("n_traj", cfg.n_traj);
  require(cfg.n_traj >= 1, "n_traj", "must be >= 1");
  if (root.has("analysis")) {
    Reader r(root.node("analysis"), "analysis");
    AnalysisConfig& a = cfg.analysis;
    r.get("t0", a.t0);
    r.get("max_lag", a.max_lag);
    r.get("tf", a.tf);
    r.get("fit_window", a.fit_window);
    std::string model = to_string(a.fit_model);
    r.get("fit_model", model);
    a.fit_model = parse_fit_model(model, "analysis.fit_model");
    r.get("omega_max", a.omega_max);
    r.get("omega_oversample", a.omega_oversample);
    r.get("comb_count", a.comb.count);
    r.get("comb_spacing", a.comb.spacing);
    r.finish();
    require(a.t0 >= 0.0, "analysis.t0", "must be >= 0");
    require(a.max_lag > 0.0, "analysis.max_lag", "must be > 0");
    require(a.tf > 0.0 && a.tf <= a.max_lag, "analysis.tf", "must be in (0, max_lag]");
    require(a.fit_window[1] > a.fit_window[0], "analysis.fit_window", "must be increasing");
    require(a.omega_max > 0.0, "analysis.omega_max", "must be > 0");
    require(a.omega_oversample >= 1, "analysis.omega_oversample", "must be >= 1");
    require(a.comb.count >= 1, "analysis.comb_count", "must be >= 1");
    require(a.comb.count == 1 || a.comb.spacing > 0.0, "analysis.comb_spacing",
            "must be > 0 when comb_count > 1");
  }
  if (root.has("theory")) {
    Reader r(root.node("theory"), "theory");
    r.get("threshold_deltas", cfg.theory.threshold_deltas);
    for (double d : cfg.theory.threshold_deltas)
      require(d >= 0.0, "theory.threshold_deltas", "entries must be >= 0");
    if (r.has("scan_box")) {
      Reader b(r.node("scan_box"), "theory.scan_box");
      ScanBox& s = cfg.theory.scan_box;
      b.get("re_min", s.re_min);
      b.get("re_max", s.re_max);
      b.get("im_min", s.im_min);
      b.get("im_max", s.im_max);
      b.get("n_re", s.n_re);
      b.get("n_im", s.n_im);
      b.finish();
      require(s.re_max > s.re_min, "theory.scan_box.re_max", "must exceed re_min");
      require(s.im_max > s.im_min, "theory.scan_box.im_max", "must exceed im_min");
      require(s.n_re >= 2, "theory.scan_box.n_re", "must be >= 2");
      require(s.n_im >= 2, "theory.scan_box.n_im", "must be >= 2");
    }
    if (r.has("quadrature")) {
      Reader q(r.node("quadrature"), "theory.quadrature");
      QuadratureSpec& s = cfg.theory.quadrature;
      q.get("u_nodes_per_panel", s.u_nodes_per_panel);
      q.get("u_panel_width", s.u_panel_width);
      q.get("u_cutoff_sigmas", s.u_cutoff_sigmas);
      q.get("xi_nodes", s.xi_nodes);
      q.get("xi_panel_doppler", s.xi_panel_doppler);
      q.get("t_nodes", s.t_nodes);
      q.get("t_base_panels", s.t_base_panels);
      q.finish();
      require(s.u_nodes_per_panel >= 1, "theory.quadrature.u_nodes_per_panel", "must be >= 1");
      require(s.u_panel_width > 0.0, "theory.quadrature.u_panel_width", "must be > 0");
      require(s.u_cutoff_sigmas > 0.0, "theory.quadrature.u_cutoff_sigmas", "must be > 0");
      require(s.xi_nodes >= 1, "theory.quadrature.xi_nodes", "must be >= 1");
      require(s.xi_panel_doppler > 0.0, "theory.quadrature.xi_panel_doppler", "must be > 0");
      require(s.t_nodes >= 1, "theory.quadrature.t_nodes", "must be >= 1");
      require(s.t_base_panels >= 1, "theory.quadrature.t_base_panels", "must be >= 1");
    }
    r.finish();
  }
  if (root.has("sweep")) {
    const json& arr = root.node("sweep");
    require(arr.is_array(), "sweep", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "sweep[" + std::to_string(i) + "]";
      Reader r(arr[i], path);
      SweepAxis ax;
      r.get("name", ax.name, true);
      r.get("min", ax.min, true);
      r.get("max", ax.max, true);
      r.get("count", ax.count, true);
      r.finish();
      require(kParamNames.count(ax.name) > 0, path + ".name",
              "not a parameter name (n_atoms, collective_linewidth, doppler_width, gamma1, gamma2)");
      require(ax.count >= 1, path + ".count", "must be >= 1");
      require(ax.max >= ax.min, path + ".max", "must be >= min");
      cfg.sweep.push_back(ax);
    }
  }
  root.get("output_dir", cfg.output_dir);
  root.get("input_dir", cfg.input_dir);
  root.get("csv_records", cfg.csv_records);
  root.get("binary_records", cfg.binary_records);
  root.get("workers", cfg.workers);
  require(cfg.workers >= 1, "workers", "must be >= 1");
  root.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("", "cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                              ": JSON syntax error: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json j;
  j["params"] = {{"n_atoms", c.params.n_atoms},
                 {"collective_linewidth", c.params.collective_linewidth},
                 {"doppler_width", c.params.doppler_width},
                 {"gamma1", c.params.gamma1},
                 {"gamma2", c.params.gamma2}};
  j["sim"] = {{"dt", c.sim.dt},
              {"t_sim", c.sim.t_sim},
              {"record_stride", c.sim.record_stride},
              {"seed", c.sim.seed},
              {"warm_start", c.sim.warm_start}};
  j["n_traj"] = c.n_traj;
  const AnalysisConfig& a = c.analysis;
  j["analysis"] = {{"t0", a.t0},
                   {"max_lag", a.max_lag},
                   {"tf", a.tf},
                   {"fit_window", a.fit_window},
                   {"fit_model", to_string(a.fit_model)},
                   {"omega_max", a.omega_max},
                   {"omega_oversample", a.omega_oversample},
                   {"comb_count", a.comb.count},
                   {"comb_spacing", a.comb.spacing}};
  const ScanBox& b = c.theory.scan_box;
  const QuadratureSpec& q = c.theory.quadrature;
  j["theory"] = {
      {"threshold_deltas", c.theory.threshold_deltas},
      {"scan_box",
       {{"re_min", b.re_min}, {"re_max", b.re_max}, {"im_min", b.im_min},
        {"im_max", b.im_max}, {"n_re", b.n_re}, {"n_im", b.n_im}}},
      {"quadrature",
       {{"u_nodes_per_panel", q.u_nodes_per_panel},
        {"u_panel_width", q.u_panel_width},
        {"u_cutoff_sigmas", q.u_cutoff_sigmas},
        {"xi_nodes", q.xi_nodes},
        {"xi_panel_doppler", q.xi_panel_doppler},
        {"t_nodes", q.t_nodes},
        {"t_base_panels", q.t_base_panels}}}};
  j["sweep"] = json::array();
  for (const auto& ax : c.sweep)
    j["sweep"].push_back(
        {{"name", ax.name}, {"min", ax.min}, {"max", ax.max}, {"count", ax.count}});
  j["output_dir"] = c.output_dir;
  j["input_dir"] = c.input_dir;
  j["csv_records"] = c.csv_records;
  j["binary_records"] = c.binary_records;
  j["workers"] = c.workers;
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("workers");
  j.erase("output_dir");
  j.erase("input_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace beamsr
