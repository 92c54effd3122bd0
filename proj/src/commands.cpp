#include "beamsr/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "beamsr/meanfield.hpp"
#include "beamsr/record_io.hpp"

namespace beamsr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

FileHeader header_for(const RunConfig& cfg) {
  FileHeader h;
  h.config_hash = config_hash(cfg);
  return h;
}

json meta_json(const RunConfig& cfg) {
  return {{"beamsr_version", BEAMSR_VERSION}, {"config_hash", config_hash(cfg)}};
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create directory " + p.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return os;
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

void write_series_csv(const fs::path& p, const FileHeader& h,
                      const CorrelationSeries& s) {
  auto os = open_out(p);
  write_csv_header(os, h);
  os << "# t0: " << format_double(s.t0) << "\n# n_traj: " << s.n_traj
     << "\n# n_origins: " << s.n_origins << '\n';
  os << "lag,re,im\n";
  for (std::size_t k = 0; k < s.size(); ++k)
    os << format_double(s.lags[k]) << ',' << format_double(s.values[k].real()) << ','
       << format_double(s.values[k].imag()) << '\n';
}

void write_spectrum_csv(const fs::path& p, const FileHeader& h,
                        const SpectrumResult& s) {
  auto os = open_out(p);
  write_csv_header(os, h);
  os << "# tf: " << format_double(s.tf) << '\n';
  os << "omega,re,im,abs\n";
  for (std::size_t k = 0; k < s.omega.size(); ++k)
    os << format_double(s.omega[k]) << ',' << format_double(s.values[k].real()) << ','
       << format_double(s.values[k].imag()) << ',' << format_double(std::abs(s.values[k]))
       << '\n';
}

json root_json(const std::optional<DispersionRoot>& r) {
  if (!r) return nullptr;
  return {{"kind", to_string(r->kind)},
          {"re_nu0", r->nu.real()},
          {"im_nu0", r->nu.imag()},
          {"residue", r->residue},
          {"residual", r->residual},
          {"converged", r->converged},
          {"multiple", r->multiple}};
}

void check_analysis_fits(const RunConfig& cfg, double t_end) {
  const AnalysisConfig& a = cfg.analysis;
  const double need = a.t0 + double(a.comb.count - 1) * a.comb.spacing + a.max_lag;
  if (need > t_end + 1e-9)
    throw ConfigError("analysis.max_lag",
                      "t0 + (comb_count - 1) * comb_spacing + max_lag = " +
                          format_double(need) + " exceeds the record length " +
                          format_double(t_end));
  if (a.fit_window[1] > a.max_lag + 1e-12)
    throw ConfigError("analysis.fit_window", "must lie inside [0, max_lag]");
}

// Correlations, spectra and fits; returns false if a numerical step failed.
bool analyse(const std::vector<DipoleRecord>& records, const RunConfig& cfg,
             const fs::path& out, json& summary) {
  const FileHeader h = header_for(cfg);
  const AnalysisConfig& a = cfg.analysis;
  bool ok = true;
  const CorrelationSeries c1 = g1(records, a.t0, a.max_lag, a.comb);
  write_series_csv(out / "g1.csv", h, c1);
  const SpectrumGrid grid{a.omega_max, a.omega_oversample};
  write_spectrum_csv(out / "s1.csv", h, spectrum(c1, a.tf, SpectrumKind::S1, grid));

  const DipoleStats st = dipole_correlation(records, a.t0, double(cfg.params.n_atoms));
  summary["dipole_correlation_over_n2"] = {{"mean", st.mean}, {"stderr", st.std_error}};
  summary["effective_rabi_sq"] = effective_rabi_sq(records, cfg.params, a.t0);

  try {
    const CorrelationSeries c2 = g2(records, a.t0, a.max_lag, a.comb);
    write_series_csv(out / "g2.csv", h, c2);
    write_spectrum_csv(out / "s2.csv", h, spectrum(c2, a.tf, SpectrumKind::S2, grid));
    summary["g2_0"] = c2.values[0].real();
  } catch (const ObservableError& e) {
    summary["g2_0"] = nullptr;
    summary["g2_error"] = e.what();
    ok = false;
  }
  try {
    const FitResult f = fit_exponent(c1, a.fit_window[0], a.fit_window[1], a.fit_model);
    summary["fit"] = {{"model", to_string(a.fit_model)},
                      {"window", a.fit_window},
                      {"rate", f.rate},
                      {"stderr", f.std_error},
                      {"n_points", f.n_points}};
  } catch (const ObservableError& e) {
    summary["fit"] = {{"model", to_string(a.fit_model)}, {"error", e.what()}};
    ok = false;
  }
  return ok;
}

std::string trajectory_stem(std::uint64_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "traj_%05llu", static_cast<unsigned long long>(k));
  return buf;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  check_analysis_fits(cfg, cfg.sim.t_sim);
  const fs::path out(cfg.output_dir);
  ensure_dir(out / "records");
  const FileHeader h = header_for(cfg);

  log << "simulate: " << cfg.n_traj << " trajectories, N=" << cfg.params.n_atoms
      << ", NGc=" << cfg.params.collective_linewidth
      << ", dD=" << cfg.params.doppler_width << ", workers=" << cfg.workers << '\n';
  const EnsembleResult ens = run_ensemble(cfg.params, cfg.sim, cfg.n_traj, cfg.workers);

  for (const auto& rec : ens.records) {
    const std::string stem = trajectory_stem(rec.trajectory);
    if (cfg.csv_records) {
      auto os = open_out(out / "records" / (stem + ".csv"));
      write_record_csv(os, rec, h);
    }
    if (cfg.binary_records)
      save_record_binary((out / "records" / (stem + ".bin")).string(), rec, h);
  }

  json summary;
  summary["meta"] = meta_json(cfg);
  summary["config"] = to_json(cfg);
  summary["config"].erase("workers");
  summary["config"].erase("output_dir");
  summary["n_traj_requested"] = cfg.n_traj;
  summary["n_traj_completed"] = ens.records.size();
  summary["clamped_covariances"] = ens.clamped_covariances;
  json fails = json::array();
  for (const auto& f : ens.failures)
    fails.push_back({{"trajectory", f.trajectory}, {"message", f.message}});
  summary["failures"] = fails;

  if (ens.records.empty()) {
    write_json(out / "summary.json", summary);
    log << "simulate: all trajectories failed\n";
    return kExitNumerical;
  }
  const bool ok = analyse(ens.records, cfg, out, summary);
  write_json(out / "summary.json", summary);
  log << "simulate: wrote " << (out / "summary.json").string() << '\n';
  return ok ? kExitOk : kExitNumerical;
}

int cmd_spectra(const RunConfig& cfg, std::ostream& log) {
  const fs::path out(cfg.output_dir);
  const fs::path in = cfg.input_dir.empty() ? out / "records" : fs::path(cfg.input_dir);
  if (!fs::is_directory(in)) throw ConfigError("input_dir", "not a directory: " + in.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in))
    if (e.path().extension() == ".bin") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("input_dir", "no .bin records in " + in.string());
  std::vector<DipoleRecord> records;
  for (const auto& f : files) records.push_back(load_record_binary(f.string()));
  check_analysis_fits(cfg, records.front().times.back());
  ensure_dir(out);
  json summary;
  summary["meta"] = meta_json(cfg);
  summary["input_records"] = files.size();
  const bool ok = analyse(records, cfg, out, summary);
  write_json(out / "summary.json", summary);
  log << "spectra: analysed " << files.size() << " records\n";
  return ok ? kExitOk : kExitNumerical;
}

int cmd_theory(const RunConfig& cfg, std::ostream& log) {
  const fs::path out(cfg.output_dir);
  ensure_dir(out);
  const FileHeader h = header_for(cfg);
  const ModelParams& p = cfg.params;
  const QuadratureSpec& q = cfg.theory.quadrature;
  const ScanBox& box = cfg.theory.scan_box;

  json res;
  res["meta"] = meta_json(cfg);
  res["params"] = to_json(cfg)["params"];
  res["threshold_n_gamma_tau"] = threshold_nsr(p.doppler_width);

  json table = json::array();
  {
    auto os = open_out(out / "thresholds.csv");
    write_csv_header(os, h);
    os << "delta_tau,threshold_n_gamma_tau\n";
    for (double d : cfg.theory.threshold_deltas) {
      const double th = threshold_nsr(d);
      table.push_back({{"delta_tau", d}, {"threshold_n_gamma_tau", th}});
      os << format_double(d) << ',' << format_double(th) << '\n';
    }
  }
  res["thresholds"] = table;

  const RootSearch nsr = find_nsr_root(p, box);
  res["nsr_root"] = root_json(nsr.root);
  if (!nsr.root) res["nsr_root_diagnostic"] = nsr.describe();

  const MeanFieldSolution sol = solve_dipole(p, q);
  res["j_par0"] = sol.j_par0;
  res["selfconsistency_residual"] = sol.residual;

  Phase phase = Phase::Unclassified;
  if (sol.superradiant()) {
    const RootSearch higgs = find_higgs_root(sol, box);
    res["higgs_root"] = root_json(higgs.root);
    if (higgs.root)
      phase = higgs.root->nu.real() < 0.0 ? Phase::SSR : Phase::MCSR;
    else
      res["higgs_root_diagnostic"] = higgs.describe();
    const auto lw = linewidth_ssr(p, q);
    res["linewidth"] = {{"t_char", lw->t_char},
                        {"c_perp", lw->c_perp},
                        {"gamma_line", lw->gamma_line},
                        {"gamma_over_gamma_c", lw->gamma_line / p.gamma_c()}};
  } else {
    res["higgs_root"] = nullptr;
    res["linewidth"] = "not in SSR";
    if (nsr.root && nsr.root->nu.real() < 0.0) phase = Phase::NSR;
  }
  res["phase"] = to_string(phase);

  write_json(out / "theory.json", res);
  {
    auto os = open_out(out / "theory.csv");
    write_csv_header(os, h);
    os << "quantity,value\n";
    auto row = [&](const char* k, double v) { os << k << ',' << format_double(v) << '\n'; };
    row("n_gamma_tau", p.collective_linewidth);
    row("delta_tau", p.doppler_width);
    row("threshold_n_gamma_tau", res["threshold_n_gamma_tau"].get<double>());
    row("j_par0", sol.j_par0);
    if (nsr.root) {
      row("nsr_re_nu0", nsr.root->nu.real());
      row("nsr_im_nu0", nsr.root->nu.imag());
    }
    if (res["higgs_root"].is_object()) {
      row("higgs_re_nu0", res["higgs_root"]["re_nu0"].get<double>());
      row("higgs_im_nu0", res["higgs_root"]["im_nu0"].get<double>());
    }
    if (res["linewidth"].is_object()) {
      row("t_char", res["linewidth"]["t_char"].get<double>());
      row("c_perp", res["linewidth"]["c_perp"].get<double>());
      row("gamma_line", res["linewidth"]["gamma_line"].get<double>());
    }
  }
  log << "theory: phase " << to_string(phase) << ", j_par0 = " << sol.j_par0 << '\n';
  return phase == Phase::Unclassified ? kExitNumerical : kExitOk;
}

int cmd_phase_diagram(const RunConfig& cfg, std::ostream& log) {
  const SweepAxis* ax_g = nullptr;
  const SweepAxis* ax_d = nullptr;
  for (const auto& ax : cfg.sweep) {
    if (ax.name == "collective_linewidth") ax_g = &ax;
    else if (ax.name == "doppler_width") ax_d = &ax;
    else throw ConfigError("sweep", "phase-diagram sweeps only collective_linewidth and doppler_width");
  }
  if (!ax_g || !ax_d)
    throw ConfigError("sweep", "phase-diagram needs axes collective_linewidth and doppler_width");

  const fs::path out(cfg.output_dir);
  const fs::path pts = out / "points";
  ensure_dir(pts);
  const std::string hash = config_hash(cfg);
  const std::vector<double> gs = ax_g->values(), ds = ax_d->values();
  const std::size_t n = gs.size() * ds.size();

  auto point_path = [&](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "point_%06zu.json", i);
    return pts / buf;
  };
  auto load_point = [&](std::size_t i) -> std::optional<json> {
    std::ifstream is(point_path(i));
    if (!is) return std::nullopt;
    try {
      json j = json::parse(is);
      if (j.value("config_hash", "") == hash && j.value("index", std::size_t(-1)) == i) return j;
    } catch (const json::exception&) {
    }
    return std::nullopt;
  };

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i)
    if (!load_point(i)) todo.push_back(i);
  log << "phase-diagram: " << n << " points, " << (n - todo.size())
      << " already complete, computing " << todo.size() << '\n';

  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&]() {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      const std::size_t i = todo[k];
      const double G = gs[i / ds.size()], d = ds[i % ds.size()];
      const PhasePoint pp =
          classify_phase(G, d, cfg.params, cfg.theory.scan_box, cfg.theory.quadrature);
      const auto lead = pp.leading_root();
      json j = {{"config_hash", hash},
                {"index", i},
                {"n_gamma_tau", G},
                {"delta_tau", d},
                {"phase", to_string(pp.phase)},
                {"re_nu0", lead ? json(lead->nu.real()) : json(nullptr)},
                {"im_nu0", lead ? json(lead->nu.imag()) : json(nullptr)},
                {"j_par0", pp.j_par0},
                {"diagnostic", pp.diagnostic}};
      const fs::path tmp = point_path(i).string() + ".tmp";
      write_json(tmp, j);
      fs::rename(tmp, point_path(i));
      if (pp.phase == Phase::Unclassified) {
        std::lock_guard<std::mutex> lock(log_mu);
        log << "phase-diagram: point " << i << " unclassified: " << pp.diagnostic << '\n';
      }
    }
  };
  const int workers = std::max(1, std::min<int>(cfg.workers, int(std::max<std::size_t>(1, todo.size()))));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  auto os = open_out(out / "phase_diagram.csv");
  write_csv_header(os, header_for(cfg));
  os << "n_gamma_tau,delta_tau,phase,re_nu0,im_nu0,j_par0\n";
  auto num = [](const json& v) { return v.is_number() ? format_double(v.get<double>()) : std::string("nan"); };
  std::size_t unclassified = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = load_point(i);
    if (!j) throw std::runtime_error("phase-diagram: point " + std::to_string(i) + " missing");
    if ((*j)["phase"] == "unclassified") ++unclassified;
    os << num((*j)["n_gamma_tau"]) << ',' << num((*j)["delta_tau"]) << ','
       << (*j)["phase"].get<std::string>() << ',' << num((*j)["re_nu0"]) << ','
       << num((*j)["im_nu0"]) << ',' << num((*j)["j_par0"]) << '\n';
  }
  log << "phase-diagram: wrote " << (out / "phase_diagram.csv").string() << " ("
      << unclassified << " unclassified)\n";
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Superradiant atomic-beam laser: simulation and theory"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;

  const char* names[][2] = {{"simulate", "Run a trajectory ensemble and analyse it"},
                            {"theory", "Mean-field, thresholds, dispersion roots, linewidth"},
                            {"phase-diagram", "Classify phases over a parameter grid"},
                            {"spectra", "Post-process existing binary records"}};
  for (const auto& nm : names) {
    CLI::App* sub = app.add_subcommand(nm[0], nm[1]);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--seed", seed, "Master seed (overrides sim.seed)");
    sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "Output directory (overrides output_dir)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (seed) cfg.sim.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (out) cfg.output_dir = *out;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (cmd == "simulate") return cmd_simulate(cfg, std::cerr);
    if (cmd == "theory") return cmd_theory(cfg, std::cerr);
    if (cmd == "phase-diagram") return cmd_phase_diagram(cfg, std::cerr);
    return cmd_spectra(cfg, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace beamsr
