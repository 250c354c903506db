// hopsim command-line front end.
//
// Exit codes: 0 steady hopping / success, 1 I/O or other infrastructure
// failure, 2 configuration or input error, 3 numerical failure, 4 failed
// liftoff, 5 fit failure, 6 episode did not settle within max_hops.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hopsim/config.hpp"
#include "hopsim/emulator_model.hpp"
#include "hopsim/error.hpp"
#include "hopsim/hopping_sim.hpp"
#include "hopsim/io.hpp"
#include "hopsim/stiffness_sweep.hpp"
#include "hopsim/svg.hpp"

namespace fs = std::filesystem;
using namespace hopsim;

namespace {

enum Exit {
  kOk = 0,
  kInfra = 1,
  kConfig = 2,
  kNumerical = 3,
  kFailedLiftoff = 4,
  kFitFailure = 5,
  kNoConvergence = 6,
};

int exit_for(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::SteadyHopping: return kOk;
    case EpisodeStatus::FailedLiftoff: return kFailedLiftoff;
    case EpisodeStatus::NoConvergence: return kNoConvergence;
    case EpisodeStatus::NumericalFailure: return kNumerical;
  }
  return kInfra;
}

struct GlobalOptions {
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig cfg = g.config_path.empty() ? parse_config(default_config_text(), "<defaults>")
                                        : load_config(g.config_path);
  if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
  if (g.threads > 0) cfg.sweep.threads = g.threads;
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path out(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorCode::Io, out.string() + ": " + ec.message());
  return out;
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::Io, path.string() + ": cannot open for writing");
  fn(os);
  if (!os) fail(ErrorCode::Io, path.string() + ": write failed");
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

int cmd_simulate(const GlobalOptions& g) {
  RunConfig cfg = resolve_config(g);
  EpisodeConfig ecfg = cfg.episode;
  ecfg.record_trajectory = true;
  const EpisodeOutcome outcome =
      run_episode(cfg.hopper, cfg.ground, EnergyBudget(cfg.energy), ecfg, cfg.integrator);
  const fs::path out = prepare_out(cfg);
  write_file(out / "trajectory.csv",
             [&](std::ostream& os) { io::write_trajectory_csv(os, outcome); });
  write_json(out / "summary.json", io::episode_summary(outcome, cfg.hopper, cfg.ground, cfg.energy));
  std::cout << to_string(outcome.status);
  if (!std::isnan(outcome.steady_apex_mean)) {
    std::cout << " apex_mm=" << io::format_number(outcome.steady_apex_mean * 1e3, 6);
  }
  if (!outcome.failure_reason.empty()) std::cout << " (" << outcome.failure_reason << ")";
  std::cout << '\n';
  return exit_for(outcome.status);
}

int cmd_sweep(const GlobalOptions& g) {
  RunConfig cfg = resolve_config(g);
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult result = run_sweep(cfg.sweep);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const fs::path out = prepare_out(cfg);
  const auto& spec = result.spec;

  write_file(out / "sweep.csv", [&](std::ostream& os) { io::write_sweep_csv(os, result); });

  const auto maps = best_stiffness_map(result, spec.tie_threshold);
  nlohmann::ordered_json summary;
  summary["ground_cells"] = result.ground_cells();
  summary["episodes"] = result.cells.size() * spec.leg_stiffness.size();
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (std::size_t di = 0; di < spec.leg_damping.size(); ++di) {
    std::vector<SuccessRegion> regions;
    for (std::size_t ei = 0; ei < spec.energies.size(); ++ei) {
      const double dl = spec.leg_damping[di], e = spec.energies[ei];
      const std::string tag = io::pair_tag(dl, e);
      const WinnerMap& map = maps[di * spec.energies.size() + ei];
      const SuccessRegion region = success_region(result, e, dl);
      write_file(out / ("winner_map_" + tag + ".csv"),
                 [&](std::ostream& os) { io::write_winner_map_csv(os, map); });
      write_file(out / ("success_region_" + tag + ".csv"),
                 [&](std::ostream& os) { io::write_success_region_csv(os, region); });
      write_file(out / ("winner_map_" + tag + ".svg"),
                 [&](std::ostream& os) { svg::write_winner_map(os, map, spec.leg_stiffness); });
      for (std::size_t ki = 0; ki < spec.leg_stiffness.size(); ++ki) {
        const std::string name =
            "apex_" + tag + "_kl" + io::format_number(spec.leg_stiffness[ki], 0) + ".svg";
        write_file(out / name,
                   [&](std::ostream& os) { svg::write_apex_map(os, result, di, ei, ki); });
      }
      pairs.push_back({{"d_l_Ns_m", dl},
                       {"E_in_J", e},
                       {"success_cells", region.count()},
                       {"trend_violations", check_trends(result, dl, e).size()}});
      regions.push_back(region);
    }
    write_file(out / ("success_overlay_dl" + io::format_number(spec.leg_damping[di], 0) + ".svg"),
               [&](std::ostream& os) { svg::write_success_overlay(os, regions); });
  }
  summary["pairs"] = std::move(pairs);
  write_json(out / "sweep_summary.json", summary);
  // Timing goes to stderr only so output files stay reproducible.
  std::cerr << "swept " << result.cells.size() * spec.leg_stiffness.size() << " episodes in "
            << io::format_number(seconds, 1) << " s with " << spec.threads << " thread(s)\n";
  std::cout << "wrote " << out.string() << '\n';
  return kOk;
}

int cmd_portrait(const GlobalOptions& g) {
  RunConfig cfg = resolve_config(g);
  if (cfg.portrait_drop_heights.size() < 2) {
    fail(ErrorCode::Config, "portrait.drop_heights_m needs at least two entries");
  }
  std::vector<svg::PortraitCurve> curves;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  int code = kOk;
  const fs::path out = prepare_out(cfg);
  std::ostringstream csv;
  csv << "drop_height_m,time_s,phase,x_b_m,v_b_m_s,x_t_m,v_t_m_s\n";
  for (double h : cfg.portrait_drop_heights) {
    EpisodeConfig ecfg = cfg.episode;
    ecfg.drop_height = h;
    ecfg.record_trajectory = true;
    const EpisodeOutcome o =
        run_episode(cfg.hopper, cfg.ground, EnergyBudget(cfg.energy), ecfg, cfg.integrator);
    if (code == kOk) code = exit_for(o.status);
    const std::string hs = io::format_number(h, 6);
    for (const auto& s : o.trajectory) {
      csv << hs << ',' << io::format_number(s.time, 9) << ',' << to_string(s.phase) << ','
          << io::format_number(s.body_pos, 12) << ',' << io::format_number(s.body_vel, 12) << ','
          << io::format_number(s.toe_pos, 12) << ',' << io::format_number(s.toe_vel, 12) << '\n';
    }
    auto summary = io::episode_summary(o, cfg.hopper, cfg.ground, cfg.energy);
    summary.erase("energy_audit");
    nlohmann::ordered_json run;
    run["drop_height_m"] = h;
    run.update(summary);
    runs.push_back(std::move(run));
    curves.push_back({"drop " + io::format_number(h * 1e3, 1) + " mm", o.trajectory});
  }
  write_file(out / "portrait.csv", [&](std::ostream& os) { os << csv.str(); });
  write_file(out / "portrait.svg", [&](std::ostream& os) {
    svg::write_phase_portrait(os, curves, cfg.hopper.rest_length());
  });
  write_json(out / "portrait_summary.json", runs);
  for (const auto& r : runs) {
    std::cout << "drop_height_m=" << io::format_number(r["drop_height_m"].get<double>(), 6) << ' '
              << r["status"].get<std::string>();
    if (!r["steady_apex_mean_mm"].is_null()) {
      std::cout << " apex_mm=" << io::format_number(r["steady_apex_mean_mm"].get<double>(), 6);
    }
    std::cout << '\n';
  }
  return code;
}

struct FitArgs {
  std::string trace;
  std::optional<double> mass;
  std::optional<double> kp, kd;
  bool trim = false;
};

int cmd_fit(const GlobalOptions& g, const FitArgs& a) {
  RunConfig cfg = resolve_config(g);
  std::ifstream in(a.trace);
  if (!in) fail(ErrorCode::Config, a.trace + ": cannot open trace file");
  emulator::OscillationTrace trace;
  try {
    trace = io::read_trace_csv(in);
  } catch (const Error& e) {
    fail(ErrorCode::Config, a.trace + ": " + e.what());
  }
  if (a.mass) trace.mass = *a.mass;
  try {
    trace.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Config, a.trace + ": " + e.what());
  }
  if (a.trim) trace = emulator::trim_to_release(trace);

  emulator::FitOptions opts;
  opts.free_offset = cfg.fit_free_offset;
  opts.gravity = cfg.episode.physics.gravity;
  emulator::OscillatorFit fit;
  try {
    fit = emulator::fit_oscillator(trace, opts);
  } catch (const Error& e) {
    std::cerr << "fit failed: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kFitFailure;
  }
  const fs::path out = prepare_out(cfg);
  auto j = io::fit_summary(fit, trace.mass);
  if (a.kp && a.kd) {
    j["Kp"] = *a.kp;
    j["Kd"] = *a.kd;
    const fs::path table = out / "calibration.csv";
    const bool fresh = !fs::exists(table) || fs::file_size(table) == 0;
    std::ofstream os(table, std::ios::binary | std::ios::app);
    if (!os) fail(ErrorCode::Io, table.string() + ": cannot open for appending");
    if (fresh) os << io::kCalibrationHeader << '\n';
    io::write_calibration_row(os, {*a.kp, *a.kd}, fit);
  }
  write_json(out / "fit.json", j);
  std::cout << "k_g_N_m=" << io::format_number(fit.ground_stiffness, 3)
            << " d_g_Ns_m=" << io::format_number(fit.ground_damping, 3)
            << " r2=" << io::format_number(fit.r_squared, 6) << '\n';
  if (!fit.accepted()) std::cerr << "warning: R^2 below 0.9, fit not accepted\n";
  return kOk;
}

struct SelectArgs {
  std::string map;
  double kg = 0.0, dg = 0.0;
};

int cmd_select(const SelectArgs& a) {
  std::ifstream in(a.map);
  if (!in) fail(ErrorCode::Config, a.map + ": cannot open winner map");
  WinnerMap map;
  try {
    map = io::read_winner_map_csv(in);
  } catch (const Error& e) {
    fail(ErrorCode::Config, a.map + ": " + e.what());
  }
  try {
    const double k = select_stiffness(map, GroundProfile(a.kg, a.dg));
    std::cout << io::format_number(k, 3) << '\n';
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == ErrorCode::UnreachableCell ? kFailedLiftoff : kConfig;
  }
  return kOk;
}

struct TraceArgs {
  double amplitude = 0.02, alpha = 1600.0, beta = 3.0, phase = 0.0;
  double mass = 2.0, duration = 0.75, rate = 1000.0, noise = 0.0;
  std::string file = "trace.csv";
};

int cmd_trace(const GlobalOptions& g, const TraceArgs& a) {
  RunConfig cfg = resolve_config(g);
  const auto trace = emulator::synthesize_trace({a.amplitude, a.alpha, a.beta, a.phase, 0.0},
                                                a.mass, a.duration, a.rate, a.noise, cfg.seed,
                                                cfg.episode.physics.gravity);
  const fs::path out = prepare_out(cfg);
  write_file(out / a.file, [&](std::ostream& os) { io::write_trace_csv(os, trace); });
  std::cout << "wrote " << (out / a.file).string() << '\n';
  return kOk;
}

int cmd_calibrate(const std::string& table) {
  std::ifstream in(table);
  if (!in) fail(ErrorCode::Config, table + ": cannot open calibration table");
  const auto rows = io::read_calibration_csv(in);
  emulator::GainCalibration cal;
  try {
    cal = emulator::calibrate_gain_maps(rows);
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return kFitFailure;
  }
  nlohmann::ordered_json j{
      {"fits_used", cal.fits_used},
      {"k_g_vs_Kp", {{"slope", cal.stiffness.slope}, {"intercept", cal.stiffness.intercept},
                     {"r2", cal.stiffness.r_squared}}},
      {"d_g_vs_Kd", {{"slope", cal.damping.slope}, {"intercept", cal.damping.intercept},
                     {"r2", cal.damping.r_squared}}}};
  std::cout << j.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-mass vertical hopper on spring-damper ground"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "YAML run configuration");
  app.add_option("--out", g.out_dir, "Output directory (overrides output_dir)");
  app.add_option("--threads", g.threads, "Sweep worker threads (overrides sweep.threads)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "RNG seed for synthetic data");

  auto* simulate = app.add_subcommand("simulate", "Run one episode; write trajectory and summary");
  auto* sweep = app.add_subcommand("sweep", "Grid search over ground profiles and leg stiffness");
  auto* portrait = app.add_subcommand("portrait", "Phase portrait over several drop heights");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a damped oscillator to a free-oscillation trace");
  fit->add_option("--trace", fa.trace, "Trace CSV (mass_kg=<v> line, then t_s,r_m)")->required();
  fit->add_option("--mass", fa.mass, "Override the trace mass [kg]");
  fit->add_option("--kp", fa.kp, "Stiffness gain used for the trace [N/m]");
  fit->add_option("--kd", fa.kd, "Damping gain used for the trace [Ns/m]");
  fit->add_flag("--trim", fa.trim, "Drop samples before the release point");

  SelectArgs sa;
  auto* select = app.add_subcommand("select", "Best leg stiffness for a ground profile");
  select->add_option("--map", sa.map, "Winner-map CSV written by sweep")->required();
  select->add_option("--kg", sa.kg, "Ground stiffness [N/m]")->required();
  select->add_option("--dg", sa.dg, "Ground damping [Ns/m]")->required();

  TraceArgs ta;
  auto* trace = app.add_subcommand("trace", "Write a synthetic oscillation trace");
  trace->add_option("--amplitude", ta.amplitude, "A [m]");
  trace->add_option("--alpha", ta.alpha, "alpha [1/s^2]");
  trace->add_option("--beta", ta.beta, "beta [1/s]");
  trace->add_option("--phase", ta.phase, "phi [rad]");
  trace->add_option("--mass", ta.mass, "Mass [kg]");
  trace->add_option("--duration", ta.duration, "Duration [s]");
  trace->add_option("--rate", ta.rate, "Sample rate [Hz]");
  trace->add_option("--noise", ta.noise, "Gaussian noise sigma [m]");
  trace->add_option("--file", ta.file, "File name inside the output directory");

  std::string table;
  auto* calibrate = app.add_subcommand("calibrate", "Affine gain maps from a calibration table");
  calibrate->add_option("--table", table, "Calibration CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) return cmd_simulate(g);
    if (*sweep) return cmd_sweep(g);
    if (*portrait) return cmd_portrait(g);
    if (*fit) return cmd_fit(g, fa);
    if (*select) return cmd_select(sa);
    if (*trace) return cmd_trace(g, ta);
    if (*calibrate) return cmd_calibrate(table);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::Io: return kInfra;
      case ErrorCode::StepUnderflow:
      case ErrorCode::NonFiniteState: return kNumerical;
      default: return kConfig;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfra;
  }
  return kInfra;
}
