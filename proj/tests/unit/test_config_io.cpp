#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "hopsim/config.hpp"
#include "hopsim/error.hpp"
#include "hopsim/io.hpp"
#include "hopsim/svg.hpp"

using namespace hopsim;

#ifndef HOPSIM_SOURCE_DIR
#error "HOPSIM_SOURCE_DIR must point at the repository root"
#endif

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "run.yaml");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_CASE("defaults match the reference robot") {
  const auto cfg = parse_config(default_config_text());
  CHECK(cfg.hopper.body_mass() == 2.5);
  CHECK(cfg.hopper.toe_mass() == 0.3);
  CHECK(cfg.hopper.rest_length() == 0.0975);
  CHECK(cfg.sweep.leg_stiffness == std::vector<double>{3000, 4000, 5000});
  CHECK(cfg.sweep.leg_damping == std::vector<double>{30, 35, 40});
  CHECK(cfg.sweep.energies == std::vector<double>{1.0, 1.56, 2.25});
  CHECK(cfg.sweep.ground_stiffness.size() * cfg.sweep.ground_damping.size() == 208);
  CHECK(cfg.sweep.tie_threshold == 1e-3);
  CHECK(cfg.episode.steady_window == 10);
  CHECK(cfg.integrator.rel_tol == 1e-8);
  CHECK(cfg.episode.physics.gravity == 9.81);

  // Empty input and the shipped file give the same configuration.
  const auto empty = parse_config("");
  CHECK(empty.sweep.leg_stiffness == cfg.sweep.leg_stiffness);
  CHECK(empty.hopper.leg_stiffness() == cfg.hopper.leg_stiffness());
  const auto shipped = load_config(std::string(HOPSIM_SOURCE_DIR) + "/configs/paper-sim.default");
  CHECK(shipped.sweep.ground_damping.end == 75);
  CHECK(shipped.ground.stiffness() == cfg.ground.stiffness());
}

TEST_CASE("partial configs keep defaults elsewhere") {
  const auto cfg = parse_config(
      "hopper: {leg_stiffness_N_m: 4300}\nground:\n  stiffness_N_m: 4400\nenergy_J: 1.5\n"
      "episode:\n  guard_mode: experiment\nsweep:\n  threads: 3\n  ground_damping_Ns_m: {step: 10}\n"
      "portrait:\n  drop_heights_m: [0.1, 0.2]\nseed: 99\n");
  CHECK(cfg.hopper.leg_stiffness() == 4300);
  CHECK(cfg.hopper.leg_damping() == 35);
  CHECK(cfg.ground.stiffness() == 4400);
  CHECK(cfg.ground.damping() == 45);
  CHECK(cfg.energy == 1.5);
  CHECK(cfg.episode.guard_mode == GuardMode::Experiment);
  CHECK(cfg.sweep.episode.guard_mode == GuardMode::Experiment);
  CHECK(cfg.sweep.threads == 3);
  CHECK(cfg.sweep.ground_damping.step == 10);
  CHECK(cfg.sweep.ground_damping.start == 15);
  CHECK(cfg.portrait_drop_heights.size() == 2);
  CHECK(cfg.seed == 99);
}

TEST_CASE("config errors are line anchored") {
  CHECK(config_error("hopper:\n  body_mass_kg: 2.5\n  bogus: 1\n") ==
        "run.yaml:3:3: unknown key 'hopper.bogus'");
  CHECK(config_error("energy_J: 1\nextra: 2\n") == "run.yaml:2:1: unknown key 'extra'");
  CHECK(config_error("sweep:\n  ground_stiffness_N_m: {start: 1, stop: 2}\n").find(
            "unknown key 'sweep.ground_stiffness_N_m.stop'") != std::string::npos);
  CHECK(config_error("hopper:\n  body_mass_kg: heavy\n").rfind("run.yaml:2:17:", 0) == 0);
  CHECK(config_error("hopper: [1, 2]\n").find("must be a mapping") != std::string::npos);
  CHECK(config_error("sweep:\n  energy_J: 1\n").find("must be a list") != std::string::npos);
  CHECK(config_error("hopper: {body_mass_kg: 1\n").rfind("run.yaml:", 0) == 0);
  CHECK(config_error("episode:\n  guard_mode: sometimes\n").rfind("run.yaml:2:", 0) == 0);
  // Values that parse but break an invariant.
  CHECK(config_error("hopper:\n  body_mass_kg: -2\n").find("body_mass") != std::string::npos);
  CHECK(config_error("sweep:\n  leg_stiffness_N_m: []\n").find("leg stiffness") !=
        std::string::npos);
  CHECK(config_error("energy_J: 0\n").find("energy_J") != std::string::npos);
  CHECK(config_error("portrait: {drop_heights_m: [0.1, -1]}\n").find("drop heights") !=
        std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/run.yaml"), Error);
}

TEST_CASE("number formatting") {
  CHECK(io::format_number(1.5, 3) == "1.500");
  CHECK(io::format_number(-0.0000001, 3) == "0.000");
  CHECK(io::format_number(-1.25, 1) == "-1.2");
  CHECK(io::format_number(std::nan(""), 3) == "nan");
  CHECK(io::pair_tag(35, 1.56) == "dl35_E1.56");
  CHECK(io::pair_tag(30, 1) == "dl30_E1");
}

TEST_CASE("winner map round trip") {
  WinnerMap m;
  m.ground_stiffness = {2400, 200, 2800};
  m.ground_damping = {15, 5, 20};
  m.winners = {{3000}, {}, {3000, 4000}, {5000}, {}, {4000, 5000}};
  std::stringstream ss;
  io::write_winner_map_csv(ss, m);
  CHECK(ss.str().rfind("k_g_N_m,d_g_Ns_m,winners\n2400.000,15.000,3000.000\n2400.000,20.000,FAIL\n", 0) == 0);
  const auto back = io::read_winner_map_csv(ss);
  CHECK(back.winners == m.winners);
  CHECK(back.ground_stiffness.size() == 3);
  CHECK(back.ground_damping.step == doctest::Approx(5));

  std::istringstream bad_header("kg,dg,w\n");
  CHECK_THROWS_AS(io::read_winner_map_csv(bad_header), Error);
  std::istringstream holes("k_g_N_m,d_g_Ns_m,winners\n1,1,FAIL\n2,2,3000\n");
  CHECK_THROWS_AS(io::read_winner_map_csv(holes), Error);
  std::istringstream junk("k_g_N_m,d_g_Ns_m,winners\n1,abc,FAIL\n");
  CHECK_THROWS_AS(io::read_winner_map_csv(junk), Error);
}

TEST_CASE("trace and calibration files") {
  emulator::OscillationTrace t;
  t.mass = 2.0;
  for (int i = 0; i < 30; ++i) {
    t.time.push_back(i * 1e-3);
    t.position.push_back(std::sin(i * 0.3) * 0.01 - 0.008);
  }
  std::stringstream ss;
  io::write_trace_csv(ss, t);
  const auto back = io::read_trace_csv(ss);
  CHECK(back.mass == 2.0);
  REQUIRE(back.time.size() == t.time.size());
  for (std::size_t i = 0; i < t.time.size(); ++i) CHECK(std::abs(back.time[i] - t.time[i]) < 1e-12);
  CHECK(back.position == t.position);

  std::istringstream empty("");
  CHECK_THROWS_AS(io::read_trace_csv(empty), Error);
  std::istringstream no_mass("t_s,r_m\n0,0\n");
  CHECK_THROWS_AS(io::read_trace_csv(no_mass), Error);
  std::istringstream crlf("mass_kg=1.5\r\nt_s,r_m\r\n0,0.1\r\n0.001,0.2\r\n");
  const auto c = io::read_trace_csv(crlf);
  CHECK(c.mass == 1.5);
  CHECK(c.position.size() == 2);

  emulator::OscillatorFit fit;
  fit.ground_stiffness = 2400.5;
  fit.ground_damping = 16.25;
  fit.r_squared = 0.995;
  std::stringstream cal;
  cal << io::kCalibrationHeader << '\n';
  io::write_calibration_row(cal, {2500, 17}, fit);
  io::write_calibration_row(cal, {3500, 27}, fit);
  const auto rows = io::read_calibration_csv(cal);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].first.kp == 3500);
  CHECK(rows[0].second.ground_stiffness == 2400.5);
  CHECK(rows[0].second.accepted());
}

TEST_CASE("episode summary and svg output") {
  EpisodeConfig ec;
  ec.record_trajectory = true;
  const auto hopper = HopperParams::reference(4300, 35);
  const GroundProfile ground(4400, 35);
  const auto o = run_episode(hopper, ground, EnergyBudget(1.5), ec);
  const auto j = io::episode_summary(o, hopper, ground, 1.5);
  CHECK(j["status"] == "SteadyHopping");
  CHECK(j["hop_count"] == 60);
  CHECK(j["energy_audit"].size() == 60);
  CHECK(j["steady_apex_mean_mm"].get<double>() == doctest::Approx(11.6149).epsilon(1e-5));

  std::ostringstream traj;
  io::write_trajectory_csv(traj, o);
  CHECK(traj.str().rfind("time_s,phase,x_b_m,v_b_m_s,x_t_m,v_t_m_s\n", 0) == 0);

  std::ostringstream portrait;
  svg::write_phase_portrait(portrait, {{"a", o.trajectory}}, hopper.rest_length());
  CHECK(portrait.str().rfind("<svg", 0) == 0);
  CHECK(portrait.str().find("<polyline") != std::string::npos);

  WinnerMap m;
  m.ground_stiffness = {2400, 200, 2600};
  m.ground_damping = {15, 5, 15};
  m.winners = {{3000, 4000}, {}};
  std::ostringstream wm;
  svg::write_winner_map(wm, m, {3000, 4000, 5000});
  const std::string s = wm.str();
  CHECK(s.find("</svg>") != std::string::npos);
  // Tied cell: two stripes of half width; failed cell: nothing drawn.
  CHECK(s.find("width=\"14.00\"") != std::string::npos);
}
