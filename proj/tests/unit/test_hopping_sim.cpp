#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hopsim/error.hpp"
#include "hopsim/hopping_sim.hpp"
#include "rk4_oracle.hpp"

using namespace hopsim;

namespace {

const HopperParams cycle_hopper = HopperParams::reference(4300, 35);
const GroundProfile cycle_ground(4400, 35);
constexpr double cycle_energy = 1.5;

EpisodeOutcome cycle(double drop = 0.1, bool record = false) {
  EpisodeConfig cfg;
  cfg.drop_height = drop;
  cfg.record_trajectory = record;
  return run_episode(cycle_hopper, cycle_ground, EnergyBudget(cycle_energy), cfg);
}

std::vector<HopRecord> apexes(std::initializer_list<double> values) {
  std::vector<HopRecord> out;
  for (double v : values) {
    HopRecord r;
    r.apex_height = v;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("steady_state_apex") {
  EpisodeConfig cfg;
  std::vector<HopRecord> constant(12, HopRecord{});
  for (auto& r : constant) r.apex_height = 0.05;
  const auto s = steady_state_apex(constant, cfg);
  CHECK(s.mean == doctest::Approx(0.05));
  CHECK(s.std == 0.0);
  CHECK(s.is_steady);

  const auto alt = apexes({0.05, 0.06, 0.05, 0.06, 0.05, 0.06, 0.05, 0.06, 0.05, 0.06});
  const auto a = steady_state_apex(alt, cfg);
  CHECK(a.mean == doctest::Approx(0.055));
  CHECK(a.std == doctest::Approx(5.27e-3).epsilon(1e-3));
  CHECK_FALSE(a.is_steady);

  // Only the last window counts.
  auto tail = apexes({9.0, 9.0});
  tail.insert(tail.end(), constant.begin(), constant.begin() + 10);
  CHECK(steady_state_apex(tail, cfg).is_steady);

  try {
    steady_state_apex(apexes({0.05, 0.05}), cfg);
    FAIL("expected InsufficientHops");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientHops);
  }
  cfg.skip_initial_hops = 5;
  CHECK_THROWS_AS(steady_state_apex(constant, cfg), Error);
}

TEST_CASE("limit cycle at the phase-portrait parameters") {
  const auto first = cycle();
  REQUIRE(first.status == EpisodeStatus::SteadyHopping);
  CHECK(first.precompression == doctest::Approx(0.026).epsilon(0.5 / 26));
  CHECK(first.steady_apex_std < 1e-6);
  // Frozen after agreement with the fixed-step oracle (acceptance suite).
  CHECK(std::abs(first.steady_apex_mean - 0.011614929947) < 1e-9);

  const double a = first.steady_apex_mean;
  const double p = first.precompression;
  const double sag = cycle_hopper.toe_mass() * kStandardGravity / cycle_hopper.leg_stiffness();
  for (double m : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    // Toe drop height that puts the body m steady apexes above rest.
    const auto o = cycle(m * a + p - sag);
    REQUIRE(o.status == EpisodeStatus::SteadyHopping);
    CHECK(std::abs(o.steady_apex_mean - a) < 1e-4);
  }
}

TEST_CASE("mid-grid reference parameters") {
  const auto hopper = HopperParams::reference(4000, 35);
  const GroundProfile ground(3800, 45);
  EpisodeConfig cfg;

  SUBCASE("1 J is too little: the body stops clearing rest height") {
    const auto o = run_episode(hopper, ground, EnergyBudget(1.0), cfg);
    CHECK(o.status == EpisodeStatus::FailedLiftoff);
    REQUIRE(o.hops.size() == 4);
    CHECK(o.hops.back().apex_height <= 0.0);
    // Oracle value 0.025791944544 m.
    CHECK(std::abs(o.hops.front().apex_height - 0.0257919445307) < 1e-9);
  }
  SUBCASE("1.56 J hops steadily; oracle cross-check") {
    const auto o = run_episode(hopper, ground, EnergyBudget(1.56), cfg);
    REQUIRE(o.status == EpisodeStatus::SteadyHopping);
    CHECK(std::abs(o.steady_apex_mean - 0.00319350613852) < 1e-9);
    oracle::Params op;
    op.energy = 1.56;
    const auto ref = oracle::Rk4Hopper(op).run();
    REQUIRE(ref.ok);
    CHECK(std::abs(ref.tail_mean() - o.steady_apex_mean) < 1e-6);
  }
}

TEST_CASE("stiff leg on the softest, most damped cell fails") {
  const auto o = run_episode(HopperParams::reference(5000, 35), GroundProfile(2400, 75),
                             EnergyBudget(1.0), EpisodeConfig{});
  CHECK(o.status == EpisodeStatus::FailedLiftoff);
  CHECK(std::isnan(o.steady_apex_mean));
  CHECK_FALSE(o.failure_reason.empty());
}

TEST_CASE("guard residuals and phase alternation") {
  const auto o = cycle(0.2, true);
  REQUIRE(o.status == EpisodeStatus::SteadyHopping);
  const double l = cycle_hopper.rest_length();
  int touchdowns = 0, liftoffs = 0;
  Phase last = o.trajectory.front().phase;
  CHECK(last == Phase::Flight);
  for (std::size_t i = 1; i < o.trajectory.size(); ++i) {
    const auto& s = o.trajectory[i];
    CHECK(s.time >= o.trajectory[i - 1].time);
    if (s.phase == last) continue;
    if (s.phase == Phase::Stance) {
      ++touchdowns;
      CHECK(std::abs(s.toe_pos) <= 1e-9);
    } else {
      ++liftoffs;
      CHECK(std::abs((s.body_pos - s.toe_pos) - l) <= 1e-9);
    }
    last = s.phase;
  }
  CHECK(touchdowns == 60);
  CHECK(liftoffs == 60);

  for (std::size_t k = 0; k < o.hops.size(); ++k) {
    const auto& h = o.hops[k];
    CHECK(h.index == static_cast<int>(k));
    CHECK(h.touchdown_time < h.liftoff_time);
    CHECK(h.liftoff_time <= h.apex_time);
    if (k + 1 < o.hops.size()) CHECK(h.apex_time < o.hops[k + 1].touchdown_time);
  }
}

TEST_CASE("energy bookkeeping") {
  const auto o = cycle(0.1, true);
  REQUIRE(o.status == EpisodeStatus::SteadyHopping);
  const auto audit = energy_audit(o, cycle_hopper, cycle_ground);
  REQUIRE(audit.size() == o.hops.size());
  for (std::size_t k = 0; k < audit.size(); ++k) {
    CHECK(audit[k].injected == doctest::Approx(o.hops[k].injected_energy).epsilon(1e-9));
    CHECK(audit[k].dissipated == doctest::Approx(o.hops[k].dissipated_energy).epsilon(1e-6));
  }
  for (std::size_t k = o.hops.size() - 10; k < o.hops.size(); ++k) {
    const auto& h = o.hops[k];
    CHECK(std::abs(h.injected_energy - h.dissipated_energy) <= 0.01 * h.injected_energy);
    CHECK(h.injected_energy == doctest::Approx(h.touchdown_injection + h.liftoff_injection));
    // The liftoff switch always stores k p^2 / 2 = E relative to the new setpoint.
    CHECK(h.liftoff_injection == doctest::Approx(cycle_energy).epsilon(1e-9));
  }
  CHECK_THROWS_AS(energy_audit(cycle(), cycle_hopper, cycle_ground), Error);
}

TEST_CASE("undamped hopper never settles") {
  // With no damping the toe keeps vibrating after each liftoff, so the
  // touchdown switch can take energy out and the ground spring energy left
  // at liftoff is discarded. Apex is erratic instead of settling.
  const auto hopper = HopperParams::reference(4000, 0.0);
  const GroundProfile ground(1e6, 0.0);
  EpisodeConfig cfg;
  cfg.max_hops = 30;
  const auto o = run_episode(hopper, ground, EnergyBudget(0.2), cfg);
  CHECK(o.status != EpisodeStatus::SteadyHopping);
  REQUIRE(o.hops.size() >= 3);
  for (std::size_t k = 0; k + 1 < o.hops.size(); ++k) {
    const auto& h = o.hops[k];
    CHECK(h.leg_damper_loss == 0.0);
    CHECK(h.ground_damper_loss == 0.0);
    CHECK(h.dissipated_energy == doctest::Approx(h.ground_residual_loss));
  }
}

TEST_CASE("transient decays monotonically from a high drop") {
  const auto o = cycle(0.3);
  REQUIRE(o.status == EpisodeStatus::SteadyHopping);
  const double band = std::max(2.0 * o.steady_apex_std, 1e-9);
  for (std::size_t k = 1; k < o.hops.size(); ++k) {
    if (std::abs(o.hops[k - 1].apex_height - o.steady_apex_mean) <= band) break;
    CHECK(o.hops[k].apex_height < o.hops[k - 1].apex_height);
  }
}

TEST_CASE("episode statuses") {
  SUBCASE("too few hops to settle") {
    EpisodeConfig cfg;
    cfg.max_hops = 12;
    const auto o = run_episode(cycle_hopper, cycle_ground, EnergyBudget(cycle_energy), cfg);
    CHECK(o.status == EpisodeStatus::NoConvergence);
    CHECK(o.hops.size() == 12);
    CHECK(o.steady_apex_std > 1e-6);
  }
  SUBCASE("stance timeout") {
    EpisodeConfig cfg;
    cfg.max_stance_duration = 0.01;
    const auto o = run_episode(cycle_hopper, cycle_ground, EnergyBudget(cycle_energy), cfg);
    CHECK(o.status == EpisodeStatus::FailedLiftoff);
    CHECK(o.failure_reason.find("max_stance_duration") != std::string::npos);
  }
  SUBCASE("chatter guard") {
    EpisodeConfig cfg;
    cfg.chatter_interval = 5.0;
    const auto o = run_episode(cycle_hopper, cycle_ground, EnergyBudget(cycle_energy), cfg);
    CHECK(o.status == EpisodeStatus::FailedLiftoff);
    CHECK(o.failure_reason.find("chatter") != std::string::npos);
  }
  SUBCASE("experiment guard leaves stance after a fixed time") {
    EpisodeConfig cfg;
    cfg.guard_mode = GuardMode::Experiment;
    const auto o = run_episode(cycle_hopper, cycle_ground, EnergyBudget(cycle_energy), cfg);
    REQUIRE(!o.hops.empty());
    for (const auto& h : o.hops) {
      if (h.liftoff_time > 0.0) {
        CHECK(h.liftoff_time - h.touchdown_time == doctest::Approx(0.150).epsilon(1e-12));
      }
    }
  }
  SUBCASE("energy that cannot be stored in the leg") {
    try {
      run_episode(HopperParams::reference(3000, 35), cycle_ground, EnergyBudget(100.0),
                  EpisodeConfig{});
      FAIL("expected CompressionExceedsLeg");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CompressionExceedsLeg);
    }
  }
}

TEST_CASE("config validation") {
  EpisodeConfig cfg;
  cfg.max_hops = 10;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.steady_window = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.drop_height = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.chatter_interval = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("determinism") {
  const auto a = cycle(0.15);
  const auto b = cycle(0.15);
  REQUIRE(a.hops.size() == b.hops.size());
  for (std::size_t k = 0; k < a.hops.size(); ++k) {
    CHECK(a.hops[k].apex_height == b.hops[k].apex_height);
    CHECK(a.hops[k].touchdown_time == b.hops[k].touchdown_time);
  }
  CHECK(a.steady_apex_mean == b.steady_apex_mean);
}
