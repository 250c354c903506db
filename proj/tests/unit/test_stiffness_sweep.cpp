#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "hopsim/error.hpp"
#include "hopsim/io.hpp"
#include "hopsim/stiffness_sweep.hpp"

using namespace hopsim;

#ifndef HOPSIM_GOLDEN_DIR
#error "HOPSIM_GOLDEN_DIR must point at tests/golden"
#endif

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::Io;
}

SweepSpec small_spec() {
  SweepSpec s;
  s.leg_damping = {35};
  s.energies = {1.0, 2.25};
  s.ground_stiffness = {2400, 1000, 5400};
  s.ground_damping = {15, 20, 75};
  return s;
}

CellResult manual_cell(std::initializer_list<std::pair<double, double>> apex_by_k) {
  CellResult c;
  for (auto [k, apex] : apex_by_k) {
    StiffnessOutcome o;
    o.leg_stiffness = k;
    if (std::isnan(apex)) {
      o.status = EpisodeStatus::FailedLiftoff;
    } else {
      o.status = EpisodeStatus::SteadyHopping;
      o.apex_mean = apex;
    }
    c.outcomes.push_back(o);
  }
  return c;
}

WinnerMap manual_map() {
  WinnerMap m;
  m.ground_stiffness = {1000, 1000, 3000};
  m.ground_damping = {10, 10, 20};
  // [kg * 2 + dg]
  m.winners = {{3000}, {}, {4000, 5000}, {3000, 4000}, {5000}, {4000}};
  return m;
}

}  // namespace

TEST_CASE("grid ranges") {
  SweepSpec s;
  CHECK(s.ground_stiffness.size() == 16);
  CHECK(s.ground_damping.size() == 13);
  CHECK(s.ground_stiffness.at(15) == 5400);
  CHECK(s.ground_damping.at(12) == 75);
  CHECK(GridRange{0.1, 0.1, 0.3}.size() == 3);
  CHECK(GridRange{5, 1, 5}.size() == 1);
  CHECK(GridRange{5, 1, 4}.size() == 0);
  CHECK(GridRange{5, 0, 9}.size() == 0);
  CHECK(GridRange{15, 5, 75}.values().back() == 75);
}

TEST_CASE("spec validation") {
  CHECK_NOTHROW(SweepSpec{}.validate());
  SweepSpec s;
  s.leg_stiffness.clear();
  CHECK(code_of([&] { s.validate(); }) == ErrorCode::InvalidArgument);
  s = {};
  s.energies = {};
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.ground_damping.step = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.ground_stiffness = {3000, 100, 2000};
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.tie_threshold = -1e-3;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.threads = 0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("cell winners") {
  const auto c = manual_cell({{3000, 0.040}, {4000, 0.0405}, {5000, 0.0412}});
  CHECK(cell_winners(c, 1e-3) == std::vector<double>{4000, 5000});
  CHECK(cell_winners(c, 0.0) == std::vector<double>{5000});
  CHECK(cell_winners(c, 0.01) == std::vector<double>{3000, 4000, 5000});

  const double nan = std::nan("");
  const auto partial = manual_cell({{3000, 0.010}, {4000, nan}, {5000, nan}});
  CHECK(cell_winners(partial, 1.0) == std::vector<double>{3000});
  const auto dead = manual_cell({{3000, nan}, {4000, nan}});
  CHECK(code_of([&] { cell_winners(dead, 1e-3); }) == ErrorCode::EmptyCell);
}

TEST_CASE("select_stiffness") {
  const auto m = manual_map();
  CHECK(select_stiffness(m, GroundProfile(1000, 10)) == 3000);
  CHECK(select_stiffness(m, GroundProfile(2000, 10)) == 4000);  // tie -> softest
  CHECK(select_stiffness(m, GroundProfile(3000, 20)) == 4000);
  // Nearest node in normalized coordinates: (0.6, 0.4) -> (1, 0).
  CHECK(select_stiffness(m, GroundProfile(1600, 14)) == 4000);
  // (1.4, 0.6) -> (1, 1).
  CHECK(select_stiffness(m, GroundProfile(2400, 16)) == 3000);
  CHECK(code_of([&] { select_stiffness(m, GroundProfile(1000, 20)); }) ==
        ErrorCode::UnreachableCell);
  CHECK(code_of([&] { select_stiffness(m, GroundProfile(3500, 10)); }) == ErrorCode::OutOfDomain);
  CHECK(code_of([&] { select_stiffness(m, GroundProfile(1000, 25)); }) == ErrorCode::OutOfDomain);
  CHECK(code_of([&] { select_stiffness(m, GroundProfile(999, 10)); }) == ErrorCode::OutOfDomain);
}

TEST_CASE("single-point sweep equals one episode") {
  SweepSpec s;
  s.leg_stiffness = {4300};
  s.leg_damping = {35};
  s.energies = {1.5};
  s.ground_stiffness = {4400, 200, 4400};
  s.ground_damping = {35, 5, 35};
  const auto r = run_sweep(s);
  REQUIRE(r.cells.size() == 1);
  REQUIRE(r.ground_cells() == 1);
  const auto ep = run_episode(HopperParams::reference(4300, 35), GroundProfile(4400, 35),
                              EnergyBudget(1.5), s.episode, s.integrator);
  CHECK(r.cells[0].outcomes[0].status == ep.status);
  CHECK(r.cells[0].outcomes[0].apex_mean == ep.steady_apex_mean);
  CHECK(r.cells[0].winners == std::vector<double>{4300});
}

TEST_CASE("small sweep: ordering, winners, regions, threads") {
  auto spec = small_spec();
  const auto serial = run_sweep(spec);
  spec.threads = 4;
  const auto parallel = run_sweep(spec);
  REQUIRE(serial.cells.size() == 2 * 16);
  REQUIRE(parallel.cells.size() == serial.cells.size());

  std::ostringstream a, b;
  io::write_sweep_csv(a, serial);
  io::write_sweep_csv(b, parallel);
  CHECK(a.str() == b.str());

  // Ordered by (d_l, E, k_g, d_g) with d_g fastest.
  CHECK(serial.cells[0].ground_damping == 15);
  CHECK(serial.cells[1].ground_damping == 35);
  CHECK(serial.cells[4].ground_stiffness == 3400);
  CHECK(serial.cells[16].energy == 2.25);
  CHECK(&serial.cell(0, 1, 2, 3) == &serial.cells[16 + 2 * 4 + 3]);

  for (const auto& c : serial.cells) {
    bool any = false;
    double best = -1.0;
    for (const auto& o : c.outcomes) {
      if (!o.succeeded()) continue;
      any = true;
      best = std::max(best, o.apex_mean);
    }
    CHECK(any == !c.winners.empty());
    // Winner dominance.
    for (const auto& o : c.outcomes) {
      const bool wins = std::find(c.winners.begin(), c.winners.end(), o.leg_stiffness) !=
                        c.winners.end();
      if (wins) CHECK(o.apex_mean >= best - spec.tie_threshold);
      if (!wins && o.succeeded()) CHECK(o.apex_mean < best - spec.tie_threshold);
    }
  }

  const auto maps = best_stiffness_map(serial, spec.tie_threshold);
  REQUIRE(maps.size() == 2);
  CHECK(maps[1].energy == 2.25);
  const auto low = success_region(serial, 1.0);
  const auto high = success_region(serial, 2.25);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (low.at(i, j)) CHECK(high.at(i, j));
      CHECK(low.at(i, j) == !maps[0].at(i, j).empty());
    }
  }
  CHECK(code_of([&] { success_region(serial, 1.56); }) == ErrorCode::UnknownEnergyLevel);
  CHECK(code_of([&] { success_region(serial, 1.0, 30.0); }) == ErrorCode::UnknownEnergyLevel);
}

TEST_CASE("empty results give empty regions") {
  SweepResult r;
  r.spec = small_spec();
  r.spec.ground_stiffness = {1, 1, 0};
  const auto region = success_region(r, 1.0);
  CHECK(region.count() == 0);
  CHECK(region.success.empty());
}

TEST_CASE("default grid at d_l = 35, E = 1 J matches the golden sweep") {
  SweepSpec s;
  s.leg_damping = {35};
  s.energies = {1.0};
  const auto r = run_sweep(s);
  CHECK(r.ground_cells() == 208);

  std::ostringstream csv;
  io::write_sweep_csv(csv, r);
  std::ifstream golden(std::string(HOPSIM_GOLDEN_DIR) + "/sweep_dl35_E1.csv");
  REQUIRE(golden.good());
  std::istringstream got(csv.str());
  std::string want_line, got_line;
  int rows = 0;
  while (std::getline(golden, want_line)) {
    REQUIRE(std::getline(got, got_line));
    if (rows++ == 0) {
      CHECK(got_line == want_line);
      continue;
    }
    // Same keys, status and winner flag; apex within 1e-6 mm.
    auto split = [](const std::string& l) {
      std::vector<std::string> f;
      std::stringstream ss(l);
      std::string x;
      while (std::getline(ss, x, ',')) f.push_back(x);
      if (!l.empty() && l.back() == ',') f.emplace_back();
      return f;
    };
    const auto w = split(want_line), g = split(got_line);
    REQUIRE(w.size() == 9);
    REQUIRE(g.size() == 9);
    for (int k : {0, 1, 2, 3, 4, 5, 8}) CHECK(w[k] == g[k]);
    if (!w[6].empty()) CHECK(std::abs(std::stod(w[6]) - std::stod(g[6])) < 1e-6);
  }
  CHECK(rows == 1 + 208 * 3);

  const auto maps = best_stiffness_map(r, s.tie_threshold);
  REQUIRE(maps.size() == 1);
  std::ifstream wm(std::string(HOPSIM_GOLDEN_DIR) + "/winner_map_dl35_E1.csv");
  const auto golden_map = io::read_winner_map_csv(wm);
  CHECK(golden_map.winners == maps[0].winners);
  CHECK(success_region(r, 1.0).count() == 107);
  CHECK(check_trends(r, 35, 1.0).empty());

  // Stiffest leg on the hardest, least damped ground.
  CHECK(maps[0].at(15, 0) == std::vector<double>{5000});
  // Softest, most damped corner is blank.
  CHECK(maps[0].at(0, 12).empty());
  // Hard, mid-damped ground: the stiff or medium leg.
  const double pick = select_stiffness(maps[0], GroundProfile(4420, 35.2));
  CHECK((pick == 4000 || pick == 5000));
}
