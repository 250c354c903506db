#pragma once

// Grid search over ground profiles x leg stiffness (x leg damping x input
// energy) and the maps derived from it.

#include <cstddef>
#include <string>
#include <vector>

#include "hopsim/core_model.hpp"
#include "hopsim/hopping_sim.hpp"
#include "hopsim/integrator.hpp"

namespace hopsim {

/// Inclusive arithmetic range [start : step : end].
struct GridRange {
  double start = 0.0;
  double step = 1.0;
  double end = 0.0;

  std::size_t size() const;
  double at(std::size_t i) const { return start + step * static_cast<double>(i); }
  std::vector<double> values() const;
};

struct SweepSpec {
  double body_mass = 2.5;
  double toe_mass = 0.3;
  double rest_length = 0.0975;
  std::vector<double> leg_stiffness{3000.0, 4000.0, 5000.0};
  std::vector<double> leg_damping{30.0, 35.0, 40.0};
  GridRange ground_stiffness{2400.0, 200.0, 5400.0};
  GridRange ground_damping{15.0, 5.0, 75.0};
  std::vector<double> energies{1.0, 1.56, 2.25};
  double tie_threshold = 1e-3;
  EpisodeConfig episode;
  IntegratorConfig integrator;
  int threads = 1;

  void validate() const;
};

struct StiffnessOutcome {
  double leg_stiffness = 0.0;
  EpisodeStatus status = EpisodeStatus::NumericalFailure;
  double apex_mean = 0.0;
  double apex_std = 0.0;
  std::string failure_reason;

  bool succeeded() const { return status == EpisodeStatus::SteadyHopping; }
};

struct CellResult {
  double leg_damping = 0.0;
  double energy = 0.0;
  double ground_stiffness = 0.0;
  double ground_damping = 0.0;
  std::size_t kg_index = 0;
  std::size_t dg_index = 0;
  // One entry per SweepSpec::leg_stiffness, in spec order.
  std::vector<StiffnessOutcome> outcomes;
  // Stiffness values within the tie threshold of the best apex, ascending.
  std::vector<double> winners;
};

struct SweepResult {
  SweepSpec spec;
  // Ordered by (leg damping, energy, k_g, d_g) with d_g fastest.
  std::vector<CellResult> cells;

  std::size_t ground_cells() const;
  std::size_t cell_index(std::size_t damping_idx, std::size_t energy_idx, std::size_t kg_idx,
                         std::size_t dg_idx) const;
  const CellResult& cell(std::size_t damping_idx, std::size_t energy_idx, std::size_t kg_idx,
                         std::size_t dg_idx) const {
    return cells[cell_index(damping_idx, energy_idx, kg_idx, dg_idx)];
  }
};

SweepResult run_sweep(const SweepSpec& spec);

/// Winner set of one cell. Failed stiffness values never win. Throws
/// EmptyCell when every stiffness failed.
std::vector<double> cell_winners(const CellResult& cell, double tie_threshold);

struct WinnerMap {
  double leg_damping = 0.0;
  double energy = 0.0;
  GridRange ground_stiffness;
  GridRange ground_damping;
  // Indexed [kg * n_dg + dg]; an empty set marks an unreachable cell.
  std::vector<std::vector<double>> winners;

  const std::vector<double>& at(std::size_t kg_idx, std::size_t dg_idx) const {
    return winners[kg_idx * ground_damping.size() + dg_idx];
  }
};

/// One map per (leg damping, energy) pair, in sweep order.
std::vector<WinnerMap> best_stiffness_map(const SweepResult& result, double tie_threshold);

struct SuccessRegion {
  double energy = 0.0;
  double leg_damping = 0.0;
  GridRange ground_stiffness;
  GridRange ground_damping;
  // Indexed [kg * n_dg + dg].
  std::vector<bool> success;

  bool at(std::size_t kg_idx, std::size_t dg_idx) const {
    return success[kg_idx * ground_damping.size() + dg_idx];
  }
  std::size_t count() const;
};

/// Cells where at least one stiffness reached steady hopping. Throws
/// UnknownEnergyLevel when the sweep did not run at `energy` (or at
/// `leg_damping`).
SuccessRegion success_region(const SweepResult& result, double energy, double leg_damping);
/// Same, for sweeps with a single leg damping value.
SuccessRegion success_region(const SweepResult& result, double energy);

/// Winner of the grid cell nearest to the query in normalized grid
/// coordinates; tied cells resolve to the softest winner.
double select_stiffness(const WinnerMap& map, const GroundProfile& query);

struct TrendViolation {
  double leg_stiffness = 0.0;
  double ground_stiffness = 0.0;
  double ground_damping = 0.0;
  // "damping" (apex rose with d_g) or "stiffness" (apex fell with k_g).
  std::string axis;
  double apex_here = 0.0;
  double apex_next = 0.0;
};

/// Monotonicity of steady apex between neighboring succeeded cells:
/// non-increasing in d_g, non-decreasing in k_g.
std::vector<TrendViolation> check_trends(const SweepResult& result, double leg_damping,
                                         double energy);

}  // namespace hopsim
