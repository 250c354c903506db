#pragma once

// Minimal SVG figures for sweep maps and phase portraits. Axes: k_g along
// x, d_g along y (increasing upward).

#include <iosfwd>
#include <string>
#include <vector>

#include "hopsim/hopping_sim.hpp"
#include "hopsim/stiffness_sweep.hpp"

namespace hopsim::svg {

/// One color per leg stiffness; tied cells are drawn as stripes of the tied
/// colors, unreachable cells are left blank.
void write_winner_map(std::ostream& os, const WinnerMap& map,
                      const std::vector<double>& leg_stiffness);

/// Steady apex (mm) of one leg stiffness per cell; failed cells blank.
void write_apex_map(std::ostream& os, const SweepResult& result, std::size_t damping_idx,
                    std::size_t energy_idx, std::size_t stiffness_idx);

/// Cells shaded by the lowest energy level whose success region contains
/// them. `regions` must share one grid and be ordered by increasing energy.
void write_success_overlay(std::ostream& os, const std::vector<SuccessRegion>& regions);

struct PortraitCurve {
  std::string label;
  std::vector<TrajectorySample> samples;
};

/// Body velocity against body height above the leg rest length.
void write_phase_portrait(std::ostream& os, const std::vector<PortraitCurve>& curves,
                          double rest_length);

}  // namespace hopsim::svg
