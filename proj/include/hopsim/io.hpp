#pragma once

// CSV / JSON serialization. Heights in files are millimeters; everything
// else is SI. Numbers are printed with fixed formats so reruns are
// byte-identical.

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "hopsim/emulator_model.hpp"
#include "hopsim/hopping_sim.hpp"
#include "hopsim/stiffness_sweep.hpp"

namespace hopsim::io {

std::string format_number(double value, int precision);

/// time_s, phase, x_b_m, v_b_m_s, x_t_m, v_t_m_s
void write_trajectory_csv(std::ostream& os, const EpisodeOutcome& outcome);

/// One row per cell x stiffness.
void write_sweep_csv(std::ostream& os, const SweepResult& result);

/// k_g_N_m, d_g_Ns_m, winners (semicolon-joined) or FAIL.
void write_winner_map_csv(std::ostream& os, const WinnerMap& map);
WinnerMap read_winner_map_csv(std::istream& is);

/// k_g_N_m, d_g_Ns_m, success (1/0).
void write_success_region_csv(std::ostream& os, const SuccessRegion& region);

/// Header line "mass_kg=<value>", then "t_s,r_m", then samples.
emulator::OscillationTrace read_trace_csv(std::istream& is);
void write_trace_csv(std::ostream& os, const emulator::OscillationTrace& trace);

inline constexpr const char* kCalibrationHeader = "Kp,Kd,kg_N_m,dg_Ns_m,r2";
void write_calibration_row(std::ostream& os, const emulator::PdGains& gains,
                           const emulator::OscillatorFit& fit);
/// Rows of a calibration table, as (gains, fit) pairs carrying only the
/// derived ground profile and R^2.
std::vector<std::pair<emulator::PdGains, emulator::OscillatorFit>> read_calibration_csv(
    std::istream& is);

nlohmann::ordered_json episode_summary(const EpisodeOutcome& outcome, const HopperParams& hopper,
                                       const GroundProfile& ground, double energy);
nlohmann::ordered_json fit_summary(const emulator::OscillatorFit& fit, double mass);

/// File-name tag for a (leg damping, energy) pair, e.g. "dl35_E1.56".
std::string pair_tag(double leg_damping, double energy);

}  // namespace hopsim::io
