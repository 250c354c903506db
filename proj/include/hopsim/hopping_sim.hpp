#pragma once

// Multi-hop execution of the flight/stance state machine with a fixed energy
// injection per hop, plus steady-state and energy bookkeeping.

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hopsim/core_model.hpp"
#include "hopsim/integrator.hpp"

namespace hopsim {

enum class GuardMode { Simulation, Experiment };

enum class EpisodeStatus { SteadyHopping, FailedLiftoff, NoConvergence, NumericalFailure };

const char* to_string(GuardMode mode);
const char* to_string(EpisodeStatus status);

struct EpisodeConfig {
  int max_hops = 60;
  int steady_window = 10;
  double steady_std_tol = 1e-6;
  double drop_height = 0.1;
  GuardMode guard_mode = GuardMode::Simulation;
  double stance_fixed_duration = 0.150;
  double max_stance_duration = 1.0;
  double max_flight_duration = 5.0;
  // Two touchdowns closer than this end the episode as a failed liftoff.
  double chatter_interval = 1e-3;
  // Hops excluded from the steady-state statistics.
  int skip_initial_hops = 0;
  bool record_trajectory = false;
  PhysicsOptions physics;

  void validate() const;
};

/// One hop spans touchdown k up to (not including) touchdown k + 1.
struct HopRecord {
  int index = 0;
  double touchdown_time = 0.0;
  double liftoff_time = 0.0;
  double apex_time = 0.0;
  double apex_height = 0.0;
  // Setpoint switches at touchdown and liftoff.
  double injected_energy = 0.0;
  double dissipated_energy = 0.0;
  double touchdown_injection = 0.0;
  double liftoff_injection = 0.0;
  double leg_damper_loss = 0.0;
  double ground_damper_loss = 0.0;
  // Ground spring energy discarded when the toe leaves the ground.
  double ground_residual_loss = 0.0;
};

struct TrajectorySample {
  double time = 0.0;
  Phase phase = Phase::Flight;
  double body_pos = 0.0;
  double body_vel = 0.0;
  double toe_pos = 0.0;
  double toe_vel = 0.0;
  double leg_damper_loss = 0.0;
  double ground_damper_loss = 0.0;
};

struct EpisodeOutcome {
  EpisodeStatus status = EpisodeStatus::NumericalFailure;
  double steady_apex_mean = std::numeric_limits<double>::quiet_NaN();
  double steady_apex_std = std::numeric_limits<double>::quiet_NaN();
  double precompression = 0.0;
  std::vector<HopRecord> hops;
  // Populated only with EpisodeConfig::record_trajectory. Phase boundaries
  // appear twice: once as the last sample of the old phase, once as the
  // first sample of the new one.
  std::vector<TrajectorySample> trajectory;
  std::string failure_reason;
};

struct SteadyStats {
  double mean = 0.0;
  double std = 0.0;
  bool is_steady = false;
};

EpisodeOutcome run_episode(const HopperParams& hopper, const GroundProfile& ground,
                           const EnergyBudget& energy, const EpisodeConfig& cfg,
                           const IntegratorConfig& icfg = {});

/// Mean and sample standard deviation of the last `steady_window` apex
/// heights (after `skip_initial_hops`).
SteadyStats steady_state_apex(std::span<const HopRecord> records, const EpisodeConfig& cfg);

struct HopEnergy {
  double injected = 0.0;
  double dissipated = 0.0;
};

/// Recomputes per-hop injected and dissipated energy from a recorded
/// trajectory. Throws MissingTrajectory when none was kept.
std::vector<HopEnergy> energy_audit(const EpisodeOutcome& outcome, const HopperParams& hopper,
                                    const GroundProfile& ground);

}  // namespace hopsim
