#include "hopsim/hopping_sim.hpp"

#include <cmath>
#include <numeric>
#include <optional>

#include "hopsim/error.hpp"

namespace hopsim {

namespace {

// Integrated state: kinematics plus running damper losses.
constexpr std::size_t kDim = 6;
using Vec = StateVec<kDim>;
enum : std::size_t { kXb, kVb, kXt, kVt, kLegLoss, kGroundLoss };

HybridState to_hybrid(Phase phase, double t, const Vec& y, double precompression) {
  HybridState s;
  s.phase = phase;
  s.time = t;
  s.body_pos = y[kXb];
  s.body_vel = y[kVb];
  s.toe_pos = y[kXt];
  s.toe_vel = y[kVt];
  s.precompression = precompression;
  return s;
}

struct PhaseRun {
  PhaseTrajectory<kDim> traj;
  std::vector<double> apex_times;
  std::vector<Vec> apex_states;
};

class EpisodeRunner {
 public:
  EpisodeRunner(const HopperParams& hopper, const GroundProfile& ground, double precompression,
                const EpisodeConfig& cfg, const IntegratorConfig& icfg)
      : hopper_(hopper), ground_(ground), p_(precompression), cfg_(cfg), icfg_(icfg) {}

  EpisodeOutcome run();

 private:
  PhaseRun integrate(Phase phase, double t0, const Vec& y0);
  void record(Phase phase, const PhaseTrajectory<kDim>& traj);
  double switch_energy(Phase from, Phase to, const Vec& y) const;

  const HopperParams& hopper_;
  const GroundProfile& ground_;
  double p_;
  const EpisodeConfig& cfg_;
  const IntegratorConfig& icfg_;
  EpisodeOutcome out_;
};

PhaseRun EpisodeRunner::integrate(Phase phase, double t0, const Vec& y0) {
  const double l = hopper_.rest_length();
  const double p = p_;
  const HopperParams& hop = hopper_;
  const GroundProfile& gnd = ground_;
  const PhysicsOptions& phys = cfg_.physics;

  auto rhs = [&, phase](double t, const Vec& y) {
    const HybridState s = to_hybrid(phase, t, y, p);
    const StateRate r = derivatives(s, hop, gnd, phys);
    const double rel_vel = y[kVb] - y[kVt];
    Vec dy;
    dy[kXb] = r.body_vel;
    dy[kVb] = r.body_acc;
    dy[kXt] = r.toe_vel;
    dy[kVt] = r.toe_acc;
    dy[kLegLoss] = hop.leg_damping() * rel_vel * rel_vel;
    dy[kGroundLoss] = phase == Phase::Stance ? gnd.damping() * y[kVt] * y[kVt] : 0.0;
    return dy;
  };

  IntegratorConfig icfg = icfg_;
  std::vector<EventSpec<kDim>> events;
  if (phase == Phase::Flight) {
    icfg.max_phase_duration = cfg_.max_flight_duration;
    events.push_back({"touchdown", [](double, const Vec& y) { return y[kXt]; },
                      CrossingDirection::Falling, true});
    events.push_back({"apex", [](double, const Vec& y) { return y[kVb]; },
                      CrossingDirection::Falling, false});
  } else if (cfg_.guard_mode == GuardMode::Simulation) {
    icfg.max_phase_duration = cfg_.max_stance_duration;
    events.push_back({"liftoff", [l](double, const Vec& y) { return (y[kXb] - y[kXt]) - l; },
                      CrossingDirection::Rising, true});
  } else {
    icfg.max_phase_duration = cfg_.stance_fixed_duration;
  }
  if (phase == Phase::Stance && cfg_.physics.non_sticking_ground) {
    events.push_back({"ground_release",
                      [&gnd](double, const Vec& y) {
                        return -gnd.stiffness() * y[kXt] - gnd.damping() * y[kVt];
                      },
                      CrossingDirection::Falling, true});
  }

  PhaseRun run;
  run.traj = integrate_phase<kDim>({t0, y0}, rhs, events, icfg, cfg_.record_trajectory);
  if (phase == Phase::Flight) {
    for (const auto& hit : run.traj.events) {
      run.apex_times.push_back(hit.t);
      run.apex_states.push_back(hit.y);
    }
  }
  return run;
}

void EpisodeRunner::record(Phase phase, const PhaseTrajectory<kDim>& traj) {
  if (!cfg_.record_trajectory) return;
  for (const auto& s : traj.samples) {
    out_.trajectory.push_back({s.t, phase, s.y[kXb], s.y[kVb], s.y[kXt], s.y[kVt],
                               s.y[kLegLoss], s.y[kGroundLoss]});
  }
}

double EpisodeRunner::switch_energy(Phase from, Phase to, const Vec& y) const {
  const double before = leg_spring_energy(to_hybrid(from, 0.0, y, p_), hopper_);
  const double after = leg_spring_energy(to_hybrid(to, 0.0, y, p_), hopper_);
  return after - before;
}

EpisodeOutcome EpisodeRunner::run() {
  out_.precompression = p_;
  const HybridState start =
      flight_equilibrium_drop_state(hopper_, p_, cfg_.drop_height, cfg_.physics);
  Vec y{start.body_pos, start.body_vel, start.toe_pos, start.toe_vel, 0.0, 0.0};
  double t = 0.0;
  const double rest_height = standing_rest_height(hopper_);

  // Initial drop.
  PhaseRun flight = integrate(Phase::Flight, t, y);
  record(Phase::Flight, flight.traj);
  if (!flight.traj.terminal_event) {
    out_.status = EpisodeStatus::FailedLiftoff;
    out_.failure_reason = "initial drop never reached the ground";
    return out_;
  }
  t = flight.traj.terminal.t;
  y = flight.traj.terminal.y;

  std::optional<double> previous_touchdown;
  for (int hop = 0; hop < cfg_.max_hops; ++hop) {
    HopRecord rec;
    rec.index = hop;
    rec.touchdown_time = t;
    if (previous_touchdown && t - *previous_touchdown < cfg_.chatter_interval) {
      out_.status = EpisodeStatus::FailedLiftoff;
      out_.failure_reason = "touchdown chatter";
      return out_;
    }
    previous_touchdown = t;
    const Vec y_touchdown = y;
    rec.touchdown_injection = switch_energy(Phase::Flight, Phase::Stance, y);

    PhaseRun stance = integrate(Phase::Stance, t, y);
    record(Phase::Stance, stance.traj);
    if (cfg_.guard_mode == GuardMode::Simulation && !stance.traj.terminal_event) {
      out_.status = EpisodeStatus::FailedLiftoff;
      out_.failure_reason = "leg length not restored within max_stance_duration";
      return out_;
    }
    t = stance.traj.terminal.t;
    y = stance.traj.terminal.y;
    rec.liftoff_time = t;
    rec.liftoff_injection = switch_energy(Phase::Stance, Phase::Flight, y);
    rec.ground_residual_loss = 0.5 * ground_.stiffness() * y[kXt] * y[kXt];
    const Vec y_liftoff = y;

    flight = integrate(Phase::Flight, t, y);
    record(Phase::Flight, flight.traj);
    double apex_pos = y_liftoff[kXb];
    double apex_time = t;
    for (std::size_t i = 0; i < flight.apex_times.size(); ++i) {
      if (flight.apex_states[i][kXb] > apex_pos) {
        apex_pos = flight.apex_states[i][kXb];
        apex_time = flight.apex_times[i];
      }
    }
    rec.apex_time = apex_time;
    rec.apex_height = apex_pos - rest_height;
    if (!(rec.apex_height > 0.0)) {
      out_.hops.push_back(rec);
      out_.status = EpisodeStatus::FailedLiftoff;
      out_.failure_reason = "body did not rise above rest height after liftoff";
      return out_;
    }
    if (!flight.traj.terminal_event) {
      out_.hops.push_back(rec);
      out_.status = EpisodeStatus::FailedLiftoff;
      out_.failure_reason = "flight did not return to the ground";
      return out_;
    }
    t = flight.traj.terminal.t;
    y = flight.traj.terminal.y;
    rec.leg_damper_loss = y[kLegLoss] - y_touchdown[kLegLoss];
    rec.ground_damper_loss = y[kGroundLoss] - y_touchdown[kGroundLoss];
    rec.injected_energy = rec.touchdown_injection + rec.liftoff_injection;
    rec.dissipated_energy = rec.leg_damper_loss + rec.ground_damper_loss + rec.ground_residual_loss;
    out_.hops.push_back(rec);
  }

  const SteadyStats stats = steady_state_apex(out_.hops, cfg_);
  out_.steady_apex_mean = stats.mean;
  out_.steady_apex_std = stats.std;
  out_.status = stats.is_steady ? EpisodeStatus::SteadyHopping : EpisodeStatus::NoConvergence;
  return out_;
}

}  // namespace

const char* to_string(GuardMode mode) {
  return mode == GuardMode::Simulation ? "simulation" : "experiment";
}

const char* to_string(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::SteadyHopping: return "SteadyHopping";
    case EpisodeStatus::FailedLiftoff: return "FailedLiftoff";
    case EpisodeStatus::NoConvergence: return "NoConvergence";
    case EpisodeStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

void EpisodeConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (steady_window < 2) fail(ErrorCode::InvalidArgument, "steady_window must be >= 2");
  if (skip_initial_hops < 0) fail(ErrorCode::InvalidArgument, "skip_initial_hops must be >= 0");
  if (max_hops <= steady_window + skip_initial_hops) {
    fail(ErrorCode::InvalidArgument, "max_hops must exceed steady_window + skip_initial_hops");
  }
  if (!positive(steady_std_tol) || !positive(drop_height) || !positive(stance_fixed_duration) ||
      !positive(max_stance_duration) || !positive(max_flight_duration)) {
    fail(ErrorCode::InvalidArgument, "episode tolerances and durations must be > 0");
  }
  if (!std::isfinite(chatter_interval) || chatter_interval < 0.0) {
    fail(ErrorCode::InvalidArgument, "chatter_interval must be >= 0");
  }
  if (!positive(physics.gravity)) fail(ErrorCode::InvalidArgument, "gravity must be > 0");
}

SteadyStats steady_state_apex(std::span<const HopRecord> records, const EpisodeConfig& cfg) {
  const auto window = static_cast<std::size_t>(cfg.steady_window);
  const auto skip = static_cast<std::size_t>(std::max(cfg.skip_initial_hops, 0));
  if (window < 2 || records.size() < skip + window) {
    fail(ErrorCode::InsufficientHops, "need at least " + std::to_string(skip + window) +
                                          " hops, have " + std::to_string(records.size()));
  }
  const auto tail = records.subspan(records.size() - window);
  // Shifted by the first value so a constant window gives exactly zero.
  const double ref = tail.front().apex_height;
  double shift = 0.0;
  for (const auto& r : tail) shift += r.apex_height - ref;
  shift /= static_cast<double>(window);
  double ss = 0.0;
  for (const auto& r : tail) {
    const double d = (r.apex_height - ref) - shift;
    ss += d * d;
  }
  const double std_dev = std::sqrt(ss / static_cast<double>(window - 1));
  return {ref + shift, std_dev, std_dev <= cfg.steady_std_tol};
}

EpisodeOutcome run_episode(const HopperParams& hopper, const GroundProfile& ground,
                           const EnergyBudget& energy, const EpisodeConfig& cfg,
                           const IntegratorConfig& icfg) {
  cfg.validate();
  icfg.validate();
  const double p =
      precompression_from_energy(energy, hopper.leg_stiffness(), hopper.rest_length());
  EpisodeRunner runner(hopper, ground, p, cfg, icfg);
  try {
    return runner.run();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::StepUnderflow && e.code() != ErrorCode::NonFiniteState) throw;
    EpisodeOutcome out;
    out.status = EpisodeStatus::NumericalFailure;
    out.precompression = p;
    out.failure_reason = e.what();
    return out;
  }
}

std::vector<HopEnergy> energy_audit(const EpisodeOutcome& outcome, const HopperParams& hopper,
                                    const GroundProfile& ground) {
  const auto& traj = outcome.trajectory;
  if (traj.empty()) fail(ErrorCode::MissingTrajectory, "episode was run without a trajectory");

  auto hybrid = [&](const TrajectorySample& s) {
    HybridState h;
    h.phase = s.phase;
    h.time = s.time;
    h.body_pos = s.body_pos;
    h.body_vel = s.body_vel;
    h.toe_pos = s.toe_pos;
    h.toe_vel = s.toe_vel;
    h.precompression = outcome.precompression;
    return h;
  };
  auto losses = [](const TrajectorySample& s) { return s.leg_damper_loss + s.ground_damper_loss; };

  std::vector<HopEnergy> hops;
  std::optional<std::size_t> hop_start;
  bool lifted = false;
  HopEnergy current;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const auto& a = traj[i - 1];
    const auto& b = traj[i];
    if (a.phase == b.phase) continue;
    const double jump = leg_spring_energy(hybrid(b), hopper) - leg_spring_energy(hybrid(a), hopper);
    if (a.phase == Phase::Flight) {
      // Touchdown closes the previous hop and opens the next one.
      if (hop_start) {
        current.dissipated += losses(a) - losses(traj[*hop_start]);
        hops.push_back(current);
      }
      current = {};
      hop_start = i;
      lifted = false;
      current.injected += jump;
    } else if (hop_start) {
      lifted = true;
      current.injected += jump;
      current.dissipated += 0.5 * ground.stiffness() * a.toe_pos * a.toe_pos;
    }
  }
  // The last flight ends on a touchdown that no stance sample follows.
  if (hop_start && lifted && hops.size() < outcome.hops.size()) {
    current.dissipated += losses(traj.back()) - losses(traj[*hop_start]);
    hops.push_back(current);
  }
  return hops;
}

}  // namespace hopsim
