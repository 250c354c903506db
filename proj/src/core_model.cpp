#include "hopsim/core_model.hpp"

#include <cmath>
#include <string>

#include "hopsim/error.hpp"

namespace hopsim {

namespace {

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || !(value > 0.0)) {
    fail(ErrorCode::InvalidArgument,
         std::string(name) + " must be finite and > 0, got " + std::to_string(value));
  }
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CompressionExceedsLeg: return "CompressionExceedsLeg";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NoSignChange: return "NoSignChange";
    case ErrorCode::InsufficientHops: return "InsufficientHops";
    case ErrorCode::MissingTrajectory: return "MissingTrajectory";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::UnknownEnergyLevel: return "UnknownEnergyLevel";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::UnreachableCell: return "UnreachableCell";
    case ErrorCode::Overdamped: return "Overdamped";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateTrace: return "DegenerateTrace";
    case ErrorCode::InsufficientSpread: return "InsufficientSpread";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

const char* to_string(Phase phase) { return phase == Phase::Flight ? "flight" : "stance"; }

HopperParams::HopperParams(double body_mass, double toe_mass, double rest_length,
                           double leg_stiffness, double leg_damping)
    : body_mass_(body_mass),
      toe_mass_(toe_mass),
      rest_length_(rest_length),
      leg_stiffness_(leg_stiffness),
      leg_damping_(leg_damping) {
  require_positive(body_mass, "body_mass");
  require_positive(toe_mass, "toe_mass");
  require_positive(rest_length, "rest_length");
  require_positive(leg_stiffness, "leg_stiffness");
  // Zero leg damping is allowed for lossless test systems.
  if (!std::isfinite(leg_damping) || leg_damping < 0.0) {
    fail(ErrorCode::InvalidArgument, "leg_damping must be finite and >= 0");
  }
}

HopperParams HopperParams::with_leg(double stiffness, double damping) const {
  return HopperParams(body_mass_, toe_mass_, rest_length_, stiffness, damping);
}

HopperParams HopperParams::reference(double leg_stiffness, double leg_damping) {
  return HopperParams(2.5, 0.3, 0.0975, leg_stiffness, leg_damping);
}

GroundProfile::GroundProfile(double stiffness, double damping)
    : stiffness_(stiffness), damping_(damping) {
  require_positive(stiffness, "ground_stiffness");
  if (!std::isfinite(damping) || damping < 0.0) {
    fail(ErrorCode::InvalidArgument, "ground_damping must be finite and >= 0");
  }
}

EnergyBudget::EnergyBudget(double input_energy) : input_energy_(input_energy) {
  if (!std::isfinite(input_energy) || input_energy < 0.0) {
    fail(ErrorCode::InvalidArgument, "input_energy must be finite and >= 0");
  }
}

double precompression_from_energy(const EnergyBudget& energy, double leg_stiffness,
                                  double rest_length) {
  require_positive(leg_stiffness, "leg_stiffness");
  const double p = std::sqrt(2.0 * energy.input_energy() / leg_stiffness);
  if (rest_length > 0.0 && p >= rest_length) {
    fail(ErrorCode::CompressionExceedsLeg,
         "pre-compression " + std::to_string(p) + " m exceeds leg rest length " +
             std::to_string(rest_length) + " m");
  }
  return p;
}

double leg_setpoint(const HybridState& state, const HopperParams& hopper) {
  return state.phase == Phase::Flight ? hopper.rest_length() - state.precompression
                                      : hopper.rest_length();
}

double leg_force(const HybridState& state, const HopperParams& hopper) {
  const double deflection = leg_setpoint(state, hopper) - state.leg_length();
  return hopper.leg_stiffness() * deflection -
         hopper.leg_damping() * (state.body_vel - state.toe_vel);
}

double ground_force(const HybridState& state, const GroundProfile& ground) {
  return -ground.stiffness() * state.toe_pos - ground.damping() * state.toe_vel;
}

StateRate derivatives(const HybridState& state, const HopperParams& hopper,
                      const GroundProfile& ground, const PhysicsOptions& physics) {
  const double f_leg = leg_force(state, hopper);
  const double f_ground = state.phase == Phase::Stance ? ground_force(state, ground) : 0.0;
  StateRate rate;
  rate.body_vel = state.body_vel;
  rate.body_acc = f_leg / hopper.body_mass() - physics.gravity;
  rate.toe_vel = state.toe_vel;
  rate.toe_acc = (f_ground - f_leg) / hopper.toe_mass() - physics.gravity;
  return rate;
}

double leg_spring_energy(const HybridState& state, const HopperParams& hopper) {
  const double deflection = leg_setpoint(state, hopper) - state.leg_length();
  return 0.5 * hopper.leg_stiffness() * deflection * deflection;
}

double mechanical_energy(const HybridState& state, const HopperParams& hopper,
                         const GroundProfile& ground, const PhysicsOptions& physics) {
  const double kinetic = 0.5 * hopper.body_mass() * state.body_vel * state.body_vel +
                         0.5 * hopper.toe_mass() * state.toe_vel * state.toe_vel;
  const double gravitational =
      physics.gravity * (hopper.body_mass() * state.body_pos + hopper.toe_mass() * state.toe_pos);
  const double ground_elastic = state.phase == Phase::Stance
                                    ? 0.5 * ground.stiffness() * state.toe_pos * state.toe_pos
                                    : 0.0;
  return kinetic + gravitational + leg_spring_energy(state, hopper) + ground_elastic;
}

HybridState flight_equilibrium_drop_state(const HopperParams& hopper, double precompression,
                                          double drop_height, const PhysicsOptions& physics) {
  if (!std::isfinite(drop_height) || !(drop_height > 0.0)) {
    fail(ErrorCode::InvalidArgument, "drop_height must be finite and > 0");
  }
  if (!std::isfinite(precompression) || precompression < 0.0 ||
      precompression >= hopper.rest_length()) {
    fail(ErrorCode::CompressionExceedsLeg, "pre-compression must lie in [0, l)");
  }
  HybridState state;
  state.phase = Phase::Flight;
  state.precompression = precompression;
  state.toe_pos = drop_height;
  state.body_pos = drop_height + (hopper.rest_length() - precompression) +
                   hopper.toe_mass() * physics.gravity / hopper.leg_stiffness();
  return state;
}

}  // namespace hopsim
