#pragma once

// Two-mass vertical hopper on a spring-damper ground.
//
// Coordinates: x_t = 0 is the undeformed ground surface, positive up. x_b is
// the body mass position. The leg spring acts between body and toe with a
// setpoint of (l - p) in flight and l in stance.

#include <array>

namespace hopsim {

inline constexpr double kStandardGravity = 9.81;

enum class Phase { Flight, Stance };

const char* to_string(Phase phase);

class HopperParams {
 public:
  HopperParams(double body_mass, double toe_mass, double rest_length,
               double leg_stiffness, double leg_damping);

  double body_mass() const { return body_mass_; }
  double toe_mass() const { return toe_mass_; }
  double rest_length() const { return rest_length_; }
  double leg_stiffness() const { return leg_stiffness_; }
  double leg_damping() const { return leg_damping_; }

  HopperParams with_leg(double stiffness, double damping) const;

  /// Reference robot: m_b = 2.5 kg, m_t = 0.3 kg, l = 97.5 mm.
  static HopperParams reference(double leg_stiffness, double leg_damping);

 private:
  double body_mass_;
  double toe_mass_;
  double rest_length_;
  double leg_stiffness_;
  double leg_damping_;
};

class GroundProfile {
 public:
  GroundProfile(double stiffness, double damping);

  double stiffness() const { return stiffness_; }
  double damping() const { return damping_; }

 private:
  double stiffness_;
  double damping_;
};

class EnergyBudget {
 public:
  explicit EnergyBudget(double input_energy);

  double input_energy() const { return input_energy_; }

 private:
  double input_energy_;
};

struct PhysicsOptions {
  double gravity = kStandardGravity;
  // Ends stance early once the ground force turns tensile. Off by default so
  // the ground force formula is applied literally.
  bool non_sticking_ground = false;
};

struct HybridState {
  Phase phase = Phase::Flight;
  double time = 0.0;
  double body_pos = 0.0;
  double body_vel = 0.0;
  double toe_pos = 0.0;
  double toe_vel = 0.0;
  double precompression = 0.0;

  double leg_length() const { return body_pos - toe_pos; }
};

struct StateRate {
  double body_vel = 0.0;
  double body_acc = 0.0;
  double toe_vel = 0.0;
  double toe_acc = 0.0;
};

/// Pre-compression that stores `energy` in a leg of stiffness `leg_stiffness`:
/// p = sqrt(2 E / k). Throws CompressionExceedsLeg when `rest_length` is given
/// and p >= rest_length.
double precompression_from_energy(const EnergyBudget& energy, double leg_stiffness,
                                  double rest_length = 0.0);

/// Current spring setpoint: l - p in flight, l in stance.
double leg_setpoint(const HybridState& state, const HopperParams& hopper);

/// Signed leg force; positive pushes the body up and the toe down.
double leg_force(const HybridState& state, const HopperParams& hopper);

/// F_g = -k_g x_t - d_g v_t. Not clamped, so it may be tensile.
double ground_force(const HybridState& state, const GroundProfile& ground);

StateRate derivatives(const HybridState& state, const HopperParams& hopper,
                      const GroundProfile& ground, const PhysicsOptions& physics = {});

/// Elastic energy stored in the leg relative to the current setpoint.
double leg_spring_energy(const HybridState& state, const HopperParams& hopper);

/// Kinetic + gravitational + leg spring (relative to the current setpoint)
/// + ground spring (stance only).
double mechanical_energy(const HybridState& state, const HopperParams& hopper,
                         const GroundProfile& ground, const PhysicsOptions& physics = {});

/// Flight state at rest with the toe hanging from the held body: leg length
/// (l - p) + m_t g / k_l, toe at `drop_height` above the ground.
HybridState flight_equilibrium_drop_state(const HopperParams& hopper, double precompression,
                                          double drop_height,
                                          const PhysicsOptions& physics = {});

/// Body position when the leg is at rest length and the toe sits on the
/// undeformed ground. Apex heights are measured from here.
inline double standing_rest_height(const HopperParams& hopper) { return hopper.rest_length(); }

}  // namespace hopsim
