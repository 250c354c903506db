#pragma once

// Ground emulator math: five-bar-linkage kinematics, PD rendering force,
// damped-oscillator identification and the gain -> ground-profile maps.

#include <optional>
#include <utility>
#include <vector>

#include "hopsim/core_model.hpp"

namespace hopsim::emulator {

class LinkageGeometry {
 public:
  /// Requires 0 < l1 < l2 so the kinematics stay real for every angle.
  LinkageGeometry(double l1, double l2);

  double l1() const { return l1_; }
  double l2() const { return l2_; }

 private:
  double l1_;
  double l2_;
};

struct PdGains {
  double kp = 0.0;  // N/m
  double kd = 0.0;  // N s/m
};

/// r_g(theta) = -l1 cos(theta) + sqrt(-l1^2/2 + l2^2 + (l1^2/2) cos(2 theta)).
double forward_kinematics(double theta, const LinkageGeometry& geom);

/// d r_g / d theta.
double kinematic_jacobian(double theta, const LinkageGeometry& geom);

/// tau_m = F * d r_g / d theta.
double motor_torque(double force, double theta, const LinkageGeometry& geom);

/// F = K_p * delta_r + K_d * r_dot.
double pd_render_force(double delta_r, double r_dot, const PdGains& gains);

struct OscillationTrace {
  std::vector<double> time;      // s
  std::vector<double> position;  // m
  double mass = 0.0;             // kg

  void validate() const;
};

/// Parameters of r(t) = A exp(-beta t) cos(sqrt(alpha - beta^2) t + phi) - g/alpha (+ offset).
struct OscillatorParams {
  double amplitude = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double phase = 0.0;
  // Only used when fitting with a free offset.
  double offset = 0.0;
};

double oscillator_model(double t, const OscillatorParams& p, double gravity = kStandardGravity,
                        bool free_offset = false);

struct FitOptions {
  bool free_offset = false;
  int max_iterations = 200;
  double gravity = kStandardGravity;
  std::optional<OscillatorParams> initial_guess;
};

struct OscillatorFit {
  OscillatorParams params;
  double residual_rms = 0.0;
  double r_squared = 0.0;
  double ground_stiffness = 0.0;  // alpha * m_w
  double ground_damping = 0.0;    // 2 beta m_w
  int iterations = 0;

  /// R^2 of at least 0.9 is the acceptance bar for a fit.
  bool accepted() const { return r_squared >= 0.9; }
};

/// Heuristic start point from peak-to-peak amplitude, zero-crossing
/// frequency, peak-envelope decay and tail mean.
OscillatorParams initial_guess(const OscillationTrace& trace,
                               double gravity = kStandardGravity);

/// Levenberg-Marquardt fit of the underdamped oscillator. Throws
/// DegenerateTrace, Overdamped or NoConvergence.
OscillatorFit fit_oscillator(const OscillationTrace& trace, const FitOptions& options = {});

/// Drops samples before the first negative-going peak (the release point)
/// and shifts time so the trace starts at t = 0.
OscillationTrace trim_to_release(const OscillationTrace& trace);

/// Samples r(t) on a uniform grid, optionally with Gaussian noise.
OscillationTrace synthesize_trace(const OscillatorParams& params, double mass, double duration,
                                  double sample_rate, double noise_sigma = 0.0,
                                  unsigned long long seed = 0,
                                  double gravity = kStandardGravity);

struct AffineMap {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;

  double operator()(double x) const { return slope * x + intercept; }
  double inverse(double y) const;
};

struct GainCalibration {
  AffineMap stiffness;  // k_g = f_k(K_p)
  AffineMap damping;    // d_g = f_d(K_d)
  std::size_t fits_used = 0;

  /// Gains that render the requested ground profile.
  PdGains gains_for(const GroundProfile& target) const;
};

/// Ordinary least squares of k_g on K_p and d_g on K_d over accepted fits.
/// Throws InsufficientSpread with fewer than two distinct gains per axis.
GainCalibration calibrate_gain_maps(const std::vector<std::pair<PdGains, OscillatorFit>>& fits);

AffineMap fit_affine(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hopsim::emulator
