#include "hopsim/emulator_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "hopsim/error.hpp"

namespace hopsim::emulator {

namespace {

constexpr std::size_t kMinSamples = 20;

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

struct Residuals {
  Eigen::VectorXd r;
  double cost = 0.0;
};

class OscillatorProblem {
 public:
  OscillatorProblem(const OscillationTrace& trace, double gravity, bool free_offset)
      : t_(trace.time), y_(trace.position), g_(gravity), free_offset_(free_offset) {}

  int dim() const { return free_offset_ ? 5 : 4; }

  Eigen::VectorXd pack(const OscillatorParams& p) const {
    Eigen::VectorXd x(dim());
    x << p.amplitude, p.alpha, p.beta, p.phase, 0.0;
    if (free_offset_) x[4] = p.offset;
    return x.head(dim());
  }

  OscillatorParams unpack(const Eigen::VectorXd& x) const {
    OscillatorParams p{x[0], x[1], x[2], x[3], free_offset_ ? x[4] : 0.0};
    return p;
  }

  static bool feasible(const Eigen::VectorXd& x) { return x[1] > x[2] * x[2] && x[1] > 0.0; }

  Residuals residuals(const Eigen::VectorXd& x) const {
    Residuals out;
    out.r.resize(static_cast<Eigen::Index>(t_.size()));
    const OscillatorParams p = unpack(x);
    for (std::size_t i = 0; i < t_.size(); ++i) {
      out.r[static_cast<Eigen::Index>(i)] = oscillator_model(t_[i], p, g_, free_offset_) - y_[i];
    }
    out.cost = 0.5 * out.r.squaredNorm();
    return out;
  }

  // Analytic Jacobian of the model with respect to (A, alpha, beta, phi[, c]).
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    const double a = x[0], alpha = x[1], beta = x[2], phi = x[3];
    const double omega = std::sqrt(alpha - beta * beta);
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(t_.size()), dim());
    for (std::size_t i = 0; i < t_.size(); ++i) {
      const double t = t_[i];
      const double decay = std::exp(-beta * t);
      const double arg = omega * t + phi;
      const double c = std::cos(arg), s = std::sin(arg);
      const auto row = static_cast<Eigen::Index>(i);
      jac(row, 0) = decay * c;
      jac(row, 1) = -a * decay * s * t / (2.0 * omega) + (free_offset_ ? 0.0 : g_ / (alpha * alpha));
      jac(row, 2) = -t * a * decay * c + a * decay * s * t * beta / omega;
      jac(row, 3) = -a * decay * s;
      if (free_offset_) jac(row, 4) = 1.0;
    }
    return jac;
  }

 private:
  const std::vector<double>& t_;
  const std::vector<double>& y_;
  double g_;
  bool free_offset_;
};

double tail_mean(const std::vector<double>& v) {
  const std::size_t n = std::max<std::size_t>(v.size() / 10, 1);
  double sum = 0.0;
  for (std::size_t i = v.size() - n; i < v.size(); ++i) sum += v[i];
  return sum / static_cast<double>(n);
}

}  // namespace

LinkageGeometry::LinkageGeometry(double l1, double l2) : l1_(l1), l2_(l2) {
  if (!std::isfinite(l1) || !std::isfinite(l2) || !(l1 > 0.0) || !(l1 < l2)) {
    fail(ErrorCode::InvalidArgument, "linkage geometry requires 0 < l1 < l2");
  }
}

double forward_kinematics(double theta, const LinkageGeometry& geom) {
  const double l1 = geom.l1(), l2 = geom.l2();
  const double radicand = -0.5 * l1 * l1 + l2 * l2 + 0.5 * l1 * l1 * std::cos(2.0 * theta);
  return -l1 * std::cos(theta) + std::sqrt(radicand);
}

double kinematic_jacobian(double theta, const LinkageGeometry& geom) {
  const double l1 = geom.l1(), l2 = geom.l2();
  const double radicand = -0.5 * l1 * l1 + l2 * l2 + 0.5 * l1 * l1 * std::cos(2.0 * theta);
  // d/dtheta of the radicand is -l1^2 sin(2 theta).
  return l1 * std::sin(theta) - 0.5 * l1 * l1 * std::sin(2.0 * theta) / std::sqrt(radicand);
}

double motor_torque(double force, double theta, const LinkageGeometry& geom) {
  return force * kinematic_jacobian(theta, geom);
}

double pd_render_force(double delta_r, double r_dot, const PdGains& gains) {
  return gains.kp * delta_r + gains.kd * r_dot;
}

void OscillationTrace::validate() const {
  if (time.size() != position.size()) {
    fail(ErrorCode::DegenerateTrace, "time and position columns differ in length");
  }
  if (time.size() < kMinSamples) {
    fail(ErrorCode::DegenerateTrace, "trace needs at least 20 samples, has " +
                                         std::to_string(time.size()));
  }
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    fail(ErrorCode::InvalidArgument, "test mass must be > 0");
  }
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (!std::isfinite(time[i]) || !std::isfinite(position[i])) {
      fail(ErrorCode::DegenerateTrace, "trace contains non-finite values");
    }
    if (i > 0 && !(time[i] > time[i - 1])) {
      fail(ErrorCode::DegenerateTrace, "trace times must be strictly increasing");
    }
  }
}

double oscillator_model(double t, const OscillatorParams& p, double gravity, bool free_offset) {
  const double omega = std::sqrt(p.alpha - p.beta * p.beta);
  const double base = p.amplitude * std::exp(-p.beta * t) * std::cos(omega * t + p.phase);
  return free_offset ? base + p.offset : base - gravity / p.alpha;
}

OscillatorParams initial_guess(const OscillationTrace& trace, double gravity) {
  trace.validate();
  const auto& t = trace.time;
  const double offset = tail_mean(trace.position);
  std::vector<double> s(t.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    s[i] = trace.position[i] - offset;
    peak = std::max(peak, std::abs(s[i]));
  }
  const auto [lo, hi] = std::minmax_element(trace.position.begin(), trace.position.end());
  const double peak_to_peak = *hi - *lo;
  if (!(peak_to_peak > 1e-12 * std::max(1.0, std::abs(offset)))) {
    fail(ErrorCode::DegenerateTrace, "trace is constant");
  }

  // Zero crossings with hysteresis so noise near rest does not register.
  const double band = 0.15 * peak;
  std::vector<double> crossings;
  std::vector<std::pair<double, double>> lobe_peaks;  // (time, |s|)
  int state = 0;
  std::size_t last_sign_change = 0;
  double lobe_max = 0.0, lobe_time = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0 && (s[i] >= 0.0) != (s[i - 1] >= 0.0)) last_sign_change = i;
    if (std::abs(s[i]) > lobe_max) {
      lobe_max = std::abs(s[i]);
      lobe_time = t[i];
    }
    const int now = s[i] > band ? 1 : (s[i] < -band ? -1 : 0);
    if (now == 0 || now == state) continue;
    if (state != 0 && last_sign_change > 0) {
      const std::size_t k = last_sign_change;
      const double frac = s[k - 1] / (s[k - 1] - s[k]);
      crossings.push_back(t[k - 1] + frac * (t[k] - t[k - 1]));
      lobe_peaks.emplace_back(lobe_time, lobe_max);
      lobe_max = std::abs(s[i]);
      lobe_time = t[i];
    }
    state = now;
  }
  if (crossings.size() < 3) {
    fail(ErrorCode::DegenerateTrace, "fewer than two visible oscillation periods");
  }
  const double half_period =
      (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  const double omega = std::numbers::pi / half_period;

  // Log-linear fit of the lobe peaks that clear the hysteresis band.
  std::vector<double> pt, pl;
  for (const auto& [time, value] : lobe_peaks) {
    if (value > 2.0 * band) {
      pt.push_back(time);
      pl.push_back(std::log(value));
    }
  }
  double beta = 0.0;
  if (pt.size() >= 2) beta = -fit_affine(pt, pl).slope;
  if (!(beta > 0.0)) beta = 1e-3 * omega;

  OscillatorParams guess;
  guess.alpha = omega * omega + beta * beta;
  guess.beta = beta;
  guess.offset = offset;

  // With omega and beta fixed, A cos(phi) and A sin(phi) are linear.
  const double level = -gravity / guess.alpha;
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(t.size()), 2);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double decay = std::exp(-beta * t[i]);
    const auto row = static_cast<Eigen::Index>(i);
    basis(row, 0) = decay * std::cos(omega * t[i]);
    basis(row, 1) = -decay * std::sin(omega * t[i]);
    rhs[row] = trace.position[i] - level;
  }
  const Eigen::Vector2d ab = basis.colPivHouseholderQr().solve(rhs);
  guess.amplitude = std::hypot(ab[0], ab[1]);
  guess.phase = std::atan2(ab[1], ab[0]);
  return guess;
}

OscillatorFit fit_oscillator(const OscillationTrace& trace, const FitOptions& options) {
  trace.validate();
  OscillatorParams start =
      options.initial_guess ? *options.initial_guess : initial_guess(trace, options.gravity);
  if (options.free_offset && !options.initial_guess) start.offset = tail_mean(trace.position);

  const OscillatorProblem problem(trace, options.gravity, options.free_offset);
  Eigen::VectorXd x = problem.pack(start);
  if (!OscillatorProblem::feasible(x)) {
    fail(ErrorCode::Overdamped, "initial guess is not underdamped");
  }
  Residuals res = problem.residuals(x);
  double lambda = -1.0;
  double nu = 2.0;
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = problem.jacobian(x);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * res.r;
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, res.cost)) {
      converged = true;
      break;
    }
    const Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);
    if (lambda < 0.0) lambda = 1e-3 * diag.maxCoeff();

    bool stepped = false;
    while (!stepped) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += lambda * diag;
      const Eigen::VectorXd delta = lhs.ldlt().solve(-grad);
      const Eigen::VectorXd trial = x + delta;
      const double step_size = delta.norm();
      if (OscillatorProblem::feasible(trial)) {
        Residuals trial_res = problem.residuals(trial);
        const double predicted = 0.5 * delta.dot(lambda * diag.cwiseProduct(delta) - grad);
        const double rho = predicted > 0.0 ? (res.cost - trial_res.cost) / predicted : -1.0;
        if (rho > 0.0) {
          const double decrease = res.cost - trial_res.cost;
          x = trial;
          res = std::move(trial_res);
          lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
          nu = 2.0;
          stepped = true;
          if (step_size <= 1e-13 * (x.norm() + 1e-13) || decrease <= 1e-16 * res.cost) {
            converged = true;
          }
          continue;
        }
      }
      lambda *= nu;
      nu *= 2.0;
      if (lambda > 1e20 * diag.maxCoeff()) {
        // No descent direction left at machine precision.
        converged = true;
        break;
      }
    }
    if (converged) break;
  }
  if (!converged) {
    fail(ErrorCode::NoConvergence, "oscillator fit hit the iteration cap");
  }

  OscillatorParams p = problem.unpack(x);
  if (p.amplitude < 0.0) {
    p.amplitude = -p.amplitude;
    p.phase += std::numbers::pi;
  }
  p.phase = wrap_angle(p.phase);
  if (!(p.alpha > p.beta * p.beta)) {
    fail(ErrorCode::Overdamped, "fitted alpha <= beta^2");
  }

  OscillatorFit fit;
  fit.params = p;
  fit.iterations = iter;
  const auto n = static_cast<double>(trace.time.size());
  fit.residual_rms = std::sqrt(2.0 * res.cost / n);
  double mean = 0.0;
  for (double v : trace.position) mean += v;
  mean /= n;
  double ss_tot = 0.0;
  for (double v : trace.position) ss_tot += (v - mean) * (v - mean);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - 2.0 * res.cost / ss_tot : 0.0;
  fit.ground_stiffness = p.alpha * trace.mass;
  fit.ground_damping = 2.0 * p.beta * trace.mass;
  return fit;
}

OscillationTrace trim_to_release(const OscillationTrace& trace) {
  trace.validate();
  const double rest = tail_mean(trace.position);
  double peak = 0.0;
  for (double v : trace.position) peak = std::max(peak, std::abs(v - rest));
  const double band = 0.5 * peak;
  // First lobe that dips below -band; its minimum is the release point.
  std::size_t i = 0;
  const std::size_t n = trace.time.size();
  while (i < n && trace.position[i] - rest >= -band) ++i;
  if (i == n) fail(ErrorCode::DegenerateTrace, "no negative-going peak found");
  std::size_t best = i;
  // Latest sample of the minimum, so a hold at the bottom is dropped too.
  while (i < n && trace.position[i] - rest < 0.0) {
    if (trace.position[i] <= trace.position[best]) best = i;
    ++i;
  }
  OscillationTrace out;
  out.mass = trace.mass;
  const double t0 = trace.time[best];
  for (std::size_t k = best; k < n; ++k) {
    out.time.push_back(trace.time[k] - t0);
    out.position.push_back(trace.position[k]);
  }
  return out;
}

OscillationTrace synthesize_trace(const OscillatorParams& params, double mass, double duration,
                                  double sample_rate, double noise_sigma,
                                  unsigned long long seed, double gravity) {
  if (!(duration > 0.0) || !(sample_rate > 0.0) || !(noise_sigma >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "duration and sample rate must be > 0, noise >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  OscillationTrace trace;
  trace.mass = mass;
  const auto n = static_cast<std::size_t>(std::floor(duration * sample_rate)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    trace.time.push_back(t);
    double r = oscillator_model(t, params, gravity, false);
    if (noise_sigma > 0.0) r += noise_sigma * noise(rng);
    trace.position.push_back(r);
  }
  return trace;
}

double AffineMap::inverse(double y) const {
  if (slope == 0.0) fail(ErrorCode::InvalidArgument, "affine map with zero slope has no inverse");
  return (y - intercept) / slope;
}

PdGains GainCalibration::gains_for(const GroundProfile& target) const {
  return {stiffness.inverse(target.stiffness()), damping.inverse(target.damping())};
}

AffineMap fit_affine(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    fail(ErrorCode::InsufficientSpread, "affine fit needs at least two points");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorCode::InsufficientSpread, "all x values are identical");
  AffineMap map;
  map.slope = sxy / sxx;
  map.intercept = my - map.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - map(x[i]);
    ss_res += e * e;
  }
  map.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return map;
}

GainCalibration calibrate_gain_maps(const std::vector<std::pair<PdGains, OscillatorFit>>& fits) {
  std::vector<double> kp, kg, kd, dg;
  std::set<double> distinct_kp, distinct_kd;
  for (const auto& [gains, fit] : fits) {
    if (!fit.accepted()) continue;
    kp.push_back(gains.kp);
    kg.push_back(fit.ground_stiffness);
    kd.push_back(gains.kd);
    dg.push_back(fit.ground_damping);
    distinct_kp.insert(gains.kp);
    distinct_kd.insert(gains.kd);
  }
  if (distinct_kp.size() < 2 || distinct_kd.size() < 2) {
    fail(ErrorCode::InsufficientSpread,
         "calibration needs at least two distinct K_p and two distinct K_d among accepted fits");
  }
  GainCalibration cal;
  cal.stiffness = fit_affine(kp, kg);
  cal.damping = fit_affine(kd, dg);
  cal.fits_used = kp.size();
  return cal;
}

}  // namespace hopsim::emulator
