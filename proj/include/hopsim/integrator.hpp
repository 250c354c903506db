#pragma once

// Adaptive Dormand-Prince 5(4) integration of one smooth phase with
// directional event detection. Events are bracketed by sampling the dense
// output inside each accepted step and then localized by bisection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hopsim/error.hpp"

namespace hopsim {

template <std::size_t N>
using StateVec = std::array<double, N>;

enum class CrossingDirection { Falling, Rising, Either };

struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 2e-3;
  double event_time_tol = 1e-12;
  double max_phase_duration = 10.0;
  // Guard sampling points per step; catches double crossings inside a step.
  int event_samples = 8;

  void validate() const;
};

inline void IntegratorConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(rel_tol) || rel_tol < 1e-14) {
    fail(ErrorCode::InvalidArgument, "rel_tol must be >= 1e-14");
  }
  if (!positive(abs_tol) || !positive(max_step) || !positive(event_time_tol) ||
      !positive(max_phase_duration)) {
    fail(ErrorCode::InvalidArgument, "integrator tolerances and durations must be > 0");
  }
  if (!(event_time_tol < max_step)) {
    fail(ErrorCode::InvalidArgument, "event_time_tol must be smaller than max_step");
  }
  if (event_samples < 1) {
    fail(ErrorCode::InvalidArgument, "event_samples must be >= 1");
  }
}

template <std::size_t N>
struct EventSpec {
  std::string name;
  std::function<double(double, const StateVec<N>&)> guard;
  CrossingDirection direction = CrossingDirection::Falling;
  // Non-terminal events are recorded and integration continues.
  bool terminal = true;
};

template <std::size_t N>
struct TimedState {
  double t = 0.0;
  StateVec<N> y{};
};

template <std::size_t N>
struct EventHit {
  std::size_t event_index = 0;
  double t = 0.0;
  StateVec<N> y{};
};

template <std::size_t N>
struct PhaseTrajectory {
  std::vector<TimedState<N>> samples;
  // Non-terminal hits in time order.
  std::vector<EventHit<N>> events;
  std::optional<std::size_t> terminal_event;
  bool timed_out = false;
  TimedState<N> terminal;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

inline bool crosses(double before, double after, CrossingDirection direction) {
  const bool falling = before > 0.0 && after <= 0.0;
  const bool rising = before < 0.0 && after >= 0.0;
  switch (direction) {
    case CrossingDirection::Falling: return falling;
    case CrossingDirection::Rising: return rising;
    case CrossingDirection::Either: return falling || rising;
  }
  return false;
}

/// Bisection for the crossing of `guard` inside [t_lo, t_hi]. Returns the
/// upper end of the final bracket, i.e. a time at which the guard has
/// already crossed.
template <typename Guard>
double locate_event(double t_lo, double t_hi, Guard&& guard, CrossingDirection direction,
                    double time_tol) {
  double g_lo = guard(t_lo);
  const double g_hi = guard(t_hi);
  if (!crosses(g_lo, g_hi, direction)) {
    fail(ErrorCode::NoSignChange, "guard has no matching sign change on the bracket");
  }
  while (t_hi - t_lo > time_tol) {
    const double mid = 0.5 * (t_lo + t_hi);
    if (mid <= t_lo || mid >= t_hi) break;
    const double g_mid = guard(mid);
    if (crosses(g_lo, g_mid, direction)) {
      t_hi = mid;
    } else {
      t_lo = mid;
      g_lo = g_mid;
    }
  }
  return t_hi;
}

namespace detail {

// Dormand-Prince tableau and Hairer's continuous extension coefficients.
struct Dopri {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

template <std::size_t N>
struct Step {
  StateVec<N> y1{};
  StateVec<N> k7{};
  double error_norm = 0.0;
  std::array<StateVec<N>, 5> dense{};
};

template <std::size_t N>
bool all_finite(const StateVec<N>& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

// One Dormand-Prince step from (t, y) with first stage k1 = f(t, y).
template <std::size_t N, typename Rhs>
Step<N> dopri_step(Rhs& rhs, double t, const StateVec<N>& y, const StateVec<N>& k1, double h,
                   double rel_tol, double abs_tol) {
  using D = Dopri;
  StateVec<N> tmp;
  auto stage = [&](auto&& combine) {
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * combine(i);
  };
  stage([&](std::size_t i) { return D::a21 * k1[i]; });
  const StateVec<N> k2 = rhs(t + D::c2 * h, tmp);
  stage([&](std::size_t i) { return D::a31 * k1[i] + D::a32 * k2[i]; });
  const StateVec<N> k3 = rhs(t + D::c3 * h, tmp);
  stage([&](std::size_t i) { return D::a41 * k1[i] + D::a42 * k2[i] + D::a43 * k3[i]; });
  const StateVec<N> k4 = rhs(t + D::c4 * h, tmp);
  stage([&](std::size_t i) {
    return D::a51 * k1[i] + D::a52 * k2[i] + D::a53 * k3[i] + D::a54 * k4[i];
  });
  const StateVec<N> k5 = rhs(t + D::c5 * h, tmp);
  stage([&](std::size_t i) {
    return D::a61 * k1[i] + D::a62 * k2[i] + D::a63 * k3[i] + D::a64 * k4[i] + D::a65 * k5[i];
  });
  const StateVec<N> k6 = rhs(t + h, tmp);

  Step<N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out.y1[i] = y[i] + h * (D::a71 * k1[i] + D::a73 * k3[i] + D::a74 * k4[i] +
                            D::a75 * k5[i] + D::a76 * k6[i]);
  }
  out.k7 = rhs(t + h, out.y1);

  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double err = h * (D::e1 * k1[i] + D::e3 * k3[i] + D::e4 * k4[i] + D::e5 * k5[i] +
                            D::e6 * k6[i] + D::e7 * out.k7[i]);
    const double scale = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(out.y1[i]));
    sum += (err / scale) * (err / scale);
  }
  out.error_norm = std::sqrt(sum / static_cast<double>(N));

  for (std::size_t i = 0; i < N; ++i) {
    const double diff = out.y1[i] - y[i];
    const double bspl = h * k1[i] - diff;
    out.dense[0][i] = y[i];
    out.dense[1][i] = diff;
    out.dense[2][i] = bspl;
    out.dense[3][i] = diff - h * out.k7[i] - bspl;
    out.dense[4][i] = h * (D::d1 * k1[i] + D::d3 * k3[i] + D::d4 * k4[i] + D::d5 * k5[i] +
                           D::d6 * k6[i] + D::d7 * out.k7[i]);
  }
  return out;
}

template <std::size_t N>
StateVec<N> dense_eval(const std::array<StateVec<N>, 5>& c, double theta) {
  const double theta1 = 1.0 - theta;
  StateVec<N> y;
  for (std::size_t i = 0; i < N; ++i) {
    y[i] = c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])));
  }
  return y;
}

}  // namespace detail

/// Integrates dy/dt = rhs(t, y) from `initial` until the first directional
/// crossing of a terminal event guard or until max_phase_duration elapses.
/// The terminal state is produced by a Dormand-Prince step landing exactly on
/// the located event time, so it is also the last sample.
template <std::size_t N, typename Rhs>
PhaseTrajectory<N> integrate_phase(const TimedState<N>& initial, Rhs&& rhs,
                                   const std::vector<EventSpec<N>>& events,
                                   const IntegratorConfig& cfg, bool keep_samples = true) {
  cfg.validate();
  if (!detail::all_finite(initial.y)) {
    fail(ErrorCode::NonFiniteState, "initial state is not finite");
  }
  constexpr double kMinStep = 1e-15;

  PhaseTrajectory<N> traj;
  if (keep_samples) traj.samples.push_back(initial);

  double t = initial.t;
  StateVec<N> y = initial.y;
  StateVec<N> k1 = rhs(t, y);
  const double t_end = initial.t + cfg.max_phase_duration;

  std::vector<double> guard_prev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) guard_prev[e] = events[e].guard(t, y);

  // Initial step from the scale of the first derivative.
  double h = cfg.max_step;
  {
    double ynorm = 0.0, fnorm = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double scale = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
      ynorm += (y[i] / scale) * (y[i] / scale);
      fnorm += (k1[i] / scale) * (k1[i] / scale);
    }
    ynorm = std::sqrt(ynorm / N);
    fnorm = std::sqrt(fnorm / N);
    if (ynorm > 1e-5 && fnorm > 1e-5) h = std::min(h, 0.01 * ynorm / fnorm);
    h = std::max(h, 1e-9);
  }

  const int samples = cfg.event_samples;
  std::vector<double> guard_vals(static_cast<std::size_t>(samples) + 1);

  while (true) {
    bool clipped = false;
    if (t + h >= t_end) {
      h = t_end - t;
      clipped = true;
    }
    if (h < kMinStep) {
      if (clipped) {
        traj.timed_out = true;
        traj.terminal = {t, y};
        return traj;
      }
      fail(ErrorCode::StepUnderflow, "step size collapsed below 1e-15 s at t = " + std::to_string(t));
    }

    auto step = detail::dopri_step<N>(rhs, t, y, k1, h, cfg.rel_tol, cfg.abs_tol);
    if (!detail::all_finite(step.y1) || !std::isfinite(step.error_norm)) {
      if (h * 0.25 < kMinStep) {
        fail(ErrorCode::NonFiniteState, "non-finite state at t = " + std::to_string(t));
      }
      h *= 0.25;
      ++traj.rejected_steps;
      continue;
    }
    if (step.error_norm > 1.0) {
      ++traj.rejected_steps;
      h *= std::max(0.2, 0.9 * std::pow(step.error_norm, -0.2));
      continue;
    }
    ++traj.accepted_steps;

    // Earliest directional crossing over the sampled sub-intervals.
    std::optional<std::size_t> first_terminal;
    double first_terminal_time = 0.0;
    struct Pending {
      std::size_t event;
      double t;
    };
    std::vector<Pending> hits;
    for (std::size_t e = 0; e < events.size(); ++e) {
      const auto& ev = events[e];
      guard_vals[0] = guard_prev[e];
      for (int s = 1; s <= samples; ++s) {
        const double theta = static_cast<double>(s) / samples;
        const StateVec<N> ys = s == samples ? step.y1 : detail::dense_eval<N>(step.dense, theta);
        guard_vals[s] = ev.guard(t + theta * h, ys);
      }
      for (int s = 1; s <= samples; ++s) {
        if (!crosses(guard_vals[s - 1], guard_vals[s], ev.direction)) continue;
        const double a = t + h * (s - 1) / samples;
        const double b = s == samples ? t + h : t + h * s / samples;
        const double ta = t, hh = h;
        const auto& dense = step.dense;
        auto guard_at = [&](double tau) {
          const double theta = std::clamp((tau - ta) / hh, 0.0, 1.0);
          return ev.guard(tau, detail::dense_eval<N>(dense, theta));
        };
        // The sampled values bracket the crossing; re-evaluate the ends on
        // the interpolant so bisection starts from a consistent bracket.
        double t_hit = b;
        if (crosses(guard_at(a), guard_at(b), ev.direction)) {
          t_hit = locate_event(a, b, guard_at, ev.direction, cfg.event_time_tol);
        }
        hits.push_back({e, t_hit});
        if (ev.terminal && (!first_terminal || t_hit < first_terminal_time)) {
          first_terminal = e;
          first_terminal_time = t_hit;
        }
        if (ev.terminal) break;
      }
    }

    std::sort(hits.begin(), hits.end(),
              [](const Pending& x, const Pending& y2) { return x.t < y2.t; });
    for (const auto& hit : hits) {
      if (events[hit.event].terminal) continue;
      if (first_terminal && hit.t > first_terminal_time) continue;
      const double theta = std::clamp((hit.t - t) / h, 0.0, 1.0);
      traj.events.push_back({hit.event, hit.t, detail::dense_eval<N>(step.dense, theta)});
    }

    if (first_terminal) {
      const double h_event = first_terminal_time - t;
      StateVec<N> y_event = step.y1;
      if (h_event < h) {
        y_event = h_event > 0.0
                      ? detail::dopri_step<N>(rhs, t, y, k1, h_event, cfg.rel_tol, cfg.abs_tol).y1
                      : y;
      }
      traj.terminal_event = first_terminal;
      traj.terminal = {first_terminal_time, y_event};
      if (keep_samples) traj.samples.push_back(traj.terminal);
      return traj;
    }

    t += h;
    y = step.y1;
    k1 = step.k7;
    for (std::size_t e = 0; e < events.size(); ++e) guard_prev[e] = events[e].guard(t, y);
    if (keep_samples) traj.samples.push_back({t, y});

    if (clipped || t >= t_end) {
      traj.timed_out = true;
      traj.terminal = {t, y};
      return traj;
    }
    const double factor =
        step.error_norm > 0.0 ? std::min(5.0, 0.9 * std::pow(step.error_norm, -0.2)) : 5.0;
    h = std::min(cfg.max_step, h * std::max(0.2, factor));
  }
}

}  // namespace hopsim
