#pragma once

// Deployment filters for joint targets and the motion-constraint checker.
//
// All derivatives are backward finite differences at the controller period:
//   v_k = (p_k - p_{k-1}) / h
//   a_k = (p_k - 2 p_{k-1} + p_{k-2}) / h^2
//   j_k = (p_k - 3 p_{k-1} + 3 p_{k-2} - p_{k-3}) / h^3
// check_constraints and rate_limit use exactly these estimators, which is
// what makes "rate-limited streams never violate" checkable.

#include <array>
#include <span>

#include "aspace/robot_model.hpp"

namespace aspace {

struct ConstraintSet {
  Vec dq_max, ddq_max, dddq_max;
  Vec q_min, q_max;
  double dt = 1.0 / 120.0;

  static ConstraintSet from_model(const RobotModel& m, double dt = 1.0 / 120.0) {
    if (m.n_joints() == 0) throw std::invalid_argument("empty constraint set");
    return ConstraintSet{m.dq_max, m.ddq_max, m.dddq_max, m.q_min, m.q_max, dt};
  }
  int size() const { return static_cast<int>(dq_max.size()); }
};

struct ConstraintFlags {
  bool velocity = false;
  bool acceleration = false;
  bool jerk = false;

  bool any() const { return velocity || acceleration || jerk; }
};

/// Flags for the newest sample of `window` (oldest first, 1..4 entries).
/// Derivatives that need more samples than the window holds count as
/// satisfied.
inline ConstraintFlags check_constraints(std::span<const Vec> window, const ConstraintSet& cs) {
  ConstraintFlags flags;
  const std::size_t len = window.size();
  if (len < 2) return flags;
  const double h = cs.dt;
  const Vec& p0 = window[len - 1];
  const Vec& p1 = window[len - 2];
  flags.velocity = (((p0 - p1) / h).cwiseAbs().array() > cs.dq_max.array()).any();
  if (len >= 3) {
    const Vec& p2 = window[len - 3];
    flags.acceleration =
        (((p0 - 2.0 * p1 + p2) / (h * h)).cwiseAbs().array() > cs.ddq_max.array()).any();
    if (len >= 4) {
      const Vec& p3 = window[len - 4];
      flags.jerk = (((p0 - 3.0 * p1 + 3.0 * p2 - p3) / (h * h * h)).cwiseAbs().array() >
                    cs.dddq_max.array())
                       .any();
    }
  }
  return flags;
}

/// Per-sample flags over a whole joint-position stream (sample k is judged
/// on samples max(0, k-3)..k).
inline std::vector<ConstraintFlags> check_stream(const std::vector<Vec>& stream,
                                                 const ConstraintSet& cs) {
  std::vector<ConstraintFlags> out;
  out.reserve(stream.size());
  for (std::size_t k = 0; k < stream.size(); ++k) {
    const std::size_t first = k >= 3 ? k - 3 : 0;
    out.push_back(check_constraints(
        std::span<const Vec>(stream.data() + first, k - first + 1), cs));
  }
  return out;
}

struct FilterState {
  Vec filtered;  // low-pass memory
  // last three rate-limited outputs, newest first
  Vec p0, p1, p2;

  void reset(const Vec& q) {
    filtered = q;
    p0 = p1 = p2 = q;
  }
  bool initialized() const { return filtered.size() > 0; }
};

inline double lowpass_time_constant(double cutoff_hz) { return 1.0 / (2.0 * kPi * cutoff_hz); }

/// First-order exponential filter, alpha = dt / (tau_c + dt).
inline Vec low_pass(FilterState& st, const Vec& target, double dt, double cutoff_hz = 5.0) {
  if (!(dt > 0)) throw std::invalid_argument("low_pass: dt must be > 0");
  if (!st.initialized()) st.reset(target);
  require_size(target, st.filtered.size(), "low_pass target");
  const double alpha = dt / (lowpass_time_constant(cutoff_hz) + dt);
  st.filtered += alpha * (target - st.filtered);
  return st.filtered;
}

namespace detail {

struct BrakePeak {
  double v, p;
};

// Highest velocity and position reached from (p, v, a) when the upward
// motion is stopped as hard as the acceleration and jerk bounds allow.
inline BrakePeak brake_peak_up(double p, double v, double a, double jh, double amax, double h) {
  BrakePeak peak{v, p};
  while (v > 0 || a > 0) {
    a = std::max(a - jh, -amax);
    v += h * a;
    p += h * v;
    peak.v = std::max(peak.v, v);
    peak.p = std::max(peak.p, p);
  }
  return peak;
}

// Scalar limiter step for one joint. Returns the next output position.
inline double rate_limit_joint(double target, double p0, double p1, double p2, double vmax,
                               double amax, double jmax, double qmin, double qmax, double h) {
  // a sliver of margin so floating-point re-estimation stays under the bound;
  // pass-through accepts half of it back so limited streams are fixed points
  constexpr double kShrink = 1.0 - 1e-9;
  constexpr double kPass = 0.5e-9;
  const double v_pass = vmax * (1.0 - kPass);
  const double a_tol = amax * kPass;
  vmax *= kShrink;
  amax *= kShrink;
  jmax *= kShrink;
  const double jh = jmax * h;

  const double x = std::clamp(target, qmin, qmax);
  const double v0 = (p0 - p1) / h;
  const double a0 = (p0 - 2.0 * p1 + p2) / (h * h);

  const double lo0 = std::max(-amax, a0 - jh);
  const double hi0 = std::min(amax, a0 + jh);
  // the motion after choosing `a` can still be stopped inside every bound
  auto up_ok = [&](double a) {
    const double v = v0 + a * h;
    const BrakePeak pk = brake_peak_up(p0 + h * v, v, a, jh, amax, h);
    return pk.v <= vmax && pk.p <= qmax;
  };
  auto down_ok = [&](double a) {
    const double v = v0 + a * h;
    const BrakePeak pk = brake_peak_up(-(p0 + h * v), -v, -a, jh, amax, h);
    return pk.v <= vmax && pk.p <= -qmin;
  };

  // largest admissible acceleration (up_ok is monotone decreasing in a)
  double hi = hi0;
  if (!up_ok(hi)) {
    double l = lo0, r = hi0;
    for (int it = 0; it < 80; ++it) {
      const double m = 0.5 * (l + r);
      (up_ok(m) ? l : r) = m;
    }
    hi = l;
  }
  double lo = lo0;
  if (!down_ok(lo)) {
    double l = lo0, r = hi0;
    for (int it = 0; it < 80; ++it) {
      const double m = 0.5 * (l + r);
      (down_ok(m) ? r : l) = m;
    }
    lo = r;
  }
  if (lo > hi) {
    // no acceleration keeps both sides viable; brake the current motion
    const double brake = std::clamp(-v0 / h, lo0, hi0);
    lo = hi = brake;
  }

  // pass the target through untouched when it is already admissible
  const double a_direct = ((x - p0) / h - v0) / h;
  if (a_direct >= lo - a_tol && a_direct <= hi + a_tol && std::abs((x - p0) / h) <= v_pass) {
    return x;
  }

  // otherwise steer along a braking curve toward the target
  const double e = x - p0;
  const double v_brake = std::sqrt(std::max(0.0, amax * std::abs(e)));
  const double v_des = std::copysign(std::min({vmax, v_brake, std::abs(e) / h}), e);
  const double a = std::clamp((v_des - v0) / h, lo, hi);
  return p0 + h * (v0 + h * a);
}

}  // namespace detail

/// Clamps the implied velocity, acceleration, and jerk of the target stream
/// (against the stored output history) and keeps the target inside the
/// joint position bounds. Output streams satisfy check_constraints.
inline Vec rate_limit(FilterState& st, const Vec& target, const ConstraintSet& cs, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("rate_limit: dt must be > 0");
  if (!st.initialized()) st.reset(clamp(target, cs.q_min, cs.q_max));
  const int n = cs.size();
  require_size(target, n, "rate_limit target");
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = detail::rate_limit_joint(target[i], st.p0[i], st.p1[i], st.p2[i], cs.dq_max[i],
                                      cs.ddq_max[i], cs.dddq_max[i], cs.q_min[i], cs.q_max[i],
                                      dt);
  }
  st.p2 = st.p1;
  st.p1 = st.p0;
  st.p0 = out;
  return out;
}

}  // namespace aspace
