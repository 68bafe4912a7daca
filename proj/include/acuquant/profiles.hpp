#ifndef ACUQUANT_PROFILES_HPP
#define ACUQUANT_PROFILES_HPP

// Manipulation profiles for the simulator.
//
// A profile is built from a reference motion: each active stage moves by a fixed amplitude with
// a raised-cosine velocity (zero velocity and acceleration at both ends), holds keep position.
// The applied force or torque is the inverse dynamics of that reference through the tissue
// model, so the forward simulation tracks it closely.

#include <acuquant/simulate.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <vector>

namespace acuquant {

/// Kinematic state of a reference motion at one instant.
struct ReferenceState {
  double position = 0.0;
  double velocity = 0.0;
  double accel = 0.0;
};

/// Piecewise reference: each segment moves by `delta` over its duration (delta 0 holds).
class ReferenceMotion {
 public:
  struct Segment {
    double start = 0.0;
    double duration = 0.0;
    double from = 0.0;
    double delta = 0.0;
  };

  ReferenceMotion(double origin, const std::vector<StageSpan>& schedule,
                  const std::vector<double>& deltas) {
    double t = 0.0;
    double pos = origin;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      segments_.push_back({t, schedule[i].duration, pos, deltas[i]});
      t += schedule[i].duration;
      pos += deltas[i];
    }
    end_position_ = pos;
  }

  ReferenceState at(double t) const {
    if (segments_.empty()) return {end_position_, 0.0, 0.0};
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double value, const Segment& s) { return value < s.start; });
    if (it == segments_.begin()) return {segments_.front().from, 0.0, 0.0};
    const Segment& s = *std::prev(it);
    const double tau = t - s.start;
    if (tau >= s.duration) return {s.from + s.delta, 0.0, 0.0};
    const double T = s.duration;
    const double w = kPi / T;
    return {s.from + 0.5 * s.delta * (1.0 - std::cos(w * tau)),
            0.5 * s.delta * w * std::sin(w * tau), 0.5 * s.delta * w * w * std::cos(w * tau)};
  }

 private:
  std::vector<Segment> segments_;
  double end_position_ = 0.0;
};

struct LiftThrustPattern {
  ManipulationType label = ManipulationType::LTRF;
  double cycle_period = 1.0;                       // s
  std::array<double, 4> proportions{0.25, 0.15, 0.48, 0.12};  // S1, S2, S3, S4
  double amplitude = 0.012;                        // m, thrust depth = lift height
  double initial_depth = 0.015;                    // m
  double lead_in = 2.0;                            // s stationary before the first cycle
  double duration = 20.0;                          // s total
  double proportion_jitter = 0.0;                  // per-cycle SD of active proportions
  std::uint64_t seed = 0;

  static LiftThrustPattern ltrf() { return {}; }
  static LiftThrustPattern ltrd() {
    LiftThrustPattern p;
    p.label = ManipulationType::LTRD;
    p.proportions = {0.52, 0.16, 0.17, 0.15};
    return p;
  }
};

struct TwirlPattern {
  ManipulationType label = ManipulationType::TRRF;
  double cycle_period = 1.0;   // s
  double left_fraction = 0.33; // left twirl share of the cycle
  double amplitude = kPi / 2;  // rad swept per stage
  double initial_depth = 0.015;
  double lead_in = 2.0;
  double duration = 20.0;
  double proportion_jitter = 0.0;
  std::uint64_t seed = 0;

  static TwirlPattern trrf() { return {}; }
  static TwirlPattern trrd() {
    TwirlPattern p;
    p.label = ManipulationType::TRRD;
    p.left_fraction = 0.76;
    return p;
  }
};

namespace detail {

/// Round to the 10 ms sensor grid so stage labels land exactly on samples.
inline double to_grid(double t) { return std::round(t * kImuRate) / kImuRate; }

inline void pad_schedule(std::vector<StageSpan>& schedule, double used, double duration) {
  const double rest = to_grid(duration - used);
  if (rest > 0.0) schedule.push_back({Stage::Idle, rest});
}

}  // namespace detail

/// Stage schedule of a lifting-thrusting session: idle lead-in, whole cycles, idle tail.
inline std::vector<StageSpan> lift_thrust_schedule(const LiftThrustPattern& p) {
  if (!(p.cycle_period > 0.0) || !(p.duration > p.lead_in + p.cycle_period) || p.lead_in < 0.0) {
    throw Error(ErrorKind::Config, "simulate", "lifting-thrusting pattern does not fit a cycle");
  }
  double total = 0.0;
  for (double q : p.proportions) {
    if (!(q > 0.0)) throw Error(ErrorKind::Config, "simulate", "stage proportions must be > 0");
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error(ErrorKind::Config, "simulate", "stage proportions must sum to 1");
  }

  std::vector<StageSpan> schedule;
  if (p.lead_in > 0.0) schedule.push_back({Stage::Idle, detail::to_grid(p.lead_in)});
  double used = detail::to_grid(p.lead_in);
  NormalStream rng(p.seed, 101);
  const double tail = 0.5;
  const double min_hold = 0.08;
  while (used + p.cycle_period + tail <= p.duration + 1e-9) {
    std::array<double, 4> q = p.proportions;
    if (p.proportion_jitter > 0.0) {
      const double hold = q[1] + q[3];
      q[0] = std::clamp(q[0] + p.proportion_jitter * rng(), 0.05, 0.9);
      q[2] = std::clamp(q[2] + p.proportion_jitter * rng(), 0.05, 0.9);
      double free = 1.0 - q[0] - q[2];
      if (free < 2 * min_hold) {
        const double shrink = (1.0 - 2 * min_hold) / (q[0] + q[2]);
        q[0] *= shrink;
        q[2] *= shrink;
        free = 1.0 - q[0] - q[2];
      }
      q[1] = free * p.proportions[1] / hold;
      q[3] = free - q[1];
    }
    const double T = p.cycle_period;
    const double d1 = detail::to_grid(q[0] * T);
    const double d2 = detail::to_grid(q[1] * T);
    const double d3 = detail::to_grid(q[2] * T);
    const double d4 = detail::to_grid(T - d1 - d2 - d3);
    schedule.push_back({Stage::S1, d1});
    schedule.push_back({Stage::S2, d2});
    schedule.push_back({Stage::S3, d3});
    schedule.push_back({Stage::S4, d4});
    used += d1 + d2 + d3 + d4;
  }
  detail::pad_schedule(schedule, used, p.duration);
  return schedule;
}

/// Profile whose applied force realizes the pattern through the given needle and tissue.
inline ManipulationProfile lift_thrust_profile(const LiftThrustPattern& p, const NeedleBody& body,
                                               const std::vector<TissueLayer>& layers) {
  ManipulationProfile profile;
  profile.stage_schedule = lift_thrust_schedule(p);
  profile.initial_depth = p.initial_depth;
  std::vector<double> deltas;
  for (const auto& s : profile.stage_schedule) {
    deltas.push_back(s.stage == Stage::S1 ? p.amplitude : s.stage == Stage::S3 ? -p.amplitude : 0.0);
  }
  auto ref = std::make_shared<ReferenceMotion>(p.initial_depth, profile.stage_schedule, deltas);
  const double m = body.mass;
  profile.applied_force = [ref, m, layers](double t) {
    const ReferenceState s = ref->at(t);
    const TipFriction tf = tip_and_friction_force(s.position, s.velocity, layers);
    return m * s.accel + tf.tip + tf.friction;
  };
  profile.applied_torque = [](double) { return 0.0; };
  return profile;
}

inline std::vector<StageSpan> twirl_schedule(const TwirlPattern& p) {
  if (!(p.cycle_period > 0.0) || !(p.duration > p.lead_in + p.cycle_period) ||
      !(p.left_fraction > 0.0 && p.left_fraction < 1.0)) {
    throw Error(ErrorKind::Config, "simulate", "twirling pattern does not fit a cycle");
  }
  std::vector<StageSpan> schedule;
  if (p.lead_in > 0.0) schedule.push_back({Stage::Idle, detail::to_grid(p.lead_in)});
  double used = detail::to_grid(p.lead_in);
  NormalStream rng(p.seed, 202);
  const double tail = 0.5;
  // Reduction starts with the heavy backward (right) twirl.
  const bool right_first = p.label == ManipulationType::TRRD;
  while (used + p.cycle_period + tail <= p.duration + 1e-9) {
    double left = p.left_fraction;
    if (p.proportion_jitter > 0.0) {
      left = std::clamp(left + p.proportion_jitter * rng(), 0.1, 0.9);
    }
    const double dl = detail::to_grid(left * p.cycle_period);
    const double dr = detail::to_grid(p.cycle_period - dl);
    if (right_first) {
      schedule.push_back({Stage::RightTwirl, dr});
      schedule.push_back({Stage::LeftTwirl, dl});
    } else {
      schedule.push_back({Stage::LeftTwirl, dl});
      schedule.push_back({Stage::RightTwirl, dr});
    }
    used += dl + dr;
  }
  detail::pad_schedule(schedule, used, p.duration);
  return schedule;
}

inline ManipulationProfile twirl_profile(const TwirlPattern& p, const NeedleBody& body,
                                         const std::vector<TissueLayer>& layers) {
  ManipulationProfile profile;
  profile.stage_schedule = twirl_schedule(p);
  profile.initial_depth = p.initial_depth;
  std::vector<double> deltas;
  for (const auto& s : profile.stage_schedule) {
    deltas.push_back(s.stage == Stage::LeftTwirl    ? -p.amplitude
                     : s.stage == Stage::RightTwirl ? p.amplitude
                                                    : 0.0);
  }
  auto ref = std::make_shared<ReferenceMotion>(0.0, profile.stage_schedule, deltas);
  const auto contacts = layer_contacts(p.initial_depth, layers);
  const double axial_inertia = body.inertia(2, 2);
  const double r = body.radius;
  profile.applied_torque = [ref, contacts, layers, axial_inertia, r](double t) {
    const ReferenceState s = ref->at(t);
    return axial_inertia * s.accel + friction_torque(s.velocity, contacts, layers, r);
  };
  profile.applied_force = [](double) { return 0.0; };
  return profile;
}

}  // namespace acuquant

#endif  // ACUQUANT_PROFILES_HPP
