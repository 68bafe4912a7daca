#ifndef ACUQUANT_KINEMATICS_HPP
#define ACUQUANT_KINEMATICS_HPP

// Axial velocity and displacement from acceleration: state-gated trapezoid integration and the
// ungated baseline.

#include <acuquant/attitude.hpp>
#include <acuquant/core.hpp>
#include <acuquant/statefuse.hpp>

#include <cmath>
#include <vector>

namespace acuquant {

struct KinematicEstimate {
  SampledSeries velocity;      // m/s
  SampledSeries displacement;  // m
  MotionStateTimeline states_used;
  SampledSeries accel;         // the axial input, m/s^2
};

struct IntegrationOptions {
  // Within each motion interval that is followed by a stationary sample, subtract the mean
  // accel of the stroke before integrating, so the velocity returns to rest where the needle is
  // known to stop. This takes out a constant bias exactly; off gives the plain gated recursion.
  bool drift_correction = false;
  // Motion intervals are widened by this many samples on each side before integrating. Cutting
  // the first sample of a stroke loses its onset, while extra rest samples only add noise.
  std::size_t edge_padding = 0;

  /// For detected timelines of strokes that start and end at rest.
  static IntegrationOptions rest_to_rest() { return {true, 3}; }
};

namespace detail {

inline void check_lengths(const SampledSeries& accel, const MotionStateTimeline& timeline) {
  if (accel.width() != 1) {
    throw Error(ErrorKind::DegenerateInput, "kinematics", "expected the scalar axial acceleration");
  }
  const std::size_t covered = timeline.intervals.empty() ? 0 : timeline.intervals.back().end;
  if (covered != accel.size()) {
    throw Error(ErrorKind::LengthMismatch, "kinematics", "timeline does not cover the accel series");
  }
}

inline std::vector<double> trapezoid(const std::vector<double>& x, double dt, double x0 = 0.0) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  out[0] = x0;
  for (std::size_t n = 1; n < x.size(); ++n) out[n] = out[n - 1] + 0.5 * (x[n] + x[n - 1]) * dt;
  return out;
}

/// Timeline with every motion interval widened by `pad` samples on each side.
inline MotionStateTimeline widen_motion(const MotionStateTimeline& timeline, std::size_t pad) {
  if (pad == 0) return timeline;
  const std::size_t n = timeline.intervals.empty() ? 0 : timeline.intervals.back().end;
  std::vector<bool> moving(n, false);
  for (const auto& iv : timeline.intervals) {
    if (iv.state != MotionState::Motion) continue;
    const std::size_t lo = iv.start > pad ? iv.start - pad : 0;
    const std::size_t hi = std::min(n, iv.end + pad);
    for (std::size_t k = lo; k < hi; ++k) moving[k] = true;
  }
  auto out = timeline_from_flags(moving, timeline.confidence.t0(), timeline.confidence.dt());
  out.confidence = timeline.confidence;
  out.imu_only = timeline.imu_only;
  out.tau_acc = timeline.tau_acc;
  out.tau_vis = timeline.tau_vis;
  return out;
}

}  // namespace detail

inline KinematicEstimate segmented_integrate(const SampledSeries& accel,
                                             const MotionStateTimeline& timeline_in,
                                             const IntegrationOptions& opts = {}) {
  detail::check_lengths(accel, timeline_in);
  const MotionStateTimeline timeline = detail::widen_motion(timeline_in, opts.edge_padding);
  const std::size_t n = accel.size();
  const double dt = accel.dt();
  std::vector<double> v(n, 0.0), d(n, 0.0);

  for (const auto& iv : timeline.intervals) {
    if (iv.state != MotionState::Motion) continue;
    double bias = 0.0;
    if (opts.drift_correction && iv.end < n) {
      // A stroke runs rest to rest, so its accel samples (with one stationary neighbour on each
      // side) sum to zero; what is left is taken as a constant bias.
      const std::size_t lo = iv.start > 0 ? iv.start - 1 : 0;
      double sum = 0.0;
      for (std::size_t k = lo; k <= iv.end; ++k) sum += accel(k);
      bias = sum / static_cast<double>(iv.end - lo + 1);
    }
    // Each stroke starts from rest.
    v[iv.start] = 0.0;
    for (std::size_t k = iv.start + 1; k < iv.end; ++k) {
      v[k] = v[k - 1] + 0.5 * ((accel(k) - bias) + (accel(k - 1) - bias)) * dt;
    }
  }

  // The recursion runs where the needle moves or has just stopped (v = 0 closes the last
  // trapezoid); inside a stationary run the displacement is held.
  for (std::size_t k = 1; k < n; ++k) {
    const bool moving = timeline.state_at(k) == MotionState::Motion ||
                        timeline.state_at(k - 1) == MotionState::Motion;
    d[k] = moving ? d[k - 1] + 0.5 * (v[k] + v[k - 1]) * dt : d[k - 1];
  }
  return {accel.with_values(std::move(v), 1, "m/s"), accel.with_values(std::move(d), 1, "m"), timeline,
          accel};
}

inline KinematicEstimate naive_double_integrate(const SampledSeries& accel) {
  if (accel.width() != 1) {
    throw Error(ErrorKind::DegenerateInput, "kinematics", "expected the scalar axial acceleration");
  }
  const std::vector<double> a(accel.values().begin(), accel.values().end());
  const auto v = detail::trapezoid(a, accel.dt());
  const auto d = detail::trapezoid(v, accel.dt());
  std::vector<bool> moving(accel.size(), true);
  return {accel.with_values(v, 1, "m/s"), accel.with_values(d, 1, "m"),
          timeline_from_flags(moving, accel.t0(), accel.dt()), accel};
}

/// World-frame specific force minus gravity, projected on `axis` (world frame). The default is
/// world up; pass (0, 0, -1) for insertion-positive values on a vertical needle.
inline SampledSeries axial_projection(const SampledSeries& accel3, const std::vector<Quaternion>& q_series,
                                      const Eigen::Vector3d& axis = Eigen::Vector3d::UnitZ()) {
  if (accel3.width() != 3) throw Error(ErrorKind::DegenerateInput, "kinematics", "accel must be 3-axis");
  if (q_series.size() != accel3.size()) {
    throw Error(ErrorKind::LengthMismatch, "kinematics", "attitude and accel lengths differ");
  }
  const Eigen::Vector3d u = axis.normalized();
  std::vector<double> out(accel3.size());
  for (std::size_t k = 0; k < accel3.size(); ++k) {
    const Eigen::Vector3d body(accel3(k, 0), accel3(k, 1), accel3(k, 2));
    const Eigen::Vector3d world = q_series[k] * body - Eigen::Vector3d(0.0, 0.0, kGravity);
    out[k] = u.dot(world);
  }
  return accel3.with_values(std::move(out), 1, "m/s^2");
}

}  // namespace acuquant

#endif  // ACUQUANT_KINEMATICS_HPP
