#ifndef ACUQUANT_ATTITUDE_HPP
#define ACUQUANT_ATTITUDE_HPP

// Mahony-style attitude filter and the twist angle about the needle axis.
//
// q maps body vectors to the world frame (world z up). The accelerometer reads specific force,
// so at rest it measures +g along the body direction of world up.

#include <acuquant/core.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <vector>

namespace acuquant {

using Quaternion = Eigen::Quaterniond;

struct AttitudeGains {
  double kp = 2.0;   // 1/s
  double ki = 0.05;  // 1/s
  double gate = 0.2; // skip correction when | |a|/g - 1 | exceeds this
  bool correction_enabled = true;

  void validate() const {
    if (!(kp > 0.0) || !(ki >= 0.0) || !(gate >= 0.0)) {
      throw Error(ErrorKind::Config, "attitude", "gains need kp > 0, ki >= 0, gate >= 0");
    }
  }
};

struct MahonyResult {
  Quaternion q;
  Eigen::Vector3d bias;
};

namespace detail {

/// exp of a body rotation vector as a unit quaternion.
inline Quaternion rotation_quaternion(const Eigen::Vector3d& phi) {
  const double angle = phi.norm();
  if (angle == 0.0) return Quaternion::Identity();
  return Quaternion(Eigen::AngleAxisd(angle, phi / angle));
}

}  // namespace detail

inline MahonyResult mahony_step(const Quaternion& q, const Eigen::Vector3d& gyro,
                                const Eigen::Vector3d& accel, double dt,
                                const AttitudeGains& gains, const Eigen::Vector3d& bias) {
  Eigen::Vector3d b = bias;
  Eigen::Vector3d omega = gyro - b;
  const double norm = accel.norm();
  const bool usable = gains.correction_enabled && norm > 0.0 &&
                      std::abs(norm / kGravity - 1.0) <= gains.gate;
  if (usable) {
    const Eigen::Vector3d up_body = q.conjugate() * Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d e = (accel / norm).cross(up_body);
    b -= gains.ki * e * dt;
    omega = gyro - b + gains.kp * e;
  }
  const Eigen::Vector3d phi = omega * dt;
  if (phi.isZero(0.0)) return {q, b};
  Quaternion next = q * detail::rotation_quaternion(phi);
  next.normalize();
  return {next, b};
}

/// Orientation whose predicted gravity matches one accelerometer reading, with zero twist.
inline Quaternion level_from_accel(const Eigen::Vector3d& accel) {
  if (accel.norm() == 0.0) return Quaternion::Identity();
  return Quaternion::FromTwoVectors(accel.normalized(), Eigen::Vector3d::UnitZ());
}

struct AttitudeTrack {
  std::vector<Quaternion> q;
  std::vector<Eigen::Vector3d> bias;
  double t0 = 0.0;
  double dt = 0.01;
};

/// Runs the filter over aligned 3-axis accel and gyro series. The start orientation is levelled
/// from the mean accel of the first `level_samples` samples.
inline AttitudeTrack estimate_attitude(const SampledSeries& accel, const SampledSeries& gyro,
                                       const AttitudeGains& gains = {},
                                       std::size_t level_samples = 50) {
  gains.validate();
  if (accel.width() != 3 || gyro.width() != 3) {
    throw Error(ErrorKind::DegenerateInput, "attitude", "accel and gyro must be 3-axis");
  }
  if (accel.size() != gyro.size() || std::abs(accel.dt() - gyro.dt()) > 1e-12) {
    throw Error(ErrorKind::LengthMismatch, "attitude", "accel and gyro are not aligned");
  }
  AttitudeTrack track;
  track.t0 = accel.t0();
  track.dt = accel.dt();
  if (accel.empty()) return track;

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  const std::size_t m = std::max<std::size_t>(1, std::min(level_samples, accel.size()));
  for (std::size_t n = 0; n < m; ++n) mean += Eigen::Vector3d(accel(n, 0), accel(n, 1), accel(n, 2));
  Quaternion q = level_from_accel(mean / static_cast<double>(m));
  Eigen::Vector3d b = Eigen::Vector3d::Zero();

  track.q.reserve(accel.size());
  track.bias.reserve(accel.size());
  track.q.push_back(q);
  track.bias.push_back(b);
  for (std::size_t n = 1; n < accel.size(); ++n) {
    const Eigen::Vector3d w(gyro(n - 1, 0), gyro(n - 1, 1), gyro(n - 1, 2));
    const Eigen::Vector3d a(accel(n, 0), accel(n, 1), accel(n, 2));
    const auto r = mahony_step(q, w, a, accel.dt(), gains, b);
    q = r.q;
    b = r.bias;
    track.q.push_back(q);
    track.bias.push_back(b);
  }
  return track;
}

/// Twist of q about the body z (needle) axis relative to `reference`, in (-pi, pi].
inline double twist_angle(const Quaternion& q, const Quaternion& reference) {
  const Quaternion rel = reference.conjugate() * q;
  double angle = 2.0 * std::atan2(rel.z(), rel.w());
  if (angle > kPi) angle -= 2.0 * kPi;
  if (angle <= -kPi) angle += 2.0 * kPi;
  return angle;
}

/// Unwrapped twist series; steps larger than pi are taken as wraps.
inline SampledSeries roll_angle_series(const std::vector<Quaternion>& q_series,
                                       const Quaternion& reference, double t0 = 0.0,
                                       double dt = 0.01) {
  if (q_series.empty()) throw Error(ErrorKind::EmptyInput, "attitude", "no orientations");
  std::vector<double> out(q_series.size());
  double prev = twist_angle(q_series.front(), reference);
  double offset = 0.0;
  out[0] = prev;
  for (std::size_t n = 1; n < q_series.size(); ++n) {
    const double raw = twist_angle(q_series[n], reference);
    const double step = raw - prev;
    if (step > kPi) offset -= 2.0 * kPi;
    if (step < -kPi) offset += 2.0 * kPi;
    out[n] = raw + offset;
    prev = raw;
  }
  return SampledSeries::scalar(t0, dt, std::move(out), "rad");
}

/// Gyro rate about the needle axis after bias removal.
inline SampledSeries axial_rate(const SampledSeries& gyro, const AttitudeTrack& track) {
  std::vector<double> out(gyro.size());
  for (std::size_t n = 0; n < gyro.size(); ++n) {
    out[n] = gyro(n, 2) - (n < track.bias.size() ? track.bias[n].z() : 0.0);
  }
  return gyro.with_values(std::move(out), 1, "rad/s");
}

}  // namespace acuquant

#endif  // ACUQUANT_ATTITUDE_HPP
