#ifndef ACUQUANT_SIMULATE_HPP
#define ACUQUANT_SIMULATE_HPP

// Needle-tissue forward model.
//
// Translation is one-dimensional along the needle axis, expressed as insertion depth (positive
// into tissue): m * a = F_a - F_T - F_f. Rotation is the full rigid-body equation in the body
// frame, I * w' + w x (I w) = T_a - T_f, with applied and friction torques about the needle
// axis (body z). Both integrate with semi-implicit Euler and Coulomb stick-slip handling, then
// decimate to the sensor rate.

#include <acuquant/core.hpp>
#include <acuquant/random.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace acuquant {

struct NeedleBody {
  double mass = 1.3e-3;  // kg
  Eigen::Matrix3d inertia = Eigen::Vector3d(2.0e-7, 2.0e-7, 1.0e-8).asDiagonal();  // kg m^2
  double radius = 1.5e-4;  // m, needle shaft

  void validate() const {
    constexpr std::string_view mod = "simulate";
    if (!(mass > 0.0)) throw Error(ErrorKind::Config, mod, "needle mass must be > 0");
    if (!(radius > 0.0)) throw Error(ErrorKind::Config, mod, "needle radius must be > 0");
    if (!inertia.isApprox(inertia.transpose(), 1e-12)) {
      throw Error(ErrorKind::Config, mod, "inertia matrix must be symmetric");
    }
    Eigen::LLT<Eigen::Matrix3d> llt(inertia);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::Config, mod, "inertia matrix must be positive definite");
    }
  }
};

/// One tissue layer of the parametric stand-in.
///
/// The tip force is Kelvin-Voigt in the layer holding the tip. Shaft friction per contacted layer
/// is Coulomb (mu * F_i) plus viscous shear 2*pi*eta*L_i*v. The normal force on the shaft grows
/// with contact length, F_i = grip * L_i.
struct TissueLayer {
  double mu = 0.0;         // friction coefficient
  double eta = 0.0;        // Pa s
  double top = 0.0;        // m, depth of the upper boundary
  double bottom = 0.0;     // m, depth of the lower boundary
  double stiffness = 0.0;  // N/m
  double damping = 0.0;    // N s/m
  double grip = 0.0;       // N/m, normal force per unit contact length

  double thickness() const { return bottom - top; }

  void validate() const {
    if (mu < 0.0 || eta < 0.0 || stiffness < 0.0 || damping < 0.0 || grip < 0.0 ||
        !(bottom > top) || top < 0.0) {
      throw Error(ErrorKind::Config, "simulate", "invalid tissue layer parameters");
    }
  }
};

/// Skin, subcutaneous fat and muscle. Physical defaults are toolkit choices.
inline std::vector<TissueLayer> default_layers() {
  return {
      TissueLayer{.mu = 0.30, .eta = 8.0, .top = 0.0, .bottom = 0.002, .stiffness = 600.0,
                  .damping = 0.8, .grip = 30.0},
      TissueLayer{.mu = 0.20, .eta = 4.0, .top = 0.002, .bottom = 0.008, .stiffness = 150.0,
                  .damping = 0.3, .grip = 10.0},
      TissueLayer{.mu = 0.25, .eta = 10.0, .top = 0.008, .bottom = 0.060, .stiffness = 200.0,
                  .damping = 0.5, .grip = 15.0},
  };
}

struct LayerContactState {
  double normal_force = 0.0;    // N
  double contact_length = 0.0;  // m
};

struct TipFriction {
  double tip = 0.0;       // F_T, N
  double friction = 0.0;  // F_f, N, signed with the velocity
  double coulomb_limit = 0.0;       // sum mu_i F_i, N
  double viscous_coefficient = 0.0; // sum 2 pi eta_i L_i, N s/m
  std::vector<LayerContactState> contacts;
};

inline int signum(double x) { return (x > 0.0) - (x < 0.0); }

/// Contact state of every layer for a tip at `depth`. Past the last layer its parameters
/// continue, so its contact length may exceed the nominal thickness.
inline std::vector<LayerContactState> layer_contacts(double depth,
                                                     const std::vector<TissueLayer>& layers) {
  std::vector<LayerContactState> contacts(layers.size());
  if (depth <= 0.0) return contacts;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    double length = depth - layer.top;
    if (i + 1 < layers.size()) length = std::min(length, layer.thickness());
    length = std::max(length, 0.0);
    contacts[i] = {layer.grip * length, length};
  }
  return contacts;
}

inline TipFriction tip_and_friction_force(double depth, double velocity,
                                          const std::vector<TissueLayer>& layers) {
  TipFriction out;
  out.contacts.assign(layers.size(), {});
  if (depth <= 0.0 || layers.empty()) return out;

  out.contacts = layer_contacts(depth, layers);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    out.coulomb_limit += layers[i].mu * out.contacts[i].normal_force;
    out.viscous_coefficient += 2.0 * kPi * layers[i].eta * out.contacts[i].contact_length;
  }
  out.friction = out.coulomb_limit * signum(velocity) + out.viscous_coefficient * velocity;

  const TissueLayer* tip_layer = nullptr;
  for (const auto& layer : layers) {
    if (depth > layer.top && depth <= layer.bottom) {
      tip_layer = &layer;
      break;
    }
  }
  if (tip_layer == nullptr && depth > layers.back().bottom) tip_layer = &layers.back();
  if (tip_layer != nullptr) {
    out.tip = std::max(0.0, tip_layer->stiffness * (depth - tip_layer->top) +
                                tip_layer->damping * velocity);
  }
  return out;
}

/// Friction torque about the needle axis, sum of mu_i F_i r sgn(w) + eta_i w r^2 L_i.
/// The value enters the rotation equation as T_a - T_f, so it carries the sign of `omega`.
inline double friction_torque(double omega, const std::vector<LayerContactState>& contacts,
                              const std::vector<TissueLayer>& layers, double r) {
  double coulomb = 0.0;
  double viscous = 0.0;
  const std::size_t n = std::min(contacts.size(), layers.size());
  for (std::size_t i = 0; i < n; ++i) {
    coulomb += layers[i].mu * contacts[i].normal_force * r;
    viscous += layers[i].eta * r * r * contacts[i].contact_length;
  }
  return coulomb * signum(omega) + viscous * omega;
}

struct StageSpan {
  Stage stage = Stage::Idle;
  double duration = 0.0;  // s
};

/// Applied force/torque histories plus the stage schedule they realize.
struct ManipulationProfile {
  std::function<double(double)> applied_force;   // N along insertion direction
  std::function<double(double)> applied_torque;  // N m about needle axis
  std::vector<StageSpan> stage_schedule;
  double initial_depth = 0.0;      // m
  double initial_velocity = 0.0;   // m/s
  Eigen::Vector3d initial_omega = Eigen::Vector3d::Zero();  // rad/s, body frame

  double schedule_duration() const {
    double total = 0.0;
    for (const auto& s : stage_schedule) total += s.duration;
    return total;
  }

  /// Stage at time t; past the schedule the last stage persists.
  Stage stage_at(double t) const {
    double start = 0.0;
    for (const auto& s : stage_schedule) {
      // Half a microsecond of slack so that sample instants landing on a boundary (up to
      // rounding) fall into the following stage.
      if (t < start + s.duration - 5e-7) return s.stage;
      start += s.duration;
    }
    return stage_schedule.empty() ? Stage::Idle : stage_schedule.back().stage;
  }
};

struct ForceSample {
  double applied = 0.0;          // F_a
  double tip = 0.0;              // F_T
  double friction = 0.0;         // F_f
  double applied_torque = 0.0;   // T_a
  double friction_torque = 0.0;  // T_f
};

/// Ground truth at the output rate. Translation is in insertion coordinates: accel, velocity and
/// displacement are positive into tissue, displacement relative to the starting depth.
struct GroundTruthTrajectory {
  SampledSeries accel;         // m/s^2
  SampledSeries velocity;      // m/s
  SampledSeries displacement;  // m
  SampledSeries depth;         // m, absolute tip depth
  SampledSeries omega;         // rad/s, body frame, 3 axes
  SampledSeries angle;         // rad, integral of axial omega
  // Acceleration averaged over each sample's centered interval, what a band-limited sensor
  // reports. Point samples can land on a single-step stick/slip transient.
  SampledSeries sensed_accel;  // m/s^2
  std::vector<ForceSample> forces;
  std::vector<Stage> stages;
  double mass = 0.0;
};

namespace detail {

struct SimClock {
  std::size_t steps_per_sample = 0;
  std::size_t samples = 0;
};

inline SimClock make_clock(double dt, double duration, double output_dt,
                           const ManipulationProfile& profile) {
  constexpr std::string_view mod = "simulate";
  if (!(dt > 0.0) || !(duration > 0.0) || !(output_dt > 0.0)) {
    throw Error(ErrorKind::Config, mod, "dt, duration and output_dt must be positive");
  }
  if (dt > output_dt * (1.0 + 1e-9)) {
    throw Error(ErrorKind::Config, mod, "integration step must not exceed the output step");
  }
  const double ratio = output_dt / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6 * ratio) {
    throw Error(ErrorKind::Config, mod, "output_dt must be an integer multiple of dt");
  }
  if (!profile.stage_schedule.empty() && profile.schedule_duration() < duration - 1e-9) {
    throw Error(ErrorKind::Config, mod, "stage schedule does not cover the simulated span");
  }
  for (const auto& s : profile.stage_schedule) {
    if (!(s.duration > 0.0)) throw Error(ErrorKind::Config, mod, "stage durations must be > 0");
  }
  SimClock clock;
  clock.steps_per_sample = static_cast<std::size_t>(rounded);
  clock.samples = static_cast<std::size_t>(std::llround(duration / output_dt));
  if (clock.samples == 0) throw Error(ErrorKind::Config, mod, "duration shorter than one sample");
  return clock;
}

inline SampledSeries zeros(double dt, std::size_t n, std::size_t width, const char* unit) {
  return SampledSeries(0.0, dt, width, std::vector<double>(n * width, 0.0), unit);
}

}  // namespace detail

/// Integrates the translational model. `output_dt` defaults to the 100 Hz sensor step; pass
/// output_dt == dt to keep every integration step.
inline GroundTruthTrajectory simulate_lifting_thrusting(const ManipulationProfile& profile,
                                                        const NeedleBody& body,
                                                        const std::vector<TissueLayer>& layers,
                                                        double dt, double duration,
                                                        double output_dt = 0.01) {
  body.validate();
  for (const auto& l : layers) l.validate();
  const auto clock = detail::make_clock(dt, duration, output_dt, profile);
  const std::size_t n_out = clock.samples;
  const double m = body.mass;

  std::vector<double> acc(n_out), vel(n_out), disp(n_out), dep(n_out);
  GroundTruthTrajectory truth;
  truth.mass = m;
  truth.forces.resize(n_out);
  truth.stages.resize(n_out);

  double x = profile.initial_depth;
  double v = profile.initial_velocity;
  const double x0 = x;
  const std::size_t total_steps = n_out * clock.steps_per_sample;
  const std::size_t half = clock.steps_per_sample / 2;
  std::vector<double> acc_sum(n_out, 0.0), acc_count(n_out, 0.0);

  for (std::size_t j = 0; j < total_steps; ++j) {
    const double t = static_cast<double>(j) * dt;
    const double fa = profile.applied_force ? profile.applied_force(t) : 0.0;
    const TipFriction tf = tip_and_friction_force(x, v, layers);
    double ft = tf.tip;
    const double non_friction = fa - ft - tf.viscous_coefficient * v;

    double ff = 0.0;
    double a = 0.0;
    double v_new = 0.0;
    if (v != 0.0) {
      ff = tf.friction;
      a = (fa - ft - ff) / m;
      v_new = v + a * dt;
      if (v_new * v < 0.0) {
        // Kinetic friction would reverse the motion within the step: stop at zero instead.
        ff = fa - ft + m * v / dt;
        a = (fa - ft - ff) / m;
        v_new = 0.0;
      }
    } else if (std::abs(non_friction) <= tf.coulomb_limit) {
      ff = non_friction;  // static friction balances the load
      a = (fa - ft - ff) / m;
      v_new = 0.0;
    } else {
      ff = tf.coulomb_limit * signum(non_friction);
      a = (fa - ft - ff) / m;
      v_new = a * dt;
    }

    double x_new = x + v_new * dt;
    if (x_new < 0.0) {
      // Needle reaches skin entry: inelastic stop, reaction folded into the tip force.
      v_new = -x / dt;
      x_new = 0.0;
      const double a_stop = (v_new - v) / dt;
      ft = fa - ff - m * a_stop;
      a = (fa - ft - ff) / m;
      v_new = 0.0;
    }

    const std::size_t bin = (j + half) / clock.steps_per_sample;
    if (bin < n_out) {
      acc_sum[bin] += a;
      acc_count[bin] += 1.0;
    }
    if (j % clock.steps_per_sample == 0) {
      const std::size_t n = j / clock.steps_per_sample;
      acc[n] = a;
      vel[n] = v;
      disp[n] = x - x0;
      dep[n] = x;
      truth.forces[n] = ForceSample{fa, ft, ff, 0.0, 0.0};
      truth.stages[n] = profile.stage_at(t);
    }
    x = x_new;
    v = v_new;
  }

  for (std::size_t n = 0; n < n_out; ++n) acc_sum[n] /= acc_count[n];
  truth.sensed_accel = SampledSeries::scalar(0.0, output_dt, std::move(acc_sum), "m/s^2");
  truth.accel = SampledSeries::scalar(0.0, output_dt, std::move(acc), "m/s^2");
  truth.velocity = SampledSeries::scalar(0.0, output_dt, std::move(vel), "m/s");
  truth.displacement = SampledSeries::scalar(0.0, output_dt, std::move(disp), "m");
  truth.depth = SampledSeries::scalar(0.0, output_dt, std::move(dep), "m");
  truth.omega = detail::zeros(output_dt, n_out, 3, "rad/s");
  truth.angle = detail::zeros(output_dt, n_out, 1, "rad");
  return truth;
}

/// Integrates the rotational model with friction from fixed layer contacts.
inline GroundTruthTrajectory simulate_twirling(const ManipulationProfile& profile,
                                               const NeedleBody& body,
                                               const std::vector<TissueLayer>& layers,
                                               const std::vector<LayerContactState>& contacts,
                                               double dt, double duration,
                                               double output_dt = 0.01) {
  body.validate();
  for (const auto& l : layers) l.validate();
  const auto clock = detail::make_clock(dt, duration, output_dt, profile);
  const std::size_t n_out = clock.samples;

  const Eigen::Matrix3d& inertia = body.inertia;
  const Eigen::Matrix3d inv_inertia = inertia.inverse();
  const double r = body.radius;
  double coulomb_limit = 0.0;
  for (std::size_t i = 0; i < std::min(contacts.size(), layers.size()); ++i) {
    coulomb_limit += layers[i].mu * contacts[i].normal_force * r;
  }

  std::vector<double> omega_out(n_out * 3), angle_out(n_out);
  GroundTruthTrajectory truth;
  truth.mass = body.mass;
  truth.forces.resize(n_out);
  truth.stages.resize(n_out);

  Eigen::Vector3d w = profile.initial_omega;
  double angle = 0.0;
  const std::size_t total_steps = n_out * clock.steps_per_sample;
  const Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  const double axial_gain = inv_inertia(2, 2);

  for (std::size_t j = 0; j < total_steps; ++j) {
    const double t = static_cast<double>(j) * dt;
    const double ta = profile.applied_torque ? profile.applied_torque(t) : 0.0;
    const Eigen::Vector3d gyroscopic = w.cross(inertia * w);
    // Angular velocity after the step as an affine function of the axial friction torque.
    const Eigen::Vector3d w_free = w + dt * inv_inertia * (ta * axis - gyroscopic);
    const Eigen::Vector3d friction_dir = -dt * inv_inertia * axis;

    double tf = 0.0;
    if (w.z() != 0.0) {
      tf = friction_torque(w.z(), contacts, layers, r);
      const double wz_new = w_free.z() + friction_dir.z() * tf;
      if (wz_new * w.z() < 0.0) tf = w_free.z() / (dt * axial_gain);
    } else {
      const double needed = w_free.z() / (dt * axial_gain);  // torque that keeps w_z at 0
      tf = std::abs(needed) <= coulomb_limit ? needed : coulomb_limit * signum(needed);
    }
    Eigen::Vector3d w_new = w_free + friction_dir * tf;
    if (w.z() != 0.0 && w_new.z() * w.z() < 0.0) w_new.z() = 0.0;
    if (w.z() == 0.0 && std::abs(w_free.z() / (dt * axial_gain)) <= coulomb_limit) w_new.z() = 0.0;

    if (j % clock.steps_per_sample == 0) {
      const std::size_t n = j / clock.steps_per_sample;
      for (int c = 0; c < 3; ++c) omega_out[n * 3 + c] = w[c];
      angle_out[n] = angle;
      truth.forces[n] = ForceSample{0.0, 0.0, 0.0, ta, tf};
      truth.stages[n] = profile.stage_at(t);
    }
    angle += w_new.z() * dt;
    w = w_new;
  }

  truth.accel = detail::zeros(output_dt, n_out, 1, "m/s^2");
  truth.velocity = detail::zeros(output_dt, n_out, 1, "m/s");
  truth.displacement = detail::zeros(output_dt, n_out, 1, "m");
  truth.depth = SampledSeries::scalar(0.0, output_dt,
                                      std::vector<double>(n_out, profile.initial_depth), "m");
  truth.omega = SampledSeries(0.0, output_dt, 3, std::move(omega_out), "rad/s");
  truth.angle = SampledSeries::scalar(0.0, output_dt, std::move(angle_out), "rad");
  return truth;
}

/// IMU noise densities in datasheet units, per axis (x, y, z).
struct ImuNoiseModel {
  std::array<double, 3> accel_vrw{19.7, 28.1, 73.2};              // ug/sqrt(Hz)
  std::array<double, 3> accel_bias_instability{0.48, 0.39, 0.61};  // mg
  std::array<double, 3> gyro_arw{0.14, 0.14, 0.13};               // deg/sqrt(h)
  std::array<double, 3> gyro_bias_instability{2.72, 4.16, 4.78};  // deg/h
  double bias_correlation_time = 100.0;                           // s
  std::uint64_t seed = 0;

  static ImuNoiseModel zero() {
    ImuNoiseModel m;
    m.accel_vrw = m.accel_bias_instability = m.gyro_arw = m.gyro_bias_instability = {0, 0, 0};
    return m;
  }

  void validate() const {
    for (int i = 0; i < 3; ++i) {
      if (accel_vrw[i] < 0 || accel_bias_instability[i] < 0 || gyro_arw[i] < 0 ||
          gyro_bias_instability[i] < 0) {
        throw Error(ErrorKind::Config, "simulate", "noise coefficients must be >= 0");
      }
    }
    if (!(bias_correlation_time > 0.0)) {
      throw Error(ErrorKind::Config, "simulate", "bias correlation time must be > 0");
    }
  }
};

namespace units {
inline constexpr double kDeg = kPi / 180.0;
/// ug/sqrt(Hz) -> (m/s^2)/sqrt(Hz)
inline constexpr double ug_per_rthz(double v) { return v * 1e-6 * kGravity; }
inline constexpr double mg(double v) { return v * 1e-3 * kGravity; }
/// deg/sqrt(h) -> rad/sqrt(s)
inline constexpr double deg_per_rthour(double v) { return v * kDeg / 60.0; }
inline constexpr double deg_per_hour(double v) { return v * kDeg / 3600.0; }
}  // namespace units

/// Camera-side flow model: flow magnitude (pixels/frame) = gain * |v| plus white noise.
struct VisualModel {
  double flow_gain = 333.0;   // px/frame per m/s
  double flow_noise = 0.3;    // px/frame
  double rate = kVisualRate;  // Hz
};

namespace detail {

enum Channel : std::uint64_t {
  kAccelWhite = 0,
  kAccelBias = 3,
  kGyroWhite = 6,
  kGyroBias = 9,
  kTremor = 12,
  kFlow = 15,
};

/// White noise plus a first-order Gauss-Markov bias.
inline std::vector<double> imu_axis_noise(std::size_t n, double dt, double white_density,
                                          double bias_sigma, double tc, std::uint64_t seed,
                                          std::uint64_t white_stream, std::uint64_t bias_stream) {
  std::vector<double> out(n, 0.0);
  const double white_sigma = white_density / std::sqrt(dt);
  if (white_sigma > 0.0) {
    NormalStream white(seed, white_stream);
    for (auto& v : out) v += white_sigma * white();
  }
  if (bias_sigma > 0.0) {
    NormalStream walk(seed, bias_stream);
    const double phi = std::exp(-dt / tc);
    const double drive = bias_sigma * std::sqrt(1.0 - phi * phi);
    double b = bias_sigma * walk();
    for (auto& v : out) {
      v += b;
      b = phi * b + drive * walk();
    }
  }
  return out;
}

}  // namespace detail

/// Sensor streams seen by the acquisition chain for a given ground truth.
///
/// The needle is held vertically with body z toward the handle, so the accelerometer reads
/// (0, 0, g - a_insertion) plus noise; tremor applies in stationary stages (idle, S2, S4).
inline RecordingSession synthesize_sensors(const GroundTruthTrajectory& truth,
                                           const ImuNoiseModel& noise,
                                           const ForceCalibration& calib, double hand_tremor_std,
                                           const VisualModel& visual = {}) {
  noise.validate();
  calib.validate();
  const std::size_t n = truth.accel.size();
  const double dt = truth.accel.dt();
  if (std::abs(dt - 1.0 / kImuRate) > 1e-12) {
    throw Error(ErrorKind::Config, "simulate", "ground truth must be sampled at 100 Hz");
  }
  const std::uint64_t seed = noise.seed;

  const SampledSeries& sensed =
      truth.sensed_accel.size() == n ? truth.sensed_accel : truth.accel;
  std::vector<double> accel(n * 3), gyro(n * 3);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto an = detail::imu_axis_noise(
        n, dt, units::ug_per_rthz(noise.accel_vrw[c]), units::mg(noise.accel_bias_instability[c]),
        noise.bias_correlation_time, seed, detail::kAccelWhite + c, detail::kAccelBias + c);
    const auto gn = detail::imu_axis_noise(
        n, dt, units::deg_per_rthour(noise.gyro_arw[c]),
        units::deg_per_hour(noise.gyro_bias_instability[c]), noise.bias_correlation_time, seed,
        detail::kGyroWhite + c, detail::kGyroBias + c);
    NormalStream tremor(seed, detail::kTremor + c);
    for (std::size_t k = 0; k < n; ++k) {
      const double specific = c == 2 ? kGravity - sensed(k) : 0.0;
      double value = specific + an[k];
      const double tremor_draw = tremor();
      if (hand_tremor_std > 0.0 && !is_active_stage(truth.stages[k])) {
        value += hand_tremor_std * tremor_draw;
      }
      accel[k * 3 + c] = value;
      gyro[k * 3 + c] = truth.omega(k, c) + gn[k];
    }
  }

  std::vector<double> force(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double volts = calib.quantize(calib.to_voltage(truth.forces[k].applied));
    force[k] = calib.to_force(volts);
  }

  RecordingSession session;
  session.force = SampledSeries::scalar(truth.accel.t0(), dt, std::move(force), "N");
  session.accel = SampledSeries(truth.accel.t0(), dt, 3, std::move(accel), "m/s^2");
  session.gyro = SampledSeries(truth.accel.t0(), dt, 3, std::move(gyro), "rad/s");
  session.calibration = calib;

  // Visual channel: frames at 1/rate, velocity linearly interpolated from the truth.
  const double vdt = 1.0 / visual.rate;
  const double t0 = truth.velocity.t0();
  const double t_end = truth.velocity.end_time();
  const auto frames = static_cast<std::size_t>(std::floor((t_end - t0) / vdt + 1e-9)) + 1;
  std::vector<double> flow(frames);
  NormalStream flow_noise(seed, detail::kFlow);
  for (std::size_t f = 0; f < frames; ++f) {
    const double u = std::min((static_cast<double>(f) * vdt) / dt, static_cast<double>(n - 1));
    const auto i = std::min(static_cast<std::size_t>(u), n > 1 ? n - 2 : 0);
    const double frac = n > 1 ? u - static_cast<double>(i) : 0.0;
    const double v = n > 1 ? (1.0 - frac) * truth.velocity(i) + frac * truth.velocity(i + 1)
                           : truth.velocity(0);
    flow[f] = std::abs(visual.flow_gain * std::abs(v) + visual.flow_noise * flow_noise());
  }
  session.visual = SampledSeries::scalar(t0, vdt, std::move(flow), "px/frame");
  return session;
}

}  // namespace acuquant

#endif  // ACUQUANT_SIMULATE_HPP
