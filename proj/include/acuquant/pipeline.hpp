#ifndef ACUQUANT_PIPELINE_HPP
#define ACUQUANT_PIPELINE_HPP

// The full processing chain for one session: conditioning, attitude, motion states, segmented
// integration, cycle points and features.

#include <acuquant/attitude.hpp>
#include <acuquant/condition.hpp>
#include <acuquant/core.hpp>
#include <acuquant/cycles.hpp>
#include <acuquant/kinematics.hpp>
#include <acuquant/statefuse.hpp>

#include <limits>
#include <optional>

namespace acuquant {

struct PipelineConfig {
  bool condition_force = true;
  double baseline_window = 1.0;  // s, inside the stationary lead-in
  NotchSpec notch;
  WaveletSpec wavelet;
  double accel_bandwidth = 44.8;  // Hz, <= 0 skips the low-pass
  AttitudeGains attitude;
  FusionConfig fusion = FusionConfig::short_stroke();
  IntegrationOptions integration = IntegrationOptions::rest_to_rest();
  LtSearchParams lt;
  TwirlSearchParams tr;
  std::optional<ManipulationType> manipulation;  // overrides the session label

  void validate() const {
    if (condition_force) {
      notch.validate();
      if (!(baseline_window >= 0.5)) throw Error(ErrorKind::Config, "pipeline", "baseline window must be >= 0.5 s");
      if (wavelet.levels < 1 || wavelet.threshold_scale < 0.0) {
        throw Error(ErrorKind::Config, "pipeline", "wavelet needs levels >= 1 and threshold >= 0");
      }
    }
    attitude.validate();
    fusion.thresholds.validate(false);
    lt.validate();
    tr.validate();
  }
};

struct ProcessResult {
  ManipulationType manipulation = ManipulationType::LTRF;
  RecordingSession conditioned;  // force conditioned, accel low-passed
  AttitudeTrack track;
  SampledSeries axial_accel;  // m/s^2, insertion positive
  SampledSeries angle;        // rad about the needle axis
  SampledSeries omega;        // rad/s about the needle axis
  MotionStateTimeline timeline;
  KinematicEstimate kinematics;
  std::vector<LtCycle> lt_cycles;
  std::vector<TrCycle> tr_cycles;
  CycleFeatureTable features;
  double twirl_frequency = std::numeric_limits<double>::quiet_NaN();
};

inline RecordingSession condition_session(const RecordingSession& session, const PipelineConfig& cfg) {
  RecordingSession out = session;
  if (cfg.condition_force) {
    auto f = compensate_prestress(session.force, cfg.baseline_window);
    f = notch_filter(f, cfg.notch);
    out.force = wavelet_denoise(f, cfg.wavelet);
  }
  if (cfg.accel_bandwidth > 0.0) out.accel = lowpass_accel(session.accel, cfg.accel_bandwidth);
  return out;
}

inline ProcessResult process_session(const RecordingSession& session, const PipelineConfig& cfg) {
  cfg.validate();
  session.validate();
  ProcessResult r;
  if (cfg.manipulation) {
    r.manipulation = *cfg.manipulation;
  } else if (session.label) {
    r.manipulation = *session.label;
  } else {
    throw Error(ErrorKind::Config, "pipeline", "session has no manipulation label and none is configured");
  }

  r.conditioned = condition_session(session, cfg);
  r.track = estimate_attitude(r.conditioned.accel, r.conditioned.gyro, cfg.attitude);
  r.axial_accel = axial_projection(r.conditioned.accel, r.track.q, Eigen::Vector3d(0, 0, -1));
  r.angle = roll_angle_series(r.track.q, r.track.q.front(), r.track.t0, r.track.dt);
  r.omega = axial_rate(r.conditioned.gyro, r.track);
  r.timeline = detect_states(r.conditioned, cfg.fusion);
  r.kinematics = segmented_integrate(r.axial_accel, r.timeline, cfg.integration);

  if (is_lifting_thrusting(r.manipulation)) {
    r.lt_cycles = detect_lt_points(r.axial_accel, r.timeline, cfg.lt);
    r.features = extract_lt_features(r.conditioned, r.kinematics, r.lt_cycles);
  } else {
    r.tr_cycles = detect_tr_points(r.angle, cfg.tr);
    r.features = extract_tr_features(r.omega, r.tr_cycles);
    r.twirl_frequency = twirl_frequency(r.tr_cycles, r.angle.dt());
  }
  return r;
}

}  // namespace acuquant

#endif  // ACUQUANT_PIPELINE_HPP
