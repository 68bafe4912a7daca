#ifndef ACUQUANT_STATEFUSE_HPP
#define ACUQUANT_STATEFUSE_HPP

// Motion confidence: a scalar Kalman filter over two exp-mapped measurements (accel variance and
// visual flow), thresholded with hysteresis into alternating motion/stationary intervals.

#include <acuquant/core.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace acuquant {

enum class MotionState { Stationary, Motion };

inline std::string_view to_string(MotionState s) {
  return s == MotionState::Motion ? "motion" : "stationary";
}

struct ConfidenceState {
  double p = 0.0;  // motion confidence
  double P = 1.0;  // estimate variance
  double Q = 1e-3;
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * 0.05;

  void validate() const {
    const Eigen::LLT<Eigen::Matrix2d> llt(R);
    if (!(P > 0.0) || !(Q > 0.0) || (R - R.transpose()).norm() > 1e-12 * R.norm() ||
        llt.info() != Eigen::Success) {
      throw Error(ErrorKind::Config, "statefuse", "need P > 0, Q > 0 and R symmetric positive definite");
    }
  }
};

struct FusionThresholds {
  double tau_acc = 0.0;  // (m/s^2)^2; <= 0 means calibrate from the stationary prefix
  double tau_vis = 0.0;  // flow units; <= 0 means calibrate
  int window = 21;       // samples, odd
  int visual_window = 0; // smoothing of the aligned flow; 0 reuses `window`
  double decision_threshold = 0.5;
  double hysteresis = 0.05;
  double min_state_duration = 0.05;  // s

  void validate(bool calibrated = true) const {
    if (window < 3 || window % 2 == 0) {
      throw Error(ErrorKind::Config, "statefuse", "variance window must be odd and >= 3");
    }
    if (calibrated && (!(tau_acc > 0.0) || !(tau_vis > 0.0))) {
      throw Error(ErrorKind::Config, "statefuse", "motion thresholds must be positive");
    }
    if (!(decision_threshold > 0.0 && decision_threshold < 1.0) || !(hysteresis >= 0.0) ||
        decision_threshold - hysteresis <= 0.0 || decision_threshold + hysteresis >= 1.0 ||
        !(min_state_duration >= 0.0)) {
      throw Error(ErrorKind::Config, "statefuse", "decision threshold and hysteresis out of range");
    }
  }
};

struct MotionInterval {
  MotionState state = MotionState::Stationary;
  std::size_t start = 0;  // first sample
  std::size_t end = 0;    // one past the last sample

  std::size_t length() const { return end - start; }
  friend bool operator==(const MotionInterval&, const MotionInterval&) = default;
};

struct MotionStateTimeline {
  SampledSeries confidence;
  std::vector<MotionInterval> intervals;
  bool imu_only = false;
  double tau_acc = 0.0;
  double tau_vis = 0.0;

  MotionState state_at(std::size_t n) const {
    auto it = std::upper_bound(intervals.begin(), intervals.end(), n,
                               [](std::size_t v, const MotionInterval& i) { return v < i.end; });
    return it == intervals.end() ? MotionState::Stationary : it->state;
  }

  std::vector<MotionInterval> motion_intervals() const {
    std::vector<MotionInterval> out;
    for (const auto& i : intervals) {
      if (i.state == MotionState::Motion) out.push_back(i);
    }
    return out;
  }
};

/// Centered sliding population variance. Three-axis input uses the vector magnitude, so gravity
/// and orientation drop out; scalar input uses the value itself. Windows shrink at the edges.
inline SampledSeries accel_variance(const SampledSeries& accel, int window) {
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorKind::DegenerateInput, "statefuse", "variance window must be odd and >= 3");
  }
  if (accel.empty()) throw Error(ErrorKind::DegenerateInput, "statefuse", "empty accel series");
  const std::size_t n = accel.size();
  std::vector<double> mag(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (accel.width() == 1) {
      mag[k] = accel(k);
    } else {
      double s = 0.0;
      for (std::size_t c = 0; c < accel.width(); ++c) s += accel(k, c) * accel(k, c);
      mag[k] = std::sqrt(s);
    }
  }
  const auto half = static_cast<std::size_t>(window / 2);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(n, k + half + 1);
    const double count = static_cast<double>(hi - lo);
    // Two-pass over the window keeps the variance exact for a constant signal.
    double mean = 0.0;
    for (std::size_t j = lo; j < hi; ++j) mean += mag[j];
    mean /= count;
    double var = 0.0;
    for (std::size_t j = lo; j < hi; ++j) var += (mag[j] - mean) * (mag[j] - mean);
    out[k] = var / count;
  }
  return accel.with_values(std::move(out), 1, "(m/s^2)^2");
}

/// Centered sliding mean with shrinking edge windows.
inline SampledSeries sliding_mean(const SampledSeries& s, int window) {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorKind::DegenerateInput, "statefuse", "smoothing window must be odd");
  }
  const std::size_t n = s.size();
  const auto half = static_cast<std::size_t>(window / 2);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(n, k + half + 1);
    double m = 0.0;
    for (std::size_t j = lo; j < hi; ++j) m += s(j);
    out[k] = m / static_cast<double>(hi - lo);
  }
  return s.with_values(std::move(out), 1);
}

inline Eigen::Vector2d measurement_vector(double z_acc, double z_vis, const FusionThresholds& th) {
  if (z_acc < 0.0 || z_vis < 0.0) {
    throw Error(ErrorKind::DegenerateInput, "statefuse", "measurements must be nonnegative");
  }
  return {1.0 - std::exp(-z_acc / th.tau_acc), 1.0 - std::exp(-z_vis / th.tau_vis)};
}

/// One predict/update cycle with H = [1; 1].
inline ConfidenceState kalman_step(const ConfidenceState& state, const Eigen::Vector2d& z) {
  const double x_prior = state.p;
  const double P_prior = state.P + state.Q;
  const Eigen::Vector2d H(1.0, 1.0);
  const Eigen::Matrix2d S = P_prior * H * H.transpose() + state.R;
  const double det = S.determinant();
  if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) {
    throw Error(ErrorKind::SingularInnovation, "statefuse", "innovation covariance is singular");
  }
  const Eigen::RowVector2d K = P_prior * H.transpose() * S.inverse();
  ConfidenceState next = state;
  next.p = std::clamp(x_prior + K.dot(z - H * x_prior), 0.0, 1.0);
  next.P = (1.0 - K.dot(H)) * P_prior;
  return next;
}

/// Single-measurement variant used when no visual channel exists.
inline ConfidenceState kalman_step_imu_only(const ConfidenceState& state, double z) {
  const double P_prior = state.P + state.Q;
  const double S = P_prior + state.R(0, 0);
  if (!(S > 0.0)) throw Error(ErrorKind::SingularInnovation, "statefuse", "innovation is not positive");
  const double K = P_prior / S;
  ConfidenceState next = state;
  next.p = std::clamp(state.p + K * (z - state.p), 0.0, 1.0);
  next.P = (1.0 - K) * P_prior;
  return next;
}

/// Hysteresis thresholding into alternating intervals. The band decides whether the state
/// flips; the flip itself is placed where the confidence last crossed the decision threshold,
/// so the band does not delay both edges.
inline std::vector<MotionInterval> threshold_confidence(const SampledSeries& confidence,
                                                        const FusionThresholds& th) {
  std::vector<MotionInterval> out;
  const std::size_t n = confidence.size();
  if (n == 0) return out;
  const double thr = th.decision_threshold;
  MotionState state = MotionState::Stationary;
  std::size_t start = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = confidence(k);
    const bool enter = state == MotionState::Stationary && p > thr + th.hysteresis;
    const bool leave = state == MotionState::Motion && p < thr - th.hysteresis;
    if (!enter && !leave) continue;
    std::size_t flip = k;
    while (flip > start + 1 && (enter ? confidence(flip - 1) > thr : confidence(flip - 1) < thr)) {
      --flip;
    }
    if (flip > start) {
      out.push_back({state, start, flip});
      start = flip;
    }
    state = enter ? MotionState::Motion : MotionState::Stationary;
  }
  out.push_back({state, start, n});
  return out;
}

/// Repeatedly folds the shortest interval below `min_samples` into its neighbours.
inline std::vector<MotionInterval> merge_short_intervals(std::vector<MotionInterval> iv,
                                                         std::size_t min_samples) {
  while (iv.size() > 1) {
    std::size_t shortest = iv.size();
    for (std::size_t i = 0; i < iv.size(); ++i) {
      if (iv[i].length() < min_samples && (shortest == iv.size() || iv[i].length() < iv[shortest].length())) {
        shortest = i;
      }
    }
    if (shortest == iv.size()) break;
    const std::size_t lo = shortest > 0 ? shortest - 1 : shortest;
    const std::size_t hi = shortest + 1 < iv.size() ? shortest + 1 : shortest;
    const MotionState state = iv[lo == shortest ? hi : lo].state;
    MotionInterval merged{state, iv[lo].start, iv[hi].end};
    iv.erase(iv.begin() + static_cast<std::ptrdiff_t>(lo), iv.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    iv.insert(iv.begin() + static_cast<std::ptrdiff_t>(lo), merged);
  }
  return iv;
}

enum class FusionMode { TwoChannel, ImuOnly };

struct FusionConfig {
  FusionThresholds thresholds;
  double q = 1e-3;
  Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * 0.05;
  double calibration_window = 2.0;  // s of stationary prefix for tau calibration
  double calibration_factor = 5.0;         // tau_acc = factor x stationary mean variance
  double visual_calibration_factor = 5.0;  // tau_vis = factor x stationary mean flow
  FusionMode mode = FusionMode::TwoChannel;
  bool smooth = true;  // backward Rauch-Tung-Striebel pass over the filtered confidence

  /// Settings tuned on simulated 100 Hz sessions. Strokes there last 15-50 samples, so the
  /// variance window is short, and the flow channel is trusted more than the accel cue, which
  /// fades in the smooth middle of a stroke.
  static FusionConfig short_stroke() {
    FusionConfig cfg;
    cfg.thresholds.window = 3;
    cfg.thresholds.visual_window = 3;
    cfg.q = 0.1;
    cfg.r = Eigen::Vector2d(0.1, 0.05).asDiagonal();
    cfg.calibration_factor = 4.0;
    cfg.visual_calibration_factor = 4.0;
    return cfg;
  }
};

/// Visual flow on the IMU clock: spline over the shared span, edge values held outside it.
inline SampledSeries align_visual(const SampledSeries& visual, const SampledSeries& imu) {
  const double tol = 1e-9;
  const std::size_t n = imu.size();
  const double k_first = std::ceil((visual.t0() - imu.t0()) / imu.dt() - tol);
  const double k_last = std::floor((visual.end_time() - imu.t0()) / imu.dt() + tol);
  const auto first = static_cast<std::size_t>(std::clamp(k_first, 0.0, static_cast<double>(n - 1)));
  const auto last = static_cast<std::size_t>(std::clamp(k_last, 0.0, static_cast<double>(n - 1)));
  std::vector<double> out(n, 0.0);
  if (last >= first) {
    const auto spline = resample_cubic_spline(visual, imu.dt(), imu.time(first), imu.time(last));
    for (std::size_t k = first; k <= last && k - first < spline.size(); ++k) out[k] = spline(k - first);
    for (std::size_t k = 0; k < first; ++k) out[k] = out[first];
    for (std::size_t k = last + 1; k < n; ++k) out[k] = out[last];
  }
  return SampledSeries::scalar(imu.t0(), imu.dt(), std::move(out), visual.unit());
}

/// Runs the motion-confidence chain over a session.
inline MotionStateTimeline detect_states(const RecordingSession& session, const FusionConfig& cfg) {
  session.validate();
  cfg.thresholds.validate(false);
  const bool imu_only = cfg.mode == FusionMode::ImuOnly;
  if (!imu_only && !session.visual) {
    throw Error(ErrorKind::MissingChannel, "statefuse", "two-channel fusion needs the visual channel");
  }
  ConfidenceState state;
  state.Q = cfg.q;
  state.R = cfg.r;
  state.validate();

  const auto z_acc = accel_variance(session.accel, cfg.thresholds.window);
  const std::size_t n = z_acc.size();
  std::vector<double> vis(n, 0.0);
  if (!imu_only) {
    const int w = cfg.thresholds.visual_window > 0 ? cfg.thresholds.visual_window
                                                   : cfg.thresholds.window;
    const auto aligned = sliding_mean(align_visual(*session.visual, session.accel), w);
    for (std::size_t k = 0; k < n; ++k) vis[k] = std::max(0.0, aligned(k));
  }

  FusionThresholds th = cfg.thresholds;
  const auto prefix = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.calibration_window / session.accel.dt())), 1, n);
  auto calibrate = [&](double factor, auto value) {
    double m = 0.0;
    for (std::size_t k = 0; k < prefix; ++k) m += value(k);
    return std::max(factor * m / static_cast<double>(prefix), 1e-12);
  };
  if (!(th.tau_acc > 0.0)) {
    th.tau_acc = calibrate(cfg.calibration_factor, [&](std::size_t k) { return z_acc(k); });
  }
  if (!(th.tau_vis > 0.0)) {
    th.tau_vis = imu_only ? 1.0
                          : calibrate(cfg.visual_calibration_factor, [&](std::size_t k) { return vis[k]; });
  }

  std::vector<double> conf(n), var(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector2d z = measurement_vector(z_acc(k), vis[k], th);
    state = imu_only ? kalman_step_imu_only(state, z[0]) : kalman_step(state, z);
    conf[k] = state.p;
    var[k] = state.P;
  }
  if (cfg.smooth) {
    // Random-walk model: the one-step prediction of x_{k+1} is x_k with variance P_k + Q.
    for (std::size_t k = n - 1; k-- > 0;) {
      const double gain = var[k] / (var[k] + cfg.q);
      conf[k] = std::clamp(conf[k] + gain * (conf[k + 1] - conf[k]), 0.0, 1.0);
    }
  }

  MotionStateTimeline out;
  out.confidence = SampledSeries::scalar(session.accel.t0(), session.accel.dt(), std::move(conf));
  const auto min_samples = static_cast<std::size_t>(
      std::llround(th.min_state_duration / session.accel.dt()));
  out.intervals = merge_short_intervals(threshold_confidence(out.confidence, th), min_samples);
  out.imu_only = imu_only;
  out.tau_acc = th.tau_acc;
  out.tau_vis = th.tau_vis;
  return out;
}

inline MotionStateTimeline detect_states(const RecordingSession& session,
                                         const FusionThresholds& thresholds, double q,
                                         const Eigen::Matrix2d& r) {
  FusionConfig cfg;
  cfg.thresholds = thresholds;
  cfg.q = q;
  cfg.r = r;
  return detect_states(session, cfg);
}

/// Timeline built directly from known labels (perfect segmentation).
inline MotionStateTimeline timeline_from_flags(const std::vector<bool>& moving, double t0, double dt) {
  MotionStateTimeline out;
  std::vector<double> conf(moving.size());
  for (std::size_t k = 0; k < moving.size(); ++k) conf[k] = moving[k] ? 1.0 : 0.0;
  out.confidence = SampledSeries::scalar(t0, dt, std::move(conf));
  std::size_t start = 0;
  for (std::size_t k = 1; k <= moving.size(); ++k) {
    if (k == moving.size() || moving[k] != moving[start]) {
      out.intervals.push_back({moving[start] ? MotionState::Motion : MotionState::Stationary, start, k});
      start = k;
    }
  }
  return out;
}

/// Intersection over union of two sample ranges.
inline double interval_iou(const MotionInterval& a, const MotionInterval& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  const double inter = hi > lo ? static_cast<double>(hi - lo) : 0.0;
  const double uni = static_cast<double>(std::max(a.end, b.end) - std::min(a.start, b.start));
  return uni > 0.0 ? inter / uni : 0.0;
}

/// For each truth interval, the best IoU among detected intervals.
inline std::vector<double> best_iou(const std::vector<MotionInterval>& truth,
                                    const std::vector<MotionInterval>& detected) {
  std::vector<double> out;
  for (const auto& t : truth) {
    double best = 0.0;
    for (const auto& d : detected) best = std::max(best, interval_iou(t, d));
    out.push_back(best);
  }
  return out;
}

}  // namespace acuquant

#endif  // ACUQUANT_STATEFUSE_HPP
