#ifndef ACUQUANT_CYCLES_HPP
#define ACUQUANT_CYCLES_HPP

// Cycle segmentation: thrust/lift bursts on the axial acceleration, twirl cycles on the angle
// peaks and valleys, and the per-stage feature table.

#include <acuquant/core.hpp>
#include <acuquant/kinematics.hpp>
#include <acuquant/statefuse.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <tuple>
#include <vector>

namespace acuquant {

/// Sample ranges are half-open: S1 = [ts, te), S2 = [te, ls), S3 = [ls, le), S4 = [le, next_ts).
struct LtCycle {
  std::size_t ts = 0, te = 0, ls = 0, le = 0, next_ts = 0;

  std::size_t length() const { return next_ts - ts; }
  std::array<std::size_t, 4> stage_lengths() const { return {te - ts, ls - te, le - ls, next_ts - le}; }
  std::array<double, 4> proportions() const {
    const auto len = stage_lengths();
    const double total = static_cast<double>(length());
    return {len[0] / total, len[1] / total, len[2] / total, len[3] / total};
  }
};

/// left twirl = [left_start, right_start), right twirl = [right_start, next_left_start).
struct TrCycle {
  std::size_t left_start = 0, right_start = 0, next_left_start = 0;

  std::size_t length() const { return next_left_start - left_start; }
  std::array<double, 2> proportions() const {
    const double total = static_cast<double>(length());
    return {(right_start - left_start) / total, (next_left_start - right_start) / total};
  }
};

struct LtSearchParams {
  // Thresholds scale with the stationary noise level sigma of the axial accel.
  double peak_factor = 8.0;     // a burst needs |a| >= peak_factor * sigma somewhere
  double epsilon_factor = 5.0;  // quiet means |a| < epsilon_factor * sigma
  std::size_t quiet_run = 5;    // M consecutive quiet samples end a search
  std::size_t margin = 5;       // samples around each motion interval searched for peaks
  double merge_gap = 0.08;      // s; same-direction bursts closer than this are one stroke
  double min_cycle = 0.3;       // s

  void validate() const {
    if (!(peak_factor > 0.0) || !(epsilon_factor > 0.0) || quiet_run == 0 || !(merge_gap >= 0.0) ||
        !(min_cycle >= 0.0)) {
      throw Error(ErrorKind::Config, "cycles", "invalid burst search parameters");
    }
  }
};

struct TwirlSearchParams {
  double min_prominence = 0.05;      // rad
  double relative_prominence = 0.2;  // of the angle's range; the larger of the two applies
  double min_spacing = 0.1;          // s between peaks of the same kind

  void validate() const {
    if (!(min_prominence >= 0.0) || !(relative_prominence >= 0.0) || !(min_spacing >= 0.0)) {
      throw Error(ErrorKind::Config, "cycles", "invalid twirl search parameters");
    }
  }
};

namespace detail {

/// Local maxima with at least `min_prominence`, then thinned so peaks are at least
/// `min_distance` samples apart, higher peaks first. Plateaus report their middle sample.
inline std::vector<std::size_t> find_peaks(std::span<const double> x, double min_prominence,
                                           std::size_t min_distance) {
  const std::size_t n = x.size();
  std::vector<std::size_t> cand;
  for (std::size_t i = 1; i + 1 < n;) {
    if (x[i] > x[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && x[j + 1] == x[i]) ++j;
      if (j + 1 < n && x[j + 1] < x[i]) cand.push_back((i + j) / 2);
      i = j + 1;
    } else {
      ++i;
    }
  }
  std::vector<std::size_t> prominent;
  for (std::size_t p : cand) {
    double left = x[p];
    for (std::size_t k = p; k-- > 0;) {
      if (x[k] > x[p]) break;
      left = std::min(left, x[k]);
    }
    double right = x[p];
    for (std::size_t k = p + 1; k < n; ++k) {
      if (x[k] > x[p]) break;
      right = std::min(right, x[k]);
    }
    if (x[p] - std::max(left, right) >= min_prominence) prominent.push_back(p);
  }
  if (min_distance <= 1) return prominent;
  std::vector<std::size_t> order(prominent.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[prominent[a]] > x[prominent[b]]; });
  std::vector<bool> keep(prominent.size(), true);
  for (std::size_t oi : order) {
    if (!keep[oi]) continue;
    for (std::size_t j = 0; j < prominent.size(); ++j) {
      if (j == oi || !keep[j]) continue;
      const std::size_t gap = prominent[j] > prominent[oi] ? prominent[j] - prominent[oi]
                                                          : prominent[oi] - prominent[j];
      if (gap < min_distance) keep[j] = false;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < prominent.size(); ++i) {
    if (keep[i]) out.push_back(prominent[i]);
  }
  return out;
}

/// Robust noise level: median absolute deviation scaled to a Gaussian sigma.
inline double robust_sigma(std::vector<double> v) {
  if (v.empty()) return 0.0;
  auto med = [](std::vector<double>& w) {
    const auto mid = w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2);
    std::nth_element(w.begin(), mid, w.end());
    return *mid;
  };
  const double m = med(v);
  for (auto& x : v) x = std::abs(x - m);
  return med(v) / 0.6745;
}

struct Burst {
  std::size_t start = 0;  // first active sample
  std::size_t end = 0;    // last active sample, which the stroke left partway through
  bool thrust = false;
};

/// Net displacement over a burst, integrated from rest with the burst mean removed.
inline double burst_displacement(const SampledSeries& a, std::size_t start, std::size_t end) {
  const std::size_t lo = start > 0 ? start - 1 : 0;
  const std::size_t hi = std::min(a.size(), end + 1);
  double mean = 0.0;
  for (std::size_t k = lo; k < hi; ++k) mean += a(k);
  mean /= static_cast<double>(hi - lo);
  double v = 0.0, d = 0.0, prev_a = 0.0;
  for (std::size_t k = lo; k < hi; ++k) {
    const double ak = a(k) - mean;
    const double v_next = v + 0.5 * (ak + prev_a) * a.dt();
    d += 0.5 * (v + v_next) * a.dt();
    v = v_next;
    prev_a = ak;
  }
  return d;
}

}  // namespace detail

/// Thrust/lift cycles from the insertion-positive axial acceleration.
inline std::vector<LtCycle> detect_lt_points(const SampledSeries& accel_axial,
                                             const MotionStateTimeline& timeline,
                                             const LtSearchParams& params = {}) {
  params.validate();
  if (accel_axial.width() != 1) {
    throw Error(ErrorKind::DegenerateInput, "cycles", "expected the scalar axial acceleration");
  }
  const std::size_t n = accel_axial.size();
  const std::size_t covered = timeline.intervals.empty() ? 0 : timeline.intervals.back().end;
  if (covered != n) throw Error(ErrorKind::LengthMismatch, "cycles", "timeline does not cover the series");

  std::vector<double> rest;
  for (const auto& iv : timeline.intervals) {
    if (iv.state != MotionState::Stationary) continue;
    for (std::size_t k = iv.start; k < iv.end; ++k) rest.push_back(accel_axial(k));
  }
  if (rest.size() < 10) rest.assign(accel_axial.values().begin(), accel_axial.values().end());
  const double sigma = std::max(detail::robust_sigma(rest), 1e-9);
  const double peak = params.peak_factor * sigma;
  const double eps = params.epsilon_factor * sigma;
  auto quiet = [&](std::size_t k) { return std::abs(accel_axial(k)) < eps; };

  std::vector<detail::Burst> bursts;
  std::size_t strays = 0;
  for (const auto& iv : timeline.intervals) {
    if (iv.state != MotionState::Motion) continue;
    const std::size_t lo = iv.start > params.margin ? iv.start - params.margin : 0;
    const std::size_t hi = std::min(n, iv.end + params.margin);
    std::size_t first = hi, last = hi;
    for (std::size_t k = lo; k < hi; ++k) {
      if (std::abs(accel_axial(k)) >= peak) {
        if (first == hi) first = k;
        last = k;
      }
    }
    if (first == hi) continue;
    // Backward from the first peak and forward from the last, so the quiet stretch around a
    // slow stroke's midpoint reversal never splits it.
    std::size_t start = first;
    for (std::size_t k = first, run = 0; k-- > 0;) {
      if (quiet(k)) {
        if (++run >= params.quiet_run) break;
      } else {
        run = 0;
        start = k;
      }
    }
    std::size_t stop = last;
    for (std::size_t k = last + 1, run = 0; k < n; ++k) {
      if (quiet(k)) {
        if (++run >= params.quiet_run) break;
      } else {
        run = 0;
        stop = k;
      }
    }
    const std::size_t tolerance = 2 * params.margin;
    if (start + tolerance < iv.start || stop > iv.end + tolerance) ++strays;
    // A sample averages over its interval, so the one holding the stop is where the stroke
    // ended; it becomes the first sample of the next stage.
    bursts.push_back({start, std::max(stop, start + 1), false});
  }
  if (!bursts.empty() && 2 * strays > bursts.size()) {
    throw Error(ErrorKind::InconsistentStates, "cycles",
                "most acceleration bursts run well outside the motion intervals");
  }

  std::sort(bursts.begin(), bursts.end(),
            [](const detail::Burst& a, const detail::Burst& b) { return a.start < b.start; });
  std::vector<detail::Burst> merged;
  for (const auto& b : bursts) {
    if (!merged.empty() && b.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, b.end);
    } else {
      merged.push_back(b);
    }
  }
  for (auto& b : merged) b.thrust = detail::burst_displacement(accel_axial, b.start, b.end) > 0.0;
  // Same-direction neighbours with a short gap are one stroke seen in two pieces.
  const auto gap_samples = static_cast<std::size_t>(std::llround(params.merge_gap / accel_axial.dt()));
  std::vector<detail::Burst> strokes;
  for (const auto& b : merged) {
    if (!strokes.empty() && strokes.back().thrust == b.thrust && b.start - strokes.back().end < gap_samples) {
      strokes.back().end = b.end;
      strokes.back().thrust =
          detail::burst_displacement(accel_axial, strokes.back().start, strokes.back().end) > 0.0;
    } else {
      strokes.push_back(b);
    }
  }

  std::vector<LtCycle> cycles;
  const auto min_len = static_cast<std::size_t>(std::llround(params.min_cycle / accel_axial.dt()));
  for (std::size_t i = 0; i + 1 < strokes.size(); ++i) {
    if (!strokes[i].thrust || strokes[i + 1].thrust) continue;
    std::size_t j = i + 2;
    while (j < strokes.size() && !strokes[j].thrust) ++j;
    if (j >= strokes.size()) break;
    const LtCycle c{strokes[i].start, strokes[i].end, strokes[i + 1].start, strokes[i + 1].end,
                    strokes[j].start};
    if (c.length() >= min_len) cycles.push_back(c);
  }
  if (cycles.empty()) throw Error(ErrorKind::NoCyclesFound, "cycles", "no complete thrust-lift cycle");
  return cycles;
}

/// Twirl cycles from the unwrapped angle: peaks start a left twirl, valleys a right twirl.
inline std::vector<TrCycle> detect_tr_points(const SampledSeries& angle, const TwirlSearchParams& params = {}) {
  params.validate();
  if (angle.width() != 1) throw Error(ErrorKind::DegenerateInput, "cycles", "expected a scalar angle");
  const auto x = angle.values();
  if (x.size() < 3) throw Error(ErrorKind::NoCyclesFound, "cycles", "angle series too short");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double prominence = std::max(params.min_prominence, params.relative_prominence * (*hi_it - *lo_it));
  const auto spacing = static_cast<std::size_t>(std::llround(params.min_spacing / angle.dt()));
  const auto peaks = detail::find_peaks(x, prominence, spacing);
  std::vector<double> neg(x.begin(), x.end());
  for (auto& v : neg) v = -v;
  const auto valleys = detail::find_peaks(neg, prominence, spacing);

  std::vector<TrCycle> cycles;
  for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
    std::size_t best = 0;
    bool found = false;
    for (std::size_t v : valleys) {
      if (v > peaks[i] && v < peaks[i + 1] && (!found || x[v] < x[best])) {
        best = v;
        found = true;
      }
    }
    if (found) cycles.push_back({peaks[i], best, peaks[i + 1]});
  }
  if (cycles.empty()) throw Error(ErrorKind::NoCyclesFound, "cycles", "no peak-valley-peak twirl cycle");
  return cycles;
}

/// Twirl rate in Hz from the mean cycle length.
inline double twirl_frequency(const std::vector<TrCycle>& cycles, double dt) {
  if (cycles.empty()) throw Error(ErrorKind::EmptyInput, "cycles", "no cycles");
  double total = 0.0;
  for (const auto& c : cycles) total += static_cast<double>(c.length());
  return static_cast<double>(cycles.size()) / (total * dt);
}

/// One stage of one cycle. Quantities that do not apply to the manipulation are NaN.
struct StageFeatures {
  std::size_t cycle = 0;
  Stage stage = Stage::Idle;
  std::size_t start = 0, end = 0;
  double proportion = 0.0;                                    // F1 or F5
  double max_force = std::numeric_limits<double>::quiet_NaN();  // F2, N
  double rms_force = std::numeric_limits<double>::quiet_NaN();  // F3, N
  double rms_accel = std::numeric_limits<double>::quiet_NaN();  // F4, m/s^2
  double rms_omega = std::numeric_limits<double>::quiet_NaN();  // F6, rad/s
};

struct CycleFeatureTable {
  std::vector<StageFeatures> raw;
  std::vector<StageFeatures> normalized;  // min-max over the session; proportions unchanged

  std::vector<StageFeatures> rows(Stage stage, bool use_normalized = false) const {
    std::vector<StageFeatures> out;
    for (const auto& r : use_normalized ? normalized : raw) {
      if (r.stage == stage) out.push_back(r);
    }
    return out;
  }
};

namespace detail {

inline double rms_over(const SampledSeries& s, std::size_t a, std::size_t b) {
  double sum = 0.0;
  for (std::size_t k = a; k < b; ++k) sum += s(k) * s(k);
  return std::sqrt(sum / static_cast<double>(b - a));
}

inline void normalize_column(std::vector<StageFeatures>& rows, double StageFeatures::*field) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : rows) {
    if (std::isnan(r.*field)) continue;
    lo = std::min(lo, r.*field);
    hi = std::max(hi, r.*field);
  }
  for (auto& r : rows) {
    if (std::isnan(r.*field)) continue;
    r.*field = hi > lo ? (r.*field - lo) / (hi - lo) : 0.0;
  }
}

inline CycleFeatureTable finish_table(std::vector<StageFeatures> raw) {
  CycleFeatureTable t;
  t.normalized = raw;
  for (auto f : {&StageFeatures::max_force, &StageFeatures::rms_force, &StageFeatures::rms_accel,
                 &StageFeatures::rms_omega}) {
    normalize_column(t.normalized, f);
  }
  t.raw = std::move(raw);
  return t;
}

}  // namespace detail

/// Thrust (S1) and lift (S3) features per cycle: F1 proportion, F2 max |force|, F3 RMS force,
/// F4 RMS axial acceleration.
inline CycleFeatureTable extract_lt_features(const RecordingSession& session,
                                             const KinematicEstimate& estimate,
                                             const std::vector<LtCycle>& cycles) {
  if (cycles.empty()) throw Error(ErrorKind::EmptyInput, "cycles", "no cycles");
  const SampledSeries& accel = estimate.accel;
  if (accel.size() != session.force.size()) {
    throw Error(ErrorKind::LengthMismatch, "cycles", "estimate and force lengths differ");
  }
  std::vector<StageFeatures> rows;
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    const auto& c = cycles[i];
    if (c.next_ts > accel.size()) throw Error(ErrorKind::LengthMismatch, "cycles", "cycle past series end");
    const auto prop = c.proportions();
    for (auto [stage, a, b, p] : {std::tuple{Stage::S1, c.ts, c.te, prop[0]},
                                  std::tuple{Stage::S3, c.ls, c.le, prop[2]}}) {
      StageFeatures f;
      f.cycle = i;
      f.stage = stage;
      f.start = a;
      f.end = b;
      f.proportion = p;
      f.max_force = 0.0;
      for (std::size_t k = a; k < b; ++k) f.max_force = std::max(f.max_force, std::abs(session.force(k)));
      f.rms_force = detail::rms_over(session.force, a, b);
      f.rms_accel = detail::rms_over(accel, a, b);
      rows.push_back(f);
    }
  }
  return detail::finish_table(std::move(rows));
}

/// Left and right twirl features per cycle: F5 proportion, F6 RMS angular velocity.
inline CycleFeatureTable extract_tr_features(const SampledSeries& omega, const std::vector<TrCycle>& cycles) {
  if (cycles.empty()) throw Error(ErrorKind::EmptyInput, "cycles", "no cycles");
  if (omega.width() != 1) throw Error(ErrorKind::DegenerateInput, "cycles", "expected the axial rate");
  std::vector<StageFeatures> rows;
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    const auto& c = cycles[i];
    if (c.next_left_start > omega.size()) {
      throw Error(ErrorKind::LengthMismatch, "cycles", "cycle past series end");
    }
    const auto prop = c.proportions();
    for (auto [stage, a, b, p] : {std::tuple{Stage::LeftTwirl, c.left_start, c.right_start, prop[0]},
                                  std::tuple{Stage::RightTwirl, c.right_start, c.next_left_start, prop[1]}}) {
      StageFeatures f;
      f.cycle = i;
      f.stage = stage;
      f.start = a;
      f.end = b;
      f.proportion = p;
      f.rms_omega = detail::rms_over(omega, a, b);
      rows.push_back(f);
    }
  }
  return detail::finish_table(std::move(rows));
}

}  // namespace acuquant

#endif  // ACUQUANT_CYCLES_HPP
