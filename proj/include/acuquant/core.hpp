#ifndef ACUQUANT_CORE_HPP
#define ACUQUANT_CORE_HPP

#include <acuquant/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace acuquant {

inline constexpr double kGravity = 9.80665;   // m/s^2
inline constexpr double kImuRate = 100.0;     // Hz
inline constexpr double kVisualRate = 30.0;   // Hz
inline constexpr double kPi = 3.14159265358979323846;

/// Uniformly sampled scalar or fixed-width vector time series.
///
/// Values are stored row-major: sample n occupies values[n*width .. n*width+width).
/// The timestamp of sample n is always t0 + n*dt.
class SampledSeries {
 public:
  SampledSeries() = default;

  SampledSeries(double t0, double dt, std::size_t width, std::vector<double> values,
                std::string unit = {})
      : t0_(t0), dt_(dt), width_(width), values_(std::move(values)), unit_(std::move(unit)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
      throw Error(ErrorKind::Config, "core", "sample interval must be positive");
    }
    if (width_ == 0 || values_.size() % width_ != 0) {
      throw Error(ErrorKind::DegenerateInput, "core", "value count is not a multiple of the width");
    }
  }

  static SampledSeries scalar(double t0, double dt, std::vector<double> values,
                              std::string unit = {}) {
    return SampledSeries(t0, dt, 1, std::move(values), std::move(unit));
  }

  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  double rate() const noexcept { return 1.0 / dt_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return width_ == 0 ? 0 : values_.size() / width_; }
  bool empty() const noexcept { return values_.empty(); }
  const std::string& unit() const noexcept { return unit_; }

  double time(std::size_t n) const noexcept { return t0_ + static_cast<double>(n) * dt_; }
  double end_time() const noexcept { return empty() ? t0_ : time(size() - 1); }
  double duration() const noexcept { return static_cast<double>(size()) * dt_; }

  double operator()(std::size_t n, std::size_t c = 0) const { return values_[n * width_ + c]; }
  std::span<const double> row(std::size_t n) const {
    return {values_.data() + n * width_, width_};
  }
  std::span<const double> values() const noexcept { return values_; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(size());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = values_[n * width_ + c];
    return out;
  }

  /// Same clock and unit, new values.
  SampledSeries with_values(std::vector<double> values, std::size_t width = 1) const {
    return SampledSeries(t0_, dt_, width, std::move(values), unit_);
  }
  SampledSeries with_values(std::vector<double> values, std::size_t width, std::string unit) const {
    return SampledSeries(t0_, dt_, width, std::move(values), std::move(unit));
  }

  friend bool operator==(const SampledSeries&, const SampledSeries&) = default;

 private:
  double t0_ = 0.0;
  double dt_ = 1.0;
  std::size_t width_ = 1;
  std::vector<double> values_;
  std::string unit_;
};

enum class ManipulationType { LTRF, LTRD, TRRF, TRRD };

inline std::string_view to_string(ManipulationType m) {
  switch (m) {
    case ManipulationType::LTRF: return "LTRF";
    case ManipulationType::LTRD: return "LTRD";
    case ManipulationType::TRRF: return "TRRF";
    case ManipulationType::TRRD: return "TRRD";
  }
  return "?";
}

inline std::optional<ManipulationType> parse_manipulation(std::string_view s) {
  if (s == "LTRF") return ManipulationType::LTRF;
  if (s == "LTRD") return ManipulationType::LTRD;
  if (s == "TRRF") return ManipulationType::TRRF;
  if (s == "TRRD") return ManipulationType::TRRD;
  return std::nullopt;
}

inline bool is_lifting_thrusting(ManipulationType m) {
  return m == ManipulationType::LTRF || m == ManipulationType::LTRD;
}

/// Manipulation stage of a sample. Idle marks the stationary lead-in and tail.
enum class Stage { Idle, S1, S2, S3, S4, LeftTwirl, RightTwirl };

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Idle: return "idle";
    case Stage::S1: return "S1";
    case Stage::S2: return "S2";
    case Stage::S3: return "S3";
    case Stage::S4: return "S4";
    case Stage::LeftTwirl: return "left_twirl";
    case Stage::RightTwirl: return "right_twirl";
  }
  return "?";
}

inline std::optional<Stage> parse_stage(std::string_view s) {
  for (Stage st : {Stage::Idle, Stage::S1, Stage::S2, Stage::S3, Stage::S4, Stage::LeftTwirl,
                   Stage::RightTwirl}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

/// Thrust and lift move the needle; everything else holds it.
inline bool is_active_stage(Stage s) {
  return s == Stage::S1 || s == Stage::S3 || s == Stage::LeftTwirl || s == Stage::RightTwirl;
}

/// Bridge-sensor amplifier chain and converter.
struct ForceCalibration {
  double sensitivity = 0.0005;  // V/V at full scale
  double excitation = 5.0;      // V
  double gain = 600.0;
  double full_scale = 22.2;     // N
  double offset = 1.65;         // V, reference lift of the first stage
  int adc_bits = 12;
  double adc_min = 0.0;         // V
  double adc_max = 3.3;         // V

  void validate() const {
    if (!(gain > 0.0)) throw Error(ErrorKind::Config, "core", "calibration gain must be > 0");
    if (!(full_scale > 0.0)) throw Error(ErrorKind::Config, "core", "full_scale must be > 0");
    if (!(sensitivity > 0.0) || !(excitation > 0.0)) {
      throw Error(ErrorKind::Config, "core", "sensitivity and excitation must be > 0");
    }
    if (adc_bits < 1 || adc_bits > 24 || !(adc_max > adc_min)) {
      throw Error(ErrorKind::Config, "core", "invalid converter range");
    }
  }

  double volts_per_newton() const { return sensitivity * excitation * gain / full_scale; }
  double to_voltage(double force) const { return force * volts_per_newton() + offset; }
  double to_force(double voltage) const { return (voltage - offset) / volts_per_newton(); }

  /// Quantize a voltage to the converter grid (clipped to the input range).
  double quantize(double voltage) const {
    const double levels = std::ldexp(1.0, adc_bits) - 1.0;
    const double lsb = (adc_max - adc_min) / levels;
    const double code = std::clamp(std::round((voltage - adc_min) / lsb), 0.0, levels);
    return adc_min + code * lsb;
  }

  friend bool operator==(const ForceCalibration&, const ForceCalibration&) = default;
};

/// One synchronized recording: 100 Hz force/accel/gyro plus an optional 30 Hz visual channel.
struct RecordingSession {
  SampledSeries force;   // N
  SampledSeries accel;   // m/s^2, 3 axes, body frame
  SampledSeries gyro;    // rad/s, 3 axes, body frame
  std::optional<SampledSeries> visual;  // flow magnitude
  std::optional<ManipulationType> label;
  ForceCalibration calibration;

  void validate() const {
    constexpr std::string_view mod = "core";
    if (force.width() != 1 || accel.width() != 3 || gyro.width() != 3) {
      throw Error(ErrorKind::DegenerateInput, mod, "channel widths must be force:1 accel:3 gyro:3");
    }
    if (force.size() != accel.size() || force.size() != gyro.size()) {
      throw Error(ErrorKind::LengthMismatch, mod, "force, accel and gyro lengths differ");
    }
    auto same = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };
    if (!same(force.dt(), accel.dt()) || !same(force.dt(), gyro.dt()) ||
        !same(force.t0(), accel.t0()) || !same(force.t0(), gyro.t0())) {
      throw Error(ErrorKind::LengthMismatch, mod, "force, accel and gyro clocks differ");
    }
    if (visual) {
      if (visual->width() != 1) throw Error(ErrorKind::DegenerateInput, mod, "visual must be scalar");
      if (visual->t0() > force.end_time() || visual->end_time() < force.t0()) {
        throw Error(ErrorKind::Span, mod, "visual channel does not overlap the IMU span");
      }
    }
  }

  friend bool operator==(const RecordingSession&, const RecordingSession&) = default;
};

namespace detail {

/// Second derivatives of the natural cubic spline through equally spaced knots.
inline std::vector<double> natural_spline_moments(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  // Tridiagonal system for interior moments: m[i-1] + 4 m[i] + m[i+1] = 6/h^2 (y[i+1]-2y[i]+y[i-1]).
  const std::size_t k = n - 2;
  std::vector<double> c(k), d(k);
  const double scale = 6.0 / (h * h);
  for (std::size_t i = 0; i < k; ++i) {
    const double rhs = scale * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
    if (i == 0) {
      c[i] = 1.0 / 4.0;
      d[i] = rhs / 4.0;
    } else {
      const double denom = 4.0 - c[i - 1];
      c[i] = 1.0 / denom;
      d[i] = (rhs - d[i - 1]) / denom;
    }
  }
  m[k] = d[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) m[i + 1] = d[i] - c[i] * m[i + 2];
  return m;
}

}  // namespace detail

/// Resample onto a new uniform grid using a natural cubic spline per component.
///
/// Output nodes are t_start + k*target_dt for every node not beyond t_end. Nodes that coincide
/// with a source knot return the knot value unchanged.
inline SampledSeries resample_cubic_spline(const SampledSeries& src, double target_dt,
                                           double t_start, double t_end) {
  constexpr std::string_view mod = "core";
  if (src.size() < 4) throw Error(ErrorKind::DegenerateInput, mod, "spline needs at least 4 samples");
  if (!(target_dt > 0.0)) throw Error(ErrorKind::Config, mod, "target_dt must be positive");
  const double tol = 1e-9 * src.dt();
  if (t_start < src.t0() - tol || t_end > src.end_time() + tol || t_end < t_start) {
    throw Error(ErrorKind::Span, mod, "target span lies outside the source span");
  }

  const std::size_t count =
      static_cast<std::size_t>(std::floor((t_end - t_start) / target_dt + 1e-9)) + 1;
  const std::size_t width = src.width();
  const std::size_t last = src.size() - 1;
  const double h = src.dt();

  std::vector<std::vector<double>> moments(width);
  std::vector<std::vector<double>> cols(width);
  for (std::size_t c = 0; c < width; ++c) {
    cols[c] = src.column(c);
    moments[c] = detail::natural_spline_moments(cols[c], h);
  }

  std::vector<double> out(count * width);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t_start + static_cast<double>(k) * target_dt;
    const double u = std::clamp((t - src.t0()) / h, 0.0, static_cast<double>(last));
    const double nearest = std::round(u);
    if (std::abs(u - nearest) < 1e-9) {
      const auto i = static_cast<std::size_t>(nearest);
      for (std::size_t c = 0; c < width; ++c) out[k * width + c] = cols[c][i];
      continue;
    }
    const auto i = std::min(static_cast<std::size_t>(std::floor(u)), last - 1);
    const double b = u - static_cast<double>(i);  // fraction through the interval
    const double a = 1.0 - b;
    for (std::size_t c = 0; c < width; ++c) {
      const auto& y = cols[c];
      const auto& m = moments[c];
      out[k * width + c] = a * y[i] + b * y[i + 1] +
                           ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
    }
  }
  return SampledSeries(t_start, target_dt, width, std::move(out), src.unit());
}

/// Root-mean-square difference over all components.
inline double rmse(const SampledSeries& a, const SampledSeries& b) {
  if (a.size() != b.size() || a.width() != b.width() ||
      std::abs(a.dt() - b.dt()) > 1e-12 * a.dt()) {
    throw Error(ErrorKind::LengthMismatch, "core", "rmse needs equal length and sample interval");
  }
  if (a.empty()) throw Error(ErrorKind::EmptyInput, "core", "rmse of empty series");
  const auto va = a.values();
  const auto vb = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(va.size()));
}

/// Root mean square of a plain range.
inline double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace acuquant

#endif  // ACUQUANT_CORE_HPP
