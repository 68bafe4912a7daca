#ifndef ACUQUANT_CONDITION_HPP
#define ACUQUANT_CONDITION_HPP

// Force-channel conditioning (prestress removal, mains notch, db5 wavelet shrinkage) and the
// accelerometer low-pass. Every filter runs forward-backward so event timing is not shifted.
// Vector series are filtered column by column.

#include <acuquant/core.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace acuquant {

struct NotchSpec {
  double f0 = 50.0;       // Hz
  double fs = 100.0;      // Hz
  double quality = 10.0;  // f0 / bandwidth

  void validate() const {
    if (!(fs > 0.0) || !(f0 > 0.0) || !(quality > 0.0)) {
      throw Error(ErrorKind::Config, "condition", "notch needs positive f0, fs and quality");
    }
    // f0 at exactly fs/2 is the Nyquist notch; anything above is aliased and meaningless.
    if (f0 > fs / 2.0 * (1.0 + 1e-12)) {
      throw Error(ErrorKind::Config, "condition", "notch frequency above Nyquist");
    }
  }
};

struct WaveletSpec {
  int levels = 4;
  double threshold_scale = 1.0;  // multiplies the universal threshold; 0 disables shrinkage
};

/// Direct-form biquad with a0 normalized to 1.
struct Biquad {
  std::array<double, 3> b{1.0, 0.0, 0.0};
  std::array<double, 3> a{1.0, 0.0, 0.0};

  /// Largest pole magnitude, used to size the edge padding.
  double pole_radius() const {
    const double disc = a[1] * a[1] - 4.0 * a[2];
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      return std::max(std::abs((-a[1] + s) / 2.0), std::abs((-a[1] - s) / 2.0));
    }
    return std::sqrt(a[2]);
  }
};

/// Notch biquad. At f0 == fs/2 both zeros sit on z = -1 and the poles on the real axis at -rho,
/// which keeps every coefficient real; elsewhere the usual second-order notch.
inline Biquad notch_biquad(const NotchSpec& spec) {
  spec.validate();
  Biquad q;
  if (std::abs(spec.f0 - spec.fs / 2.0) <= 1e-9 * spec.fs) {
    const double rho = std::exp(-kPi * (spec.f0 / spec.quality) / spec.fs);
    const double k = (1.0 + rho) * (1.0 + rho) / 4.0;
    q.b = {k, 2.0 * k, k};
    q.a = {1.0, 2.0 * rho, rho * rho};
    return q;
  }
  const double w0 = 2.0 * kPi * spec.f0 / spec.fs;
  const double alpha = std::sin(w0) / (2.0 * spec.quality);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;
  q.b = {1.0 / a0, -2.0 * c / a0, 1.0 / a0};
  q.a = {1.0, -2.0 * c / a0, (1.0 - alpha) / a0};
  return q;
}

/// Second-order Butterworth low-pass whose forward-backward response is -3 dB at `cutoff`.
/// Run twice, each pass must sit at -1.5 dB there, so the analog corner is moved up by
/// (sqrt(2) - 1)^(-1/4) after prewarping.
inline Biquad zero_phase_lowpass_biquad(double cutoff, double fs) {
  if (!(fs > 0.0) || !(cutoff > 0.0) || !(cutoff < fs / 2.0)) {
    throw Error(ErrorKind::Config, "condition", "low-pass bandwidth must lie in (0, fs/2)");
  }
  const double wc = std::tan(kPi * cutoff / fs) * std::pow(std::sqrt(2.0) - 1.0, -0.25);
  const double w2 = wc * wc;
  const double a0 = 1.0 + std::sqrt(2.0) * wc + w2;
  Biquad q;
  q.b = {w2 / a0, 2.0 * w2 / a0, w2 / a0};
  q.a = {1.0, (2.0 * w2 - 2.0) / a0, (1.0 - std::sqrt(2.0) * wc + w2) / a0};
  return q;
}

namespace detail {

/// Transposed direct form II pass with initial state scaled to the first sample's step
/// response, so a constant input produces a constant output from the first sample on.
inline std::vector<double> biquad_pass(const Biquad& q, const std::vector<double>& x) {
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  const double gain = (q.b[0] + q.b[1] + q.b[2]) / (q.a[0] + q.a[1] + q.a[2]);
  double z1 = (q.b[2] - q.a[2] * gain) * x[0];
  double z0 = (q.b[1] - q.a[1] * gain) * x[0] + z1;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double out = q.b[0] * x[n] + z0;
    z0 = q.b[1] * x[n] - q.a[1] * out + z1;
    z1 = q.b[2] * x[n] - q.a[2] * out;
    y[n] = out;
  }
  return y;
}

inline std::vector<double> filtfilt(const Biquad& q, const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return x;
  const double r = std::clamp(q.pole_radius(), 1e-3, 1.0 - 1e-9);
  const auto wanted = static_cast<std::size_t>(std::ceil(std::log(1e-12) / std::log(r)));
  const std::size_t pad = std::min(n - 1, std::max<std::size_t>(wanted, 6));

  // Odd reflection about each endpoint keeps value and slope continuous.
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto fwd = biquad_pass(q, ext);
  std::reverse(fwd.begin(), fwd.end());
  auto back = biquad_pass(q, fwd);
  std::reverse(back.begin(), back.end());
  return {back.begin() + static_cast<std::ptrdiff_t>(pad),
          back.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline SampledSeries filtfilt_columns(const Biquad& q, const SampledSeries& s) {
  std::vector<double> out(s.values().size());
  for (std::size_t c = 0; c < s.width(); ++c) {
    const auto y = filtfilt(q, s.column(c));
    for (std::size_t n = 0; n < y.size(); ++n) out[n * s.width() + c] = y[n];
  }
  return s.with_values(std::move(out), s.width());
}

// Daubechies order-5 filter bank (10 taps).
inline constexpr std::array<double, 10> kDb5Lo{
    0.0033357252854737712, -0.012580751999081999, -0.006241490212798274, 0.07757149384004572,
    -0.032244869584638375, -0.24229488706638203,  0.13842814590132074,   0.7243085284377729,
    0.6038292697971896,    0.16010239797419293};

constexpr std::array<double, 10> db5_hi() {
  std::array<double, 10> h{};
  for (std::size_t j = 0; j < 10; ++j) {
    h[j] = ((j % 2 == 0) ? -1.0 : 1.0) * kDb5Lo[9 - j];
  }
  return h;
}
inline constexpr std::array<double, 10> kDb5Hi = db5_hi();

/// Half-sample symmetric extension index.
inline std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto len = static_cast<std::ptrdiff_t>(n);
  while (i < 0 || i >= len) {
    if (i < 0) i = -i - 1;
    if (i >= len) i = 2 * len - 1 - i;
  }
  return static_cast<std::size_t>(i);
}

struct DwtLevel {
  std::vector<double> approx;
  std::vector<double> detail;
};

inline DwtLevel dwt_step(const std::vector<double>& x) {
  constexpr std::size_t f = kDb5Lo.size();
  const std::size_t n = x.size();
  const std::size_t m = (n + f - 1) / 2;
  DwtLevel out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      const double v =
          x[reflect(static_cast<std::ptrdiff_t>(2 * i + 1) - static_cast<std::ptrdiff_t>(j), n)];
      lo += kDb5Lo[j] * v;
      hi += kDb5Hi[j] * v;
    }
    out.approx[i] = lo;
    out.detail[i] = hi;
  }
  return out;
}

/// Inverse of dwt_step for an original length n.
inline std::vector<double> idwt_step(const std::vector<double>& approx,
                                     const std::vector<double>& detail, std::size_t n) {
  constexpr std::size_t f = kDb5Lo.size();
  std::vector<double> y(n, 0.0);
  const std::size_t m = std::min(approx.size(), detail.size());
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    // Reconstruction taps are the time-reversed analysis taps: index f-1-(k+f-2-2i).
    for (std::size_t i = 0; i < m; ++i) {
      const auto tap = static_cast<std::ptrdiff_t>(k + f - 2) - static_cast<std::ptrdiff_t>(2 * i);
      if (tap < 0 || tap >= static_cast<std::ptrdiff_t>(f)) continue;
      const std::size_t j = f - 1 - static_cast<std::size_t>(tap);
      acc += kDb5Lo[j] * approx[i] + kDb5Hi[j] * detail[i];
    }
    y[k] = acc;
  }
  return y;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

inline std::vector<double> wavelet_denoise_column(const std::vector<double>& x,
                                                  const WaveletSpec& spec) {
  std::vector<std::vector<double>> details;
  std::vector<std::size_t> lengths;
  std::vector<double> approx = x;
  for (int l = 0; l < spec.levels; ++l) {
    lengths.push_back(approx.size());
    auto step = dwt_step(approx);
    approx = std::move(step.approx);
    details.push_back(std::move(step.detail));
  }

  if (spec.threshold_scale > 0.0) {
    std::vector<double> mags(details.front().size());
    std::transform(details.front().begin(), details.front().end(), mags.begin(),
                   [](double d) { return std::abs(d); });
    const double sigma = median(std::move(mags)) / 0.6745;
    const double thr =
        spec.threshold_scale * sigma * std::sqrt(2.0 * std::log(static_cast<double>(x.size())));
    for (auto& level : details) {
      for (auto& d : level) {
        const double mag = std::abs(d) - thr;
        d = mag > 0.0 ? std::copysign(mag, d) : 0.0;
      }
    }
  }

  for (int l = spec.levels - 1; l >= 0; --l) {
    approx = idwt_step(approx, details[static_cast<std::size_t>(l)], lengths[static_cast<std::size_t>(l)]);
  }
  return approx;
}

}  // namespace detail

/// Removes the static preload: subtracts the mean over the first `baseline_window` seconds.
inline SampledSeries compensate_prestress(const SampledSeries& force, double baseline_window) {
  if (!(baseline_window >= 0.5)) {
    throw Error(ErrorKind::Config, "condition", "baseline window must be at least 0.5 s");
  }
  const auto count = static_cast<std::size_t>(std::llround(baseline_window / force.dt()));
  if (count > force.size()) {
    throw Error(ErrorKind::WindowTooLong, "condition", "baseline window exceeds the series");
  }
  std::vector<double> out(force.values().begin(), force.values().end());
  for (std::size_t c = 0; c < force.width(); ++c) {
    double mean = 0.0;
    for (std::size_t n = 0; n < count; ++n) mean += force(n, c);
    mean /= static_cast<double>(count);
    for (std::size_t n = 0; n < force.size(); ++n) out[n * force.width() + c] -= mean;
  }
  return force.with_values(std::move(out), force.width());
}

inline SampledSeries notch_filter(const SampledSeries& series, const NotchSpec& spec) {
  spec.validate();
  if (std::abs(series.rate() - spec.fs) > 1e-6 * spec.fs) {
    throw Error(ErrorKind::Config, "condition", "notch fs does not match the series rate");
  }
  return detail::filtfilt_columns(notch_biquad(spec), series);
}

inline SampledSeries lowpass_accel(const SampledSeries& series, double bandwidth) {
  return detail::filtfilt_columns(zero_phase_lowpass_biquad(bandwidth, series.rate()), series);
}

inline SampledSeries wavelet_denoise(const SampledSeries& series, const WaveletSpec& spec) {
  if (spec.levels < 1 || spec.threshold_scale < 0.0) {
    throw Error(ErrorKind::Config, "condition", "wavelet needs levels >= 1 and a threshold >= 0");
  }
  const std::size_t n = series.size();
  const std::size_t needed = (std::size_t{1} << spec.levels) * detail::kDb5Lo.size();
  if (n < needed || n < 4 ||
      spec.levels > static_cast<int>(std::floor(std::log2(static_cast<double>(n)))) - 2) {
    throw Error(ErrorKind::DegenerateInput, "condition", "series too short for the wavelet depth");
  }
  std::vector<double> out(series.values().size());
  for (std::size_t c = 0; c < series.width(); ++c) {
    const auto y = detail::wavelet_denoise_column(series.column(c), spec);
    for (std::size_t k = 0; k < n; ++k) out[k * series.width() + c] = y[k];
  }
  return series.with_values(std::move(out), series.width());
}

}  // namespace acuquant

#endif  // ACUQUANT_CONDITION_HPP
