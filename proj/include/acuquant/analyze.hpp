#ifndef ACUQUANT_ANALYZE_HPP
#define ACUQUANT_ANALYZE_HPP

// Allan-variance noise identification, calibration nonlinearity, Welch ANOVA and summary stats.

#include <acuquant/core.hpp>
#include <acuquant/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace acuquant {

struct AllanCurve {
  std::vector<double> taus;               // s
  std::vector<std::vector<double>> adev;  // [axis][tau]
};

/// Unit convention for fitted coefficients.
enum class SensorKind {
  Raw,    // series units * sqrt(s), series units
  Accel,  // m/s^2 in: ug/sqrt(Hz), mg
  Gyro,   // rad/s in: deg/sqrt(h), deg/h
};

struct NoiseCoefficients {
  std::vector<double> random_walk;
  std::vector<double> bias_instability;
  std::vector<double> slope;      // free log-log slope over the fitted -1/2 region
  std::vector<double> tau_range;  // lo, hi of that region (axis 0)
};

struct CalibrationCurve {
  std::vector<double> applied_force;   // N, tension > 0
  std::vector<double> output_voltage;  // V
  int repeats = 1;
};

struct WelchResult {
  double F;
  double p;
  double df1;
  double df2;
};

struct MeanSd {
  double mean;
  double sd;
};

inline constexpr double kBiasInstabilityFactor = 0.664;

namespace detail {

/// Integer cluster sizes about log-spaced from 2 samples to n/9.
inline std::vector<std::size_t> default_cluster_sizes(std::size_t n, std::size_t count = 30) {
  std::vector<std::size_t> out;
  const double lo = 2.0, hi = static_cast<double>(n) / 9.0;
  if (hi < lo) return out;
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    const auto m = static_cast<std::size_t>(std::floor(lo * std::pow(hi / lo, f)));
    if (out.empty() || m > out.back()) out.push_back(m);
  }
  return out;
}

/// Overlapping Allan variance at cluster size m from the integrated series theta.
inline double overlapping_avar(const std::vector<double>& theta, std::size_t m, double dt) {
  const std::size_t n = theta.size() - 1;  // theta has n + 1 entries
  double acc = 0.0;
  for (std::size_t k = 0; k + 2 * m <= n; ++k) {
    const double d = theta[k + 2 * m] - 2.0 * theta[k + m] + theta[k];
    acc += d * d;
  }
  const double tau = static_cast<double>(m) * dt;
  return acc / (2.0 * tau * tau * static_cast<double>(n - 2 * m + 1));
}

/// Continued fraction for the incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw Error(ErrorKind::FitUnstable, "analyze", "incomplete beta did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || x < 0.0 || x > 1.0) {
    throw Error(ErrorKind::DegenerateInput, "analyze", "incomplete beta needs a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0 || x == 1.0) return x;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// Upper tail P(X > F) of the F distribution.
inline double f_distribution_sf(double F, double df1, double df2) {
  if (F <= 0.0) return 1.0;
  return regularized_incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * F));
}

/// Overlapping Allan deviation per axis. Empty `taus` selects about 30 log-spaced averaging
/// times from 2 dt to n dt / 9; given taus are rounded to whole samples.
inline AllanCurve allan_deviation(const SampledSeries& series, const std::vector<double>& taus = {}) {
  const std::size_t n = series.size();
  const double dt = series.dt();
  std::vector<std::size_t> ms;
  if (taus.empty()) {
    ms = detail::default_cluster_sizes(n);
  } else {
    for (double t : taus) {
      const auto m = static_cast<std::size_t>(std::llround(t / dt));
      if (m < 1) throw Error(ErrorKind::Config, "analyze", "tau shorter than one sample");
      if (!ms.empty() && m <= ms.back()) throw Error(ErrorKind::Config, "analyze", "taus must increase");
      ms.push_back(m);
    }
  }
  if (ms.empty() || n < 9 * ms.back()) {
    throw Error(ErrorKind::SeriesTooShort, "analyze", "series shorter than 9x the largest cluster");
  }

  AllanCurve curve;
  for (std::size_t m : ms) curve.taus.push_back(static_cast<double>(m) * dt);
  curve.adev.resize(series.width());
  for (std::size_t c = 0; c < series.width(); ++c) {
    // Offsetting by the first sample keeps a constant series exactly zero.
    const double ref = series(0, c);
    std::vector<double> theta(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) theta[k + 1] = theta[k] + (series(k, c) - ref) * dt;
    curve.adev[c].reserve(ms.size());
    for (std::size_t m : ms) curve.adev[c].push_back(std::sqrt(detail::overlapping_avar(theta, m, dt)));
  }
  return curve;
}

/// Least-squares slope of log adev against log tau over [tau_lo, tau_hi].
inline double loglog_slope(const AllanCurve& curve, std::size_t axis, double tau_lo = 0.0,
                           double tau_hi = std::numeric_limits<double>::infinity()) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < curve.taus.size(); ++i) {
    if (curve.taus[i] < tau_lo || curve.taus[i] > tau_hi || !(curve.adev[axis][i] > 0.0)) continue;
    const double x = std::log(curve.taus[i]), y = std::log(curve.adev[axis][i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) throw Error(ErrorKind::FitUnstable, "analyze", "fewer than two points in slope range");
  const double c = static_cast<double>(count);
  return (c * sxy - sx * sy) / (c * sxx - sx * sx);
}

/// Random walk from the longest run of -1/2 local slopes, read off a fixed-slope line at 1 s;
/// bias instability = min adev / 0.664.
inline NoiseCoefficients fit_noise_coeffs(const AllanCurve& curve, SensorKind kind = SensorKind::Raw,
                                          double slope_tolerance = 0.1) {
  const std::size_t m = curve.taus.size();
  if (m < 3 || curve.taus.back() / curve.taus.front() < 100.0) {
    throw Error(ErrorKind::FitUnstable, "analyze", "curve spans less than two decades of tau");
  }
  double rw_scale = 1.0, bi_scale = 1.0;
  if (kind == SensorKind::Accel) {
    rw_scale = 1.0 / (1e-6 * kGravity);
    bi_scale = 1.0 / (1e-3 * kGravity);
  } else if (kind == SensorKind::Gyro) {
    rw_scale = 60.0 * 180.0 / kPi;
    bi_scale = 3600.0 * 180.0 / kPi;
  }

  NoiseCoefficients out;
  for (std::size_t c = 0; c < curve.adev.size(); ++c) {
    const auto& a = curve.adev[c];
    std::size_t best_lo = 0, best_len = 0, run_lo = 0, run_len = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      bool ok = a[i] > 0.0 && a[i + 1] > 0.0;
      if (ok) {
        const double s = std::log(a[i + 1] / a[i]) / std::log(curve.taus[i + 1] / curve.taus[i]);
        ok = std::abs(s + 0.5) <= slope_tolerance;
      }
      if (ok) {
        if (run_len == 0) run_lo = i;
        ++run_len;
        if (run_len > best_len) {
          best_len = run_len;
          best_lo = run_lo;
        }
      } else {
        run_len = 0;
      }
    }
    if (best_len < 2) throw Error(ErrorKind::FitUnstable, "analyze", "no -1/2 slope region");
    const std::size_t lo = best_lo, hi = best_lo + best_len;  // points lo..hi inclusive
    double acc = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) acc += std::log(a[i]) + 0.5 * std::log(curve.taus[i]);
    const double n_at_1s = std::exp(acc / static_cast<double>(hi - lo + 1));
    out.random_walk.push_back(n_at_1s * rw_scale);
    out.slope.push_back(loglog_slope(curve, c, curve.taus[lo], curve.taus[hi]));
    if (c == 0) out.tau_range = {curve.taus[lo], curve.taus[hi]};
    const double min_adev = *std::min_element(a.begin(), a.end());
    out.bias_instability.push_back(min_adev / kBiasInstabilityFactor * bi_scale);
  }
  return out;
}

/// Max |residual| of the least-squares line, as a fraction of the output span.
inline double nonlinearity_error(const CalibrationCurve& curve) {
  const auto& x = curve.applied_force;
  const auto& y = curve.output_voltage;
  if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "analyze", "force/voltage lengths differ");
  if (x.size() < 5) throw Error(ErrorKind::DegenerateInput, "analyze", "calibration needs >= 5 points");
  if (!(*std::min_element(x.begin(), x.end()) < 0.0 && *std::max_element(x.begin(), x.end()) > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "analyze", "calibration must span tension and compression");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  const double span = *ymax - *ymin;
  if (!(span > 0.0)) throw Error(ErrorKind::DegenerateInput, "analyze", "calibration output is flat");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(y[i] - (my + slope * (x[i] - mx))));
  }
  return worst / span;
}

inline MeanSd mean_sd(const std::vector<double>& samples) {
  if (samples.size() < 2) throw Error(ErrorKind::DegenerateInput, "analyze", "mean_sd needs >= 2 samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

/// Welch's heteroscedastic one-way ANOVA.
inline WelchResult welch_anova(const std::vector<std::vector<double>>& groups) {
  const std::size_t k = groups.size();
  if (k < 2) throw Error(ErrorKind::DegenerateGroup, "analyze", "Welch ANOVA needs >= 2 groups");
  std::vector<double> w(k), mean(k), n(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (groups[i].size() < 3) throw Error(ErrorKind::DegenerateGroup, "analyze", "group with < 3 samples");
    const auto ms = mean_sd(groups[i]);
    if (!(ms.sd > 0.0)) throw Error(ErrorKind::DegenerateGroup, "analyze", "group with zero variance");
    n[i] = static_cast<double>(groups[i].size());
    mean[i] = ms.mean;
    w[i] = n[i] / (ms.sd * ms.sd);
  }
  const double W = std::accumulate(w.begin(), w.end(), 0.0);
  double mw = 0.0;
  for (std::size_t i = 0; i < k; ++i) mw += w[i] * mean[i];
  mw /= W;
  double num = 0.0, tmp = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    num += w[i] * (mean[i] - mw) * (mean[i] - mw);
    tmp += (1.0 - w[i] / W) * (1.0 - w[i] / W) / (n[i] - 1.0);
  }
  const double kk = static_cast<double>(k);
  const double A = num / (kk - 1.0);
  const double B = 1.0 + 2.0 * (kk - 2.0) / (kk * kk - 1.0) * tmp;
  const double F = A / B;
  const double df1 = kk - 1.0;
  const double df2 = (kk * kk - 1.0) / (3.0 * tmp);
  return {F, f_distribution_sf(F, df1, df2), df1, df2};
}

}  // namespace acuquant

#endif  // ACUQUANT_ANALYZE_HPP
