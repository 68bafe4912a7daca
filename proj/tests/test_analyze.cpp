#include <acuquant/analyze.hpp>
#include <acuquant/cycles.hpp>
#include <acuquant/profiles.hpp>
#include <acuquant/random.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace acuquant;

namespace {

SampledSeries white(double density, double seconds, std::uint64_t seed, double dt = 0.01) {
  NormalStream rng(seed);
  std::vector<double> x(static_cast<std::size_t>(seconds / dt));
  for (auto& v : x) v = density / std::sqrt(dt) * rng();
  return SampledSeries::scalar(0, dt, x);
}

SampledSeries random_walk(double k, double seconds, std::uint64_t seed, double dt = 0.01) {
  NormalStream rng(seed);
  std::vector<double> x(static_cast<std::size_t>(seconds / dt));
  double acc = 0.0;
  for (auto& v : x) {
    acc += k * std::sqrt(dt) * rng();
    v = acc;
  }
  return SampledSeries::scalar(0, dt, x);
}

template <typename F>
void expect_kind(ErrorKind kind, F&& f) {
  try {
    f();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind);
  }
}

}  // namespace

TEST(IncompleteBeta, MatchesReference) {
  // scipy.special.betainc
  EXPECT_NEAR(regularized_incomplete_beta(0.5, 0.5, 0.3), 0.36901011956554536, 1e-12);
  EXPECT_NEAR(regularized_incomplete_beta(2.0, 3.0, 0.4), 0.5248, 1e-12);
  EXPECT_NEAR(regularized_incomplete_beta(10.0, 0.5, 0.9), 0.15164090963470994, 1e-12);
  EXPECT_NEAR(regularized_incomplete_beta(1.5, 40.0, 0.02), 0.34654713215022043, 1e-12);
  EXPECT_NEAR(regularized_incomplete_beta(100.0, 120.0, 0.45), 0.44780123014770701, 1e-10);
  EXPECT_EQ(regularized_incomplete_beta(2.0, 2.0, 0.0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(2.0, 2.0, 1.0), 1.0);
  EXPECT_THROW(regularized_incomplete_beta(0.0, 1.0, 0.5), Error);
}

TEST(Welch, SeparatedGroups) {
  const auto r = welch_anova({{1.0, 1.1, 0.9, 1.05}, {2.0, 2.1, 1.9, 2.05}});
  EXPECT_NEAR(r.F, 274.28571428571422, 1e-9);
  EXPECT_DOUBLE_EQ(r.df1, 1.0);
  EXPECT_NEAR(r.df2, 6.0, 1e-12);
  EXPECT_NEAR(r.p, 3.0904261100621237e-06, 1e-14);
  EXPECT_LT(r.p, 0.001);
}

TEST(Welch, ThreeGroupReference) {
  const auto a = welch_anova({{1.2, 0.8, 1.1, 0.95, 1.3}, {1.0, 1.4, 0.7, 1.1}, {0.9, 1.6, 1.2, 1.0, 1.3, 0.8}});
  EXPECT_NEAR(a.F, 0.11372349333719936, 1e-12);
  EXPECT_NEAR(a.df2, 7.1045223761388785, 1e-10);
  EXPECT_NEAR(a.p, 0.8940969702469872, 1e-10);
  const auto b = welch_anova({{3.1, 2.9, 3.4, 3.0}, {2.5, 2.7, 2.2, 2.9, 2.6}, {3.3, 3.8, 3.5}});
  EXPECT_NEAR(b.F, 12.164634485994174, 1e-10);
  EXPECT_NEAR(b.p, 0.011077914073301647, 1e-10);
}

TEST(Welch, DegenerateGroups) {
  expect_kind(ErrorKind::DegenerateGroup, [] { welch_anova({{1, 1, 1, 1}, {1, 2, 3}}); });
  expect_kind(ErrorKind::DegenerateGroup, [] { welch_anova({{1, 2, 3}}); });
  expect_kind(ErrorKind::DegenerateGroup, [] { welch_anova({{1, 2}, {1, 2, 3}}); });
}

TEST(WelchProperty, NullRejectionRate) {
  NormalStream rng(99);
  int kept = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(20), b(20);
    for (auto& v : a) v = rng();
    for (auto& v : b) v = rng();
    if (welch_anova({a, b}).p > 0.05) ++kept;
  }
  // 95% expected; three binomial sd below.
  EXPECT_GE(static_cast<double>(kept) / trials, 0.929);
}

TEST(WelchProperty, NonnegativeAndOrderFree) {
  NormalStream rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + t % 4;
    std::vector<std::vector<double>> g(k);
    for (std::size_t i = 0; i < k; ++i) {
      g[i].resize(3 + (t + i) % 7);
      const double shift = rng(), scale = 0.1 + std::abs(rng());
      for (auto& v : g[i]) v = shift + scale * rng();
    }
    const auto r = welch_anova(g);
    ASSERT_GE(r.F, 0.0);
    ASSERT_GE(r.p, 0.0);
    ASSERT_LE(r.p, 1.0);
    std::reverse(g.begin(), g.end());
    const auto s = welch_anova(g);
    ASSERT_NEAR(s.F, r.F, 1e-10 * (1.0 + r.F));
    ASSERT_NEAR(s.p, r.p, 1e-10);
  }
}

TEST(MeanSd, HandValues) {
  const auto a = mean_sd({1, 1, 1});
  EXPECT_EQ(a.mean, 1.0);
  EXPECT_EQ(a.sd, 0.0);
  const auto b = mean_sd({0, 2});
  EXPECT_EQ(b.mean, 1.0);
  EXPECT_NEAR(b.sd, std::sqrt(2.0), 1e-15);
  expect_kind(ErrorKind::DegenerateInput, [] { mean_sd({3.0}); });
}

TEST(MeanSd, SimulatedThrustProportion) {
  LiftThrustPattern p = LiftThrustPattern::ltrf();
  p.duration = 20.0;
  p.seed = 2;
  p.proportion_jitter = 0.08;
  const NeedleBody body;
  const auto layers = default_layers();
  const auto truth = simulate_lifting_thrusting(lift_thrust_profile(p, body, layers), body, layers, 1e-4, p.duration);
  ImuNoiseModel noise;
  noise.seed = 2;
  const auto s = synthesize_sensors(truth, noise, ForceCalibration{}, 0.01);
  const auto track = estimate_attitude(s.accel, s.gyro);
  const auto axial = axial_projection(s.accel, track.q, Eigen::Vector3d(0, 0, -1));
  const auto timeline = detect_states(s, FusionConfig::short_stroke());
  const auto est = segmented_integrate(axial, timeline, IntegrationOptions::rest_to_rest());
  std::vector<double> f1;
  for (const auto& r : extract_lt_features(s, est, detect_lt_points(axial, timeline)).rows(Stage::S1)) {
    f1.push_back(r.proportion);
  }
  EXPECT_NEAR(mean_sd(f1).mean, 0.25, 0.03);
}

TEST(Allan, ConstantIsZero) {
  const auto c = allan_deviation(SampledSeries::scalar(0, 0.01, std::vector<double>(2000, 3.7)));
  for (double v : c.adev[0]) EXPECT_EQ(v, 0.0);
}

TEST(Allan, DefaultTauGrid) {
  const auto c = allan_deviation(white(1.0, 100.0, 1));
  EXPECT_NEAR(c.taus.front(), 0.02, 1e-12);
  EXPECT_LE(c.taus.back(), 100.0 / 9.0 + 1e-9);
  EXPECT_GE(c.taus.size(), 25u);
  EXPECT_LE(c.taus.size(), 30u);
  for (std::size_t i = 1; i < c.taus.size(); ++i) EXPECT_GT(c.taus[i], c.taus[i - 1]);
}

TEST(Allan, WhiteNoiseSlopeAndLevel) {
  const double N = 0.02;
  const auto c = allan_deviation(white(N, 1800.0, 3));
  EXPECT_NEAR(loglog_slope(c, 0), -0.5, 0.05);
  for (std::size_t i = 0; i < c.taus.size(); ++i) {
    if (c.taus[i] < 10.0) {
      EXPECT_NEAR(c.adev[0][i] * std::sqrt(c.taus[i]) / N, 1.0, 0.1);
    }
  }
}

TEST(Allan, RandomWalkSlope) {
  const auto c = allan_deviation(random_walk(0.01, 1800.0, 4));
  EXPECT_NEAR(loglog_slope(c, 0), 0.5, 0.05);
}

TEST(Allan, ErrorsAndExplicitTaus) {
  expect_kind(ErrorKind::SeriesTooShort, [] { allan_deviation(SampledSeries::scalar(0, 0.01, std::vector<double>(17, 1.0))); });
  expect_kind(ErrorKind::SeriesTooShort, [] { allan_deviation(white(1.0, 1.0, 1), {0.5}); });
  const auto c = allan_deviation(white(1.0, 10.0, 1), {0.01, 0.1, 1.0});
  ASSERT_EQ(c.taus.size(), 3u);
  EXPECT_NEAR(c.taus[2], 1.0, 1e-12);
}

TEST(AllanProperty, OffsetAndScale) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto base = white(0.5, 200.0, seed);
    std::vector<double> shifted(base.values().begin(), base.values().end()), scaled = shifted;
    for (auto& v : shifted) v += 12.5;
    for (auto& v : scaled) v *= -3.0;
    const auto a = allan_deviation(base);
    const auto b = allan_deviation(base.with_values(shifted, 1, ""));
    const auto c = allan_deviation(base.with_values(scaled, 1, ""));
    for (std::size_t i = 0; i < a.taus.size(); ++i) {
      ASSERT_NEAR(b.adev[0][i], a.adev[0][i], 1e-9 * a.adev[0][i]);
      ASSERT_NEAR(c.adev[0][i], 3.0 * a.adev[0][i], 1e-12 * a.adev[0][i]);
    }
    const auto fa = fit_noise_coeffs(a), fc = fit_noise_coeffs(c);
    ASSERT_NEAR(fc.random_walk[0], 3.0 * fa.random_walk[0], 1e-12 * fa.random_walk[0]);
  }
}

TEST(NoiseFit, GyroArwTwoHours) {
  const double arw = 0.14;  // deg/sqrt(h)
  const auto x = detail::imu_axis_noise(720000, 0.01, units::deg_per_rthour(arw), units::deg_per_hour(2.72),
                                        100.0, 11, 0, 1);
  const auto fit = fit_noise_coeffs(allan_deviation(SampledSeries::scalar(0, 0.01, x)), SensorKind::Gyro);
  EXPECT_NEAR(fit.random_walk[0], arw, 0.1 * arw);
  EXPECT_NEAR(fit.slope[0], -0.5, 0.05);
}

TEST(NoiseFit, AccelVrw) {
  const double vrw = 73.2;  // ug/sqrt(Hz)
  const auto x = detail::imu_axis_noise(180000, 0.01, units::ug_per_rthz(vrw), units::mg(0.61), 100.0, 12, 0, 1);
  const auto fit = fit_noise_coeffs(allan_deviation(SampledSeries::scalar(0, 0.01, x)), SensorKind::Accel);
  EXPECT_NEAR(fit.random_walk[0], vrw, 0.1 * vrw);
  EXPECT_NEAR(fit.slope[0], -0.5, 0.05);
}

TEST(NoiseFit, WhitePlusWalkMixture) {
  // sigma^2 = N^2/tau + K^2 tau/3 has its minimum sqrt(2 N K / sqrt(3)) at tau = sqrt(3) N / K.
  const double N = 1.0, K = std::sqrt(3.0) / 10.0;
  const auto w = white(N, 1800.0, 21), r = random_walk(K, 1800.0, 22);
  std::vector<double> x(w.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = w(k) + r(k);
  const auto fit = fit_noise_coeffs(allan_deviation(w.with_values(x, 1, "")));
  EXPECT_NEAR(fit.random_walk[0], N, 0.15 * N);
  const double bi = std::sqrt(2.0 * N * K / std::sqrt(3.0)) / kBiasInstabilityFactor;
  EXPECT_NEAR(fit.bias_instability[0], bi, 0.15 * bi);
}

TEST(NoiseFit, Unstable) {
  expect_kind(ErrorKind::FitUnstable, [] { fit_noise_coeffs(allan_deviation(random_walk(0.01, 600.0, 1))); });
  expect_kind(ErrorKind::FitUnstable, [] { fit_noise_coeffs(allan_deviation(white(1.0, 2.0, 1))); });
}

namespace {

CalibrationCurve sweep(double target) {
  // Up and down over -3..3 N; the perturbation is orthogonal to {1, F}, so it is the residual.
  std::vector<double> f;
  for (int i = -6; i <= 6; ++i) f.push_back(0.5 * i);
  for (int i = 6; i >= -6; --i) f.push_back(0.5 * i);
  double s2 = 0, s4 = 0;
  for (double v : f) {
    s2 += v * v;
    s4 += v * v * v * v;
  }
  std::vector<double> p(f.size());
  double pmax = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    p[i] = f[i] * f[i] * f[i] - s4 / s2 * f[i];
    pmax = std::max(pmax, std::abs(p[i]));
  }
  double eps = 0.0;
  std::vector<double> v(f.size());
  for (int it = 0; it < 50; ++it) {
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = 0.5 * f[i] + eps * p[i];
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    eps = target * (*hi - *lo) / pmax;
  }
  for (std::size_t i = 0; i < f.size(); ++i) v[i] = 0.5 * f[i] + eps * p[i];
  return {f, v, 2};
}

}  // namespace

TEST(Nonlinearity, LinearIsZero) { EXPECT_NEAR(nonlinearity_error(sweep(0.0)), 0.0, 1e-15); }

TEST(Nonlinearity, ConstructedCubic) { EXPECT_NEAR(nonlinearity_error(sweep(0.0045)), 0.0045, 0.0002); }

TEST(Nonlinearity, Preconditions) {
  expect_kind(ErrorKind::DegenerateInput, [] { nonlinearity_error({{-1, 1}, {0, 1}, 1}); });
  expect_kind(ErrorKind::DegenerateInput, [] { nonlinearity_error({{0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}, 1}); });
  expect_kind(ErrorKind::LengthMismatch, [] { nonlinearity_error({{-1, 0, 1, 2, 3}, {0, 1}, 1}); });
}

TEST(NonlinearityProperty, AffineVoltageInvariance) {
  NormalStream rng(3);
  const auto base = sweep(0.0045);
  const double e0 = nonlinearity_error(base);
  for (int t = 0; t < 100; ++t) {
    const double a = (std::abs(rng()) + 0.01) * (t % 2 ? -1.0 : 1.0), b = 10.0 * rng();
    auto c = base;
    for (auto& v : c.output_voltage) v = a * v + b;
    ASSERT_NEAR(nonlinearity_error(c), e0, 1e-9);
  }
}
