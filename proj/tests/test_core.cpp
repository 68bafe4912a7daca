#include <acuquant/core.hpp>
#include <acuquant/random.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace acuquant;

namespace {

SampledSeries sample(double rate, double duration, auto&& f) {
  const double dt = 1.0 / rate;
  const auto n = static_cast<std::size_t>(std::llround(duration * rate)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = f(static_cast<double>(i) * dt);
  return SampledSeries::scalar(0.0, dt, std::move(v));
}

}  // namespace

TEST(SampledSeries, RejectsNonPositiveInterval) {
  EXPECT_THROW(SampledSeries::scalar(0.0, 0.0, {1.0}), Error);
  EXPECT_THROW(SampledSeries::scalar(0.0, -0.01, {1.0}), Error);
}

TEST(SampledSeries, RejectsRaggedVectors) {
  EXPECT_THROW(SampledSeries(0.0, 0.01, 3, {1.0, 2.0}), Error);
}

TEST(SampledSeries, TimestampsAreDerived) {
  const SampledSeries s(1.5, 0.01, 3, std::vector<double>(30, 0.0));
  EXPECT_EQ(s.size(), 10u);
  EXPECT_DOUBLE_EQ(s.time(7), 1.5 + 7 * 0.01);
}

TEST(Spline, ReproducesLinearRamp) {
  const auto src = sample(30.0, 2.0, [](double t) { return 2.0 * t; });
  const auto out = resample_cubic_spline(src, 0.01, 0.0, 2.0);
  ASSERT_EQ(out.size(), 201u);
  for (std::size_t k = 0; k < out.size(); ++k) EXPECT_NEAR(out(k), 2.0 * out.time(k), 1e-12);
}

TEST(Spline, PassesThroughKnotsExactly) {
  const auto src = sample(30.0, 2.0, [](double t) { return std::exp(-t) * std::cos(7 * t); });
  const auto out = resample_cubic_spline(src, 0.01, 0.0, 2.0);
  // t = 0.1 s is knot 3 of the 30 Hz grid and node 10 of the 100 Hz grid.
  EXPECT_EQ(out(10), src(3));
  EXPECT_EQ(out(0), src(0));
  EXPECT_EQ(out(200), src(60));
}

TEST(Spline, SineErrorBound) {
  const auto f = [](double t) { return std::sin(2.0 * kPi * t); };
  const auto src = sample(30.0, 2.0, f);
  const auto out = resample_cubic_spline(src, 0.01, 0.0, 2.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) worst = std::max(worst, std::abs(out(k) - f(out.time(k))));
  EXPECT_LE(worst, 1e-3);
}

TEST(Spline, VectorComponentsIndependent) {
  std::vector<double> v;
  for (int i = 0; i < 20; ++i) {
    v.push_back(i);
    v.push_back(-3.0 * i + 1.0);
  }
  const SampledSeries src(0.0, 0.1, 2, v);
  const auto out = resample_cubic_spline(src, 0.05, 0.0, 1.9);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double u = out.time(k) / 0.1;
    EXPECT_NEAR(out(k, 0), u, 1e-12);
    EXPECT_NEAR(out(k, 1), -3.0 * u + 1.0, 1e-12);
  }
}

TEST(Spline, Errors) {
  const auto src = sample(30.0, 1.0, [](double t) { return t; });
  EXPECT_THROW(resample_cubic_spline(src, 0.01, 0.0, 1.5), Error);
  EXPECT_THROW(resample_cubic_spline(src, 0.01, -0.1, 0.5), Error);
  const auto tiny = SampledSeries::scalar(0.0, 0.1, {1.0, 2.0, 3.0});
  try {
    resample_cubic_spline(tiny, 0.01, 0.0, 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
  }
  try {
    resample_cubic_spline(src, 0.01, 0.0, 1.5);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Span);
  }
}

// Resampling onto a grid that contains every knot returns the knots.
TEST(SplineProperty, RoundTripThroughFinerGrid) {
  NormalStream rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform() * 60);
    std::vector<double> v(n);
    for (auto& x : v) x = 5.0 * rng();
    const auto src = SampledSeries::scalar(0.0, 0.03, v);
    const auto fine = resample_cubic_spline(src, 0.01, 0.0, src.end_time());
    for (std::size_t i = 0; i < n; ++i) {
      const double back = fine(3 * i);
      EXPECT_NEAR(back, v[i], 1e-12 * std::max(1.0, std::abs(v[i])));
    }
  }
}

TEST(Rmse, Examples) {
  const auto a = SampledSeries::scalar(0.0, 0.01, {0.0, 1.0, 2.0});
  const auto b = SampledSeries::scalar(0.0, 0.01, {1.0, 1.0, 1.0});
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_NEAR(rmse(a, b), std::sqrt(2.0 / 3.0), 1e-15);
  const auto shifted = SampledSeries::scalar(0.0, 0.01, {3e-3, 1.0 + 3e-3, 2.0 + 3e-3});
  EXPECT_NEAR(rmse(shifted, a), 3e-3, 1e-15);
}

TEST(Rmse, LengthMismatch) {
  const auto a = SampledSeries::scalar(0.0, 0.01, {0.0, 1.0, 2.0});
  const auto b = SampledSeries::scalar(0.0, 0.01, {1.0, 1.0});
  const auto c = SampledSeries::scalar(0.0, 0.02, {1.0, 1.0, 1.0});
  EXPECT_THROW(rmse(a, b), Error);
  EXPECT_THROW(rmse(a, c), Error);
}

TEST(RmseProperty, SymmetricNonNegativeZeroIffEqual) {
  NormalStream rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(17), y(17);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng();
      y[i] = (trial % 5 == 0) ? x[i] : rng();
    }
    const auto a = SampledSeries::scalar(0.0, 0.01, x);
    const auto b = SampledSeries::scalar(0.0, 0.01, y);
    EXPECT_EQ(rmse(a, b), rmse(b, a));
    EXPECT_GE(rmse(a, b), 0.0);
    EXPECT_EQ(rmse(a, b) == 0.0, x == y);
  }
}

TEST(ForceCalibration, AmplifierChainRoundTrip) {
  const ForceCalibration cal;
  EXPECT_NEAR(cal.volts_per_newton(), 0.0005 * 5.0 * 600.0 / 22.2, 1e-15);
  EXPECT_NEAR(cal.to_force(cal.to_voltage(1.234)), 1.234, 1e-12);
  const double lsb = 3.3 / 4095.0;
  const double q = cal.quantize(cal.to_voltage(1.0));
  EXPECT_LE(std::abs(q - cal.to_voltage(1.0)), lsb / 2 + 1e-15);
  EXPECT_EQ(cal.quantize(10.0), 3.3);
  ForceCalibration bad;
  bad.gain = 0.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(NormalStream, DeterministicAndStandardized) {
  NormalStream a(42, 3), b(42, 3), c(42, 4);
  double sum = 0.0, sq = 0.0;
  bool differs = false;
  for (int i = 0; i < 200000; ++i) {
    const double x = a();
    ASSERT_EQ(x, b());
    differs |= x != c();
    sum += x;
    sq += x * x;
  }
  EXPECT_TRUE(differs);
  EXPECT_NEAR(sum / 200000, 0.0, 0.01);
  EXPECT_NEAR(sq / 200000, 1.0, 0.01);
}
