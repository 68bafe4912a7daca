#include <acuquant/cycles.hpp>
#include <acuquant/profiles.hpp>
#include <acuquant/random.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace acuquant;

namespace {

struct LtRun {
  GroundTruthTrajectory truth;
  RecordingSession session;
  SampledSeries axial;
};

LtRun lift_thrust_run(LiftThrustPattern pattern, std::uint64_t seed) {
  pattern.duration = 20.0;
  pattern.seed = seed;
  pattern.proportion_jitter = 0.02;
  const NeedleBody body;
  const auto layers = default_layers();
  LtRun run;
  run.truth = simulate_lifting_thrusting(lift_thrust_profile(pattern, body, layers), body, layers, 1e-4,
                                         pattern.duration);
  ImuNoiseModel noise;
  noise.seed = seed;
  run.session = synthesize_sensors(run.truth, noise, ForceCalibration{}, 0.01);
  const auto track = estimate_attitude(run.session.accel, run.session.gyro);
  run.axial = axial_projection(run.session.accel, track.q, Eigen::Vector3d(0, 0, -1));
  return run;
}

std::vector<std::size_t> stage_starts(const std::vector<Stage>& stages, Stage s, bool entering) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k < stages.size(); ++k) {
    if (entering && stages[k] == s && stages[k - 1] != s) out.push_back(k);
    if (!entering && stages[k - 1] == s && stages[k] != s) out.push_back(k);
  }
  return out;
}

long nearest_offset(const std::vector<std::size_t>& truth, std::size_t x) {
  long best = 1 << 30;
  for (std::size_t t : truth) {
    const long d = static_cast<long>(x) - static_cast<long>(t);
    if (std::abs(d) < std::abs(best)) best = d;
  }
  return best;
}

SampledSeries triangle_angle(double period, double amplitude, double duration, double dt) {
  std::vector<double> x;
  for (double t = 0.0; t <= duration + 1e-9; t += dt) {
    const double phase = std::fmod(t, period) / period;
    x.push_back(amplitude * (phase < 0.5 ? 1.0 - 4.0 * phase : -3.0 + 4.0 * phase));
  }
  return SampledSeries::scalar(0.0, dt, x, "rad");
}

struct TwirlSession {
  SampledSeries angle;
  SampledSeries omega;
};

TwirlSession twirl_run(TwirlPattern pattern, std::uint64_t seed) {
  pattern.duration = 20.0;
  pattern.seed = seed;
  pattern.proportion_jitter = 0.02;
  const NeedleBody body;
  const auto layers = default_layers();
  const auto truth = simulate_twirling(twirl_profile(pattern, body, layers), body, layers,
                                       layer_contacts(pattern.initial_depth, layers), 1e-4, pattern.duration);
  ImuNoiseModel noise;
  noise.seed = seed;
  const auto session = synthesize_sensors(truth, noise, ForceCalibration{}, 0.01);
  const auto track = estimate_attitude(session.accel, session.gyro);
  return {roll_angle_series(track.q, track.q.front(), track.t0, track.dt), axial_rate(session.gyro, track)};
}

}  // namespace

TEST(FindPeaks, ProminenceAndDistance) {
  const std::vector<double> x{0, 2, 1, 3, 0, 1, 0};
  EXPECT_EQ(detail::find_peaks(x, 0.0, 1), (std::vector<std::size_t>{1, 3, 5}));
  EXPECT_EQ(detail::find_peaks(x, 1.5, 1), (std::vector<std::size_t>{3}));
  EXPECT_EQ(detail::find_peaks(x, 0.0, 3), (std::vector<std::size_t>{3}));
  const std::vector<double> plateau{0, 1, 1, 1, 0};
  EXPECT_EQ(detail::find_peaks(plateau, 0.0, 1), (std::vector<std::size_t>{2}));
}

TEST(LtPoints, SimulatedBoundariesWithinThreeSamples) {
  const auto run = lift_thrust_run(LiftThrustPattern::ltrf(), 3);
  const auto timeline = detect_states(run.session, FusionConfig::short_stroke());
  const auto cycles = detect_lt_points(run.axial, timeline);
  const auto& st = run.truth.stages;
  const auto ts = stage_starts(st, Stage::S1, true), te = stage_starts(st, Stage::S1, false);
  const auto ls = stage_starts(st, Stage::S3, true), le = stage_starts(st, Stage::S3, false);
  EXPECT_GE(cycles.size(), ts.size() - 1);
  for (const auto& c : cycles) {
    EXPECT_LE(std::abs(nearest_offset(ts, c.ts)), 3);
    EXPECT_LE(std::abs(nearest_offset(te, c.te)), 3);
    EXPECT_LE(std::abs(nearest_offset(ls, c.ls)), 3);
    EXPECT_LE(std::abs(nearest_offset(le, c.le)), 3);
  }
}

TEST(LtPoints, ZeroAccelHasNoCycles) {
  const SampledSeries zero = SampledSeries::scalar(0, 0.01, std::vector<double>(500, 0.0));
  const auto tl = timeline_from_flags(std::vector<bool>(500, false), 0, 0.01);
  try {
    detect_lt_points(zero, tl);
    FAIL() << "expected NoCyclesFound";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoCyclesFound);
  }
}

TEST(LtPoints, SingleThrustIsIncomplete) {
  std::vector<double> a(400, 0.0);
  std::vector<bool> moving(400, false);
  for (std::size_t j = 0; j < 25; ++j) {
    a[100 + j] = std::cos(kPi * (j + 0.5) / 25.0);
    moving[100 + j] = true;
  }
  try {
    detect_lt_points(SampledSeries::scalar(0, 0.01, a), timeline_from_flags(moving, 0, 0.01));
    FAIL() << "expected NoCyclesFound";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoCyclesFound);
  }
}

TEST(TrPoints, TriangleWave) {
  const auto angle = triangle_angle(0.5, kPi / 2, 5.0, 0.01);
  const auto cycles = detect_tr_points(angle);
  ASSERT_GE(cycles.size(), 8u);
  for (const auto& c : cycles) {
    EXPECT_NEAR(static_cast<double>(c.length()), 50.0, 1.0);
    EXPECT_GT(angle(c.left_start), angle(c.right_start));
  }
  EXPECT_NEAR(twirl_frequency(cycles, 0.01), 2.0, 0.05);
  const auto table = extract_tr_features(angle, cycles);
  for (const auto& r : table.raw) EXPECT_NEAR(r.proportion, 0.5, 0.02);
}

TEST(TrPoints, MonotoneAngleHasNoCycles) {
  std::vector<double> x(300);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = 0.01 * static_cast<double>(k);
  EXPECT_THROW(detect_tr_points(SampledSeries::scalar(0, 0.01, x)), Error);
}

TEST(TrPoints, SimulatedTrrfProportions) {
  const auto run = twirl_run(TwirlPattern::trrf(), 5);
  const auto table = extract_tr_features(run.omega, detect_tr_points(run.angle));
  double left = 0.0, right = 0.0;
  const auto l = table.rows(Stage::LeftTwirl), r = table.rows(Stage::RightTwirl);
  for (const auto& x : l) left += x.proportion / static_cast<double>(l.size());
  for (const auto& x : r) right += x.proportion / static_cast<double>(r.size());
  EXPECT_NEAR(left, 0.33, 0.03);
  EXPECT_NEAR(right, 0.67, 0.03);
}

TEST(TrPoints, SimulatedTrrdFastRightTwirl) {
  const auto run = twirl_run(TwirlPattern::trrd(), 6);
  const auto table = extract_tr_features(run.omega, detect_tr_points(run.angle));
  double p_right = 0.0, w_left = 0.0, w_right = 0.0;
  const auto l = table.rows(Stage::LeftTwirl), r = table.rows(Stage::RightTwirl);
  for (const auto& x : r) {
    p_right += x.proportion / static_cast<double>(r.size());
    w_right += x.rms_omega / static_cast<double>(r.size());
  }
  for (const auto& x : l) w_left += x.rms_omega / static_cast<double>(l.size());
  EXPECT_NEAR(p_right, 0.24, 0.03);
  EXPECT_GT(w_right, w_left);
}

TEST(LtFeatures, SyntheticCycle) {
  // 1 s cycle: thrust 25, rest 15, lift 48, rest 12 samples.
  const std::size_t n = 200;
  std::vector<double> force(n), accel(n, 0.5);
  for (std::size_t k = 0; k < n; ++k) force[k] = k < 125 ? -1.5 : 2.0 * std::sin(2 * kPi * (k - 140) / 24.0);
  RecordingSession s;
  s.force = SampledSeries::scalar(0, 0.01, force, "N");
  KinematicEstimate est;
  est.accel = SampledSeries::scalar(0, 0.01, accel);
  const LtCycle c{100, 125, 140, 188, 200};
  const auto table = extract_lt_features(s, est, {c});
  const auto thrust = table.rows(Stage::S1).at(0);
  const auto lift = table.rows(Stage::S3).at(0);
  EXPECT_NEAR(thrust.proportion, 0.25, 1e-12);
  EXPECT_NEAR(lift.proportion, 0.48, 1e-12);
  EXPECT_NEAR(thrust.max_force, 1.5, 1e-12);
  EXPECT_NEAR(thrust.rms_force, 1.5, 1e-12);
  EXPECT_NEAR(lift.rms_force, 2.0 / std::sqrt(2.0), 1e-3);
  EXPECT_NEAR(thrust.rms_accel, 0.5, 1e-12);
  EXPECT_THROW(extract_lt_features(s, est, {}), Error);
}

TEST(TrFeatures, ConstantRate) {
  const SampledSeries omega = SampledSeries::scalar(0, 0.01, std::vector<double>(100, -3.0));
  const auto table = extract_tr_features(omega, {TrCycle{0, 40, 100}});
  for (const auto& r : table.raw) EXPECT_NEAR(r.rms_omega, 3.0, 1e-12);
  EXPECT_NEAR(table.raw[0].proportion, 0.4, 1e-12);
}

TEST(CyclesProperty, StagesTileAndProportionsSumToOne) {
  NormalStream rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t at = static_cast<std::size_t>(std::abs(rng()) * 100);
    LtCycle c;
    c.ts = at;
    c.te = c.ts + 1 + static_cast<std::size_t>(std::abs(rng()) * 40);
    c.ls = c.te + 1 + static_cast<std::size_t>(std::abs(rng()) * 40);
    c.le = c.ls + 1 + static_cast<std::size_t>(std::abs(rng()) * 40);
    c.next_ts = c.le + 1 + static_cast<std::size_t>(std::abs(rng()) * 40);
    const auto len = c.stage_lengths();
    ASSERT_EQ(len[0] + len[1] + len[2] + len[3], c.length());
    const auto p = c.proportions();
    ASSERT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, 1e-9);
    for (double x : p) {
      ASSERT_GT(x, 0.0);
      ASSERT_LT(x, 1.0);
    }
  }
}

TEST(CyclesProperty, FeaturesIndependentOfCycleOrder) {
  const auto run = lift_thrust_run(LiftThrustPattern::ltrf(), 9);
  const auto timeline = detect_states(run.session, FusionConfig::short_stroke());
  const auto est = segmented_integrate(run.axial, timeline, IntegrationOptions::rest_to_rest());
  auto cycles = detect_lt_points(run.axial, timeline);
  const auto forward = extract_lt_features(run.session, est, cycles);
  std::reverse(cycles.begin(), cycles.end());
  const auto backward = extract_lt_features(run.session, est, cycles);
  ASSERT_EQ(forward.raw.size(), backward.raw.size());
  const std::size_t m = forward.raw.size();
  for (std::size_t i = 0; i < m; i += 2) {
    // Row pairs (thrust, lift) appear in reverse cycle order.
    const auto& f = forward.raw[i];
    const auto& b = backward.raw[m - 2 - i];
    EXPECT_EQ(f.start, b.start);
    EXPECT_EQ(f.proportion, b.proportion);
    EXPECT_EQ(f.max_force, b.max_force);
    EXPECT_EQ(f.rms_force, b.rms_force);
    EXPECT_EQ(f.rms_accel, b.rms_accel);
  }
}

TEST(CyclesProperty, LtrfThrustShorterThanLtrd) {
  auto mean_f1 = [](const LiftThrustPattern& p, Stage stage) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto run = lift_thrust_run(p, seed);
      const auto timeline = detect_states(run.session, FusionConfig::short_stroke());
      const auto est = segmented_integrate(run.axial, timeline, IntegrationOptions::rest_to_rest());
      for (const auto& r : extract_lt_features(run.session, est, detect_lt_points(run.axial, timeline)).rows(stage)) {
        sum += r.proportion;
        ++count;
      }
    }
    return sum / static_cast<double>(count);
  };
  const double ltrf_thrust = mean_f1(LiftThrustPattern::ltrf(), Stage::S1);
  const double ltrd_thrust = mean_f1(LiftThrustPattern::ltrd(), Stage::S1);
  EXPECT_NEAR(ltrf_thrust, 0.25, 0.03);
  EXPECT_NEAR(ltrd_thrust, 0.52, 0.03);
  EXPECT_LT(ltrf_thrust, ltrd_thrust);
}
