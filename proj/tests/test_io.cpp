#include <acuquant/config.hpp>
#include <acuquant/io.hpp>
#include <acuquant/pipeline.hpp>
#include <acuquant/report.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace acuquant;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("acuquant_io_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) { return detail::read_text(p); }

RunConfig lt_config(ManipulationType type, std::uint64_t seed, double duration = 20.0) {
  LiftThrustPattern p = type == ManipulationType::LTRF ? LiftThrustPattern::ltrf() : LiftThrustPattern::ltrd();
  p.duration = duration;
  p.proportion_jitter = 0.02;
  RunConfig cfg;
  cfg.seed = seed;
  cfg.simulate.profile = p;
  return cfg;
}

template <typename F>
void expect_kind(ErrorKind kind, F&& f) {
  try {
    f();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

}  // namespace

TEST(Table, RoundTripIsExact) {
  Table t;
  t.add("a", "m", {0.1, -0.0, 1e-300, 123456789.123456789, -2.5e17});
  t.add("b", "", {1.0 / 3.0, 2.0 / 3.0, std::nextafter(1.0, 2.0), 0.0, 5.0});
  const auto back = parse_table(format_table(t), "mem");
  ASSERT_EQ(back.names, t.names);
  ASSERT_EQ(back.units, t.units);
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    for (std::size_t k = 0; k < t.rows(); ++k) EXPECT_EQ(back.columns[i][k], t.columns[i][k]);
  }
  EXPECT_EQ(format_table(back), format_table(t));
}

TEST(Table, MalformedInput) {
  expect_kind(ErrorKind::Io, [] { parse_table("", "mem"); });
  expect_kind(ErrorKind::Io, [] { parse_table("a\tb[m]\n1\t2\n", "mem"); });
  expect_kind(ErrorKind::Io, [] { parse_table("a[m]\tb[m]\n1\n", "mem"); });
  expect_kind(ErrorKind::Io, [] { parse_table("a[m]\n1.5x\n", "mem"); });
  Table ragged;
  ragged.add("a", "", {1, 2});
  ragged.add("b", "", {1});
  expect_kind(ErrorKind::LengthMismatch, [&] { format_table(ragged); });
}

TEST(Session, RoundTrip) {
  const auto run = simulate_run(lt_config(ManipulationType::LTRF, 3));
  const auto dir = scratch("roundtrip");
  write_session(dir, run.session);
  EXPECT_EQ(read_session(dir), run.session);

  auto no_visual = run.session;
  no_visual.visual.reset();
  no_visual.label.reset();
  write_session(dir, no_visual);
  EXPECT_FALSE(fs::exists(dir / "visual.tsv"));
  EXPECT_EQ(read_session(dir), no_visual);
}

TEST(Session, TruthRoundTrip) {
  const auto run = simulate_run(lt_config(ManipulationType::LTRF, 4));
  const auto dir = scratch("truth");
  write_truth(dir, run.truth);
  const auto back = read_truth(dir);
  EXPECT_EQ(back.displacement, run.truth.displacement);
  EXPECT_EQ(back.omega, run.truth.omega);
  EXPECT_EQ(back.stages, run.truth.stages);
  ASSERT_EQ(back.forces.size(), run.truth.forces.size());
  EXPECT_EQ(back.forces[500].friction, run.truth.forces[500].friction);
  EXPECT_EQ(back.mass, run.truth.mass);
}

TEST(Session, TruncatedAndCorruptFiles) {
  const auto run = simulate_run(lt_config(ManipulationType::LTRF, 5));
  const auto dir = scratch("truncated");
  write_session(dir, run.session);
  auto text = slurp(dir / "imu.tsv");
  detail::write_text(dir / "imu.tsv", text.substr(0, text.size() / 2));
  expect_kind(ErrorKind::Io, [&] { read_session(dir); });

  write_session(dir, run.session);
  fs::remove(dir / "force.tsv");
  expect_kind(ErrorKind::Io, [&] { read_session(dir); });

  write_session(dir, run.session);
  auto meta = detail::read_json(dir / "session.json");
  meta["format_version"] = 99;
  write_json(dir / "session.json", meta);
  expect_kind(ErrorKind::Io, [&] { read_session(dir); });

  detail::write_text(dir / "session.json", "{not json");
  expect_kind(ErrorKind::Io, [&] { read_session(dir); });
  expect_kind(ErrorKind::Io, [&] { read_session(scratch("missing")); });
}

TEST(Config, DefaultsAndOverrides) {
  const auto c = run_config_from_json(nlohmann::json::object());
  EXPECT_EQ(c.seed, 0u);
  EXPECT_FALSE(c.simulate.profile.has_value());
  EXPECT_EQ(c.pipeline.fusion.thresholds.window, 3);

  const auto j = nlohmann::json::parse(R"({"seed": 9, "simulate": {"profile": {"type": "TRRD", "duration": 5}},
      "pipeline": {"fusion": {"mode": "imu_only", "q": 0.2}, "lt": {"margin": 7}}})");
  const auto d = run_config_from_json(j);
  EXPECT_EQ(d.seed, 9u);
  ASSERT_TRUE(d.simulate.profile.has_value());
  const auto& tw = std::get<TwirlPattern>(*d.simulate.profile);
  EXPECT_EQ(tw.label, ManipulationType::TRRD);
  EXPECT_DOUBLE_EQ(tw.left_fraction, 0.76);
  EXPECT_DOUBLE_EQ(tw.duration, 5.0);
  EXPECT_EQ(d.pipeline.fusion.mode, FusionMode::ImuOnly);
  EXPECT_DOUBLE_EQ(d.pipeline.fusion.q, 0.2);
  EXPECT_EQ(d.pipeline.lt.margin, 7u);
}

TEST(Config, RoundTripKeepsHash) {
  const auto j = nlohmann::json::parse(R"({"seed": 2, "simulate": {"profile": {"type": "LTRD"}},
      "pipeline": {"accel_bandwidth": 30, "manipulation": "LTRD"}})");
  const auto c = run_config_from_json(j);
  const auto again = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(again).dump(), to_json(c).dump());
  EXPECT_EQ(pipeline_hash(again.pipeline), pipeline_hash(c.pipeline));
  EXPECT_EQ(simulation_hash(again), simulation_hash(c));
  EXPECT_NE(pipeline_hash(c.pipeline), pipeline_hash(PipelineConfig{}));
}

TEST(Config, Rejections) {
  auto bad = [](const char* text) {
    expect_kind(ErrorKind::Config, [&] { run_config_from_json(nlohmann::json::parse(text)); });
  };
  bad(R"({"seeed": 1})");
  bad(R"({"seed": "one"})");
  bad(R"({"simulate": {"profile": {"duration": 3}}})");
  bad(R"({"simulate": {"profile": {"type": "XX"}}})");
  bad(R"({"simulate": {"profile": {"type": "TRRF", "proportions": [0.1, 0.2, 0.3, 0.4]}}})");
  bad(R"({"pipeline": {"fusion": {"mode": "three"}}})");
  bad(R"({"pipeline": {"fusion": {"window": 4}}})");
  bad(R"({"format_version": 2})");
  expect_kind(ErrorKind::Config, [] { simulate_run(RunConfig{}); });
}

TEST(Simulate, DeterministicBytes) {
  const auto cfg = lt_config(ManipulationType::LTRF, 7);
  const auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    const auto run = simulate_run(cfg);
    write_session(dir, run.session, {{"config_hash", simulation_hash(cfg)}});
    write_truth(dir, run.truth);
  }
  for (const char* f : {"session.json", "force.tsv", "imu.tsv", "visual.tsv", "truth.json", "truth.tsv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Simulate, FiveMinuteTwirlSampleCount) {
  TwirlPattern p = TwirlPattern::trrf();
  p.duration = 300.0;
  RunConfig cfg;
  cfg.simulate.profile = p;
  const auto run = simulate_run(cfg);
  EXPECT_EQ(run.session.force.size(), 30000u);
  EXPECT_EQ(run.session.accel.size(), 30000u);
  EXPECT_EQ(run.session.gyro.size(), 30000u);
  EXPECT_EQ(run.truth.stages.size(), 30000u);
}

TEST(Pipeline, LiftThrustReport) {
  const auto run = simulate_run(lt_config(ManipulationType::LTRF, 8));
  const PipelineConfig pc;
  const auto r = process_session(run.session, pc);
  EXPECT_GE(r.lt_cycles.size(), 4u);
  const auto rep = build_report(r, pipeline_hash(pc), "mem", &run.truth);
  EXPECT_GE(rep["cycle_count"].get<std::size_t>(), 4u);
  for (const char* stage : {"S1", "S3"}) {
    for (const char* f : {"proportion", "max_force", "rms_force", "rms_accel"}) {
      ASSERT_TRUE(rep["statistics"][stage].contains(f)) << stage << " " << f;
      EXPECT_TRUE(std::isfinite(rep["statistics"][stage][f]["mean"].get<double>()));
    }
  }
  EXPECT_LT(rep["metrics"]["displacement_rmse"].get<double>(), 2e-3);
  // Same inputs, same bytes.
  EXPECT_EQ(build_report(process_session(run.session, pc), pipeline_hash(pc), "mem", &run.truth).dump(), rep.dump());
  EXPECT_EQ(format_series(r), format_series(process_session(run.session, pc)));
}

TEST(Pipeline, ErrorsSurface) {
  auto run = simulate_run(lt_config(ManipulationType::LTRF, 9));
  auto unlabeled = run.session;
  unlabeled.label.reset();
  expect_kind(ErrorKind::Config, [&] { process_session(unlabeled, PipelineConfig{}); });
  PipelineConfig with_label;
  with_label.manipulation = ManipulationType::LTRF;
  EXPECT_NO_THROW(process_session(unlabeled, with_label));

  auto no_visual = run.session;
  no_visual.visual.reset();
  try {
    process_session(no_visual, PipelineConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingChannel);
    EXPECT_NE(std::string(e.what()).find("statefuse"), std::string::npos);
  }
  // The degraded mode runs and is flagged; slow lifts are invisible to the accel cue alone.
  PipelineConfig imu_only;
  imu_only.fusion.mode = FusionMode::ImuOnly;
  const auto tl = detect_states(condition_session(no_visual, imu_only), imu_only.fusion);
  EXPECT_TRUE(tl.imu_only);
  EXPECT_FALSE(tl.motion_intervals().empty());
}

TEST(Compare, ThrustVersusLift) {
  const PipelineConfig pc;
  std::vector<nlohmann::json> reports;
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    const auto run = simulate_run(lt_config(ManipulationType::LTRF, seed));
    reports.push_back(build_report(process_session(run.session, pc), pipeline_hash(pc), "mem"));
  }
  const auto cmp = compare_reports(reports, Grouping::Stage);
  bool found = false;
  for (const auto& t : cmp["tests"]) {
    if (t["feature"] == "proportion") {
      found = true;
      EXPECT_LT(t["p"].get<double>(), 0.05);
    }
  }
  EXPECT_TRUE(found);
  EXPECT_NEAR(cmp["groups"]["LTRF/S1"]["proportion"]["mean"].get<double>(), 0.25, 0.03);

  // A relabeled copy gives identical groups: F = 0, p = 1.
  auto twin = reports[0];
  twin["manipulation"] = "LTRD";
  const auto same = compare_reports({reports[0], twin}, Grouping::Manipulation);
  for (const auto& t : same["tests"]) {
    EXPECT_NEAR(t["F"].get<double>(), 0.0, 1e-12);
    EXPECT_GT(t["p"].get<double>(), 0.05);
  }
}

TEST(Compare, Refusals) {
  const PipelineConfig pc;
  const auto run = simulate_run(lt_config(ManipulationType::LTRF, 3));
  const auto rep = build_report(process_session(run.session, pc), pipeline_hash(pc), "mem");
  expect_kind(ErrorKind::DegenerateGroup, [&] { compare_reports({rep}, Grouping::Manipulation); });
  expect_kind(ErrorKind::DegenerateGroup, [&] { compare_reports({}, Grouping::Stage); });
  auto other = rep;
  other["config_hash"] = "0000000000000000";
  expect_kind(ErrorKind::Config, [&] { compare_reports({rep, other}, Grouping::Stage); });
  EXPECT_NO_THROW(compare_reports({rep, other}, Grouping::Stage, true));
}
