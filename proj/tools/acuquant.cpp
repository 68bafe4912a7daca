// acuquant: simulate, process, compare, allan and calibrate subcommands.

#include <acuquant/analyze.hpp>
#include <acuquant/config.hpp>
#include <acuquant/io.hpp>
#include <acuquant/pipeline.hpp>
#include <acuquant/report.hpp>
#include <acuquant/simulate.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace acuquant;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

RunConfig load_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

void cmd_simulate(const Globals& g, const std::string& out_opt) {
  const RunConfig cfg = load_config(g);
  const fs::path out = out_opt.empty() ? fs::path(cfg.output_dir) : fs::path(out_opt);
  const auto run = simulate_run(cfg);
  const auto hash = simulation_hash(cfg);
  write_session(out, run.session, {{"config_hash", hash}, {"seed", cfg.seed}});
  write_truth(out, run.truth);
  write_json(out / "config.json", to_json(cfg));
  std::printf("simulated %s: %zu samples at %.0f Hz -> %s (config %s)\n",
              std::string(to_string(*run.session.label)).c_str(), run.session.force.size(),
              run.session.force.rate(), out.string().c_str(), hash.c_str());
}

void cmd_process(const Globals& g, const std::string& session_dir, const std::string& out_opt) {
  const RunConfig cfg = load_config(g);
  const auto session = read_session(session_dir);
  std::optional<GroundTruthTrajectory> truth;
  if (fs::exists(fs::path(session_dir) / "truth.json")) truth = read_truth(session_dir);
  const auto result = process_session(session, cfg.pipeline);
  const auto hash = pipeline_hash(cfg.pipeline);
  const auto report = build_report(result, hash, fs::path(session_dir).filename().string(),
                                   truth ? &*truth : nullptr);
  const fs::path out = out_opt.empty() ? fs::path(session_dir) / "report" : fs::path(out_opt);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::Io, "cli", "cannot create " + out.string());
  write_json(out / "report.json", report);
  detail::write_text(out / "series.tsv", format_series(result));
  std::printf("%s: %zu cycles, %zu motion intervals", std::string(to_string(result.manipulation)).c_str(),
              report["cycle_count"].get<std::size_t>(), report["motion_intervals"].get<std::size_t>());
  if (report.contains("metrics")) {
    std::printf(", displacement RMSE %.3f mm (naive %.1f mm)",
                1e3 * report["metrics"]["displacement_rmse"].get<double>(),
                1e3 * report["metrics"]["naive_displacement_rmse"].get<double>());
  }
  std::printf(" -> %s\n", out.string().c_str());
}

std::string mean_sd_cell(const nlohmann::json& s) {
  if (s.is_null() || s["mean"].is_null()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g+-%.3g", s["mean"].get<double>(), s["sd"].get<double>());
  return buf;
}

void cmd_compare(const std::vector<std::string>& inputs, const std::string& grouping, bool force,
                 const std::string& out) {
  std::vector<nlohmann::json> reports;
  for (const auto& in : inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) p /= "report.json";
    reports.push_back(detail::read_json(p));
  }
  const auto g = grouping == "manipulation" ? Grouping::Manipulation : Grouping::Stage;
  const auto cmp = compare_reports(reports, g, force);

  const char* features[] = {"proportion", "max_force", "rms_force", "rms_accel", "rms_omega"};
  std::printf("%-18s %5s", "group", "n");
  for (const char* f : features) std::printf(" %18s", f);
  std::printf("\n");
  for (const auto& [name, per] : cmp["groups"].items()) {
    const auto n = per.contains("proportion") ? per["proportion"]["n"].get<std::size_t>() : 0;
    std::printf("%-18s %5zu", name.c_str(), n);
    for (const char* f : features) {
      std::printf(" %18s", per.contains(f) ? mean_sd_cell(per[f]).c_str() : "-");
    }
    std::printf("\n");
  }
  std::printf("\n%-12s %-12s %12s %12s\n", "family", "feature", "F", "p");
  for (const auto& t : cmp["tests"]) {
    if (t["p"].is_null()) {
      std::printf("%-12s %-12s %12s %12s  (%s)\n", t["family"].get<std::string>().c_str(),
                  t["feature"].get<std::string>().c_str(), "-", "-", t["error"].get<std::string>().c_str());
    } else {
      std::printf("%-12s %-12s %12.4g %12.4g%s\n", t["family"].get<std::string>().c_str(),
                  t["feature"].get<std::string>().c_str(), t["F"].get<double>(), t["p"].get<double>(),
                  t["significant"].get<bool>() ? "  *" : "");
    }
  }
  if (!out.empty()) write_json(out, cmp);
}

void print_noise(const char* name, const NoiseCoefficients& c, const char* rw_unit, const char* bi_unit) {
  std::printf("%-6s random walk [%s]:", name, rw_unit);
  for (double v : c.random_walk) std::printf(" %10.4g", v);
  std::printf("\n%-6s bias instability [%s]:", name, bi_unit);
  for (double v : c.bias_instability) std::printf(" %10.4g", v);
  std::printf("\n%-6s -1/2 slope:", name);
  for (double v : c.slope) std::printf(" %8.3f", v);
  std::printf("\n");
}

void cmd_allan(const Globals& g, const std::string& session_dir, double synthetic_seconds, const std::string& out) {
  SampledSeries accel, gyro;
  if (synthetic_seconds > 0.0) {
    const RunConfig cfg = load_config(g);
    const auto& nm = cfg.simulate.noise;
    const double dt = 1.0 / kImuRate;
    const auto n = static_cast<std::size_t>(std::llround(synthetic_seconds / dt));
    std::vector<double> a(n * 3), w(n * 3);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto an = detail::imu_axis_noise(n, dt, units::ug_per_rthz(nm.accel_vrw[c]),
                                             units::mg(nm.accel_bias_instability[c]), nm.bias_correlation_time,
                                             cfg.seed, detail::kAccelWhite + c, detail::kAccelBias + c);
      const auto gn = detail::imu_axis_noise(n, dt, units::deg_per_rthour(nm.gyro_arw[c]),
                                             units::deg_per_hour(nm.gyro_bias_instability[c]),
                                             nm.bias_correlation_time, cfg.seed, detail::kGyroWhite + c,
                                             detail::kGyroBias + c);
      for (std::size_t k = 0; k < n; ++k) {
        a[k * 3 + c] = (c == 2 ? kGravity : 0.0) + an[k];
        w[k * 3 + c] = gn[k];
      }
    }
    accel = SampledSeries(0.0, dt, 3, std::move(a), "m/s^2");
    gyro = SampledSeries(0.0, dt, 3, std::move(w), "rad/s");
  } else {
    if (session_dir.empty()) throw Error(ErrorKind::Config, "cli", "allan needs a session or --synthetic");
    const auto s = read_session(session_dir);
    accel = s.accel;
    gyro = s.gyro;
  }
  const auto ca = allan_deviation(accel), cg = allan_deviation(gyro);
  print_noise("accel", fit_noise_coeffs(ca, SensorKind::Accel), "ug/rtHz", "mg");
  print_noise("gyro", fit_noise_coeffs(cg, SensorKind::Gyro), "deg/rth", "deg/h");
  if (!out.empty()) {
    Table t;
    t.add("tau", "s", ca.taus);
    const char* axes[] = {"x", "y", "z"};
    for (std::size_t c = 0; c < 3; ++c) t.add(std::string("accel_") + axes[c], "m/s^2", ca.adev[c]);
    for (std::size_t c = 0; c < 3; ++c) t.add(std::string("gyro_") + axes[c], "rad/s", cg.adev[c]);
    write_table(out, t);
  }
}

void cmd_calibrate(const std::string& sweep_path) {
  const auto t = read_calibration_sweep(sweep_path);
  CalibrationCurve curve{t.column("force"), t.column("voltage"), 1};
  const double e = nonlinearity_error(curve);
  std::printf("nonlinearity %.4f%% of full-scale output (%zu points)\n", 100.0 * e, t.rows());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acuquant: needle manipulation quantification toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "run configuration (JSON)");
  app.add_option("--seed", g.seed, "override the configured seed");

  auto* sim = app.add_subcommand("simulate", "simulate a configured session and its ground truth");
  std::string sim_out;
  sim->add_option("--out", sim_out, "output directory (default: config output_dir)");

  auto* proc = app.add_subcommand("process", "run the processing chain and write a report");
  std::string session_dir, proc_out;
  proc->add_option("session", session_dir, "session directory")->required();
  proc->add_option("--out", proc_out, "report directory (default: <session>/report)");

  auto* cmp = app.add_subcommand("compare", "Welch ANOVA across reports");
  std::vector<std::string> reports;
  std::string grouping = "stage", cmp_out;
  bool force = false;
  cmp->add_option("reports", reports, "report files or directories")->required();
  cmp->add_option("--group", grouping, "stage or manipulation")->check(CLI::IsMember({"stage", "manipulation"}));
  cmp->add_flag("--force", force, "allow reports with different config hashes");
  cmp->add_option("--out", cmp_out, "write the comparison JSON here");

  auto* allan = app.add_subcommand("allan", "Allan deviation and noise coefficients");
  std::string allan_session, allan_out;
  double synthetic = 0.0;
  allan->add_option("session", allan_session, "static session directory");
  allan->add_option("--synthetic", synthetic, "seconds of synthetic static log from the noise model");
  allan->add_option("--out", allan_out, "write the curve table here");

  auto* cal = app.add_subcommand("calibrate", "nonlinearity of a force calibration sweep");
  std::string sweep;
  cal->add_option("sweep", sweep, "table with force[N] and voltage[V] columns")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) cmd_simulate(g, sim_out);
    if (*proc) cmd_process(g, session_dir, proc_out);
    if (*cmp) cmd_compare(reports, grouping, force, cmp_out);
    if (*allan) cmd_allan(g, allan_session, synthetic, allan_out);
    if (*cal) cmd_calibrate(sweep);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
