#ifndef ACUQUANT_REPORT_HPP
#define ACUQUANT_REPORT_HPP

// Run plumbing behind the command-line tool: simulating a configured session, report documents,
// tidy series tables and cross-report comparison.

#include <acuquant/analyze.hpp>
#include <acuquant/config.hpp>
#include <acuquant/io.hpp>
#include <acuquant/pipeline.hpp>

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace acuquant {

struct SimulatedRun {
  RecordingSession session;
  GroundTruthTrajectory truth;
};

inline SimulatedRun simulate_run(const RunConfig& cfg) {
  if (!cfg.simulate.profile) throw Error(ErrorKind::Config, "simulate", "config has no simulate.profile");
  const auto layers = default_layers();
  const auto& sim = cfg.simulate;
  SimulatedRun run;
  ManipulationType label{};
  if (const auto* lt = std::get_if<LiftThrustPattern>(&*sim.profile)) {
    auto p = *lt;
    p.seed = cfg.seed;
    label = p.label;
    run.truth = simulate_lifting_thrusting(lift_thrust_profile(p, sim.body, layers), sim.body, layers,
                                           sim.integration_step, p.duration);
  } else {
    auto p = std::get<TwirlPattern>(*sim.profile);
    p.seed = cfg.seed;
    label = p.label;
    run.truth = simulate_twirling(twirl_profile(p, sim.body, layers), sim.body, layers,
                                  layer_contacts(p.initial_depth, layers), sim.integration_step, p.duration);
  }
  ImuNoiseModel noise = sim.noise;
  noise.seed = cfg.seed;
  run.session = synthesize_sensors(run.truth, noise, sim.calibration, sim.hand_tremor, sim.visual);
  run.session.label = label;
  return run;
}

namespace detail {

inline const std::vector<std::pair<const char*, double StageFeatures::*>>& feature_fields() {
  static const std::vector<std::pair<const char*, double StageFeatures::*>> fields{
      {"proportion", &StageFeatures::proportion}, {"max_force", &StageFeatures::max_force},
      {"rms_force", &StageFeatures::rms_force},   {"rms_accel", &StageFeatures::rms_accel},
      {"rms_omega", &StageFeatures::rms_omega}};
  return fields;
}

inline nlohmann::json feature_rows(const std::vector<StageFeatures>& rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"cycle", r.cycle},
                          {"stage", std::string(to_string(r.stage))},
                          {"start", r.start},
                          {"end", r.end}};
    for (const auto& [name, field] : feature_fields()) {
      const double v = r.*field;
      row[name] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
    }
    out.push_back(row);
  }
  return out;
}

inline nlohmann::json summary(const std::vector<double>& v) {
  if (v.size() < 2) return {{"n", v.size()}, {"mean", nullptr}, {"sd", nullptr}};
  const auto ms = mean_sd(v);
  return {{"n", v.size()}, {"mean", ms.mean}, {"sd", ms.sd}};
}

}  // namespace detail

/// Report document for one processed session.
inline nlohmann::json build_report(const ProcessResult& r, const std::string& config_hash,
                                   const std::string& source, const GroundTruthTrajectory* truth = nullptr) {
  nlohmann::json rep = {{"format_version", kFormatVersion},
                        {"kind", "report"},
                        {"config_hash", config_hash},
                        {"source", source},
                        {"manipulation", std::string(to_string(r.manipulation))},
                        {"samples", r.axial_accel.size()},
                        {"rate", r.axial_accel.rate()}};
  auto cycles = nlohmann::json::array();
  for (const auto& c : r.lt_cycles) {
    cycles.push_back({{"ts", c.ts}, {"te", c.te}, {"ls", c.ls}, {"le", c.le}, {"next_ts", c.next_ts}});
  }
  for (const auto& c : r.tr_cycles) {
    cycles.push_back({{"left_start", c.left_start}, {"right_start", c.right_start},
                      {"next_left_start", c.next_left_start}});
  }
  rep["cycle_count"] = cycles.size();
  rep["cycles"] = cycles;
  rep["twirl_frequency"] = std::isfinite(r.twirl_frequency) ? nlohmann::json(r.twirl_frequency) : nlohmann::json();
  rep["motion_intervals"] = r.timeline.motion_intervals().size();
  rep["imu_only"] = r.timeline.imu_only;
  rep["features"] = detail::feature_rows(r.features.raw);
  rep["features_normalized"] = detail::feature_rows(r.features.normalized);

  nlohmann::json stats = nlohmann::json::object();
  for (Stage s : {Stage::S1, Stage::S3, Stage::LeftTwirl, Stage::RightTwirl}) {
    const auto rows = r.features.rows(s);
    if (rows.empty()) continue;
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [name, field] : detail::feature_fields()) {
      std::vector<double> v;
      for (const auto& row : rows) {
        if (std::isfinite(row.*field)) v.push_back(row.*field);
      }
      if (!v.empty()) per[name] = detail::summary(v);
    }
    stats[std::string(to_string(s))] = per;
  }
  rep["statistics"] = stats;

  if (truth) {
    const auto naive = naive_double_integrate(r.axial_accel);
    rep["metrics"] = {{"displacement_rmse", rmse(r.kinematics.displacement, truth->displacement)},
                      {"naive_displacement_rmse", rmse(naive.displacement, truth->displacement)}};
  }
  return rep;
}

/// Tall table of the per-session parameter series: series, index, time, value.
inline std::string format_series(const ProcessResult& r) {
  std::vector<std::pair<std::string, const SampledSeries*>> named{
      {"force", &r.conditioned.force},        {"axial_accel", &r.axial_accel},
      {"velocity", &r.kinematics.velocity},   {"displacement", &r.kinematics.displacement},
      {"axial_rate", &r.omega},               {"angle", &r.angle},
      {"motion_confidence", &r.timeline.confidence}};
  std::string out = "series\tindex\ttime[s]\tvalue\n";
  for (const auto& [name, s] : named) {
    for (std::size_t k = 0; k < s->size(); ++k) {
      out += name + "\t" + std::to_string(k) + "\t" + detail::format_double(s->time(k)) + "\t" +
             detail::format_double((*s)(k)) + "\n";
    }
  }
  for (std::size_t k = 0; k < r.timeline.confidence.size(); ++k) {
    out += "motion_state\t" + std::to_string(k) + "\t" + detail::format_double(r.timeline.confidence.time(k)) +
           "\t" + (r.timeline.state_at(k) == MotionState::Motion ? "1" : "0") + "\n";
  }
  return out;
}

enum class Grouping { Stage, Manipulation };

/// Welch ANOVA per feature across groups of cycles pooled from several reports.
///
/// Stage grouping compares the stages of each manipulation (thrust vs lift, left vs right);
/// manipulation grouping compares manipulations sharing a stage (LTRF vs LTRD thrust). A feature
/// whose groups fail the test's preconditions is listed with its reason instead of a p-value.
inline nlohmann::json compare_reports(const std::vector<nlohmann::json>& reports, Grouping grouping,
                                      bool allow_mixed = false, double alpha = 0.05) {
  if (reports.empty()) throw Error(ErrorKind::DegenerateGroup, "compare", "no reports given");
  std::string hash;
  for (const auto& rep : reports) {
    if (rep.value("kind", "") != "report") throw Error(ErrorKind::Io, "compare", "input is not a report");
    const auto h = rep.value("config_hash", "");
    if (hash.empty()) hash = h;
    if (h != hash && !allow_mixed) {
      throw Error(ErrorKind::Config, "compare", "reports were processed under different config hashes");
    }
  }

  // group name -> feature -> values
  std::map<std::string, std::map<std::string, std::vector<double>>> groups;
  std::map<std::string, std::vector<std::string>> families;  // test family -> group names
  for (const auto& rep : reports) {
    const std::string m = rep.at("manipulation");
    for (const auto& row : rep.at("features")) {
      const std::string stage = row.at("stage");
      const std::string name = m + "/" + stage;
      const std::string family = grouping == Grouping::Stage ? m : stage;
      auto& fam = families[family];
      if (std::find(fam.begin(), fam.end(), name) == fam.end()) fam.push_back(name);
      for (const auto& [feature, field] : detail::feature_fields()) {
        (void)field;
        if (!row.at(feature).is_null()) groups[name][feature].push_back(row.at(feature).get<double>());
      }
    }
  }

  nlohmann::json out = {{"format_version", kFormatVersion}, {"kind", "comparison"},
                        {"grouping", grouping == Grouping::Stage ? "stage" : "manipulation"},
                        {"config_hash", hash},            {"reports", reports.size()},
                        {"alpha", alpha}};
  nlohmann::json table = nlohmann::json::object();
  for (const auto& [name, features] : groups) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [feature, values] : features) per[feature] = detail::summary(values);
    table[name] = per;
  }
  out["groups"] = table;

  auto tests = nlohmann::json::array();
  bool any_family = false;
  for (auto& [family, names] : families) {
    std::sort(names.begin(), names.end());
    if (names.size() < 2) continue;
    any_family = true;
    for (const auto& [feature, field] : detail::feature_fields()) {
      (void)field;
      std::vector<std::vector<double>> samples;
      for (const auto& n : names) {
        const auto it = groups[n].find(feature);
        if (it != groups[n].end()) samples.push_back(it->second);
      }
      if (samples.size() < 2) continue;
      nlohmann::json t = {{"family", family}, {"feature", feature}, {"groups", names}};
      try {
        const auto w = welch_anova(samples);
        t["F"] = w.F;
        t["p"] = w.p;
        t["df1"] = w.df1;
        t["df2"] = w.df2;
        t["significant"] = w.p < alpha;
      } catch (const Error& e) {
        t["p"] = nullptr;
        t["error"] = e.what();
      }
      tests.push_back(t);
    }
  }
  if (!any_family) throw Error(ErrorKind::DegenerateGroup, "compare", "need at least two groups to compare");
  out["tests"] = tests;
  return out;
}

}  // namespace acuquant

#endif  // ACUQUANT_REPORT_HPP
