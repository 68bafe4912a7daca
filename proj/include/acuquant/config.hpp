#ifndef ACUQUANT_CONFIG_HPP
#define ACUQUANT_CONFIG_HPP

// Run configuration as JSON. Every section is optional and falls back to the library defaults;
// unknown keys and wrongly typed values are ConfigErrors.

#include <acuquant/io.hpp>
#include <acuquant/pipeline.hpp>
#include <acuquant/profiles.hpp>
#include <acuquant/simulate.hpp>

#include <json.hpp>

#include <initializer_list>
#include <optional>
#include <string>
#include <variant>

namespace acuquant {

using Profile = std::variant<LiftThrustPattern, TwirlPattern>;

struct SimulationConfig {
  std::optional<Profile> profile;
  double integration_step = 1e-4;  // s
  double hand_tremor = 0.01;       // m/s^2, stationary stages
  ImuNoiseModel noise;
  VisualModel visual;
  ForceCalibration calibration;
  NeedleBody body;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  SimulationConfig simulate;
  PipelineConfig pipeline;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "config", where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::Config, "config", "unknown key " + where + "." + key);
  }
}

template <typename T>
void take(const json& j, const char* key, T& field, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Config, "config", "bad value for " + where + "." + key);
  }
}

inline void take_manipulation(const json& j, const char* key, ManipulationType& out, const std::string& where) {
  if (!j.contains(key)) return;
  std::string s;
  take(j, key, s, where);
  const auto m = parse_manipulation(s);
  if (!m) throw Error(ErrorKind::Config, "config", where + "." + key + " must be LTRF, LTRD, TRRF or TRRD");
  out = *m;
}

inline Profile profile_from_json(const json& j) {
  check_keys(j, "simulate.profile",
             {"type", "cycle_period", "proportions", "left_fraction", "amplitude", "initial_depth", "lead_in",
              "duration", "proportion_jitter"});
  if (!j.contains("type")) throw Error(ErrorKind::Config, "config", "simulate.profile.type is required");
  ManipulationType type = ManipulationType::LTRF;
  take_manipulation(j, "type", type, "simulate.profile");
  const std::string w = "simulate.profile";
  if (is_lifting_thrusting(type)) {
    if (j.contains("left_fraction")) throw Error(ErrorKind::Config, "config", "left_fraction is for twirling");
    auto p = type == ManipulationType::LTRF ? LiftThrustPattern::ltrf() : LiftThrustPattern::ltrd();
    take(j, "cycle_period", p.cycle_period, w);
    take(j, "proportions", p.proportions, w);
    take(j, "amplitude", p.amplitude, w);
    take(j, "initial_depth", p.initial_depth, w);
    take(j, "lead_in", p.lead_in, w);
    take(j, "duration", p.duration, w);
    take(j, "proportion_jitter", p.proportion_jitter, w);
    return p;
  }
  if (j.contains("proportions")) throw Error(ErrorKind::Config, "config", "proportions are for lifting-thrusting");
  auto p = type == ManipulationType::TRRF ? TwirlPattern::trrf() : TwirlPattern::trrd();
  take(j, "cycle_period", p.cycle_period, w);
  take(j, "left_fraction", p.left_fraction, w);
  take(j, "amplitude", p.amplitude, w);
  take(j, "initial_depth", p.initial_depth, w);
  take(j, "lead_in", p.lead_in, w);
  take(j, "duration", p.duration, w);
  take(j, "proportion_jitter", p.proportion_jitter, w);
  return p;
}

inline json profile_to_json(const Profile& profile) {
  if (const auto* p = std::get_if<LiftThrustPattern>(&profile)) {
    return {{"type", std::string(to_string(p->label))}, {"cycle_period", p->cycle_period},
            {"proportions", p->proportions},            {"amplitude", p->amplitude},
            {"initial_depth", p->initial_depth},        {"lead_in", p->lead_in},
            {"duration", p->duration},                  {"proportion_jitter", p->proportion_jitter}};
  }
  const auto& p = std::get<TwirlPattern>(profile);
  return {{"type", std::string(to_string(p.label))}, {"cycle_period", p.cycle_period},
          {"left_fraction", p.left_fraction},        {"amplitude", p.amplitude},
          {"initial_depth", p.initial_depth},        {"lead_in", p.lead_in},
          {"duration", p.duration},                  {"proportion_jitter", p.proportion_jitter}};
}

inline void noise_from_json(const json& j, ImuNoiseModel& n) {
  const std::string w = "simulate.noise";
  check_keys(j, w, {"accel_vrw", "accel_bias_instability", "gyro_arw", "gyro_bias_instability", "bias_correlation_time"});
  take(j, "accel_vrw", n.accel_vrw, w);
  take(j, "accel_bias_instability", n.accel_bias_instability, w);
  take(j, "gyro_arw", n.gyro_arw, w);
  take(j, "gyro_bias_instability", n.gyro_bias_instability, w);
  take(j, "bias_correlation_time", n.bias_correlation_time, w);
}

inline json noise_to_json(const ImuNoiseModel& n) {
  return {{"accel_vrw", n.accel_vrw},
          {"accel_bias_instability", n.accel_bias_instability},
          {"gyro_arw", n.gyro_arw},
          {"gyro_bias_instability", n.gyro_bias_instability},
          {"bias_correlation_time", n.bias_correlation_time}};
}

inline void fusion_from_json(const json& j, FusionConfig& f) {
  const std::string w = "pipeline.fusion";
  check_keys(j, w,
             {"mode", "window", "visual_window", "tau_acc", "tau_vis", "decision_threshold", "hysteresis",
              "min_state_duration", "q", "r", "calibration_window", "calibration_factor",
              "visual_calibration_factor", "smooth"});
  if (j.contains("mode")) {
    std::string mode;
    take(j, "mode", mode, w);
    if (mode == "two_channel") {
      f.mode = FusionMode::TwoChannel;
    } else if (mode == "imu_only") {
      f.mode = FusionMode::ImuOnly;
    } else {
      throw Error(ErrorKind::Config, "config", "pipeline.fusion.mode must be two_channel or imu_only");
    }
  }
  take(j, "window", f.thresholds.window, w);
  take(j, "visual_window", f.thresholds.visual_window, w);
  take(j, "tau_acc", f.thresholds.tau_acc, w);
  take(j, "tau_vis", f.thresholds.tau_vis, w);
  take(j, "decision_threshold", f.thresholds.decision_threshold, w);
  take(j, "hysteresis", f.thresholds.hysteresis, w);
  take(j, "min_state_duration", f.thresholds.min_state_duration, w);
  take(j, "q", f.q, w);
  if (j.contains("r")) {
    std::array<double, 2> r{};
    take(j, "r", r, w);
    f.r = Eigen::Vector2d(r[0], r[1]).asDiagonal();
  }
  take(j, "calibration_window", f.calibration_window, w);
  take(j, "calibration_factor", f.calibration_factor, w);
  take(j, "visual_calibration_factor", f.visual_calibration_factor, w);
  take(j, "smooth", f.smooth, w);
}

inline json fusion_to_json(const FusionConfig& f) {
  return {{"mode", f.mode == FusionMode::TwoChannel ? "two_channel" : "imu_only"},
          {"window", f.thresholds.window},
          {"visual_window", f.thresholds.visual_window},
          {"tau_acc", f.thresholds.tau_acc},
          {"tau_vis", f.thresholds.tau_vis},
          {"decision_threshold", f.thresholds.decision_threshold},
          {"hysteresis", f.thresholds.hysteresis},
          {"min_state_duration", f.thresholds.min_state_duration},
          {"q", f.q},
          {"r", {f.r(0, 0), f.r(1, 1)}},
          {"calibration_window", f.calibration_window},
          {"calibration_factor", f.calibration_factor},
          {"visual_calibration_factor", f.visual_calibration_factor},
          {"smooth", f.smooth}};
}

inline void pipeline_from_json(const json& j, PipelineConfig& p) {
  const std::string w = "pipeline";
  check_keys(j, w,
             {"manipulation", "condition_force", "baseline_window", "notch", "wavelet", "accel_bandwidth",
              "attitude", "fusion", "integration", "lt", "tr"});
  if (j.contains("manipulation") && !j["manipulation"].is_null()) {
    ManipulationType m{};
    take_manipulation(j, "manipulation", m, w);
    p.manipulation = m;
  }
  take(j, "condition_force", p.condition_force, w);
  take(j, "baseline_window", p.baseline_window, w);
  take(j, "accel_bandwidth", p.accel_bandwidth, w);
  if (j.contains("notch")) {
    check_keys(j["notch"], "pipeline.notch", {"f0", "fs", "quality"});
    take(j["notch"], "f0", p.notch.f0, "pipeline.notch");
    take(j["notch"], "fs", p.notch.fs, "pipeline.notch");
    take(j["notch"], "quality", p.notch.quality, "pipeline.notch");
  }
  if (j.contains("wavelet")) {
    check_keys(j["wavelet"], "pipeline.wavelet", {"levels", "threshold_scale"});
    take(j["wavelet"], "levels", p.wavelet.levels, "pipeline.wavelet");
    take(j["wavelet"], "threshold_scale", p.wavelet.threshold_scale, "pipeline.wavelet");
  }
  if (j.contains("attitude")) {
    const auto& a = j["attitude"];
    check_keys(a, "pipeline.attitude", {"kp", "ki", "gate", "correction_enabled"});
    take(a, "kp", p.attitude.kp, "pipeline.attitude");
    take(a, "ki", p.attitude.ki, "pipeline.attitude");
    take(a, "gate", p.attitude.gate, "pipeline.attitude");
    take(a, "correction_enabled", p.attitude.correction_enabled, "pipeline.attitude");
  }
  if (j.contains("fusion")) fusion_from_json(j["fusion"], p.fusion);
  if (j.contains("integration")) {
    check_keys(j["integration"], "pipeline.integration", {"drift_correction", "edge_padding"});
    take(j["integration"], "drift_correction", p.integration.drift_correction, "pipeline.integration");
    take(j["integration"], "edge_padding", p.integration.edge_padding, "pipeline.integration");
  }
  if (j.contains("lt")) {
    const auto& l = j["lt"];
    const std::string lw = "pipeline.lt";
    check_keys(l, lw, {"peak_factor", "epsilon_factor", "quiet_run", "margin", "merge_gap", "min_cycle"});
    take(l, "peak_factor", p.lt.peak_factor, lw);
    take(l, "epsilon_factor", p.lt.epsilon_factor, lw);
    take(l, "quiet_run", p.lt.quiet_run, lw);
    take(l, "margin", p.lt.margin, lw);
    take(l, "merge_gap", p.lt.merge_gap, lw);
    take(l, "min_cycle", p.lt.min_cycle, lw);
  }
  if (j.contains("tr")) {
    const auto& t = j["tr"];
    const std::string tw = "pipeline.tr";
    check_keys(t, tw, {"min_prominence", "relative_prominence", "min_spacing"});
    take(t, "min_prominence", p.tr.min_prominence, tw);
    take(t, "relative_prominence", p.tr.relative_prominence, tw);
    take(t, "min_spacing", p.tr.min_spacing, tw);
  }
}

inline json pipeline_to_json(const PipelineConfig& p) {
  return {{"manipulation", p.manipulation ? json(std::string(to_string(*p.manipulation))) : json()},
          {"condition_force", p.condition_force},
          {"baseline_window", p.baseline_window},
          {"notch", {{"f0", p.notch.f0}, {"fs", p.notch.fs}, {"quality", p.notch.quality}}},
          {"wavelet", {{"levels", p.wavelet.levels}, {"threshold_scale", p.wavelet.threshold_scale}}},
          {"accel_bandwidth", p.accel_bandwidth},
          {"attitude",
           {{"kp", p.attitude.kp}, {"ki", p.attitude.ki}, {"gate", p.attitude.gate},
            {"correction_enabled", p.attitude.correction_enabled}}},
          {"fusion", fusion_to_json(p.fusion)},
          {"integration",
           {{"drift_correction", p.integration.drift_correction}, {"edge_padding", p.integration.edge_padding}}},
          {"lt",
           {{"peak_factor", p.lt.peak_factor},
            {"epsilon_factor", p.lt.epsilon_factor},
            {"quiet_run", p.lt.quiet_run},
            {"margin", p.lt.margin},
            {"merge_gap", p.lt.merge_gap},
            {"min_cycle", p.lt.min_cycle}}},
          {"tr",
           {{"min_prominence", p.tr.min_prominence},
            {"relative_prominence", p.tr.relative_prominence},
            {"min_spacing", p.tr.min_spacing}}}};
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::take;
  detail::check_keys(j, "config", {"format_version", "seed", "output_dir", "simulate", "pipeline"});
  if (j.contains("format_version") && j["format_version"] != kFormatVersion) {
    throw Error(ErrorKind::Config, "config", "unsupported format_version");
  }
  RunConfig c;
  take(j, "seed", c.seed, "config");
  take(j, "output_dir", c.output_dir, "config");
  if (j.contains("simulate")) {
    const auto& s = j["simulate"];
    const std::string w = "simulate";
    detail::check_keys(s, w, {"profile", "integration_step", "hand_tremor", "noise", "visual", "calibration"});
    if (s.contains("profile")) c.simulate.profile = detail::profile_from_json(s["profile"]);
    take(s, "integration_step", c.simulate.integration_step, w);
    take(s, "hand_tremor", c.simulate.hand_tremor, w);
    if (s.contains("noise")) detail::noise_from_json(s["noise"], c.simulate.noise);
    if (s.contains("visual")) {
      detail::check_keys(s["visual"], "simulate.visual", {"flow_gain", "flow_noise", "rate"});
      take(s["visual"], "flow_gain", c.simulate.visual.flow_gain, "simulate.visual");
      take(s["visual"], "flow_noise", c.simulate.visual.flow_noise, "simulate.visual");
      take(s["visual"], "rate", c.simulate.visual.rate, "simulate.visual");
    }
    if (s.contains("calibration")) {
      detail::check_keys(s["calibration"], "simulate.calibration",
                         {"sensitivity", "excitation", "gain", "full_scale", "offset", "adc_bits", "adc_min", "adc_max"});
      try {
        c.simulate.calibration = calibration_from_json(s["calibration"]);
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorKind::Config, "config", "bad value in simulate.calibration");
      }
    }
  }
  if (j.contains("pipeline")) detail::pipeline_from_json(j["pipeline"], c.pipeline);
  c.pipeline.validate();
  c.simulate.noise.validate();
  c.simulate.calibration.validate();
  return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json sim = {{"integration_step", c.simulate.integration_step},
                        {"hand_tremor", c.simulate.hand_tremor},
                        {"noise", detail::noise_to_json(c.simulate.noise)},
                        {"visual",
                         {{"flow_gain", c.simulate.visual.flow_gain},
                          {"flow_noise", c.simulate.visual.flow_noise},
                          {"rate", c.simulate.visual.rate}}},
                        {"calibration", to_json(c.simulate.calibration)},
                        {"profile", c.simulate.profile ? detail::profile_to_json(*c.simulate.profile) : nlohmann::json()}};
  return {{"format_version", kFormatVersion},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"simulate", sim},
          {"pipeline", detail::pipeline_to_json(c.pipeline)}};
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, "config", path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

/// Hash of the processing settings; reports carry it so compare can refuse mixed runs.
inline std::string pipeline_hash(const PipelineConfig& p) { return fnv1a_hex(detail::pipeline_to_json(p).dump()); }

/// Hash of the simulation settings and seed.
inline std::string simulation_hash(const RunConfig& c) {
  return fnv1a_hex(to_json(c)["simulate"].dump() + "#" + std::to_string(c.seed));
}

}  // namespace acuquant

#endif  // ACUQUANT_CONFIG_HPP
