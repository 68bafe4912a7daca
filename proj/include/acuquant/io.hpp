#ifndef ACUQUANT_IO_HPP
#define ACUQUANT_IO_HPP

// Session and ground-truth files. Each channel group is a tab-separated table with a header row
// of name[unit] cells and 17-significant-digit values; clocks, sample counts and the rest of the
// metadata live in a JSON sidecar carrying a format_version.

#include <acuquant/core.hpp>
#include <acuquant/error.hpp>
#include <acuquant/simulate.hpp>

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace acuquant {

inline constexpr int kFormatVersion = 1;

struct Table {
  std::vector<std::string> names;
  std::vector<std::string> units;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  void add(std::string name, std::string unit, std::vector<double> values) {
    names.push_back(std::move(name));
    units.push_back(std::move(unit));
    columns.push_back(std::move(values));
  }

  const std::vector<double>& column(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return columns[i];
    }
    throw Error(ErrorKind::Io, "io", "missing column " + std::string(name));
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Io, "io", where + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t at = 0;
  while (true) {
    const std::size_t tab = line.find('\t', at);
    out.push_back(line.substr(at, tab == std::string_view::npos ? std::string_view::npos : tab - at));
    if (tab == std::string_view::npos) break;
    at = tab + 1;
  }
  return out;
}

inline std::vector<double> interleave(const Table& t, std::size_t first, std::size_t width) {
  std::vector<double> out(t.rows() * width);
  for (std::size_t k = 0; k < t.rows(); ++k) {
    for (std::size_t c = 0; c < width; ++c) out[k * width + c] = t.columns[first + c][k];
  }
  return out;
}

inline nlohmann::json series_clock(const SampledSeries& s) {
  return {{"t0", s.t0()}, {"dt", s.dt()}, {"samples", s.size()}, {"unit", s.unit()}};
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "io", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "io", "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "io", "write failed for " + path.string());
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, "io", path.string() + ": " + e.what());
  }
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(ErrorKind::Io, "io", where + ": missing field " + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, "io", where + ": field " + key + ": " + e.what());
  }
}

inline void check_version(const nlohmann::json& meta, const std::string& where, std::string_view kind) {
  if (get_field<int>(meta, "format_version", where) != kFormatVersion) {
    throw Error(ErrorKind::Io, "io", where + ": unsupported format_version");
  }
  if (get_field<std::string>(meta, "kind", where) != kind) {
    throw Error(ErrorKind::Io, "io", where + ": expected a " + std::string(kind) + " document");
  }
}

inline SampledSeries series_from(const nlohmann::json& clock, std::size_t width, std::vector<double> values,
                                 const std::string& where) {
  const auto samples = get_field<std::size_t>(clock, "samples", where);
  if (values.size() != samples * width) {
    throw Error(ErrorKind::Io, "io", where + ": expected " + std::to_string(samples) + " rows");
  }
  return SampledSeries(get_field<double>(clock, "t0", where), get_field<double>(clock, "dt", where), width,
                       std::move(values), get_field<std::string>(clock, "unit", where));
}

}  // namespace detail

inline std::string format_table(const Table& t) {
  for (const auto& c : t.columns) {
    if (c.size() != t.rows()) throw Error(ErrorKind::LengthMismatch, "io", "table columns differ in length");
  }
  std::string out;
  for (std::size_t i = 0; i < t.names.size(); ++i) {
    if (i) out += '\t';
    out += t.names[i] + "[" + t.units[i] + "]";
  }
  out += '\n';
  for (std::size_t k = 0; k < t.rows(); ++k) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (i) out += '\t';
      out += detail::format_double(t.columns[i][k]);
    }
    out += '\n';
  }
  return out;
}

inline Table parse_table(const std::string& text, const std::string& where) {
  Table t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw Error(ErrorKind::Io, "io", where + ": missing header");
  for (auto cell : detail::split_tabs(line)) {
    const auto open = cell.find('[');
    if (open == std::string_view::npos || cell.back() != ']') {
      throw Error(ErrorKind::Io, "io", where + ": header cell must be name[unit]");
    }
    t.names.emplace_back(cell.substr(0, open));
    t.units.emplace_back(cell.substr(open + 1, cell.size() - open - 2));
  }
  t.columns.resize(t.names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = detail::split_tabs(line);
    if (cells.size() != t.names.size()) {
      throw Error(ErrorKind::Io, "io", where + ": row " + std::to_string(row) + " has the wrong cell count");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      t.columns[i].push_back(detail::parse_double(cells[i], where));
    }
  }
  return t;
}

inline void write_table(const std::filesystem::path& path, const Table& t) {
  detail::write_text(path, format_table(t));
}

inline Table read_table(const std::filesystem::path& path) {
  return parse_table(detail::read_text(path), path.string());
}

/// Pretty JSON with a trailing newline; keys are sorted, so equal documents give equal bytes.
inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  detail::write_text(path, j.dump(2) + "\n");
}

inline nlohmann::json to_json(const ForceCalibration& c) {
  return {{"sensitivity", c.sensitivity}, {"excitation", c.excitation}, {"gain", c.gain},
          {"full_scale", c.full_scale},   {"offset", c.offset},         {"adc_bits", c.adc_bits},
          {"adc_min", c.adc_min},         {"adc_max", c.adc_max}};
}

inline ForceCalibration calibration_from_json(const nlohmann::json& j) {
  ForceCalibration c;
  c.sensitivity = j.value("sensitivity", c.sensitivity);
  c.excitation = j.value("excitation", c.excitation);
  c.gain = j.value("gain", c.gain);
  c.full_scale = j.value("full_scale", c.full_scale);
  c.offset = j.value("offset", c.offset);
  c.adc_bits = j.value("adc_bits", c.adc_bits);
  c.adc_min = j.value("adc_min", c.adc_min);
  c.adc_max = j.value("adc_max", c.adc_max);
  return c;
}

/// dir/session.json plus force.tsv, imu.tsv and, when present, visual.tsv.
inline void write_session(const std::filesystem::path& dir, const RecordingSession& s,
                          const nlohmann::json& extra = nlohmann::json::object()) {
  s.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "io", "cannot create " + dir.string());

  Table force;
  force.add("force", s.force.unit(), s.force.column(0));
  write_table(dir / "force.tsv", force);
  Table imu;
  const char* axes[] = {"x", "y", "z"};
  for (std::size_t c = 0; c < 3; ++c) imu.add(std::string("accel_") + axes[c], s.accel.unit(), s.accel.column(c));
  for (std::size_t c = 0; c < 3; ++c) imu.add(std::string("gyro_") + axes[c], s.gyro.unit(), s.gyro.column(c));
  write_table(dir / "imu.tsv", imu);

  nlohmann::json meta = {{"format_version", kFormatVersion},
                         {"kind", "session"},
                         {"label", s.label ? nlohmann::json(std::string(to_string(*s.label))) : nlohmann::json()},
                         {"calibration", to_json(s.calibration)},
                         {"force", detail::series_clock(s.force)},
                         {"accel", detail::series_clock(s.accel)},
                         {"gyro", detail::series_clock(s.gyro)},
                         {"visual", nullptr}};
  if (s.visual) {
    Table vis;
    vis.add("flow", s.visual->unit(), s.visual->column(0));
    write_table(dir / "visual.tsv", vis);
    meta["visual"] = detail::series_clock(*s.visual);
  } else {
    std::filesystem::remove(dir / "visual.tsv", ec);
  }
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  write_json(dir / "session.json", meta);
}

inline RecordingSession read_session(const std::filesystem::path& dir) {
  const auto meta_path = (dir / "session.json").string();
  const auto meta = detail::read_json(dir / "session.json");
  detail::check_version(meta, meta_path, "session");

  RecordingSession s;
  const auto force = read_table(dir / "force.tsv");
  s.force = detail::series_from(detail::get_field<nlohmann::json>(meta, "force", meta_path), 1,
                                force.column("force"), (dir / "force.tsv").string());
  const auto imu = read_table(dir / "imu.tsv");
  Table accel, gyro;
  for (const char* a : {"x", "y", "z"}) {
    accel.add("", "", imu.column(std::string("accel_") + a));
    gyro.add("", "", imu.column(std::string("gyro_") + a));
  }
  const auto imu_where = (dir / "imu.tsv").string();
  s.accel = detail::series_from(detail::get_field<nlohmann::json>(meta, "accel", meta_path), 3,
                                detail::interleave(accel, 0, 3), imu_where);
  s.gyro = detail::series_from(detail::get_field<nlohmann::json>(meta, "gyro", meta_path), 3,
                               detail::interleave(gyro, 0, 3), imu_where);
  if (meta.contains("visual") && !meta["visual"].is_null()) {
    const auto vis = read_table(dir / "visual.tsv");
    s.visual = detail::series_from(meta["visual"], 1, vis.column("flow"), (dir / "visual.tsv").string());
  }
  if (meta.contains("label") && !meta["label"].is_null()) {
    const auto label = parse_manipulation(detail::get_field<std::string>(meta, "label", meta_path));
    if (!label) throw Error(ErrorKind::Io, "io", meta_path + ": unknown manipulation label");
    s.label = label;
  }
  if (meta.contains("calibration")) s.calibration = calibration_from_json(meta["calibration"]);
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Io, "io", dir.string() + ": inconsistent session: " + e.what());
  }
  return s;
}

/// dir/truth.json plus truth.tsv. Stages are stored as integer codes listed in the sidecar.
inline void write_truth(const std::filesystem::path& dir, const GroundTruthTrajectory& g) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "io", "cannot create " + dir.string());
  Table t;
  t.add("accel", "m/s^2", g.accel.column(0));
  // Twirling runs leave sensed_accel empty; the point samples stand in.
  const auto& sensed = g.sensed_accel.size() == g.accel.size() ? g.sensed_accel : g.accel;
  t.add("sensed_accel", "m/s^2", sensed.column(0));
  t.add("velocity", "m/s", g.velocity.column(0));
  t.add("displacement", "m", g.displacement.column(0));
  t.add("depth", "m", g.depth.column(0));
  t.add("angle", "rad", g.angle.column(0));
  const char* axes[] = {"x", "y", "z"};
  for (std::size_t c = 0; c < 3; ++c) t.add(std::string("omega_") + axes[c], "rad/s", g.omega.column(c));
  std::vector<double> fa, ft, ff, ta, tf, st;
  for (const auto& f : g.forces) {
    fa.push_back(f.applied);
    ft.push_back(f.tip);
    ff.push_back(f.friction);
    ta.push_back(f.applied_torque);
    tf.push_back(f.friction_torque);
  }
  for (Stage s : g.stages) st.push_back(static_cast<double>(static_cast<int>(s)));
  t.add("applied_force", "N", fa);
  t.add("tip_force", "N", ft);
  t.add("friction_force", "N", ff);
  t.add("applied_torque", "N m", ta);
  t.add("friction_torque", "N m", tf);
  t.add("stage", "code", st);
  write_table(dir / "truth.tsv", t);

  nlohmann::json codes = nlohmann::json::object();
  for (Stage s : {Stage::Idle, Stage::S1, Stage::S2, Stage::S3, Stage::S4, Stage::LeftTwirl, Stage::RightTwirl}) {
    codes[std::to_string(static_cast<int>(s))] = std::string(to_string(s));
  }
  write_json(dir / "truth.json", {{"format_version", kFormatVersion},
                                  {"kind", "truth"},
                                  {"clock", detail::series_clock(g.accel)},
                                  {"mass", g.mass},
                                  {"stage_codes", codes}});
}

inline GroundTruthTrajectory read_truth(const std::filesystem::path& dir) {
  const auto meta_path = (dir / "truth.json").string();
  const auto meta = detail::read_json(dir / "truth.json");
  detail::check_version(meta, meta_path, "truth");
  const auto t = read_table(dir / "truth.tsv");
  const auto clock = detail::get_field<nlohmann::json>(meta, "clock", meta_path);
  const auto where = (dir / "truth.tsv").string();
  auto scalar = [&](const char* name, const char* unit) {
    auto c = clock;
    c["unit"] = unit;
    return detail::series_from(c, 1, t.column(name), where);
  };
  GroundTruthTrajectory g;
  g.accel = scalar("accel", "m/s^2");
  g.sensed_accel = scalar("sensed_accel", "m/s^2");
  g.velocity = scalar("velocity", "m/s");
  g.displacement = scalar("displacement", "m");
  g.depth = scalar("depth", "m");
  g.angle = scalar("angle", "rad");
  Table omega;
  for (const char* a : {"x", "y", "z"}) omega.add("", "", t.column(std::string("omega_") + a));
  auto c = clock;
  c["unit"] = "rad/s";
  g.omega = detail::series_from(c, 3, detail::interleave(omega, 0, 3), where);
  const auto& fa = t.column("applied_force");
  const auto& ft = t.column("tip_force");
  const auto& ff = t.column("friction_force");
  const auto& ta = t.column("applied_torque");
  const auto& tf = t.column("friction_torque");
  for (std::size_t k = 0; k < t.rows(); ++k) g.forces.push_back({fa[k], ft[k], ff[k], ta[k], tf[k]});
  for (double code : t.column("stage")) {
    const int i = static_cast<int>(code);
    if (i < 0 || i > static_cast<int>(Stage::RightTwirl) || static_cast<double>(i) != code) {
      throw Error(ErrorKind::Io, "io", where + ": bad stage code");
    }
    g.stages.push_back(static_cast<Stage>(i));
  }
  g.mass = detail::get_field<double>(meta, "mass", meta_path);
  return g;
}

/// 64-bit FNV-1a of a string, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Calibration sweep table with force[N] and voltage[V] columns.
inline Table read_calibration_sweep(const std::filesystem::path& path) {
  auto t = read_table(path);
  t.column("force");
  t.column("voltage");
  return t;
}

}  // namespace acuquant

#endif  // ACUQUANT_IO_HPP
