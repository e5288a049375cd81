#include "meswarm/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "meswarm/error.hpp"

namespace meswarm {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(where, "must be finite");
  return v;
}

Vec3 get_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) bad(where, "expected an array of 3 numbers");
  return {get_number(j[0], where), get_number(j[1], where), get_number(j[2], where)};
}

/// Scalar -> s I, 3-vector -> diagonal, 3x3 nested array -> matrix.
Mat3 get_mat3(const json& j, const std::string& where) {
  if (j.is_number()) return get_number(j, where) * Mat3::Identity();
  if (j.is_array() && j.size() == 3 && j[0].is_number()) return get_vec3(j, where).asDiagonal();
  if (j.is_array() && j.size() == 3) {
    Mat3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = get_vec3(j[r], where).transpose();
    return m;
  }
  bad(where, "expected a scalar, a 3-vector or a 3x3 array");
}

json mat_json(const MatX& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vec_json(const VecX& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

/// Reads `key` from object `j` into `out` when present.
template <typename Fn>
void optional_field(const json& j, const char* key, const std::string& where, Fn&& fn) {
  if (!j.contains(key)) return;
  fn(j.at(key), where + "." + key);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) bad(where, "unknown field '" + key + "'");
  }
}

AxisSignal parse_axis(const json& j, const std::string& where) {
  check_keys(j, where, {"offset", "terms"});
  AxisSignal a;
  optional_field(j, "offset", where, [&](const json& v, const std::string& w) { a.offset = get_number(v, w); });
  optional_field(j, "terms", where, [&](const json& v, const std::string& w) {
    if (!v.is_array()) bad(w, "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string wi = w + "[" + std::to_string(i) + "]";
      check_keys(v[i], wi, {"amplitude", "frequency_hz", "phase_rad"});
      Sinusoid s;
      optional_field(v[i], "amplitude", wi, [&](const json& x, const std::string& ww) { s.amplitude = get_number(x, ww); });
      optional_field(v[i], "frequency_hz", wi,
                     [&](const json& x, const std::string& ww) { s.frequency_hz = get_number(x, ww); });
      optional_field(v[i], "phase_rad", wi, [&](const json& x, const std::string& ww) { s.phase_rad = get_number(x, ww); });
      a.terms.push_back(s);
    }
  });
  return a;
}

json axis_json(const AxisSignal& a) {
  json terms = json::array();
  for (const Sinusoid& s : a.terms) {
    terms.push_back({{"amplitude", s.amplitude}, {"frequency_hz", s.frequency_hz}, {"phase_rad", s.phase_rad}});
  }
  return {{"offset", a.offset}, {"terms", terms}};
}

std::array<AxisSignal, 3> parse_axes(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) bad(where, "expected 3 axis signals");
  return {parse_axis(j[0], where + "[0]"), parse_axis(j[1], where + "[1]"), parse_axis(j[2], where + "[2]")};
}

VehicleSource parse_vehicle(const json& j, const std::string& where, const std::filesystem::path& base_dir) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) bad(where, "needs a string 'type'");
  const std::string type = j.at("type").get<std::string>();
  if (type == "euroc") {
    check_keys(j, where, {"type", "path"});
    if (!j.contains("path") || !j.at("path").is_string()) bad(where, "needs a string 'path'");
    std::filesystem::path p = j.at("path").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return DatasetVehicle{p};
  }
  if (type != "synthetic") bad(where, "unknown vehicle type '" + type + "'");
  check_keys(j, where, {"type", "trajectory", "imu_noise", "bias"});
  SyntheticVehicle v;
  if (!j.contains("trajectory")) bad(where, "synthetic vehicle needs a 'trajectory'");
  const json& t = j.at("trajectory");
  check_keys(t, where + ".trajectory", {"position_m", "attitude_rad"});
  optional_field(t, "position_m", where + ".trajectory",
                 [&](const json& x, const std::string& w) { v.trajectory.position = parse_axes(x, w); });
  optional_field(t, "attitude_rad", where + ".trajectory",
                 [&](const json& x, const std::string& w) { v.trajectory.attitude = parse_axes(x, w); });
  optional_field(j, "imu_noise", where, [&](const json& x, const std::string& w) {
    check_keys(x, w, {"gyro_radps", "accel_mps2"});
    optional_field(x, "gyro_radps", w, [&](const json& y, const std::string& ww) { v.imu_noise.gyro = get_mat3(y, ww); });
    optional_field(x, "accel_mps2", w,
                   [&](const json& y, const std::string& ww) { v.imu_noise.accel = get_mat3(y, ww); });
  });
  optional_field(j, "bias", where, [&](const json& x, const std::string& w) {
    check_keys(x, w, {"gyro_initial_radps", "accel_initial_mps2", "gyro_walk_radps_per_sqrts",
                      "accel_walk_mps2_per_sqrts"});
    optional_field(x, "gyro_initial_radps", w,
                   [&](const json& y, const std::string& ww) { v.bias.gyro_initial = get_vec3(y, ww); });
    optional_field(x, "accel_initial_mps2", w,
                   [&](const json& y, const std::string& ww) { v.bias.accel_initial = get_vec3(y, ww); });
    optional_field(x, "gyro_walk_radps_per_sqrts", w,
                   [&](const json& y, const std::string& ww) { v.bias.gyro_walk = get_mat3(y, ww); });
    optional_field(x, "accel_walk_mps2_per_sqrts", w,
                   [&](const json& y, const std::string& ww) { v.bias.accel_walk = get_mat3(y, ww); });
  });
  return v;
}

json vehicle_json(const VehicleSource& source) {
  if (const auto* d = std::get_if<DatasetVehicle>(&source)) {
    return {{"type", "euroc"}, {"path", d->path.string()}};
  }
  const auto& v = std::get<SyntheticVehicle>(source);
  json pos = json::array(), att = json::array();
  for (const AxisSignal& a : v.trajectory.position) pos.push_back(axis_json(a));
  for (const AxisSignal& a : v.trajectory.attitude) att.push_back(axis_json(a));
  return {{"type", "synthetic"},
          {"trajectory", {{"position_m", pos}, {"attitude_rad", att}}},
          {"imu_noise", {{"gyro_radps", mat_json(v.imu_noise.gyro)}, {"accel_mps2", mat_json(v.imu_noise.accel)}}},
          {"bias",
           {{"gyro_initial_radps", vec_json(v.bias.gyro_initial)},
            {"accel_initial_mps2", vec_json(v.bias.accel_initial)},
            {"gyro_walk_radps_per_sqrts", mat_json(v.bias.gyro_walk)},
            {"accel_walk_mps2_per_sqrts", mat_json(v.bias.accel_walk)}}}};
}

std::map<int, Vec3> parse_points(const json& j, const std::string& where, const char* id_key) {
  if (!j.is_array()) bad(where, "expected an array");
  std::map<int, Vec3> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string wi = where + "[" + std::to_string(i) + "]";
    check_keys(j[i], wi, {id_key, "position_m"});
    if (!j[i].contains(id_key) || !j[i].at(id_key).is_number_integer()) bad(wi, std::string("needs integer '") + id_key + "'");
    if (!j[i].contains("position_m")) bad(wi, "needs 'position_m'");
    const int id = j[i].at(id_key).get<int>();
    if (!out.emplace(id, get_vec3(j[i].at("position_m"), wi + ".position_m")).second) {
      bad(wi, "duplicate " + std::string(id_key) + " " + std::to_string(id));
    }
  }
  return out;
}

json points_json(const std::map<int, Vec3>& points, const char* id_key) {
  json out = json::array();
  for (const auto& [id, p] : points) out.push_back({{id_key, id}, {"position_m", vec_json(p)}});
  return out;
}

}  // namespace

std::string_view scheme_name(IntegrationScheme scheme) {
  return scheme == IntegrationScheme::kExactHold ? "exact_hold" : "first_order";
}

void ExperimentConfig::validate() const {
  if (vehicles.empty()) throw ConfigError("config needs at least one vehicle");
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (const auto* d = std::get_if<DatasetVehicle>(&vehicles[i])) {
      if (!std::filesystem::is_directory(d->path)) {
        throw ConfigError("vehicle " + std::to_string(i) + ": dataset directory " + d->path.string() + " not found");
      }
    } else {
      std::get<SyntheticVehicle>(vehicles[i]).trajectory.validate();
    }
  }
  for (const auto& [vehicle, m] : world.markers) {
    if (vehicle < 0 || vehicle >= static_cast<int>(vehicles.size())) {
      throw ConfigError("marker for unknown vehicle " + std::to_string(vehicle));
    }
  }
  for (const auto& [vehicle, w] : noise.w_override) {
    if (vehicle < 0 || vehicle >= static_cast<int>(vehicles.size())) {
      throw ConfigError("W override for unknown vehicle " + std::to_string(vehicle));
    }
  }
  if (!world.gravity.allFinite()) throw ConfigError("gravity must be finite");
  noise.validate();
  schedule.validate();
  prior.validate();
}

FilterOptions ExperimentConfig::filter_options() const {
  FilterOptions o;
  o.scheme = scheme;
  o.with_curvature = mode == Mode::kCentral && with_curvature;
  return o;
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const std::string top = "config";
  check_keys(root, top, {"seed", "mode", "with_curvature", "integration", "update_encoding", "bus_log_detail",
                         "output_dir", "gravity_mps2", "landmarks", "markers", "noise", "schedule", "prior",
                         "vehicles"});
  ExperimentConfig c;
  try {
    optional_field(root, "seed", top, [&](const json& v, const std::string& w) {
      if (!v.is_number_unsigned()) bad(w, "expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    });
    optional_field(root, "mode", top, [&](const json& v, const std::string&) { c.mode = parse_mode(v.get<std::string>()); });
    optional_field(root, "with_curvature", top, [&](const json& v, const std::string& w) {
      if (!v.is_boolean()) bad(w, "expected true or false");
      c.with_curvature = v.get<bool>();
    });
    optional_field(root, "integration", top, [&](const json& v, const std::string& w) {
      const auto s = v.get<std::string>();
      if (s == "exact_hold") c.scheme = IntegrationScheme::kExactHold;
      else if (s == "first_order") c.scheme = IntegrationScheme::kFirstOrder;
      else bad(w, "expected exact_hold or first_order");
    });
    optional_field(root, "update_encoding", top, [&](const json& v, const std::string& w) {
      const auto s = v.get<std::string>();
      if (s == "dense") c.encoding = UpdateEncoding::kDense;
      else if (s == "factored") c.encoding = UpdateEncoding::kFactored;
      else bad(w, "expected dense or factored");
    });
    optional_field(root, "bus_log_detail", top, [&](const json& v, const std::string& w) {
      const auto s = v.get<std::string>();
      if (s == "full") c.bus_detail = MessageBus::LogDetail::kFull;
      else if (s == "headers") c.bus_detail = MessageBus::LogDetail::kHeaders;
      else bad(w, "expected full or headers");
    });
    optional_field(root, "output_dir", top,
                   [&](const json& v, const std::string&) { c.output_dir = v.get<std::string>(); });
    optional_field(root, "gravity_mps2", top,
                   [&](const json& v, const std::string& w) { c.world.gravity = get_vec3(v, w); });
    optional_field(root, "landmarks", top,
                   [&](const json& v, const std::string& w) { c.world.landmarks = parse_points(v, w, "id"); });
    optional_field(root, "markers", top,
                   [&](const json& v, const std::string& w) { c.world.markers = parse_points(v, w, "vehicle"); });

    optional_field(root, "noise", top, [&](const json& n, const std::string& w) {
      check_keys(n, w, {"gyro_radps", "accel_mps2", "gyro_bias_radps", "accel_bias_mps2", "landmark_m",
                        "intervehicle_m", "w_override"});
      NoiseModel& m = c.noise;
      optional_field(n, "gyro_radps", w, [&](const json& v, const std::string& ww) { m.gyro = get_mat3(v, ww); });
      optional_field(n, "accel_mps2", w, [&](const json& v, const std::string& ww) { m.accel = get_mat3(v, ww); });
      optional_field(n, "gyro_bias_radps", w,
                     [&](const json& v, const std::string& ww) { m.gyro_bias = get_mat3(v, ww); });
      optional_field(n, "accel_bias_mps2", w,
                     [&](const json& v, const std::string& ww) { m.accel_bias = get_mat3(v, ww); });
      optional_field(n, "landmark_m", w, [&](const json& v, const std::string& ww) { m.landmark_D = get_mat3(v, ww); });
      optional_field(n, "intervehicle_m", w,
                     [&](const json& v, const std::string& ww) { m.intervehicle_D = get_mat3(v, ww); });
      optional_field(n, "w_override", w, [&](const json& v, const std::string& ww) {
        if (!v.is_array()) bad(ww, "expected an array");
        for (std::size_t i = 0; i < v.size(); ++i) {
          const std::string wi = ww + "[" + std::to_string(i) + "]";
          check_keys(v[i], wi, {"vehicle", "matrix"});
          if (!v[i].contains("vehicle") || !v[i].contains("matrix")) bad(wi, "needs 'vehicle' and 'matrix'");
          const json& mj = v[i].at("matrix");
          if (!mj.is_array() || mj.size() != 12) bad(wi, "matrix must be 12x12");
          Mat12 W;
          for (int r = 0; r < 12; ++r) {
            if (!mj[r].is_array() || mj[r].size() != 12) bad(wi, "matrix must be 12x12");
            for (int col = 0; col < 12; ++col) W(r, col) = get_number(mj[r][col], wi);
          }
          m.w_override[v[i].at("vehicle").get<int>()] = W;
        }
      });
    });

    optional_field(root, "schedule", top, [&](const json& s, const std::string& w) {
      check_keys(s, w, {"imu_rate_hz", "landmark_rate_hz", "intervehicle_rate_hz", "duration_s", "landmark_phase_s",
                        "intervehicle_phase_s", "landmark_dropout", "intervehicle_dropout", "max_range_m"});
      ScheduleConfig& sc = c.schedule;
      auto num = [&](const char* key, double& out) {
        optional_field(s, key, w, [&](const json& v, const std::string& ww) { out = get_number(v, ww); });
      };
      num("imu_rate_hz", sc.imu_rate_hz);
      num("landmark_rate_hz", sc.landmark_rate_hz);
      num("intervehicle_rate_hz", sc.intervehicle_rate_hz);
      num("duration_s", sc.duration_s);
      num("landmark_phase_s", sc.landmark_phase_s);
      num("intervehicle_phase_s", sc.intervehicle_phase_s);
      num("landmark_dropout", sc.landmark_dropout);
      num("intervehicle_dropout", sc.intervehicle_dropout);
      optional_field(s, "max_range_m", w, [&](const json& v, const std::string& ww) {
        sc.max_range_m = v.is_null() ? std::numeric_limits<double>::infinity() : get_number(v, ww);
      });
    });

    optional_field(root, "prior", top, [&](const json& p, const std::string& w) {
      check_keys(p, w, {"position_offset_m", "rotation_offset_rad", "k0_diagonal"});
      optional_field(p, "position_offset_m", w,
                     [&](const json& v, const std::string& ww) { c.prior.position_offset_m = get_number(v, ww); });
      optional_field(p, "rotation_offset_rad", w,
                     [&](const json& v, const std::string& ww) { c.prior.rotation_offset_rad = get_number(v, ww); });
      optional_field(p, "k0_diagonal", w, [&](const json& k, const std::string& ww) {
        check_keys(k, ww, {"rotation", "position", "velocity", "gyro_bias", "accel_bias"});
        const char* keys[] = {"rotation", "position", "velocity", "gyro_bias", "accel_bias"};
        for (int b = 0; b < 5; ++b) {
          optional_field(k, keys[b], ww, [&](const json& v, const std::string& www) {
            c.prior.k0_diagonal.segment<3>(3 * b) =
                v.is_number() ? Vec3::Constant(get_number(v, www)) : get_vec3(v, www);
          });
        }
      });
    });

    optional_field(root, "vehicles", top, [&](const json& v, const std::string& w) {
      if (!v.is_array()) bad(w, "expected an array");
      for (std::size_t i = 0; i < v.size(); ++i) {
        c.vehicles.push_back(parse_vehicle(v[i], w + "[" + std::to_string(i) + "]", base_dir));
      }
    });
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
  }
  c.schedule.seed = c.seed;
  c.schedule.validate();
  c.noise.imu_period_s = 1.0 / c.schedule.imu_rate_hz;
  c.noise.landmark_period_s = 1.0 / c.schedule.landmark_rate_hz;
  c.noise.intervehicle_period_s = 1.0 / c.schedule.intervehicle_rate_hz;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

std::string dump_config(const ExperimentConfig& c) {
  const NoiseModel& n = c.noise;
  json w_override = json::array();
  for (const auto& [vehicle, W] : n.w_override) w_override.push_back({{"vehicle", vehicle}, {"matrix", mat_json(W)}});
  const ScheduleConfig& s = c.schedule;
  const Vec15& k = c.prior.k0_diagonal;
  json vehicles = json::array();
  for (const VehicleSource& v : c.vehicles) vehicles.push_back(vehicle_json(v));

  json root = {
      {"seed", c.seed},
      {"mode", std::string(mode_name(c.mode))},
      {"with_curvature", c.with_curvature},
      {"integration", std::string(scheme_name(c.scheme))},
      {"update_encoding", c.encoding == UpdateEncoding::kDense ? "dense" : "factored"},
      {"bus_log_detail", c.bus_detail == MessageBus::LogDetail::kFull ? "full" : "headers"},
      {"output_dir", c.output_dir.string()},
      {"gravity_mps2", vec_json(c.world.gravity)},
      {"landmarks", points_json(c.world.landmarks, "id")},
      {"markers", points_json(c.world.markers, "vehicle")},
      {"noise",
       {{"gyro_radps", mat_json(n.gyro)},
        {"accel_mps2", mat_json(n.accel)},
        {"gyro_bias_radps", mat_json(n.gyro_bias)},
        {"accel_bias_mps2", mat_json(n.accel_bias)},
        {"landmark_m", mat_json(n.landmark_D)},
        {"intervehicle_m", mat_json(n.intervehicle_D)},
        {"w_override", w_override}}},
      {"schedule",
       {{"imu_rate_hz", s.imu_rate_hz},
        {"landmark_rate_hz", s.landmark_rate_hz},
        {"intervehicle_rate_hz", s.intervehicle_rate_hz},
        {"duration_s", s.duration_s},
        {"landmark_phase_s", s.landmark_phase_s},
        {"intervehicle_phase_s", s.intervehicle_phase_s},
        {"landmark_dropout", s.landmark_dropout},
        {"intervehicle_dropout", s.intervehicle_dropout},
        {"max_range_m", std::isfinite(s.max_range_m) ? json(s.max_range_m) : json(nullptr)}}},
      {"prior",
       {{"position_offset_m", c.prior.position_offset_m},
        {"rotation_offset_rad", c.prior.rotation_offset_rad},
        {"k0_diagonal",
         {{"rotation", vec_json(k.segment<3>(0))},
          {"position", vec_json(k.segment<3>(3))},
          {"velocity", vec_json(k.segment<3>(6))},
          {"gyro_bias", vec_json(k.segment<3>(9))},
          {"accel_bias", vec_json(k.segment<3>(12))}}}}},
      {"vehicles", vehicles},
  };
  return root.dump(2) + "\n";
}

}  // namespace meswarm
