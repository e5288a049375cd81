#include "meswarm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>

#include <Eigen/Geometry>

#include "log.hpp"
#include "meswarm/error.hpp"

namespace meswarm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

/// Calls `row(fields, line_no)` for every data row of a CSV file.
template <typename RowFn>
void read_rows(const std::filesystem::path& path, RowFn&& row) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  long line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      first = false;
      continue;
    }
    if (first) {
      first = false;
      TimeNs probe = 0;
      if (!parse_number(split(text).front(), probe)) continue;  // column header
    }
    row(split(text), line_no);
  }
}

[[noreturn]] void fail(const std::filesystem::path& path, long line_no, const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

void parse_fields(const std::filesystem::path& path, long line_no, const std::vector<std::string_view>& fields,
                  std::size_t first, double* out, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    if (!parse_number(fields[first + i], out[i]) || !std::isfinite(out[i])) {
      fail(path, line_no, "malformed value '" + std::string(fields[first + i]) + "' in column " +
                              std::to_string(first + i + 1));
    }
  }
}

TimeNs parse_timestamp(const std::filesystem::path& path, long line_no, std::string_view field, TimeNs previous,
                       bool have_previous) {
  TimeNs t = 0;
  if (!parse_number(field, t)) fail(path, line_no, "malformed timestamp '" + std::string(field) + "'");
  if (have_previous && t <= previous) {
    fail(path, line_no, "timestamp " + std::to_string(t) + " does not increase (previous " + std::to_string(previous) +
                            ")");
  }
  return t;
}

std::filesystem::path find_csv(const std::filesystem::path& dir, const std::string& sensor) {
  for (const auto& candidate : {dir / "mav0" / sensor / "data.csv", dir / sensor / "data.csv"}) {
    if (std::filesystem::exists(candidate)) return candidate;
  }
  throw DataError("no " + sensor + "/data.csv under " + dir.string());
}

}  // namespace

std::vector<ImuSample> load_imu_csv(const std::filesystem::path& path) {
  std::vector<ImuSample> out;
  read_rows(path, [&](const std::vector<std::string_view>& fields, long line_no) {
    if (fields.size() != 7) fail(path, line_no, "expected 7 columns, found " + std::to_string(fields.size()));
    ImuSample s;
    s.t_ns = parse_timestamp(path, line_no, fields[0], out.empty() ? 0 : out.back().t_ns, !out.empty());
    double v[6];
    parse_fields(path, line_no, fields, 1, v, 6);
    s.gyro = Vec3(v[0], v[1], v[2]);
    s.accel = Vec3(v[3], v[4], v[5]);
    out.push_back(s);
  });
  if (out.empty()) log::warn("{} contains no IMU samples", path.string());
  return out;
}

std::vector<TruthSample> load_truth_csv(const std::filesystem::path& path) {
  std::vector<TruthSample> out;
  read_rows(path, [&](const std::vector<std::string_view>& fields, long line_no) {
    if (fields.size() != 11 && fields.size() != 17) {
      fail(path, line_no, "expected 11 or 17 columns, found " + std::to_string(fields.size()));
    }
    TruthSample s;
    s.t_ns = parse_timestamp(path, line_no, fields[0], out.empty() ? 0 : out.back().t_ns, !out.empty());
    double v[16];
    parse_fields(path, line_no, fields, 1, v, fields.size() - 1);
    s.x = Vec3(v[0], v[1], v[2]);
    Eigen::Quaterniond q(v[3], v[4], v[5], v[6]);
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > kQuaternionNormTolerance) {
      fail(path, line_no, "quaternion norm " + std::to_string(norm) + " is not unit");
    }
    s.R = q.normalized().toRotationMatrix();
    s.v = Vec3(v[7], v[8], v[9]);
    if (fields.size() == 17) {
      s.gyro_bias = Vec3(v[10], v[11], v[12]);
      s.accel_bias = Vec3(v[13], v[14], v[15]);
    }
    out.push_back(s);
  });
  if (out.empty()) log::warn("{} contains no truth samples", path.string());
  return out;
}

Trial load_euroc_trial(const std::filesystem::path& dir) {
  Trial trial;
  trial.imu = load_imu_csv(find_csv(dir, "imu0"));
  trial.truth = load_truth_csv(find_csv(dir, "state_groundtruth_estimate0"));
  return trial;
}

std::vector<VehicleStreams> merge_trials(const std::vector<Trial>& trials, TimeNs period_ns, double max_duration_s) {
  if (trials.empty()) throw ConfigError("no trials to merge");
  if (period_ns <= 0) throw ConfigError("IMU period must be positive");
  std::vector<TimeNs> origins;
  Tick ticks = static_cast<Tick>(std::floor(max_duration_s * 1e9 / static_cast<double>(period_ns) + 1e-9));
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    if (t.imu.empty() || t.truth.empty()) throw DataError("trial " + std::to_string(i) + " is empty");
    const TimeNs begin = std::max(t.imu.front().t_ns, t.truth.front().t_ns);
    const TimeNs end = std::min(t.imu.back().t_ns, t.truth.back().t_ns);
    if (end <= begin) throw DataError("trial " + std::to_string(i) + ": IMU and truth do not overlap");
    const Tick available = (end - begin) / period_ns;
    if (available < ticks) {
      log::warn("trial {} covers only {:.3f} s; truncating all trials", i, to_seconds(end - begin));
      ticks = available;
    }
    origins.push_back(begin);
  }

  std::vector<VehicleStreams> out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    VehicleStreams v;
    v.imu.reserve(static_cast<std::size_t>(ticks));
    auto it = t.imu.begin();
    for (Tick k = 0; k < ticks; ++k) {
      const TimeNs at = origins[i] + k * period_ns;
      while (std::next(it) != t.imu.end() && std::next(it)->t_ns <= at) ++it;
      ImuSample s = *it;
      s.t_ns = k * period_ns;
      v.imu.push_back(s);
    }
    v.truth = std::make_shared<SampledTruthTrack>(t.truth, origins[i]);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace meswarm
