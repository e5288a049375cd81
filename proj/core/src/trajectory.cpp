#include "meswarm/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "meswarm/error.hpp"

namespace meswarm {

VehicleState TruthSample::state() const {
  VehicleState X;
  X.pose = {R, x, v};
  X.gyro_bias = gyro_bias.value_or(Vec3::Zero());
  X.accel_bias = accel_bias.value_or(Vec3::Zero());
  return X;
}

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double AxisSignal::value(double t) const {
  double out = offset;
  for (const auto& s : terms) out += s.amplitude * std::sin(kTwoPi * s.frequency_hz * t + s.phase_rad);
  return out;
}

double AxisSignal::rate(double t) const {
  double out = 0.0;
  for (const auto& s : terms) {
    const double w = kTwoPi * s.frequency_hz;
    out += s.amplitude * w * std::cos(w * t + s.phase_rad);
  }
  return out;
}

double AxisSignal::accel(double t) const {
  double out = 0.0;
  for (const auto& s : terms) {
    const double w = kTwoPi * s.frequency_hz;
    out -= s.amplitude * w * w * std::sin(w * t + s.phase_rad);
  }
  return out;
}

void TrajectorySpec::validate() const {
  auto check_axis = [](const AxisSignal& a) {
    if (!std::isfinite(a.offset)) throw ConfigError("trajectory offset must be finite");
    for (const auto& s : a.terms) {
      if (!std::isfinite(s.amplitude) || !std::isfinite(s.frequency_hz) || !std::isfinite(s.phase_rad)) {
        throw ConfigError("trajectory terms must be finite");
      }
      if (s.frequency_hz < 0.0) throw ConfigError("trajectory frequencies must be non-negative");
    }
  };
  for (const auto& a : position) check_axis(a);
  for (const auto& a : attitude) check_axis(a);
  double pitch_bound = std::abs(attitude[1].offset);
  for (const auto& s : attitude[1].terms) pitch_bound += std::abs(s.amplitude);
  if (pitch_bound >= 0.5 * std::numbers::pi - 1e-3) {
    throw ConfigError("trajectory pitch may reach +-pi/2, where Euler rates are undefined");
  }
}

Mat3 euler_zyx(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

KinematicSample TrajectorySpec::evaluate(TimeNs t_ns) const {
  const double t = to_seconds(t_ns);
  KinematicSample k;
  k.t_ns = t_ns;
  const double roll = attitude[0].value(t), pitch = attitude[1].value(t), yaw = attitude[2].value(t);
  const double droll = attitude[0].rate(t), dpitch = attitude[1].rate(t), dyaw = attitude[2].rate(t);
  k.R = euler_zyx(roll, pitch, yaw);
  const double sr = std::sin(roll), cr = std::cos(roll), sp = std::sin(pitch), cp = std::cos(pitch);
  k.omega = Vec3(droll - dyaw * sp, dpitch * cr + dyaw * cp * sr, -dpitch * sr + dyaw * cp * cr);
  Vec3 acc_world;
  for (int i = 0; i < 3; ++i) {
    k.x(i) = position[i].value(t);
    k.v(i) = position[i].rate(t);
    acc_world(i) = position[i].accel(t);
  }
  k.accel_body = k.R.transpose() * acc_world;
  return k;
}

SyntheticTruthTrack::SyntheticTruthTrack(TrajectorySpec spec, TimeNs period_ns, std::vector<Vec3> gyro_bias,
                                         std::vector<Vec3> accel_bias)
    : spec_(std::move(spec)),
      period_ns_(period_ns),
      gyro_bias_(std::move(gyro_bias)),
      accel_bias_(std::move(accel_bias)) {
  if (period_ns_ <= 0) throw ConfigError("IMU period must be positive");
  if (gyro_bias_.empty() || gyro_bias_.size() != accel_bias_.size()) {
    throw ConfigError("bias tables must be non-empty and of equal length");
  }
}

TruthSample SyntheticTruthTrack::at(TimeNs t_ns) const {
  const KinematicSample k = spec_.evaluate(t_ns);
  TruthSample s;
  s.t_ns = t_ns;
  s.R = k.R;
  s.x = k.x;
  s.v = k.v;
  const auto idx = static_cast<std::size_t>(
      std::clamp<TimeNs>(t_ns / period_ns_, 0, static_cast<TimeNs>(gyro_bias_.size()) - 1));
  s.gyro_bias = gyro_bias_[idx];
  s.accel_bias = accel_bias_[idx];
  return s;
}

TruthSample interpolate_truth(const TruthSample& a, const TruthSample& b, double s) {
  TruthSample out;
  out.t_ns = a.t_ns + static_cast<TimeNs>(std::llround(s * static_cast<double>(b.t_ns - a.t_ns)));
  out.x = (1.0 - s) * a.x + s * b.x;
  out.v = (1.0 - s) * a.v + s * b.v;
  out.R = Eigen::Quaterniond(a.R).slerp(s, Eigen::Quaterniond(b.R)).toRotationMatrix();
  if (a.gyro_bias && b.gyro_bias) out.gyro_bias = (1.0 - s) * *a.gyro_bias + s * *b.gyro_bias;
  if (a.accel_bias && b.accel_bias) out.accel_bias = (1.0 - s) * *a.accel_bias + s * *b.accel_bias;
  return out;
}

SampledTruthTrack::SampledTruthTrack(std::vector<TruthSample> samples, TimeNs origin_ns)
    : samples_(std::move(samples)), origin_ns_(origin_ns) {
  if (samples_.empty()) throw DataError("truth track is empty");
}

TruthSample SampledTruthTrack::at(TimeNs t_ns) const {
  const TimeNs t = t_ns + origin_ns_;
  TruthSample out;
  if (t <= samples_.front().t_ns) {
    out = samples_.front();
  } else if (t >= samples_.back().t_ns) {
    out = samples_.back();
  } else {
    const auto hi = std::upper_bound(samples_.begin(), samples_.end(), t,
                                     [](TimeNs value, const TruthSample& s) { return value < s.t_ns; });
    const auto lo = hi - 1;
    const double s = static_cast<double>(t - lo->t_ns) / static_cast<double>(hi->t_ns - lo->t_ns);
    out = interpolate_truth(*lo, *hi, s);
  }
  out.t_ns = t_ns;
  return out;
}

}  // namespace meswarm
