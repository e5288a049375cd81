#pragma once

#include <array>
#include <optional>
#include <vector>

#include "meswarm/lie.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

/// Ground truth of one vehicle at one instant.
struct TruthSample {
  TimeNs t_ns = 0;
  Mat3 R = Mat3::Identity();
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  std::optional<Vec3> gyro_bias;
  std::optional<Vec3> accel_bias;

  /// Pose with the true biases (zero where unknown).
  VehicleState state() const;
};

/// Truth plus the body-frame rates an ideal IMU would see.
struct KinematicSample {
  TimeNs t_ns = 0;
  Mat3 R = Mat3::Identity();
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();       // body angular velocity
  Vec3 accel_body = Vec3::Zero();  // R^T xddot, gravity excluded
};

struct Sinusoid {
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double phase_rad = 0.0;
};

/// offset + sum of amplitude * sin(2 pi f t + phase).
struct AxisSignal {
  double offset = 0.0;
  std::vector<Sinusoid> terms;

  double value(double t) const;
  double rate(double t) const;
  double accel(double t) const;
};

/// Smooth synthetic trajectory: per-axis position and ZYX Euler angles
/// (roll, pitch, yaw) as sums of sinusoids, so rates are closed-form.
struct TrajectorySpec {
  std::array<AxisSignal, 3> position;
  std::array<AxisSignal, 3> attitude;

  /// Throws ConfigError for non-finite terms, negative frequencies or a pitch
  /// that can reach +-pi/2 (where the Euler rates are singular).
  void validate() const;
  KinematicSample evaluate(TimeNs t_ns) const;
};

Mat3 euler_zyx(double roll, double pitch, double yaw);

/// Truth lookup at arbitrary times.
class TruthTrack {
 public:
  virtual ~TruthTrack() = default;
  virtual TruthSample at(TimeNs t_ns) const = 0;
};

/// Analytic trajectory with biases tabulated on the IMU grid.
class SyntheticTruthTrack final : public TruthTrack {
 public:
  SyntheticTruthTrack(TrajectorySpec spec, TimeNs period_ns, std::vector<Vec3> gyro_bias,
                      std::vector<Vec3> accel_bias);
  TruthSample at(TimeNs t_ns) const override;
  const TrajectorySpec& spec() const { return spec_; }

 private:
  TrajectorySpec spec_;
  TimeNs period_ns_;
  std::vector<Vec3> gyro_bias_;
  std::vector<Vec3> accel_bias_;
};

/// Recorded truth, interpolated linearly for position, velocity and biases
/// and by slerp for rotation. Times are shifted by `origin_ns` so that the
/// track starts at t = 0.
class SampledTruthTrack final : public TruthTrack {
 public:
  SampledTruthTrack(std::vector<TruthSample> samples, TimeNs origin_ns);
  TruthSample at(TimeNs t_ns) const override;
  const std::vector<TruthSample>& samples() const { return samples_; }

 private:
  std::vector<TruthSample> samples_;
  TimeNs origin_ns_;
};

/// Interpolates between a and b at fraction s in [0, 1].
TruthSample interpolate_truth(const TruthSample& a, const TruthSample& b, double s);

}  // namespace meswarm
