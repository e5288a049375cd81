#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "meswarm/lie.hpp"
#include "meswarm/models.hpp"
#include "meswarm/trajectory.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

/// Independent random channels. Each (channel, vehicle, subject) tuple owns
/// its own generator so toggling one channel never shifts another's draws.
enum class NoiseChannel : std::uint32_t {
  kImu = 1,
  kGyroBiasWalk = 2,
  kAccelBiasWalk = 3,
  kLandmark = 4,
  kInterVehicle = 5,
  kLandmarkDropout = 6,
  kInterVehicleDropout = 7,
  kPrior = 8,
};

class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, NoiseChannel channel, int vehicle, int subject = 0);

  double normal();
  Vec3 normal3();
  double uniform();

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

struct BiasProcess {
  Vec3 gyro_initial = Vec3::Zero();
  Vec3 accel_initial = Vec3::Zero();
  /// Per sqrt(second) increments B_bw, B_ba of the random walk; zero keeps the
  /// biases constant.
  Mat3 gyro_walk = Mat3::Zero();
  Mat3 accel_walk = Mat3::Zero();
};

struct ImuNoise {
  Mat3 gyro = Mat3::Zero();   // per-sample white noise weight B_w
  Mat3 accel = Mat3::Zero();  // per-sample white noise weight B_a
};

struct SynthesizedImu {
  std::vector<ImuSample> samples;
  std::vector<Vec3> gyro_bias;  // true bias at each sample
  std::vector<Vec3> accel_bias;
};

/// u_w = w + b_w + B_w d, u_a = a + b_a + R^T g + B_a d, with the biases
/// following the seeded random walk b_{k+1} = b_k + B_b d sqrt(dt).
SynthesizedImu synthesize_imu(const std::vector<KinematicSample>& truth, const ImuNoise& noise,
                              const BiasProcess& bias, const WorldConfig& world, std::uint64_t seed, int vehicle);

/// Where on each IMU period the kinematics behind a held sample are taken.
/// kMidpoint makes the sample-and-hold integration second-order accurate;
/// kTickStart mimics a sensor that reports the instantaneous rate at t_k.
enum class SamplePoint { kMidpoint, kTickStart };

/// Samples a synthetic trajectory for the IMU samples 0..ticks, stamped on the
/// grid t_k = k * period.
std::vector<KinematicSample> sample_trajectory(const TrajectorySpec& spec, TimeNs period_ns, Tick ticks,
                                               SamplePoint point = SamplePoint::kMidpoint);

/// y = h(truth) + D eps with eps standard normal drawn from `stream`.
/// For landmarks `target` is ignored.
Vec3 synthesize_measurement(ObservationKind kind, const VehicleState& observer, const VehicleState& target,
                            int subject, const WorldConfig& world, const Mat3& D, NoiseStream& stream);

}  // namespace meswarm
