#include "meswarm/synthesis.hpp"

#include <cmath>

#include "meswarm/error.hpp"

namespace meswarm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t seed, NoiseChannel channel, int vehicle, int subject) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(channel));
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(vehicle)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(subject)));
  engine_.seed(h);
}

double NoiseStream::normal() { return normal_(engine_); }

Vec3 NoiseStream::normal3() {
  const double a = normal();
  const double b = normal();
  const double c = normal();
  return {a, b, c};
}

double NoiseStream::uniform() { return uniform_(engine_); }

std::vector<KinematicSample> sample_trajectory(const TrajectorySpec& spec, TimeNs period_ns, Tick ticks,
                                               SamplePoint point) {
  spec.validate();
  if (period_ns <= 0 || ticks < 0) throw ConfigError("invalid sampling grid");
  const TimeNs offset = point == SamplePoint::kMidpoint ? period_ns / 2 : 0;
  std::vector<KinematicSample> out;
  out.reserve(static_cast<std::size_t>(ticks) + 1);
  for (Tick k = 0; k <= ticks; ++k) {
    KinematicSample s = spec.evaluate(k * period_ns + offset);
    s.t_ns = k * period_ns;
    out.push_back(s);
  }
  return out;
}

SynthesizedImu synthesize_imu(const std::vector<KinematicSample>& truth, const ImuNoise& noise,
                              const BiasProcess& bias, const WorldConfig& world, std::uint64_t seed, int vehicle) {
  NoiseStream imu_stream(seed, NoiseChannel::kImu, vehicle);
  NoiseStream gyro_walk(seed, NoiseChannel::kGyroBiasWalk, vehicle);
  NoiseStream accel_walk(seed, NoiseChannel::kAccelBiasWalk, vehicle);

  SynthesizedImu out;
  out.samples.reserve(truth.size());
  Vec3 bw = bias.gyro_initial;
  Vec3 ba = bias.accel_initial;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const KinematicSample& s = truth[k];
    if (k > 0) {
      const double dt = to_seconds(s.t_ns - truth[k - 1].t_ns);
      if (!(dt > 0.0)) throw DataError("truth timestamps must be strictly increasing");
      bw += bias.gyro_walk * gyro_walk.normal3() * std::sqrt(dt);
      ba += bias.accel_walk * accel_walk.normal3() * std::sqrt(dt);
    }
    const Vec3 dw = imu_stream.normal3();
    const Vec3 da = imu_stream.normal3();
    ImuSample u;
    u.t_ns = s.t_ns;
    u.gyro = s.omega + bw + noise.gyro * dw;
    u.accel = s.accel_body + ba + s.R.transpose() * world.gravity + noise.accel * da;
    out.samples.push_back(u);
    out.gyro_bias.push_back(bw);
    out.accel_bias.push_back(ba);
  }
  return out;
}

Vec3 synthesize_measurement(ObservationKind kind, const VehicleState& observer, const VehicleState& target,
                            int subject, const WorldConfig& world, const Mat3& D, NoiseStream& stream) {
  const Vec3 eps = stream.normal3();
  const Vec3 h = kind == ObservationKind::kLandmark
                     ? predict_landmark(observer, world.landmark(subject))
                     : predict_intervehicle(observer, target, world.marker(subject));
  return h + D * eps;
}

}  // namespace meswarm
