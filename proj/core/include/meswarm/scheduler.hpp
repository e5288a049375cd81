#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "meswarm/distributed_filter.hpp"
#include "meswarm/joint_filter.hpp"
#include "meswarm/metrics.hpp"
#include "meswarm/models.hpp"
#include "meswarm/synthesis.hpp"
#include "meswarm/trajectory.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

enum class Mode { kNone, kCentral, kDistributed };

std::string_view mode_name(Mode mode);
/// Throws ConfigError for anything but none|central|distributed.
Mode parse_mode(std::string_view name);

struct ScheduleConfig {
  double imu_rate_hz = 200.0;
  double landmark_rate_hz = 10.0;
  double intervehicle_rate_hz = 10.0;
  double duration_s = 30.0;
  /// First epoch of each observation channel; epochs off the IMU grid are
  /// delivered at the next IMU tick.
  double landmark_phase_s = 0.0;
  double intervehicle_phase_s = 0.0;
  double landmark_dropout = 0.0;
  double intervehicle_dropout = 0.0;
  /// Observations of subjects farther than this are not made.
  double max_range_m = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;

  /// Throws ConfigError for non-positive rates, an observation rate above the
  /// IMU rate, dropout outside [0, 1) or a negative duration.
  void validate() const;
  TimeNs imu_period_ns() const;
  Tick tick_count() const;
};

/// Observation timestamps are rounded up to the next multiple of the IMU
/// period.
Tick round_up_to_tick(TimeNs t_ns, TimeNs period_ns);

struct VehicleStreams {
  std::vector<ImuSample> imu;  // sample k is held over tick k
  std::shared_ptr<const TruthTrack> truth;
};

struct Scenario {
  WorldConfig world;
  NoiseModel noise;
  std::vector<VehicleStreams> vehicles;
};

struct PriorConfig {
  double position_offset_m = 0.1;
  double rotation_offset_rad = 0.1;
  /// Diagonal of each vehicle's 15x15 K0 block (rot, pos, vel, gyro bias,
  /// accel bias).
  Vec15 k0_diagonal = (Vec15() << Vec3::Constant(0.01), Vec3::Constant(0.01), Vec3::Constant(1.0),
                       Vec3::Constant(1e-3), Vec3::Constant(0.05))
                          .finished();

  void validate() const;
};

/// Truth pose at t = 0 perturbed by the configured offsets along seeded random
/// directions; zero velocity and zero biases.
Prior make_prior(const Scenario& scenario, const PriorConfig& config, std::uint64_t seed);

/// Generates the observations due at each tick, in (channel, observer,
/// subject) order: landmarks first, then inter-vehicle pairs. Must be queried
/// with strictly increasing ticks.
class ObservationSchedule {
 public:
  ObservationSchedule(const ScheduleConfig& config, const Scenario& scenario, bool intervehicle_enabled);

  std::vector<Observation> at(Tick tick);

 private:
  struct Channel {
    ObservationKind kind;
    double rate_hz;
    double phase_s;
    double dropout;
    long long next_epoch = 0;
  };

  TimeNs epoch_time(const Channel& channel, long long epoch) const;
  NoiseStream& stream(std::map<std::pair<int, int>, NoiseStream>& streams, NoiseChannel channel, int observer,
                      int subject);
  double interval(const Observation& obs);

  ScheduleConfig config_;
  const Scenario* scenario_;
  std::vector<Channel> channels_;
  TimeNs period_ns_;
  Tick last_tick_ = -1;
  std::map<std::pair<int, int>, NoiseStream> landmark_noise_, landmark_dropout_;
  std::map<std::pair<int, int>, NoiseStream> intervehicle_noise_, intervehicle_dropout_;
  std::map<SourceKey, Tick> last_delivery_;
};

/// Common face of the three filter variants.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual void update(const Observation& obs) = 0;
  virtual void propagate(std::span<const ImuSample> imu, double dt) = 0;
  virtual NetworkState estimate() const = 0;
  virtual int positive_definite_failures() const { return 0; }
};

/// n single-vehicle filters with no coupling; inter-vehicle observations are
/// rejected.
class IndependentEstimator final : public Estimator {
 public:
  IndependentEstimator(const Prior& prior, const WorldConfig& world, const NoiseModel& noise,
                       FilterOptions options);
  void update(const Observation& obs) override;
  void propagate(std::span<const ImuSample> imu, double dt) override;
  NetworkState estimate() const override;
  int positive_definite_failures() const override;

 private:
  std::vector<JointFilter> filters_;
};

class CentralEstimator final : public Estimator {
 public:
  CentralEstimator(const Prior& prior, const WorldConfig& world, const NoiseModel& noise, FilterOptions options);
  void update(const Observation& obs) override;
  void propagate(std::span<const ImuSample> imu, double dt) override;
  NetworkState estimate() const override { return filter_.estimate(); }
  int positive_definite_failures() const override { return filter_.positive_definite_failures(); }
  const JointFilter& filter() const { return filter_; }

 private:
  JointFilter filter_;
};

class DistributedEstimator final : public Estimator {
 public:
  DistributedEstimator(const Prior& prior, const WorldConfig& world, const NoiseModel& noise, FilterOptions options,
                       UpdateEncoding encoding = UpdateEncoding::kDense);
  void update(const Observation& obs) override { network_.process(obs); }
  void propagate(std::span<const ImuSample> imu, double dt) override { network_.propagate(imu, dt); }
  NetworkState estimate() const override { return network_.estimate(); }
  DistributedNetwork& network() { return network_; }
  const DistributedNetwork& network() const { return network_; }

 private:
  DistributedNetwork network_;
};

std::unique_ptr<Estimator> make_estimator(Mode mode, const Prior& prior, const WorldConfig& world,
                                          const NoiseModel& noise, FilterOptions options,
                                          UpdateEncoding encoding = UpdateEncoding::kDense);

struct RunOptions {
  Mode mode = Mode::kCentral;
  FilterOptions filter;
  UpdateEncoding encoding = UpdateEncoding::kDense;
  /// Receives the bus log in distributed mode.
  std::ostream* bus_log = nullptr;
  MessageBus::LogDetail bus_detail = MessageBus::LogDetail::kFull;
  /// Position error above which the run is declared divergent.
  double divergence_threshold_m = 1e3;
  /// Called after the observations of each tick, before propagation.
  std::function<void(Tick, const Estimator&)> on_tick;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  Summary summary;
  Tick ticks = 0;
  std::size_t observations = 0;
  std::size_t skipped_updates = 0;
  int positive_definite_failures = 0;
  std::vector<BusRecord> bus;
};

/// Runs one filter mode over the scenario. Each tick k first delivers the
/// observations due at k, records metrics at t_k and then propagates with IMU
/// sample k. Throws NumericalError on divergence.
RunResult run_schedule(const ScheduleConfig& config, const Scenario& scenario, const Prior& prior,
                       const RunOptions& options);

}  // namespace meswarm
