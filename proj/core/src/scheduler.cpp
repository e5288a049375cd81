#include "meswarm/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "log.hpp"
#include "meswarm/error.hpp"

namespace meswarm {

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::kNone: return "none";
    case Mode::kCentral: return "central";
    case Mode::kDistributed: return "distributed";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  if (name == "none") return Mode::kNone;
  if (name == "central") return Mode::kCentral;
  if (name == "distributed") return Mode::kDistributed;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected none, central or distributed)");
}

void ScheduleConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(imu_rate_hz) || !positive(landmark_rate_hz) || !positive(intervehicle_rate_hz)) {
    throw ConfigError("sensor rates must be positive");
  }
  if (landmark_rate_hz > imu_rate_hz || intervehicle_rate_hz > imu_rate_hz) {
    throw ConfigError("observation rates may not exceed the IMU rate");
  }
  if (!std::isfinite(duration_s) || duration_s < 0.0) throw ConfigError("duration must be non-negative");
  if (!(landmark_phase_s >= 0.0) || !(intervehicle_phase_s >= 0.0) || !std::isfinite(landmark_phase_s) ||
      !std::isfinite(intervehicle_phase_s)) {
    throw ConfigError("observation phases must be finite and non-negative");
  }
  for (double p : {landmark_dropout, intervehicle_dropout}) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probabilities must lie in [0, 1)");
  }
  if (!(max_range_m > 0.0)) throw ConfigError("range gate must be positive");
}

TimeNs ScheduleConfig::imu_period_ns() const { return static_cast<TimeNs>(std::llround(1e9 / imu_rate_hz)); }

Tick ScheduleConfig::tick_count() const { return static_cast<Tick>(std::llround(duration_s * imu_rate_hz)); }

Tick round_up_to_tick(TimeNs t_ns, TimeNs period_ns) {
  if (period_ns <= 0) throw ConfigError("IMU period must be positive");
  if (t_ns <= 0) return -((-t_ns) / period_ns);
  return (t_ns + period_ns - 1) / period_ns;
}

void PriorConfig::validate() const {
  if (!std::isfinite(position_offset_m) || position_offset_m < 0.0 || !std::isfinite(rotation_offset_rad) ||
      rotation_offset_rad < 0.0) {
    throw ConfigError("prior offsets must be finite and non-negative");
  }
  if (!(k0_diagonal.array() > 0.0).all() || !k0_diagonal.allFinite()) {
    throw ConfigError("K0 diagonal entries must be positive");
  }
}

Prior make_prior(const Scenario& scenario, const PriorConfig& config, std::uint64_t seed) {
  config.validate();
  if (scenario.vehicles.empty()) throw ConfigError("scenario has no vehicles");
  Prior prior;
  std::vector<Mat15> blocks;
  for (std::size_t i = 0; i < scenario.vehicles.size(); ++i) {
    const auto& track = scenario.vehicles[i].truth;
    if (!track) throw ConfigError("vehicle " + std::to_string(i) + " has no truth source");
    const TruthSample t0 = track->at(0);
    NoiseStream stream(seed, NoiseChannel::kPrior, static_cast<int>(i));
    const Vec3 dp = stream.normal3().normalized();
    const Vec3 dr = stream.normal3().normalized();
    VehicleState X = VehicleState::identity();
    X.pose.R = t0.R * so3_exp(config.rotation_offset_rad * dr);
    X.pose.x = t0.x + config.position_offset_m * dp;
    prior.X0.push_back(X);
    blocks.push_back(config.k0_diagonal.asDiagonal());
  }
  prior.K0 = block_diagonal_gain(blocks);
  return prior;
}

ObservationSchedule::ObservationSchedule(const ScheduleConfig& config, const Scenario& scenario,
                                         bool intervehicle_enabled)
    : config_(config), scenario_(&scenario), period_ns_(config.imu_period_ns()) {
  config_.validate();
  channels_.push_back({ObservationKind::kLandmark, config.landmark_rate_hz, config.landmark_phase_s,
                       config.landmark_dropout});
  if (intervehicle_enabled && scenario.vehicles.size() > 1) {
    channels_.push_back({ObservationKind::kInterVehicle, config.intervehicle_rate_hz, config.intervehicle_phase_s,
                         config.intervehicle_dropout});
  }
}

TimeNs ObservationSchedule::epoch_time(const Channel& channel, long long epoch) const {
  return static_cast<TimeNs>(std::llround(channel.phase_s * 1e9 + static_cast<double>(epoch) * 1e9 / channel.rate_hz));
}

NoiseStream& ObservationSchedule::stream(std::map<std::pair<int, int>, NoiseStream>& streams, NoiseChannel channel,
                                         int observer, int subject) {
  const auto key = std::make_pair(observer, subject);
  auto it = streams.find(key);
  if (it == streams.end()) it = streams.emplace(key, NoiseStream(config_.seed, channel, observer, subject)).first;
  return it->second;
}

double ObservationSchedule::interval(const Observation& obs) {
  const double nominal =
      1.0 / (obs.kind == ObservationKind::kLandmark ? config_.landmark_rate_hz : config_.intervehicle_rate_hz);
  const Tick tick = obs.t_ns / period_ns_;
  const SourceKey key = source_key(obs);
  auto it = last_delivery_.find(key);
  double dt = nominal;
  if (it != last_delivery_.end()) dt = std::min(to_seconds((tick - it->second) * period_ns_), 10.0 * nominal);
  last_delivery_[key] = tick;
  return dt;
}

std::vector<Observation> ObservationSchedule::at(Tick tick) {
  if (tick <= last_tick_) throw ConfigError("observation schedule queried out of order");
  last_tick_ = tick;
  std::vector<Observation> out;
  const int n = static_cast<int>(scenario_->vehicles.size());
  const WorldConfig& world = scenario_->world;

  for (Channel& channel : channels_) {
    while (round_up_to_tick(epoch_time(channel, channel.next_epoch), period_ns_) <= tick) {
      const TimeNs t_raw = epoch_time(channel, channel.next_epoch++);
      std::vector<TruthSample> truth;
      truth.reserve(n);
      for (const VehicleStreams& v : scenario_->vehicles) truth.push_back(v.truth->at(t_raw));

      auto emit = [&](int observer, int subject, const Vec3& y) {
        Observation obs;
        obs.kind = channel.kind;
        obs.observer = observer;
        obs.subject = subject;
        obs.y = y;
        obs.t_ns = tick * period_ns_;
        obs.dt_s = interval(obs);
        out.push_back(obs);
      };

      if (channel.kind == ObservationKind::kLandmark) {
        for (int i = 0; i < n; ++i) {
          const VehicleState X = truth[i].state();
          for (const auto& [id, p] : world.landmarks) {
            const double u = stream(landmark_dropout_, NoiseChannel::kLandmarkDropout, i, id).uniform();
            const Vec3 y = synthesize_measurement(channel.kind, X, X, id, world, scenario_->noise.landmark_D,
                                                  stream(landmark_noise_, NoiseChannel::kLandmark, i, id));
            if (u < channel.dropout || (p - X.x()).norm() > config_.max_range_m) continue;
            emit(i, id, y);
          }
        }
      } else {
        for (int i = 0; i < n; ++i) {
          const VehicleState X = truth[i].state();
          for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const VehicleState Y = truth[j].state();
            const double u = stream(intervehicle_dropout_, NoiseChannel::kInterVehicleDropout, i, j).uniform();
            const Vec3 y = synthesize_measurement(channel.kind, X, Y, j, world, scenario_->noise.intervehicle_D,
                                                  stream(intervehicle_noise_, NoiseChannel::kInterVehicle, i, j));
            if (u < channel.dropout || (Y.x() - X.x()).norm() > config_.max_range_m) continue;
            emit(i, j, y);
          }
        }
      }
    }
  }
  return out;
}

IndependentEstimator::IndependentEstimator(const Prior& prior, const WorldConfig& world, const NoiseModel& noise,
                                           FilterOptions options) {
  validate_prior(prior);
  const int n = static_cast<int>(prior.X0.size());
  filters_.reserve(n);
  for (int i = 0; i < n; ++i) {
    Prior single;
    single.X0 = {prior.X0[i]};
    single.K0 = prior.K0.block<kDof, kDof>(i * kDof, i * kDof);
    // Each single-vehicle filter is vehicle 0 of its own network; carry any
    // per-vehicle W override across.
    NoiseModel local = noise;
    local.w_override.clear();
    if (auto it = noise.w_override.find(i); it != noise.w_override.end()) local.w_override[0] = it->second;
    filters_.emplace_back(single, world, local, options);
  }
}

void IndependentEstimator::update(const Observation& obs) {
  if (obs.kind != ObservationKind::kLandmark) {
    throw ObservationError("independent filters cannot use inter-vehicle observations");
  }
  if (obs.observer < 0 || obs.observer >= static_cast<int>(filters_.size())) {
    throw ObservationError("observer index out of range");
  }
  Observation local = obs;
  local.observer = 0;
  filters_[obs.observer].update(local);
}

void IndependentEstimator::propagate(std::span<const ImuSample> imu, double dt) {
  if (imu.size() != filters_.size()) throw DataError("need one IMU sample per vehicle");
  for (std::size_t i = 0; i < filters_.size(); ++i) filters_[i].propagate(imu.subspan(i, 1), dt);
}

NetworkState IndependentEstimator::estimate() const {
  NetworkState X;
  X.reserve(filters_.size());
  for (const JointFilter& f : filters_) X.push_back(f.estimate().front());
  return X;
}

int IndependentEstimator::positive_definite_failures() const {
  int total = 0;
  for (const JointFilter& f : filters_) total += f.positive_definite_failures();
  return total;
}

CentralEstimator::CentralEstimator(const Prior& prior, const WorldConfig& world, const NoiseModel& noise,
                                   FilterOptions options)
    : filter_(prior, world, noise, options) {}

void CentralEstimator::update(const Observation& obs) { filter_.update(obs); }

void CentralEstimator::propagate(std::span<const ImuSample> imu, double dt) { filter_.propagate(imu, dt); }

DistributedEstimator::DistributedEstimator(const Prior& prior, const WorldConfig& world, const NoiseModel& noise,
                                           FilterOptions options, UpdateEncoding encoding)
    : network_(prior, world, noise, options, encoding) {}

std::unique_ptr<Estimator> make_estimator(Mode mode, const Prior& prior, const WorldConfig& world,
                                          const NoiseModel& noise, FilterOptions options, UpdateEncoding encoding) {
  switch (mode) {
    case Mode::kNone: return std::make_unique<IndependentEstimator>(prior, world, noise, options);
    case Mode::kCentral: return std::make_unique<CentralEstimator>(prior, world, noise, options);
    case Mode::kDistributed:
      return std::make_unique<DistributedEstimator>(prior, world, noise, options, encoding);
  }
  throw ConfigError("unknown mode");
}

RunResult run_schedule(const ScheduleConfig& config, const Scenario& scenario, const Prior& prior,
                       const RunOptions& options) {
  config.validate();
  const int n = static_cast<int>(scenario.vehicles.size());
  if (n == 0) throw ConfigError("scenario has no vehicles");
  if (static_cast<int>(prior.X0.size()) != n) throw ConfigError("prior and scenario disagree on the vehicle count");

  const TimeNs period_ns = config.imu_period_ns();
  const double dt = to_seconds(period_ns);
  Tick ticks = config.tick_count();
  for (int i = 0; i < n; ++i) {
    const VehicleStreams& v = scenario.vehicles[i];
    if (!v.truth) throw ConfigError("vehicle " + std::to_string(i) + " has no truth source");
    const auto available = static_cast<Tick>(v.imu.size());
    if (available < ticks) {
      log::warn("vehicle {} has only {} IMU samples; truncating the run from {} to {} ticks", i, available, ticks,
                available);
      ticks = available;
    }
  }

  std::unique_ptr<Estimator> estimator =
      make_estimator(options.mode, prior, scenario.world, scenario.noise, options.filter, options.encoding);
  DistributedNetwork* network = nullptr;
  if (auto* d = dynamic_cast<DistributedEstimator*>(estimator.get())) {
    network = &d->network();
    network->bus().set_sink(options.bus_log, options.bus_detail);
  }

  ObservationSchedule schedule(config, scenario, options.mode != Mode::kNone);
  RunResult result;
  result.ticks = ticks;
  result.rows.reserve(static_cast<std::size_t>(ticks + 1) * n);
  std::vector<ImuSample> imu(n);
  NetworkTruth truth;
  truth.vehicles.resize(n);

  for (Tick k = 0; k <= ticks; ++k) {
    for (const Observation& obs : schedule.at(k)) {
      ++result.observations;
      try {
        estimator->update(obs);
      } catch (const UpdateSingularError& e) {
        ++result.skipped_updates;
        log::warn("tick {}: skipped update from vehicle {} on subject {}: {}", k, obs.observer, obs.subject,
                  e.what());
      }
    }

    EstimateSnapshot snapshot{k * period_ns, estimator->estimate()};
    truth.t_ns = snapshot.t_ns;
    for (int i = 0; i < n; ++i) {
      truth.vehicles[i] = scenario.vehicles[i].truth->at(snapshot.t_ns);
      const VehicleState& X = snapshot.X[i];
      const bool finite = X.R().allFinite() && X.x().allFinite() && X.v().allFinite() &&
                          X.gyro_bias.allFinite() && X.accel_bias.allFinite();
      if (!finite || (X.x() - truth.vehicles[i].x).norm() > options.divergence_threshold_m) {
        throw NumericalError("filter diverged at tick " + std::to_string(k) + " (vehicle " + std::to_string(i) +
                             ")");
      }
    }
    append_metrics(result.rows, snapshot, truth);
    if (options.on_tick) options.on_tick(k, *estimator);

    if (k < ticks) {
      for (int i = 0; i < n; ++i) imu[i] = scenario.vehicles[i].imu[k];
      estimator->propagate(imu, dt);
    }
  }

  result.summary = summarize(result.rows);
  result.positive_definite_failures = estimator->positive_definite_failures();
  if (network != nullptr) {
    result.bus = network->bus().records();
    network->bus().set_sink(nullptr);
  }
  return result;
}

}  // namespace meswarm
