#include "meswarm/experiment.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "log.hpp"
#include "meswarm/dataset.hpp"
#include "meswarm/error.hpp"

namespace meswarm {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

Scenario build_scenario(const ExperimentConfig& config) {
  config.validate();
  Scenario scenario;
  scenario.world = config.world;
  scenario.noise = config.noise;
  scenario.noise.imu_period_s = 1.0 / config.schedule.imu_rate_hz;
  scenario.noise.landmark_period_s = 1.0 / config.schedule.landmark_rate_hz;
  scenario.noise.intervehicle_period_s = 1.0 / config.schedule.intervehicle_rate_hz;

  const TimeNs period_ns = config.schedule.imu_period_ns();
  const Tick ticks = config.schedule.tick_count();

  std::vector<Trial> trials;
  std::vector<std::size_t> trial_slots;
  scenario.vehicles.resize(config.vehicles.size());
  for (std::size_t i = 0; i < config.vehicles.size(); ++i) {
    if (const auto* d = std::get_if<DatasetVehicle>(&config.vehicles[i])) {
      log::info("loading trial {} for vehicle {}", d->path.string(), i);
      trials.push_back(load_euroc_trial(d->path));
      trial_slots.push_back(i);
      continue;
    }
    const auto& s = std::get<SyntheticVehicle>(config.vehicles[i]);
    const auto truth = sample_trajectory(s.trajectory, period_ns, ticks);
    SynthesizedImu imu =
        synthesize_imu(truth, s.imu_noise, s.bias, config.world, config.seed, static_cast<int>(i));
    VehicleStreams& v = scenario.vehicles[i];
    v.truth = std::make_shared<SyntheticTruthTrack>(s.trajectory, period_ns, std::move(imu.gyro_bias),
                                                    std::move(imu.accel_bias));
    v.imu = std::move(imu.samples);
  }
  if (!trials.empty()) {
    std::vector<VehicleStreams> merged = merge_trials(trials, period_ns, config.schedule.duration_s);
    for (std::size_t k = 0; k < merged.size(); ++k) scenario.vehicles[trial_slots[k]] = std::move(merged[k]);
  }
  return scenario;
}

std::string run_title(const ExperimentConfig& config) {
  std::string title = "mode: " + std::string(mode_name(config.mode));
  if (config.mode == Mode::kCentral) title += config.with_curvature ? " (with curvature)" : " (without curvature)";
  return title + ", vehicles: " + std::to_string(config.vehicles.size()) + ", seed: " + std::to_string(config.seed);
}

RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  return run_experiment(config, build_scenario(config), out_dir);
}

RunResult run_experiment(const ExperimentConfig& config, const Scenario& scenario,
                         const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  {
    auto out = open_output(out_dir / "effective_config.json");
    out << dump_config(config);
  }

  const Prior prior = make_prior(scenario, config.prior, config.seed);
  RunOptions options;
  options.mode = config.mode;
  options.filter = config.filter_options();
  options.encoding = config.encoding;
  options.bus_detail = config.bus_detail;

  std::ofstream bus;
  if (config.mode == Mode::kDistributed) {
    bus = open_output(out_dir / "bus.log");
    options.bus_log = &bus;
  } else {
    std::filesystem::remove(out_dir / "bus.log", ec);
  }

  log::info("running {}", run_title(config));
  RunResult result = run_schedule(config.schedule, scenario, prior, options);
  if (result.skipped_updates > 0) log::warn("{} singular updates were skipped", result.skipped_updates);
  if (result.positive_definite_failures > 0) {
    log::warn("K lost positive definiteness after {} updates", result.positive_definite_failures);
  }

  {
    auto out = open_output(out_dir / "metrics.csv");
    write_metrics_csv(out, result.rows);
  }
  {
    auto out = open_output(out_dir / "summary.csv");
    write_summary_csv(out, result.summary);
  }
  {
    auto out = open_output(out_dir / "summary.txt");
    write_summary_text(out, result.summary, run_title(config));
  }
  return result;
}

ExperimentConfig replica_config(int vehicles, double duration_s) {
  if (vehicles < 1) throw ConfigError("replica needs at least one vehicle");
  ExperimentConfig c;
  c.schedule.duration_s = duration_s;
  // Full S matrices for six vehicles would make the bus log several GB.
  c.encoding = UpdateEncoding::kFactored;
  c.bus_detail = MessageBus::LogDetail::kHeaders;
  c.world.landmarks = {{0, Vec3(-2.5, -2.0, 0.5)}, {1, Vec3(2.5, -1.5, 2.0)}, {2, Vec3(0.0, 3.0, 1.0)}};
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int i = 0; i < vehicles; ++i) {
    const double phase = kTwoPi * i / vehicles;
    const double f = 0.04 + 0.01 * (i % 3);
    SyntheticVehicle v;
    v.trajectory.position[0] = {0.0, {{2.0, f, phase}, {0.3, 3.0 * f, 0.5 * phase}}};
    v.trajectory.position[1] = {0.0, {{2.0, f, phase + 0.5 * std::numbers::pi}, {0.3, 2.0 * f, phase}}};
    v.trajectory.position[2] = {1.3, {{0.6, 2.0 * f, phase}}};
    v.trajectory.attitude[0] = {0.0, {{0.1, 0.3, phase}}};
    v.trajectory.attitude[1] = {0.0, {{0.1, 0.25, phase + 1.0}}};
    v.trajectory.attitude[2] = {phase, {{1.0, f, phase}}};
    v.imu_noise.gyro = c.noise.gyro;
    v.imu_noise.accel = c.noise.accel;
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    v.bias.gyro_initial = Vec3(0.02, -0.01, 0.015) * sign;
    v.bias.accel_initial = Vec3(-0.1, 0.2, 0.1) * sign;
    c.vehicles.push_back(v);
  }
  return c;
}

ExperimentConfig example_config() {
  ExperimentConfig c = replica_config(3, 30.0);
  c.encoding = UpdateEncoding::kDense;
  c.bus_detail = MessageBus::LogDetail::kFull;
  for (VehicleSource& source : c.vehicles) {
    auto& v = std::get<SyntheticVehicle>(source);
    v.bias.gyro_initial = Vec3::Constant(0.02);
    v.bias.accel_initial = Vec3::Constant(0.2);
  }
  return c;
}

}  // namespace meswarm
