#pragma once

#include <filesystem>
#include <string>

#include "meswarm/config.hpp"
#include "meswarm/scheduler.hpp"

namespace meswarm {

/// Synthesises the IMU streams of synthetic vehicles and loads and merges the
/// dataset vehicles. Sensor periods in the noise model follow the schedule.
Scenario build_scenario(const ExperimentConfig& config);

/// Runs config.mode and writes metrics.csv, summary.csv, summary.txt,
/// effective_config.json and, in distributed mode, bus.log into `out_dir`.
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Same, on a prebuilt scenario (lets several modes share one synthesis).
RunResult run_experiment(const ExperimentConfig& config, const Scenario& scenario,
                         const std::filesystem::path& out_dir);

std::string run_title(const ExperimentConfig& config);

/// Synthetic stand-in for the six-vehicle indoor-room experiment: vehicles
/// flying smooth loops in an 8 m x 8 m room, three landmarks, 200 Hz IMU and
/// 10 Hz landmark and inter-vehicle observations.
ExperimentConfig replica_config(int vehicles = 6, double duration_s = 90.0);

/// Small three-vehicle scene with constant biases, used as the shipped
/// example configuration.
ExperimentConfig example_config();

}  // namespace meswarm
