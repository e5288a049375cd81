#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "meswarm/distributed_filter.hpp"
#include "meswarm/gain_dynamics.hpp"
#include "meswarm/models.hpp"
#include "meswarm/net_message.hpp"
#include "meswarm/scheduler.hpp"
#include "meswarm/synthesis.hpp"
#include "meswarm/trajectory.hpp"

namespace meswarm {

struct SyntheticVehicle {
  TrajectorySpec trajectory;
  ImuNoise imu_noise;
  BiasProcess bias;
};

struct DatasetVehicle {
  std::filesystem::path path;  // EuRoC trial directory
};

using VehicleSource = std::variant<SyntheticVehicle, DatasetVehicle>;

struct ExperimentConfig {
  std::uint64_t seed = 1;
  Mode mode = Mode::kCentral;
  bool with_curvature = true;
  IntegrationScheme scheme = IntegrationScheme::kExactHold;
  UpdateEncoding encoding = UpdateEncoding::kDense;
  MessageBus::LogDetail bus_detail = MessageBus::LogDetail::kFull;
  std::filesystem::path output_dir = "out";

  WorldConfig world;
  NoiseModel noise;
  ScheduleConfig schedule;
  PriorConfig prior;
  std::vector<VehicleSource> vehicles;

  /// Throws ConfigError for an empty network, missing dataset directories,
  /// landmark/marker references to unknown vehicles or invalid sub-configs.
  void validate() const;
  FilterOptions filter_options() const;
};

/// Parses a JSON config. Relative dataset paths are resolved against
/// `base_dir`. Matrix-valued noise parameters accept a scalar (times I), a
/// 3-vector (diagonal) or a 3x3 nested array. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Serialises every field with defaults resolved; parse_config(dump_config(c))
/// reproduces c.
std::string dump_config(const ExperimentConfig& config);

std::string_view scheme_name(IntegrationScheme scheme);

}  // namespace meswarm
