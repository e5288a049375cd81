#pragma once

#include <filesystem>
#include <vector>

#include "meswarm/models.hpp"
#include "meswarm/scheduler.hpp"
#include "meswarm/trajectory.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

/// Rows `timestamp_ns,wx,wy,wz,ax,ay,az` after an optional header line.
/// Throws DataError (with the line number) for malformed rows and
/// non-increasing timestamps; an empty file yields an empty stream.
std::vector<ImuSample> load_imu_csv(const std::filesystem::path& path);

/// Rows `timestamp_ns,px,py,pz,qw,qx,qy,qz,vx,vy,vz[,bwx,bwy,bwz,bax,bay,baz]`.
/// Quaternions within 1e-3 of unit norm are normalised, others rejected.
std::vector<TruthSample> load_truth_csv(const std::filesystem::path& path);

inline constexpr double kQuaternionNormTolerance = 1e-3;

struct Trial {
  std::vector<ImuSample> imu;
  std::vector<TruthSample> truth;
};

/// Reads `<dir>/mav0/imu0/data.csv` and
/// `<dir>/mav0/state_groundtruth_estimate0/data.csv` (the `mav0/` level is
/// optional).
Trial load_euroc_trial(const std::filesystem::path& dir);

/// Turns single-vehicle trials into one network: each trial is re-timed to
/// start at its first instant covered by both IMU and truth, resampled onto
/// the IMU grid (zero-order hold for the IMU, interpolation for truth) and
/// all are truncated to the shortest trial and to `max_duration_s`.
std::vector<VehicleStreams> merge_trials(const std::vector<Trial>& trials, TimeNs period_ns, double max_duration_s);

}  // namespace meswarm
