#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace meswarm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;
using Mat15x12 = Eigen::Matrix<double, 15, 12>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Degrees of freedom of a single vehicle's state.
inline constexpr int kDof = 15;

/// Nanosecond timestamps. Scheduling is done on integer ticks, never floats.
using TimeNs = std::int64_t;
using Tick = std::int64_t;

inline constexpr double kNsPerSecond = 1e9;

inline double to_seconds(TimeNs t) { return static_cast<double>(t) / kNsPerSecond; }

}  // namespace meswarm
