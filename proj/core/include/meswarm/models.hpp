#pragma once

#include <map>
#include <vector>

#include "meswarm/lie.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

struct ImuSample {
  Vec3 gyro = Vec3::Zero();   // rad/s, body frame
  Vec3 accel = Vec3::Zero();  // m/s^2, body frame, includes R^T g
  TimeNs t_ns = 0;
};

struct WorldConfig {
  Vec3 gravity = Vec3(0.0, 0.0, 9.81);
  std::map<int, Vec3> landmarks;  // inertial frame, metres
  std::map<int, Vec3> markers;    // body frame of the carrying vehicle

  /// Marker point on `vehicle`; the body origin unless configured.
  Vec3 marker(int vehicle) const;
  /// Throws ObservationError for an unknown landmark id.
  const Vec3& landmark(int id) const;
};

enum class ObservationKind { kLandmark = 0, kInterVehicle = 1 };

/// Weights of the unknown error signals plus the nominal sensor periods that
/// set W = (1/dt_u) I and Q = (1/dt) I.
struct NoiseModel {
  Mat3 gyro = 0.005 * Mat3::Identity();
  Mat3 accel = 0.05 * Mat3::Identity();
  Mat3 gyro_bias = 0.01 * Mat3::Identity();
  Mat3 accel_bias = 0.1 * Mat3::Identity();
  Mat3 landmark_D = 0.05 * Mat3::Identity();
  Mat3 intervehicle_D = 0.05 * Mat3::Identity();

  double imu_period_s = 0.005;
  double landmark_period_s = 0.1;
  double intervehicle_period_s = 0.1;

  /// Optional per-vehicle W blocks; vehicles without an entry use (1/dt_u) I.
  std::map<int, Mat12> w_override;

  Mat12 w_matrix(int vehicle) const;
  const Mat3& D(ObservationKind kind) const;
  double nominal_period(ObservationKind kind) const;

  /// Throws ConfigError when D is (nearly) singular or W is not SPD.
  void validate() const;
};

struct Observation {
  ObservationKind kind = ObservationKind::kLandmark;
  int observer = 0;
  int subject = 0;  // landmark id or target vehicle
  Vec3 y = Vec3::Zero();
  TimeNs t_ns = 0;
  double dt_s = 0.0;  // elapsed since the previous observation of the same source
};

/// lambda(X, u)^vee = (u_w - b_w, R^T v, u_a - b_a - R^T g, 0, 0).
TangentVector lambda_single(const VehicleState& X, const ImuSample& u, const WorldConfig& world);

/// 15x12 input matrix mapping (d_w, d_a, d_bw, d_ba) into the algebra.
Mat15x12 b_check_single(const NoiseModel& noise);

/// B W^-1 B^T for one vehicle.
Mat15 process_weight(const NoiseModel& noise, int vehicle);

Vec3 predict_landmark(const VehicleState& X, const Vec3& landmark);
Vec3 predict_intervehicle(const VehicleState& observer, const VehicleState& target, const Vec3& marker);

/// Linearised IMU dynamics (A matrix) of one vehicle. Depends on X only
/// through the bias estimates.
Mat15 a_check_single(const VehicleState& X, const ImuSample& u);

/// M = (D^-1)^T Q D^-1 with Q = (1/dt) I.
Mat3 measurement_weight(const Mat3& D, double dt_s);

/// Everything one observation contributes, restricted to the vehicles it
/// involves (the observer first, then the target for inter-vehicle).
struct MeasurementLinearization {
  std::vector<int> vehicles;
  Vec3 predicted = Vec3::Zero();
  Vec3 s = Vec3::Zero();  // M (y - y_hat)
  Mat3 M = Mat3::Zero();
  MatX F;         // 3 x 15m
  VecX residual;  // F^T s, 15m
  MatX E;         // 15m x 15m

  VecX dense_residual(int n) const;
  MatX dense_E(int n) const;
  MatX dense_F(int n) const;
};

MeasurementLinearization linearize_landmark(const VehicleState& X, const Observation& obs,
                                            const WorldConfig& world, const NoiseModel& noise);
MeasurementLinearization linearize_intervehicle(const VehicleState& observer, const VehicleState& target,
                                                const Observation& obs, const WorldConfig& world,
                                                const NoiseModel& noise);
/// Dispatches on obs.kind and validates vehicle indices against X.
MeasurementLinearization linearize(const NetworkState& X, const Observation& obs, const WorldConfig& world,
                                   const NoiseModel& noise);

struct ResidualContribution {
  Vec3 s;
  VecX r;  // 15n
};

ResidualContribution residual_landmark(const NetworkState& X, const Observation& obs, const WorldConfig& world,
                                       const NoiseModel& noise);
ResidualContribution residual_intervehicle(const NetworkState& X, const Observation& obs,
                                           const WorldConfig& world, const NoiseModel& noise);
MatX e_landmark(const NetworkState& X, const Observation& obs, const WorldConfig& world, const NoiseModel& noise);
MatX e_intervehicle(const NetworkState& X, const Observation& obs, const WorldConfig& world,
                    const NoiseModel& noise);

/// (A + A^T)/2
MatX symmetric_part(const MatX& A);

}  // namespace meswarm
