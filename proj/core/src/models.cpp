#include "meswarm/models.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "meswarm/error.hpp"

namespace meswarm {

Vec3 WorldConfig::marker(int vehicle) const {
  const auto it = markers.find(vehicle);
  return it == markers.end() ? Vec3::Zero() : it->second;
}

const Vec3& WorldConfig::landmark(int id) const {
  const auto it = landmarks.find(id);
  if (it == landmarks.end()) {
    throw ObservationError("unknown landmark id " + std::to_string(id));
  }
  return it->second;
}

Mat12 NoiseModel::w_matrix(int vehicle) const {
  const auto it = w_override.find(vehicle);
  if (it != w_override.end()) return it->second;
  return Mat12::Identity() / imu_period_s;
}

const Mat3& NoiseModel::D(ObservationKind kind) const {
  return kind == ObservationKind::kLandmark ? landmark_D : intervehicle_D;
}

double NoiseModel::nominal_period(ObservationKind kind) const {
  return kind == ObservationKind::kLandmark ? landmark_period_s : intervehicle_period_s;
}

void NoiseModel::validate() const {
  if (!(imu_period_s > 0.0) || !(landmark_period_s > 0.0) || !(intervehicle_period_s > 0.0)) {
    throw ConfigError("noise model periods must be positive");
  }
  for (const Mat3* d : {&landmark_D, &intervehicle_D}) {
    const Vec3 sv = Eigen::JacobiSVD<Mat3>(*d).singularValues();
    if (!(sv(2) > 0.0) || sv(0) / sv(2) >= 1e6) {
      throw ConfigError("measurement weight D must be invertible (condition number < 1e6)");
    }
  }
  for (const auto& [vehicle, w] : w_override) {
    if ((w - w.transpose()).norm() > 1e-12 * w.norm() || w.llt().info() != Eigen::Success) {
      throw ConfigError("W block of vehicle " + std::to_string(vehicle) + " is not symmetric positive definite");
    }
  }
}

TangentVector lambda_single(const VehicleState& X, const ImuSample& u, const WorldConfig& world) {
  TangentVector q = TangentVector::Zero();
  const Mat3 Rt = X.R().transpose();
  q.segment<3>(slot::kRot) = u.gyro - X.gyro_bias;
  q.segment<3>(slot::kPos) = Rt * X.v();
  q.segment<3>(slot::kVel) = u.accel - X.accel_bias - Rt * world.gravity;
  return q;
}

Mat15x12 b_check_single(const NoiseModel& noise) {
  Mat15x12 B = Mat15x12::Zero();
  B.block<3, 3>(slot::kRot, 0) = -noise.gyro;
  B.block<3, 3>(slot::kVel, 3) = -noise.accel;
  B.block<3, 3>(slot::kGyroBias, 6) = noise.gyro_bias;
  B.block<3, 3>(slot::kAccelBias, 9) = noise.accel_bias;
  return B;
}

Mat15 process_weight(const NoiseModel& noise, int vehicle) {
  const Mat15x12 B = b_check_single(noise);
  const Mat12 W = noise.w_matrix(vehicle);
  const Mat15 Q = B * W.llt().solve(B.transpose());
  return 0.5 * (Q + Q.transpose());
}

Vec3 predict_landmark(const VehicleState& X, const Vec3& landmark) {
  return X.R().transpose() * (landmark - X.x());
}

Vec3 predict_intervehicle(const VehicleState& observer, const VehicleState& target, const Vec3& marker) {
  return observer.R().transpose() * (target.R() * marker + target.x() - observer.x());
}

Mat15 a_check_single(const VehicleState& X, const ImuSample& u) {
  const Mat3 w_x = skew(u.gyro - X.gyro_bias);
  const Mat3 a_x = skew(u.accel - X.accel_bias);
  const Mat3 I = Mat3::Identity();
  Mat15 A = Mat15::Zero();
  A.block<3, 3>(slot::kRot, slot::kRot) = -w_x;
  A.block<3, 3>(slot::kRot, slot::kGyroBias) = -I;
  A.block<3, 3>(slot::kPos, slot::kPos) = -w_x;
  A.block<3, 3>(slot::kPos, slot::kVel) = I;
  A.block<3, 3>(slot::kVel, slot::kRot) = -a_x;
  A.block<3, 3>(slot::kVel, slot::kVel) = -w_x;
  A.block<3, 3>(slot::kVel, slot::kAccelBias) = -I;
  return A;
}

Mat3 measurement_weight(const Mat3& D, double dt_s) {
  if (!(dt_s > 0.0)) throw ConfigError("observation interval must be positive");
  const Mat3 D_inv = D.partialPivLu().solve(Mat3::Identity());
  return D_inv.transpose() * D_inv / dt_s;
}

MatX symmetric_part(const MatX& A) { return 0.5 * (A + A.transpose()); }

VecX MeasurementLinearization::dense_residual(int n) const {
  VecX r = VecX::Zero(static_cast<Eigen::Index>(n) * kDof);
  for (std::size_t k = 0; k < vehicles.size(); ++k) {
    r.segment<kDof>(vehicles[k] * kDof) = residual.segment<kDof>(k * kDof);
  }
  return r;
}

MatX MeasurementLinearization::dense_E(int n) const {
  MatX out = MatX::Zero(static_cast<Eigen::Index>(n) * kDof, static_cast<Eigen::Index>(n) * kDof);
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    for (std::size_t j = 0; j < vehicles.size(); ++j) {
      out.block<kDof, kDof>(vehicles[i] * kDof, vehicles[j] * kDof) = E.block<kDof, kDof>(i * kDof, j * kDof);
    }
  }
  return out;
}

MatX MeasurementLinearization::dense_F(int n) const {
  MatX out = MatX::Zero(3, static_cast<Eigen::Index>(n) * kDof);
  for (std::size_t k = 0; k < vehicles.size(); ++k) {
    out.block<3, kDof>(0, vehicles[k] * kDof) = F.block<3, kDof>(0, k * kDof);
  }
  return out;
}

namespace {

// [v_x, -I, 0]: derivative of a body-frame relative position w.r.t. the
// observer's own rotation and position.
Eigen::Matrix<double, 3, kDof> observer_block(const Vec3& predicted) {
  Eigen::Matrix<double, 3, kDof> b = Eigen::Matrix<double, 3, kDof>::Zero();
  b.block<3, 3>(0, slot::kRot) = skew(predicted);
  b.block<3, 3>(0, slot::kPos) = -Mat3::Identity();
  return b;
}

// [s_x, 0] placed in the column range of vehicle slot `k` of a 3 x 15m matrix.
MatX g_matrix(const Vec3& s, int k, int m) {
  MatX G = MatX::Zero(3, m * kDof);
  G.block<3, 3>(0, k * kDof + slot::kRot) = skew(s);
  return G;
}

}  // namespace

MeasurementLinearization linearize_landmark(const VehicleState& X, const Observation& obs,
                                            const WorldConfig& world, const NoiseModel& noise) {
  if (obs.kind != ObservationKind::kLandmark) throw ObservationError("expected a landmark observation");
  const Vec3& l = world.landmark(obs.subject);

  MeasurementLinearization lin;
  lin.vehicles = {obs.observer};
  lin.predicted = predict_landmark(X, l);
  lin.M = measurement_weight(noise.landmark_D, obs.dt_s);
  lin.s = lin.M * (obs.y - lin.predicted);
  lin.F = observer_block(lin.predicted);
  lin.residual = lin.F.transpose() * lin.s;

  const MatX G = g_matrix(lin.s, 0, 1);
  lin.E = symmetric_part(MatX(G.transpose() * lin.F + lin.F.transpose() * lin.M * lin.F));
  return lin;
}

MeasurementLinearization linearize_intervehicle(const VehicleState& observer, const VehicleState& target,
                                                const Observation& obs, const WorldConfig& world,
                                                const NoiseModel& noise) {
  if (obs.kind != ObservationKind::kInterVehicle) throw ObservationError("expected an inter-vehicle observation");
  if (obs.observer == obs.subject) throw ObservationError("a vehicle cannot observe its own marker");

  const Vec3 m = world.marker(obs.subject);
  const Mat3 R_ab = observer.R().transpose() * target.R();
  const Mat3 m_x = skew(m);

  MeasurementLinearization lin;
  lin.vehicles = {obs.observer, obs.subject};
  lin.predicted = predict_intervehicle(observer, target, m);
  lin.M = measurement_weight(noise.intervehicle_D, obs.dt_s);
  lin.s = lin.M * (obs.y - lin.predicted);

  lin.F = MatX::Zero(3, 2 * kDof);
  lin.F.block<3, kDof>(0, 0) = observer_block(lin.predicted);
  lin.F.block<3, 3>(0, kDof + slot::kRot) = -R_ab * m_x;
  lin.F.block<3, 3>(0, kDof + slot::kPos) = R_ab;
  lin.residual = lin.F.transpose() * lin.s;

  MatX L = MatX::Zero(3, 2 * kDof);
  L.block<3, 3>(0, kDof + slot::kRot) = -m_x;
  L.block<3, 3>(0, kDof + slot::kPos) = Mat3::Identity();

  const MatX G_a = g_matrix(lin.s, 0, 2);
  const MatX G_b = g_matrix(R_ab.transpose() * lin.s, 1, 2);
  const MatX curvature = G_a.transpose() * lin.F + G_a.transpose() * R_ab * L - G_b.transpose() * L;
  lin.E = symmetric_part(MatX(curvature + lin.F.transpose() * lin.M * lin.F));
  return lin;
}

namespace {

void check_vehicle(const NetworkState& X, int vehicle) {
  if (vehicle < 0 || vehicle >= static_cast<int>(X.size())) {
    throw ObservationError("vehicle index " + std::to_string(vehicle) + " out of range");
  }
}

}  // namespace

MeasurementLinearization linearize(const NetworkState& X, const Observation& obs, const WorldConfig& world,
                                   const NoiseModel& noise) {
  check_vehicle(X, obs.observer);
  if (obs.kind == ObservationKind::kLandmark) {
    return linearize_landmark(X[obs.observer], obs, world, noise);
  }
  check_vehicle(X, obs.subject);
  return linearize_intervehicle(X[obs.observer], X[obs.subject], obs, world, noise);
}

ResidualContribution residual_landmark(const NetworkState& X, const Observation& obs, const WorldConfig& world,
                                       const NoiseModel& noise) {
  if (obs.kind != ObservationKind::kLandmark) throw ObservationError("expected a landmark observation");
  const auto lin = linearize(X, obs, world, noise);
  return {lin.s, lin.dense_residual(static_cast<int>(X.size()))};
}

ResidualContribution residual_intervehicle(const NetworkState& X, const Observation& obs,
                                           const WorldConfig& world, const NoiseModel& noise) {
  if (obs.kind != ObservationKind::kInterVehicle) throw ObservationError("expected an inter-vehicle observation");
  const auto lin = linearize(X, obs, world, noise);
  return {lin.s, lin.dense_residual(static_cast<int>(X.size()))};
}

MatX e_landmark(const NetworkState& X, const Observation& obs, const WorldConfig& world, const NoiseModel& noise) {
  if (obs.kind != ObservationKind::kLandmark) throw ObservationError("expected a landmark observation");
  return linearize(X, obs, world, noise).dense_E(static_cast<int>(X.size()));
}

MatX e_intervehicle(const NetworkState& X, const Observation& obs, const WorldConfig& world,
                    const NoiseModel& noise) {
  if (obs.kind != ObservationKind::kInterVehicle) throw ObservationError("expected an inter-vehicle observation");
  return linearize(X, obs, world, noise).dense_E(static_cast<int>(X.size()));
}

}  // namespace meswarm
