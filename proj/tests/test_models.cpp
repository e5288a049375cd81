#include <gtest/gtest.h>

#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "meswarm/error.hpp"
#include "meswarm/models.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace meswarm {
namespace {

using testing::cross_matrix;
using testing::Random;

Observation landmark_obs(int observer, int id, const Vec3& y, double dt = 0.1) {
  return {ObservationKind::kLandmark, observer, id, y, 0, dt};
}

Observation intervehicle_obs(int observer, int target, const Vec3& y, double dt = 0.1) {
  return {ObservationKind::kInterVehicle, observer, target, y, 0, dt};
}

TEST(Lambda, StationaryEquilibriumIsZero) {
  Random rng(1);
  const WorldConfig world;
  VehicleState X = rng.state();
  X.pose.v.setZero();
  ImuSample u;
  u.gyro = X.gyro_bias;
  u.accel = X.accel_bias + X.R().transpose() * world.gravity;
  EXPECT_LE(lambda_single(X, u, world).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lambda, DirectSubstitution) {
  const WorldConfig world;
  VehicleState X;
  X.pose.v = Vec3::UnitX();
  const Vec15 q = lambda_single(X, ImuSample{}, world);
  Vec15 expected = Vec15::Zero();
  expected.segment<3>(3) = Vec3::UnitX();
  expected.segment<3>(6) = Vec3(0, 0, -9.81);
  EXPECT_EQ(q, expected);
}

TEST(Lambda, MatchesFormula) {
  Random rng(2);
  WorldConfig world;
  world.gravity = rng.vec3(10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const VehicleState X = rng.state();
    const ImuSample u = rng.imu();
    const Vec15 q = lambda_single(X, u, world);
    EXPECT_LE((q.segment<3>(0) - (u.gyro - X.gyro_bias)).norm(), 1e-14);
    EXPECT_LE((q.segment<3>(3) - X.R().transpose() * X.v()).norm(), 1e-14);
    EXPECT_LE((q.segment<3>(6) - (u.accel - X.accel_bias - X.R().transpose() * world.gravity)).norm(), 1e-13);
    EXPECT_TRUE(q.tail<6>().isZero());
  }
}

TEST(Lambda, PositionDoesNotEnter) {
  Random rng(3);
  const WorldConfig world;
  VehicleState X = rng.state();
  const ImuSample u = rng.imu();
  const Vec15 before = lambda_single(X, u, world);
  X.pose.x += Vec3(10, -5, 3);
  EXPECT_EQ(lambda_single(X, u, world), before);
}

TEST(BCheck, BlockLayoutWithIdentityWeights) {
  NoiseModel noise;
  noise.gyro = noise.accel = noise.gyro_bias = noise.accel_bias = Mat3::Identity();
  const Mat15x12 B = b_check_single(noise);
  Vec15 expected = Vec15::Zero();
  expected(0) = -1.0;
  EXPECT_EQ(Vec15(B.col(0)), expected);
}

TEST(BCheck, ZeroWeightsGiveZeroMatrix) {
  NoiseModel noise;
  noise.gyro = noise.accel = noise.gyro_bias = noise.accel_bias = Mat3::Zero();
  EXPECT_TRUE(b_check_single(noise).isZero());
}

TEST(BCheck, MatchesBlockwiseAssembly) {
  Random rng(4);
  NoiseModel noise;
  noise.gyro = rng.mat3();
  noise.accel = rng.mat3();
  noise.gyro_bias = rng.mat3();
  noise.accel_bias = rng.mat3();
  const Mat15x12 B = b_check_single(noise);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Matrix<double, 12, 1> d;
    for (int i = 0; i < 12; ++i) d(i) = rng.uniform();
    Vec15 expected = Vec15::Zero();
    expected.segment<3>(0) = -noise.gyro * d.segment<3>(0);
    expected.segment<3>(6) = -noise.accel * d.segment<3>(3);
    expected.segment<3>(9) = noise.gyro_bias * d.segment<3>(6);
    expected.segment<3>(12) = noise.accel_bias * d.segment<3>(9);
    EXPECT_LE((B * d - expected).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ProcessWeight, UsesNominalImuPeriod) {
  NoiseModel noise;
  const Mat15x12 B = b_check_single(noise);
  const Mat15 expected = noise.imu_period_s * B * B.transpose();
  EXPECT_LE(testing::max_abs(process_weight(noise, 0) - expected), 1e-15);
}

TEST(ProcessWeight, HonoursPerVehicleOverride) {
  NoiseModel noise;
  noise.w_override[1] = 4.0 * Mat12::Identity();
  const Mat15x12 B = b_check_single(noise);
  EXPECT_LE(testing::max_abs(process_weight(noise, 1) - 0.25 * B * B.transpose()), 1e-15);
  EXPECT_LE(testing::max_abs(process_weight(noise, 0) - noise.imu_period_s * B * B.transpose()), 1e-15);
}

TEST(PredictLandmark, Examples) {
  VehicleState X;
  EXPECT_EQ(predict_landmark(X, Vec3(1, 2, 3)), Vec3(1, 2, 3));
  X.pose.R = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()).toRotationMatrix();
  EXPECT_LE((predict_landmark(X, Vec3::UnitX()) - Vec3(0, -1, 0)).norm(), 1e-15);
  Random rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const VehicleState Y = rng.state();
    const Vec3 l = rng.vec3(5.0);
    EXPECT_LE((predict_landmark(Y, l) - Y.R().transpose() * (l - Y.x())).norm(), 1e-14);
  }
}

TEST(PredictIntervehicle, Examples) {
  VehicleState a, b;
  b.pose.x = Vec3(1, -2, 0.5);
  EXPECT_EQ(predict_intervehicle(a, b, Vec3::Zero()), Vec3(1, -2, 0.5));
  EXPECT_EQ(predict_intervehicle(a, a, Vec3::UnitX()), Vec3::UnitX());
  Random rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const VehicleState A = rng.state(), B = rng.state();
    const Vec3 m = rng.vec3(0.3);
    const Vec3 oracle = A.R().transpose() * (B.R() * m + B.x() - A.x());
    EXPECT_LE((predict_intervehicle(A, B, m) - oracle).norm(), 1e-14);
  }
}

TEST(ACheck, EquilibriumInputsLeaveCouplingBlocksOnly) {
  Random rng(7);
  const VehicleState X = rng.state();
  ImuSample u;
  u.gyro = X.gyro_bias;
  u.accel = X.accel_bias;
  const Mat15 A = a_check_single(X, u);
  Mat15 expected = Mat15::Zero();
  expected.block<3, 3>(0, 9) = -Mat3::Identity();
  expected.block<3, 3>(3, 6) = Mat3::Identity();
  expected.block<3, 3>(6, 12) = -Mat3::Identity();
  EXPECT_EQ(A, expected);
}

TEST(ACheck, DependsOnlyOnBiases) {
  Random rng(8);
  VehicleState X = rng.state();
  const ImuSample u = rng.imu();
  const Mat15 A = a_check_single(X, u);
  X.pose.R = rng.rotation();
  X.pose.x = rng.vec3(9.0);
  X.pose.v = rng.vec3(9.0);
  EXPECT_EQ(a_check_single(X, u), A);
}

TEST(ACheck, MatchesFiniteDifferenceLinearization) {
  Random rng(9);
  WorldConfig world;
  const double eps = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const VehicleState X = rng.state();
    const ImuSample u = rng.imu();
    const Mat15 oracle = testing::finite_difference_a_check(X, u, world, eps);
    worst = std::max(worst, (a_check_single(X, u) - oracle).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(MeasurementWeight, SolvesAgainstD) {
  Random rng(10);
  const Mat3 D = rng.mat3() + 2.0 * Mat3::Identity();
  const Mat3 Di = D.inverse();
  EXPECT_LE(testing::max_abs(measurement_weight(D, 0.2) - Di.transpose() * Di / 0.2), 1e-12);
  EXPECT_THROW(measurement_weight(D, 0.0), ConfigError);
}

TEST(NoiseModelValidation, RejectsSingularD) {
  NoiseModel noise;
  EXPECT_NO_THROW(noise.validate());
  noise.landmark_D = Vec3(1.0, 1.0, 1e-7).asDiagonal();
  EXPECT_THROW(noise.validate(), ConfigError);
  noise = NoiseModel{};
  noise.w_override[0] = -Mat12::Identity();
  EXPECT_THROW(noise.validate(), ConfigError);
}

TEST(ResidualLandmark, ZeroWhenMeasurementMatchesPrediction) {
  Random rng(11);
  WorldConfig world;
  world.landmarks[4] = rng.vec3(5.0);
  const NetworkState X = {rng.state(), rng.state()};
  const auto c = residual_landmark(X, landmark_obs(1, 4, predict_landmark(X[1], world.landmarks[4])), world,
                                   NoiseModel{});
  EXPECT_LE(c.r.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ResidualLandmark, HandWorkedSingleVehicle) {
  WorldConfig world;
  world.landmarks[0] = Vec3::UnitX();
  NoiseModel noise;
  noise.landmark_D = Mat3::Identity();
  const NetworkState X = {VehicleState::identity()};
  const auto c = residual_landmark(X, landmark_obs(0, 0, Vec3(1, 1, 0), 1.0), world, noise);
  EXPECT_EQ(c.s, Vec3::UnitY());
  Vec15 expected = Vec15::Zero();
  expected.segment<3>(0) = Vec3(0, 0, -1);  // (e1 x)^T e2
  expected.segment<3>(3) = Vec3(0, -1, 0);
  EXPECT_LE((c.r - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ResidualLandmark, UnknownLandmarkIsRejected) {
  const NetworkState X = {VehicleState::identity()};
  EXPECT_THROW(residual_landmark(X, landmark_obs(0, 7, Vec3::Zero()), WorldConfig{}, NoiseModel{}),
               ObservationError);
  WorldConfig world;
  world.landmarks[0] = Vec3::Zero();
  EXPECT_THROW(residual_landmark(X, landmark_obs(3, 0, Vec3::Zero()), world, NoiseModel{}), ObservationError);
}

TEST(ResidualIntervehicle, SelfObservationIsRejected) {
  const NetworkState X = {VehicleState::identity(), VehicleState::identity()};
  EXPECT_THROW(residual_intervehicle(X, intervehicle_obs(1, 1, Vec3::Zero()), WorldConfig{}, NoiseModel{}),
               ObservationError);
}

TEST(ResidualIntervehicle, EqualOrientationsGiveIdentityTargetBlock) {
  Random rng(12);
  VehicleState a = rng.state(), b = rng.state();
  b.pose.R = a.R();
  const auto lin = linearize({a, b}, intervehicle_obs(0, 1, rng.vec3()), WorldConfig{}, NoiseModel{});
  EXPECT_LE((testing::max_abs(lin.F.block<3, 3>(0, 15 + 3) - Mat3::Identity())), 1e-15);
}

TEST(ELandmark, MatchesTermByTermAssembly) {
  Random rng(13);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.integer(1, 4);
    NetworkState X;
    for (int i = 0; i < n; ++i) X.push_back(rng.state());
    WorldConfig world;
    world.landmarks[2] = rng.vec3(5.0);
    NoiseModel noise;
    noise.landmark_D = rng.mat3(0.1) + 0.2 * Mat3::Identity();
    const int a = rng.integer(0, n - 1);
    const Vec3 y = rng.vec3(5.0);
    const double dt = rng.uniform(0.05, 0.5);
    const Observation obs = landmark_obs(a, 2, y, dt);
    const auto oracle = testing::landmark_oracle(X, a, world.landmarks[2], y, noise.landmark_D, dt);
    const MatX E = e_landmark(X, obs, world, noise);
    const double scale = std::max(1.0, testing::max_abs(oracle.E));
    worst = std::max(worst, testing::max_abs(E - oracle.E) / scale);
    EXPECT_EQ(E, E.transpose());
    const auto c = residual_landmark(X, obs, world, noise);
    EXPECT_LE((c.r - oracle.r).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, oracle.r.cwiseAbs().maxCoeff()));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(EIntervehicle, MatchesTermByTermAssembly) {
  Random rng(14);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.integer(2, 4);
    NetworkState X;
    for (int i = 0; i < n; ++i) X.push_back(rng.state());
    const int a = rng.integer(0, n - 1);
    int b = rng.integer(0, n - 2);
    if (b >= a) ++b;
    WorldConfig world;
    world.markers[b] = rng.vec3(0.3);
    NoiseModel noise;
    noise.intervehicle_D = rng.mat3(0.1) + 0.2 * Mat3::Identity();
    const Vec3 y = rng.vec3(5.0);
    const double dt = rng.uniform(0.05, 0.5);
    const Observation obs = intervehicle_obs(a, b, y, dt);
    const auto oracle = testing::intervehicle_oracle(X, a, b, world.markers[b], y, noise.intervehicle_D, dt);
    const MatX E = e_intervehicle(X, obs, world, noise);
    const double scale = std::max(1.0, testing::max_abs(oracle.E));
    worst = std::max(worst, testing::max_abs(E - oracle.E) / scale);
    EXPECT_EQ(E, E.transpose());
    const auto lin = linearize(X, obs, world, noise);
    EXPECT_LE(testing::max_abs(lin.dense_F(n) - oracle.F), 1e-13);
    // Exactly zero outside the rows and columns of a and b.
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const bool involved = (i == a || i == b) && (j == a || j == b);
        if (!involved) EXPECT_TRUE(E.block(15 * i, 15 * j, 15, 15).isZero());
      }
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(EMatrices, InformationTermIsPositiveSemidefinite) {
  Random rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    NetworkState X = {rng.state(), rng.state(), rng.state()};
    WorldConfig world;
    world.landmarks[0] = rng.vec3(5.0);
    world.markers[2] = rng.vec3(0.3);
    NoiseModel noise;
    const Observation lm = landmark_obs(1, 0, predict_landmark(X[1], world.landmarks[0]));
    const Observation iv = intervehicle_obs(0, 2, predict_intervehicle(X[0], X[2], world.markers[2]));
    for (const Observation& obs : {lm, iv}) {
      // With y = y_hat the curvature part vanishes and E = F^T M F.
      const auto lin = linearize(X, obs, world, noise);
      const MatX F = lin.dense_F(3);
      const MatX FMF = F.transpose() * lin.M * F;
      EXPECT_LE(testing::max_abs(lin.dense_E(3) - FMF), 1e-9 * testing::max_abs(FMF));
      const double min_eig = Eigen::SelfAdjointEigenSolver<MatX>(FMF).eigenvalues().minCoeff();
      EXPECT_GE(min_eig, -1e-10 * testing::max_abs(FMF));
    }
  }
}

TEST(ELandmark, ZeroOutsideObserverBlock) {
  Random rng(16);
  NetworkState X = {rng.state(), rng.state(), rng.state()};
  WorldConfig world;
  world.landmarks[0] = rng.vec3(5.0);
  const MatX E = e_landmark(X, landmark_obs(1, 0, rng.vec3()), world, NoiseModel{});
  MatX masked = E;
  masked.block<15, 15>(15, 15).setZero();
  EXPECT_TRUE(masked.isZero());
  const auto c = residual_landmark(X, landmark_obs(1, 0, rng.vec3()), world, NoiseModel{});
  EXPECT_TRUE(c.r.head<15>().isZero());
  EXPECT_TRUE(c.r.tail<15>().isZero());
}

}  // namespace
}  // namespace meswarm
