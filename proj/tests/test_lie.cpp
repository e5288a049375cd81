#include <gtest/gtest.h>

#include <numbers>

#include <Eigen/Geometry>

#include "meswarm/lie.hpp"
#include "test_support.hpp"

namespace meswarm {
namespace {

using testing::Random;

double state_distance(const VehicleState& a, const VehicleState& b) {
  return std::max({(a.R() - b.R()).cwiseAbs().maxCoeff(), (a.x() - b.x()).cwiseAbs().maxCoeff(),
                   (a.v() - b.v()).cwiseAbs().maxCoeff(), (a.gyro_bias - b.gyro_bias).cwiseAbs().maxCoeff(),
                   (a.accel_bias - b.accel_bias).cwiseAbs().maxCoeff()});
}

TEST(Compose, IdentityIsNeutral) {
  Random rng(1);
  const VehicleState X = rng.state();
  EXPECT_EQ(state_distance(compose(VehicleState::identity(), X), X), 0.0);
  EXPECT_EQ(state_distance(compose(X, VehicleState::identity()), X), 0.0);
}

TEST(Compose, MatchesDenseMatrixProduct) {
  Random rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const VehicleState X = rng.state();
    const VehicleState Y = rng.state();
    const VehicleState Z = compose(X, Y);
    const Mat5 P = testing::pose_matrix(X) * testing::pose_matrix(Y);
    EXPECT_LE(testing::max_abs(testing::pose_matrix(Z) - P), 1e-12);
    EXPECT_LE((Z.gyro_bias - (X.gyro_bias + Y.gyro_bias)).norm(), 1e-15);
    EXPECT_LE((Z.accel_bias - (X.accel_bias + Y.accel_bias)).norm(), 1e-15);
  }
}

TEST(Compose, IsAssociative) {
  Random rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const VehicleState X = rng.state(), Y = rng.state(), Z = rng.state();
    EXPECT_LE(state_distance(compose(compose(X, Y), Z), compose(X, compose(Y, Z))), 1e-12);
  }
}

TEST(Inverse, IdentityAndInvolution) {
  Random rng(4);
  EXPECT_EQ(state_distance(inverse(VehicleState::identity()), VehicleState::identity()), 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    const VehicleState X = rng.state();
    EXPECT_LE(state_distance(inverse(inverse(X)), X), 1e-12);
    EXPECT_LE(state_distance(compose(X, inverse(X)), VehicleState::identity()), 1e-9);
    EXPECT_LE(state_distance(compose(inverse(X), X), VehicleState::identity()), 1e-9);
  }
}

TEST(Inverse, MatchesLuInverse) {
  Random rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const VehicleState X = rng.state();
    const Mat5 P_inv = testing::pose_matrix(X).partialPivLu().inverse();
    const VehicleState Xi = inverse(X);
    EXPECT_LE(testing::max_abs(testing::pose_matrix(Xi) - P_inv), 1e-10);
    EXPECT_EQ(Xi.gyro_bias, -X.gyro_bias);
    EXPECT_EQ(Xi.accel_bias, -X.accel_bias);
  }
}

TEST(Wedge, FirstBasisVector) {
  const AlgebraElement psi = wedge(Vec15::Unit(0));
  EXPECT_EQ(psi.rot, Vec3(1, 0, 0));
  EXPECT_TRUE(psi.pos.isZero() && psi.vel.isZero() && psi.gyro_bias.isZero() && psi.accel_bias.isZero());
}

TEST(Wedge, RoundTripsBitwise) {
  Random rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec15 q = rng.vec15(10.0);
    EXPECT_EQ(vee(wedge(q)), q);
  }
}

TEST(Wedge, MatrixEmbeddingMatchesHandBuiltSkew) {
  Random rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec15 q = rng.vec15();
    EXPECT_EQ(wedge(q).se23_matrix(), testing::algebra_matrix(q));
  }
}

TEST(Adjoint, BiasOnlyElementActsAsZero) {
  Random rng(8);
  Vec15 q = Vec15::Zero();
  q.tail<6>() = rng.vec15().tail<6>();
  EXPECT_TRUE(adjoint_matrix(q).isZero());
}

TEST(Adjoint, KillsItsOwnArgument) {
  Random rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec15 q = rng.vec15();
    EXPECT_LE((adjoint_matrix(q) * q).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Adjoint, MatchesMatrixCommutator) {
  Random rng(10);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec15 a = rng.vec15(3.0), b = rng.vec15(3.0);
    const Mat5 A = testing::algebra_matrix(a), B = testing::algebra_matrix(b);
    const Vec15 expected = testing::algebra_vee(A * B - B * A);
    worst = std::max(worst, (adjoint_matrix(a) * b - expected).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Adjoint, IsLinearInItsArgument) {
  Random rng(11);
  const Vec15 a = rng.vec15(), b = rng.vec15();
  const double s = 0.5, t = -2.0;
  EXPECT_EQ(adjoint_matrix(Vec15(s * a + t * b)), s * adjoint_matrix(a) + t * adjoint_matrix(b));
}

TEST(Adjoint, SatisfiesJacobiIdentity) {
  Random rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec15 a = rng.vec15(), b = rng.vec15(), c = rng.vec15();
    auto br = [](const Vec15& x, const Vec15& y) -> Vec15 { return adjoint_matrix(x) * y; };
    const Vec15 sum = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b));
    EXPECT_LE(sum.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(NetworkAdjoint, IsBlockDiagonal) {
  Random rng(13);
  VecX q(45);
  for (int i = 0; i < 45; ++i) q(i) = rng.uniform();
  const MatX A = network_adjoint_matrix(q);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const MatX block = A.block(15 * a, 15 * b, 15, 15);
      if (a == b) {
        EXPECT_EQ(block, MatX(adjoint_matrix(Vec15(q.segment<15>(15 * a)))));
      } else {
        EXPECT_TRUE(block.isZero());
      }
    }
  }
}

TEST(GroupExp, ZeroIsIdentity) {
  EXPECT_EQ(state_distance(group_exp(Vec15::Zero()), VehicleState::identity()), 0.0);
}

TEST(GroupExp, PureTranslation) {
  Vec15 q = Vec15::Zero();
  q.segment<3>(slot::kPos) = Vec3(1, 2, 3);
  const VehicleState X = group_exp(q);
  EXPECT_EQ(X.x(), Vec3(1, 2, 3));
  EXPECT_EQ(X.R(), Mat3::Identity());
  EXPECT_TRUE(X.v().isZero());
}

TEST(GroupExp, MatchesMatrixSeries) {
  Random rng(14);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const Vec15 q = rng.vec15(1.5);
    const VehicleState X = group_exp(q);
    const MatX P = testing::series_exp(testing::algebra_matrix(q), 30);
    worst = std::max(worst, testing::max_abs(testing::pose_matrix(X) - P));
    EXPECT_EQ(X.gyro_bias, Vec3(q.segment<3>(slot::kGyroBias)));
    EXPECT_EQ(X.accel_bias, Vec3(q.segment<3>(slot::kAccelBias)));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(GroupExp, SmallAndNearPiAnglesMatchSeries) {
  Random rng(15);
  for (double angle : {0.0, 1e-12, 1e-8, 5e-7, 1e-6, 2e-6, 1e-3, std::numbers::pi - 1e-6, std::numbers::pi}) {
    Vec15 q = rng.vec15();
    q.head<3>() = angle * rng.vec3().normalized();
    const MatX P = testing::series_exp(testing::algebra_matrix(q), 40);
    EXPECT_LE(testing::max_abs(testing::pose_matrix(group_exp(q)) - P), 1e-10) << "angle " << angle;
  }
}

TEST(GroupExp, InverseOfExpIsExpOfNegative) {
  Random rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec15 q = rng.vec15(2.0);
    EXPECT_LE(state_distance(compose(group_exp(q), group_exp(Vec15(-q))), VehicleState::identity()), 1e-10);
  }
}

TEST(So3, LogInvertsExp) {
  Random rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 phi = rng.vec3(1.5);
    EXPECT_LE((so3_log(so3_exp(phi)) - phi).norm(), 1e-12);
  }
}

TEST(So3, JacobiansMatchQuadrature) {
  Random rng(18);
  for (double scale : {1e-9, 1e-4, 5e-3, 0.02, 0.5, 2.0}) {
    const Vec3 phi = scale * rng.vec3().normalized();
    // Composite Simpson on the defining integrals.
    const int steps = 2000;
    Mat3 J = Mat3::Zero(), N = Mat3::Zero();
    for (int k = 0; k <= steps; ++k) {
      const double s = static_cast<double>(k) / steps;
      const double w = (k == 0 || k == steps) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      const Mat3 E = testing::series_exp(testing::cross_matrix(s * phi), 30);
      J += w * E;
      N += w * (1.0 - s) * E;
    }
    J /= 3.0 * steps;
    N /= 3.0 * steps;
    EXPECT_LE(testing::max_abs(so3_left_jacobian(phi) - J), 1e-12) << scale;
    EXPECT_LE(testing::max_abs(so3_second_jacobian(phi) - N), 1e-12) << scale;
  }
}

TEST(Retract, AppliesPerVehicleExponential) {
  Random rng(19);
  NetworkState X = {rng.state(), rng.state()};
  VecX q(30);
  q << rng.vec15(), rng.vec15();
  const NetworkState Y = retract(X, q);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE(state_distance(Y[i], compose(X[i], group_exp(Vec15(q.segment<15>(15 * i))))), 1e-12);
  }
}

TEST(RotationError, TrivialCases) {
  Random rng(20);
  const Mat3 R = rng.rotation();
  EXPECT_NEAR(rotation_error_angle(R, R), 0.0, 1e-12);
  const Mat3 Rz = Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitZ()).toRotationMatrix();
  EXPECT_NEAR(rotation_error_angle(Mat3::Identity(), Rz), std::numbers::pi, 1e-12);
}

TEST(RotationError, MatchesQuaternionAngle) {
  Random rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const Mat3 A = rng.rotation(), B = rng.rotation();
    const Eigen::Quaterniond qa(A), qb(B);
    const double oracle = 2.0 * std::acos(std::min(1.0, std::abs(qa.dot(qb))));
    EXPECT_NEAR(rotation_error_angle(A, B), oracle, 1e-9);
    EXPECT_NEAR(rotation_error_angle(A, B), rotation_error_angle(B, A), 1e-12);
  }
}

TEST(RotationError, AgreesWithTraceFormulaAwayFromEndpoints) {
  Random rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat3 A = rng.rotation(), B = rng.rotation();
    const double c = std::clamp(((A.transpose() * B).trace() - 1.0) / 2.0, -1.0, 1.0);
    if (std::abs(c) > 0.999) continue;
    EXPECT_NEAR(rotation_error_angle(A, B), std::acos(c), 1e-10);
  }
}

TEST(Reorthonormalize, LeavesValidRotationsUntouched) {
  Random rng(23);
  const Mat3 R = rng.rotation();
  EXPECT_EQ(reorthonormalize(R), R);
}

TEST(Reorthonormalize, ProjectsDriftedMatrices) {
  Random rng(24);
  const Mat3 R = rng.rotation() + rng.mat3(1e-6);
  const Mat3 P = reorthonormalize(R);
  EXPECT_LE((P.transpose() * P - Mat3::Identity()).norm(), 1e-12);
  EXPECT_NEAR(P.determinant(), 1.0, 1e-12);
  EXPECT_LE((P - R).norm(), 1e-5);
}

TEST(Retract, KeepsRotationsOrthonormalOverLongRuns) {
  Random rng(25);
  NetworkState X = {rng.state()};
  for (int k = 0; k < 20000; ++k) X = retract(X, VecX(rng.vec15(0.01)));
  const Mat3& R = X[0].R();
  EXPECT_LE((R.transpose() * R - Mat3::Identity()).norm(), 1e-9);
  EXPECT_NEAR(R.determinant(), 1.0, 1e-9);
}

}  // namespace
}  // namespace meswarm
