#include "meswarm/lie.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "meswarm/error.hpp"

namespace meswarm {

Mat3 skew(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return m;
}

Mat5 ExtendedPose::matrix() const {
  Mat5 P = Mat5::Identity();
  P.topLeftCorner<3, 3>() = R;
  P.block<3, 1>(0, 3) = x;
  P.block<3, 1>(0, 4) = v;
  return P;
}

ExtendedPose ExtendedPose::from_matrix(const Mat5& P) {
  return {P.topLeftCorner<3, 3>(), P.block<3, 1>(0, 3), P.block<3, 1>(0, 4)};
}

Mat5 AlgebraElement::se23_matrix() const {
  Mat5 m = Mat5::Zero();
  m.topLeftCorner<3, 3>() = skew(rot);
  m.block<3, 1>(0, 3) = pos;
  m.block<3, 1>(0, 4) = vel;
  return m;
}

AlgebraElement wedge(const TangentVector& q) {
  return {q.segment<3>(slot::kRot), q.segment<3>(slot::kPos), q.segment<3>(slot::kVel),
          q.segment<3>(slot::kGyroBias), q.segment<3>(slot::kAccelBias)};
}

TangentVector vee(const AlgebraElement& psi) {
  TangentVector q;
  q << psi.rot, psi.pos, psi.vel, psi.gyro_bias, psi.accel_bias;
  return q;
}

VehicleState compose(const VehicleState& a, const VehicleState& b) {
  VehicleState c;
  c.pose.R = a.pose.R * b.pose.R;
  c.pose.x = a.pose.R * b.pose.x + a.pose.x;
  c.pose.v = a.pose.R * b.pose.v + a.pose.v;
  c.gyro_bias = a.gyro_bias + b.gyro_bias;
  c.accel_bias = a.accel_bias + b.accel_bias;
  return c;
}

VehicleState inverse(const VehicleState& a) {
  VehicleState inv;
  inv.pose.R = a.pose.R.transpose();
  inv.pose.x = -(inv.pose.R * a.pose.x);
  inv.pose.v = -(inv.pose.R * a.pose.v);
  inv.gyro_bias = -a.gyro_bias;
  inv.accel_bias = -a.accel_bias;
  return inv;
}

Mat15 adjoint_matrix(const AlgebraElement& psi) {
  Mat15 ad = Mat15::Zero();
  const Mat3 rot_x = skew(psi.rot);
  ad.block<3, 3>(slot::kRot, slot::kRot) = rot_x;
  ad.block<3, 3>(slot::kPos, slot::kRot) = skew(psi.pos);
  ad.block<3, 3>(slot::kPos, slot::kPos) = rot_x;
  ad.block<3, 3>(slot::kVel, slot::kRot) = skew(psi.vel);
  ad.block<3, 3>(slot::kVel, slot::kVel) = rot_x;
  return ad;
}

Mat15 adjoint_matrix(const TangentVector& q) { return adjoint_matrix(wedge(q)); }

MatX network_adjoint_matrix(const VecX& q) {
  if (q.size() % kDof != 0) {
    throw ConfigError("network tangent vector length must be a multiple of 15");
  }
  const Eigen::Index n = q.size() / kDof;
  MatX ad = MatX::Zero(q.size(), q.size());
  for (Eigen::Index a = 0; a < n; ++a) {
    ad.block<kDof, kDof>(a * kDof, a * kDof) = adjoint_matrix(TangentVector(q.segment<kDof>(a * kDof)));
  }
  return ad;
}

namespace {

struct RotationCoefficients {
  double sin_term;   // sin(t)/t
  double cos_term;   // (1 - cos t)/t^2
  double cubic_term; // (t - sin t)/t^3
};

RotationCoefficients rotation_coefficients(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    const double t4 = t2 * t2;
    return {1.0 - t2 / 6.0 + t4 / 120.0, 0.5 - t2 / 24.0 + t4 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0};
  }
  const double half_sin = std::sin(0.5 * t);
  return {std::sin(t) / t, 2.0 * half_sin * half_sin / (t * t), (t - std::sin(t)) / (t * t * t)};
}

}  // namespace

Mat3 so3_exp(const Vec3& phi) {
  const auto c = rotation_coefficients(phi.norm());
  const Mat3 K = skew(phi);
  return Mat3::Identity() + c.sin_term * K + c.cos_term * K * K;
}

Vec3 so3_log(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Mat3 so3_left_jacobian(const Vec3& phi) {
  const auto c = rotation_coefficients(phi.norm());
  const Mat3 K = skew(phi);
  return Mat3::Identity() + c.cos_term * K + c.cubic_term * K * K;
}

Mat3 so3_second_jacobian(const Vec3& phi) {
  const double t = phi.norm();
  const auto c = rotation_coefficients(t);
  // (t^2/2 + cos t - 1)/t^4 cancels badly well above the Jacobian threshold.
  double quartic_term;
  if (t < 1e-2) {
    const double t2 = t * t;
    quartic_term = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
  } else {
    quartic_term = (0.5 * t * t + std::cos(t) - 1.0) / (t * t * t * t);
  }
  const Mat3 K = skew(phi);
  return 0.5 * Mat3::Identity() + c.cubic_term * K + quartic_term * K * K;
}

VehicleState group_exp(const AlgebraElement& psi) {
  VehicleState X;
  X.pose.R = so3_exp(psi.rot);
  const Mat3 J = so3_left_jacobian(psi.rot);
  X.pose.x = J * psi.pos;
  X.pose.v = J * psi.vel;
  X.gyro_bias = psi.gyro_bias;
  X.accel_bias = psi.accel_bias;
  return X;
}

VehicleState group_exp(const TangentVector& q) { return group_exp(wedge(q)); }

NetworkState retract(const NetworkState& X, const VecX& q) {
  if (q.size() != static_cast<Eigen::Index>(X.size()) * kDof) {
    throw ConfigError("retract: tangent vector length does not match network size");
  }
  NetworkState out;
  out.reserve(X.size());
  for (std::size_t a = 0; a < X.size(); ++a) {
    VehicleState next = compose(X[a], group_exp(TangentVector(q.segment<kDof>(a * kDof))));
    next.pose.R = reorthonormalize(next.pose.R);
    out.push_back(next);
  }
  return out;
}

double rotation_error_angle(const Mat3& R_est, const Mat3& R_true) {
  // atan2 form of arccos((tr - 1)/2); identical on SO(3) but keeps full
  // precision near 0 and pi.
  const Mat3 M = R_est.transpose() * R_true;
  const double c = 0.5 * (M.trace() - 1.0);
  const Vec3 s(M(2, 1) - M(1, 2), M(0, 2) - M(2, 0), M(1, 0) - M(0, 1));
  return std::atan2(0.5 * s.norm(), std::clamp(c, -1.0, 1.0));
}

Mat3 project_to_rotation(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

Mat3 reorthonormalize(const Mat3& R) {
  if ((R.transpose() * R - Mat3::Identity()).norm() > kOrthonormalityTolerance) {
    return project_to_rotation(R);
  }
  return R;
}

}  // namespace meswarm
