#pragma once

#include <vector>

#include "meswarm/types.hpp"

namespace meswarm {

/// Skew-symmetric matrix with skew(a) * b == a.cross(b).
Mat3 skew(const Vec3& a);

/// Rotation, position and velocity packed as an element of SE_2(3).
struct ExtendedPose {
  Mat3 R = Mat3::Identity();
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();

  /// 5x5 homogeneous form [[R x v],[0 1 0],[0 0 1]].
  Mat5 matrix() const;
  static ExtendedPose from_matrix(const Mat5& P);
};

/// One vehicle's state: an element of G = SE_2(3) x R^3 x R^3.
struct VehicleState {
  ExtendedPose pose;
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();

  static VehicleState identity() { return {}; }

  const Mat3& R() const { return pose.R; }
  const Vec3& x() const { return pose.x; }
  const Vec3& v() const { return pose.v; }
};

using NetworkState = std::vector<VehicleState>;

/// Element of the Lie algebra of G. The SE_2(3) part is
/// [[rot_x pos vel],[0 0 0],[0 0 0]].
struct AlgebraElement {
  Vec3 rot = Vec3::Zero();
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();

  Mat5 se23_matrix() const;
};

/// Stacked (rot, pos, vel, gyro_bias, accel_bias) coordinates.
using TangentVector = Vec15;

namespace slot {
inline constexpr int kRot = 0;
inline constexpr int kPos = 3;
inline constexpr int kVel = 6;
inline constexpr int kGyroBias = 9;
inline constexpr int kAccelBias = 12;
}  // namespace slot

AlgebraElement wedge(const TangentVector& q);
TangentVector vee(const AlgebraElement& psi);

VehicleState compose(const VehicleState& a, const VehicleState& b);
VehicleState inverse(const VehicleState& a);

/// Matrix form of ad_psi acting on vee coordinates:
/// adjoint_matrix(psi) * vee(phi) == vee([psi, phi]).
Mat15 adjoint_matrix(const AlgebraElement& psi);
Mat15 adjoint_matrix(const TangentVector& q);

/// Block-diagonal adjoint for a stacked network tangent vector (15n).
MatX network_adjoint_matrix(const VecX& q);

Mat3 so3_exp(const Vec3& phi);
Vec3 so3_log(const Mat3& R);

/// Left Jacobian of SO(3): integral of exp(s*phi) over s in [0, 1].
Mat3 so3_left_jacobian(const Vec3& phi);

/// Double integral of exp(s*phi): integral over s in [0,1] of (1 - s) exp(s*phi).
Mat3 so3_second_jacobian(const Vec3& phi);

VehicleState group_exp(const AlgebraElement& psi);
VehicleState group_exp(const TangentVector& q);

/// Right-multiplies every vehicle by exp of its 15-slice of q (length 15n).
NetworkState retract(const NetworkState& X, const VecX& q);

/// Angle of R_est^T R_true in [0, pi].
double rotation_error_angle(const Mat3& R_est, const Mat3& R_true);

/// Nearest rotation in the Frobenius sense (polar projection).
Mat3 project_to_rotation(const Mat3& R);

/// Projects R back onto SO(3) only when ||R^T R - I||_F exceeds the drift
/// tolerance; otherwise returns R bitwise unchanged.
Mat3 reorthonormalize(const Mat3& R);

inline constexpr double kOrthonormalityTolerance = 1e-9;
inline constexpr double kSmallAngle = 1e-6;

}  // namespace meswarm
