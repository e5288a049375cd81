#include "meswarm/gain_dynamics.hpp"

#include <algorithm>
#include <string>

#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "meswarm/error.hpp"

namespace meswarm {

VehicleState propagate_state(const VehicleState& X, const ImuSample& u, double dt, const WorldConfig& world,
                             IntegrationScheme scheme) {
  if (!(dt > 0.0)) throw ConfigError("IMU period must be positive");
  VehicleState next;
  if (scheme == IntegrationScheme::kFirstOrder) {
    next = compose(X, group_exp(TangentVector(dt * lambda_single(X, u, world))));
  } else {
    const Vec3 phi = dt * (u.gyro - X.gyro_bias);
    const Vec3 accel = u.accel - X.accel_bias;
    next = X;
    next.pose.R = X.R() * so3_exp(phi);
    next.pose.v = X.v() + dt * (X.R() * (so3_left_jacobian(phi) * accel)) - dt * world.gravity;
    next.pose.x = X.x() + dt * X.v() + dt * dt * (X.R() * (so3_second_jacobian(phi) * accel)) -
                  0.5 * dt * dt * world.gravity;
  }
  next.pose.R = reorthonormalize(next.pose.R);
  return next;
}

GainTransition gain_transition(const Mat15& A, const Mat15& Q, double dt) {
  // Van Loan: exp([[-A, Q], [0, A^T]] dt) = [[*, Phi^-1 Qd], [0, Phi^T]].
  using Mat30 = Eigen::Matrix<double, 2 * kDof, 2 * kDof>;
  Mat30 M = Mat30::Zero();
  M.topLeftCorner<kDof, kDof>() = -A * dt;
  M.topRightCorner<kDof, kDof>() = Q * dt;
  M.bottomRightCorner<kDof, kDof>() = A.transpose() * dt;
  const Mat30 E = M.exp();
  GainTransition t;
  t.Phi = E.bottomRightCorner<kDof, kDof>().transpose();
  const Mat15 Qd = t.Phi * E.topRightCorner<kDof, kDof>();
  t.Qd = 0.5 * (Qd + Qd.transpose());
  return t;
}

UpdateMatrix::UpdateMatrix(int n, std::vector<int> vehicles, MatX columns)
    : n_(n), vehicles_(std::move(vehicles)), columns_(std::move(columns)) {
  if (columns_.rows() != static_cast<Eigen::Index>(n_) * kDof ||
      columns_.cols() != static_cast<Eigen::Index>(vehicles_.size()) * kDof) {
    throw ConfigError("update matrix columns have the wrong shape");
  }
  for (int v : vehicles_) {
    if (v < 0 || v >= n_) throw ConfigError("update matrix vehicle index out of range");
  }
}

UpdateMatrix UpdateMatrix::build(int n, const std::vector<const MatX*>& k_columns,
                                 const MeasurementLinearization& lin, double dt) {
  const auto m = static_cast<Eigen::Index>(lin.vehicles.size());
  if (static_cast<Eigen::Index>(k_columns.size()) != m) {
    throw ConfigError("need one K column per involved vehicle");
  }
  MatX K_J(static_cast<Eigen::Index>(n) * kDof, m * kDof);
  for (Eigen::Index k = 0; k < m; ++k) K_J.middleCols<kDof>(k * kDof) = *k_columns[k];
  MatX columns = dt * (K_J * lin.E);
  for (Eigen::Index k = 0; k < m; ++k) {
    columns.block<kDof, kDof>(lin.vehicles[k] * kDof, k * kDof).diagonal().array() += 1.0;
  }
  return UpdateMatrix(n, lin.vehicles, std::move(columns));
}

UpdateMatrix UpdateMatrix::from_dense(const MatX& S, std::vector<int> vehicles) {
  const int n = static_cast<int>(S.rows() / kDof);
  if (S.rows() != S.cols() || S.rows() % kDof != 0) throw ConfigError("dense update matrix must be 15n x 15n");
  MatX columns(S.rows(), static_cast<Eigen::Index>(vehicles.size()) * kDof);
  for (std::size_t k = 0; k < vehicles.size(); ++k) {
    columns.middleCols<kDof>(k * kDof) = S.middleCols<kDof>(vehicles[k] * kDof);
  }
  UpdateMatrix out(n, std::move(vehicles), std::move(columns));
  MatX rest = S;
  for (int v : out.vehicles_) rest.middleCols<kDof>(v * kDof).setZero();
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    const bool involved = std::find(out.vehicles_.begin(), out.vehicles_.end(), i / kDof) != out.vehicles_.end();
    if (!involved) rest(i, i) -= 1.0;
  }
  if (!rest.isZero(0.0)) throw ConfigError("dense update matrix has non-identity columns outside the involved set");
  return out;
}

MatX UpdateMatrix::dense() const {
  MatX S = MatX::Identity(static_cast<Eigen::Index>(n_) * kDof, static_cast<Eigen::Index>(n_) * kDof);
  for (std::size_t k = 0; k < vehicles_.size(); ++k) {
    S.middleCols<kDof>(vehicles_[k] * kDof) = columns_.middleCols<kDof>(k * kDof);
  }
  return S;
}

namespace {

MatX involved_rows(const MatX& M, const std::vector<int>& vehicles) {
  MatX out(static_cast<Eigen::Index>(vehicles.size()) * kDof, M.cols());
  for (std::size_t k = 0; k < vehicles.size(); ++k) {
    out.middleRows<kDof>(k * kDof) = M.middleRows<kDof>(vehicles[k] * kDof);
  }
  return out;
}

}  // namespace

double UpdateMatrix::rcond() const {
  return Eigen::PartialPivLU<MatX>(involved_rows(columns_, vehicles_)).rcond();
}

MatX UpdateMatrix::solve(const MatX& B, double max_condition) const {
  if (B.rows() != columns_.rows()) throw ConfigError("update solve: right-hand side has the wrong height");
  // Rows J: S_JJ Z_J = B_J. Other rows: Z_i = B_i - S(i, J) Z_J.
  const Eigen::PartialPivLU<MatX> lu(involved_rows(columns_, vehicles_));
  const double rc = lu.rcond();
  if (!(rc > 0.0) || 1.0 / rc > max_condition) {
    throw UpdateSingularError("update matrix is singular (condition estimate " + std::to_string(1.0 / rc) + ")");
  }
  const MatX Z_J = lu.solve(involved_rows(B, vehicles_));
  MatX Z = B - columns_ * Z_J;
  for (std::size_t k = 0; k < vehicles_.size(); ++k) {
    Z.middleRows<kDof>(vehicles_[k] * kDof) = Z_J.middleRows<kDof>(k * kDof);
  }
  return Z;
}

}  // namespace meswarm
