#pragma once

#include <vector>

#include "meswarm/lie.hpp"
#include "meswarm/models.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

/// How one IMU tick is integrated under sample-and-hold inputs.
///
/// kExactHold solves the held-input flow exactly: the state through the
/// closed-form SE_2(3) kinematics with gravity, the gain through
/// K <- Phi K Phi^T + Qd with Phi = exp(A dt). This is the discretisation whose
/// cross-vehicle blocks factor exactly into the per-vehicle Lambda products.
///
/// kFirstOrder is the literal one-step form X exp(dt lambda(X, u)) and
/// K + dt (A K + K A^T + B W^-1 B^T).
enum class IntegrationScheme { kExactHold, kFirstOrder };

VehicleState propagate_state(const VehicleState& X, const ImuSample& u, double dt, const WorldConfig& world,
                             IntegrationScheme scheme);

/// Exact transition of dK/dt = A K + K A^T + Q over dt with constant A, Q.
struct GainTransition {
  Mat15 Phi;  // exp(A dt)
  Mat15 Qd;   // integral of exp(A s) Q exp(A^T s) over [0, dt]
};

GainTransition gain_transition(const Mat15& A, const Mat15& Q, double dt);

/// S = I + dt K E for an E supported on the blocks of `vehicles`.
/// Only the involved block columns S(:, J) differ from the identity, so the
/// matrix is stored as those columns and solved by block elimination.
class UpdateMatrix {
 public:
  UpdateMatrix() = default;
  UpdateMatrix(int n, std::vector<int> vehicles, MatX columns);

  /// Builds S from the K columns of the involved vehicles (each 15n x 15, in
  /// the order of lin.vehicles).
  static UpdateMatrix build(int n, const std::vector<const MatX*>& k_columns, const MeasurementLinearization& lin,
                            double dt);
  /// Recovers the structured form from a dense S; columns outside
  /// `vehicles` must equal the identity.
  static UpdateMatrix from_dense(const MatX& S, std::vector<int> vehicles);

  int network_size() const { return n_; }
  const std::vector<int>& vehicles() const { return vehicles_; }
  const MatX& columns() const { return columns_; }
  MatX dense() const;

  /// Reciprocal condition estimate of the involved diagonal block.
  double rcond() const;

  /// Solves S Z = B. Throws UpdateSingularError when 1/rcond > max_condition.
  MatX solve(const MatX& B, double max_condition) const;

 private:
  int n_ = 0;
  std::vector<int> vehicles_;
  MatX columns_;  // 15n x 15m
};

/// Rows of vehicle `a` from a stacked 15n vector.
inline auto vehicle_segment(const VecX& v, int a) { return v.segment<kDof>(static_cast<Eigen::Index>(a) * kDof); }

}  // namespace meswarm
