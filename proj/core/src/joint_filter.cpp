#include "meswarm/joint_filter.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "meswarm/error.hpp"
#include "log.hpp"

namespace meswarm {

MatX block_diagonal_gain(const std::vector<Mat15>& blocks) {
  const auto n = static_cast<Eigen::Index>(blocks.size());
  MatX K = MatX::Zero(n * kDof, n * kDof);
  for (Eigen::Index a = 0; a < n; ++a) K.block<kDof, kDof>(a * kDof, a * kDof) = blocks[a];
  return K;
}

SourceKey source_key(const Observation& obs) {
  return {static_cast<int>(obs.kind), obs.observer, obs.subject};
}

void validate_prior(const Prior& prior) {
  const auto dim = static_cast<Eigen::Index>(prior.X0.size()) * kDof;
  if (prior.X0.empty()) throw ConfigError("prior must contain at least one vehicle");
  if (prior.K0.rows() != dim || prior.K0.cols() != dim) {
    throw ConfigError("prior gain must be " + std::to_string(dim) + " x " + std::to_string(dim));
  }
  if (!prior.K0.allFinite()) throw ConfigError("prior gain has non-finite entries");
  if ((prior.K0 - prior.K0.transpose()).norm() > 1e-9 * prior.K0.norm()) {
    throw ConfigError("prior gain is not symmetric");
  }
  Eigen::LLT<MatX> llt(prior.K0);
  if (llt.info() != Eigen::Success) throw ConfigError("prior gain is not positive definite");
  const Eigen::VectorXd d = llt.matrixLLT().diagonal();
  if (d.minCoeff() <= 1e-12 * d.maxCoeff()) throw ConfigError("prior gain is numerically singular");
}

JointFilter::JointFilter(const Prior& prior, WorldConfig world, NoiseModel noise, FilterOptions options,
                         TimeNs t0_ns)
    : world_(std::move(world)), noise_(std::move(noise)), options_(options) {
  validate_prior(prior);
  noise_.validate();
  state_.X = prior.X0;
  state_.K = symmetric_part(prior.K0);
  state_.t_ns = t0_ns;
  for (int a = 0; a < vehicle_count(); ++a) process_weights_.push_back(process_weight(noise_, a));
}

void JointFilter::propagate(std::span<const ImuSample> imu, double dt) {
  if (!(dt > 0.0)) throw ConfigError("IMU period must be positive");
  const int n = vehicle_count();
  if (static_cast<int>(imu.size()) != n) throw ConfigError("propagate needs exactly one IMU sample per vehicle");

  std::vector<Mat15> A(n);
  for (int a = 0; a < n; ++a) A[a] = a_check_single(state_.X[a], imu[a]);

  MatX& K = state_.K;
  if (options_.scheme == IntegrationScheme::kExactHold) {
    std::vector<GainTransition> T(n);
    for (int a = 0; a < n; ++a) T[a] = gain_transition(A[a], process_weights_[a], dt);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        Mat15 block = T[a].Phi * K.block<kDof, kDof>(a * kDof, b * kDof) * T[b].Phi.transpose();
        if (a == b) block += T[a].Qd;
        K.block<kDof, kDof>(a * kDof, b * kDof) = block;
      }
    }
  } else {
    const MatX K_old = K;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const auto K_ab = K_old.block<kDof, kDof>(a * kDof, b * kDof);
        Mat15 rate = A[a] * K_ab + K_ab * A[b].transpose();
        if (a == b) rate += process_weights_[a];
        K.block<kDof, kDof>(a * kDof, b * kDof) = K_ab + dt * rate;
      }
    }
  }
  K = symmetric_part(K);

  for (int a = 0; a < n; ++a) {
    state_.X[a] = propagate_state(state_.X[a], imu[a], dt, world_, options_.scheme);
  }
  state_.t_ns += static_cast<TimeNs>(std::llround(dt * kNsPerSecond));
}

void JointFilter::update(const Observation& obs) { update(obs, options_.with_curvature); }

void JointFilter::update(const Observation& obs, bool with_curvature) {
  if (obs.t_ns < state_.t_ns) {
    throw ObservationError("observation at " + std::to_string(obs.t_ns) + " ns is older than filter time " +
                           std::to_string(state_.t_ns) + " ns");
  }
  if (obs.t_ns > state_.t_ns) {
    throw ObservationError("observation at " + std::to_string(obs.t_ns) +
                           " ns is ahead of filter time; propagate to it first");
  }
  if (!(obs.dt_s > 0.0)) throw ObservationError("observation interval must be positive");

  const int n = vehicle_count();
  const MeasurementLinearization lin = linearize(state_.X, obs, world_, noise_);
  const VecX r = lin.dense_residual(n);
  const MatX& K = state_.K;

  MatX K_next;
  if (with_curvature) {
    // (I + dt K (E + P_s(K^-1 ad_{Kr})))^-1 K, with K at time t inside ad.
    const MatX ad = network_adjoint_matrix(K * r);
    Eigen::LLT<MatX> llt(K);
    const MatX K_inv_ad = llt.info() == Eigen::Success ? MatX(llt.solve(ad)) : MatX(K.partialPivLu().solve(ad));
    const MatX S = MatX::Identity(K.rows(), K.cols()) + obs.dt_s * (K * (lin.dense_E(n) + symmetric_part(K_inv_ad)));
    const Eigen::PartialPivLU<MatX> lu(S);
    const double rc = lu.rcond();
    if (!(rc > 0.0) || 1.0 / rc > options_.max_update_condition) {
      throw UpdateSingularError("update matrix is singular (condition estimate " + std::to_string(1.0 / rc) + ")");
    }
    K_next = lu.solve(K);
  } else {
    std::vector<MatX> cols;
    cols.reserve(lin.vehicles.size());
    for (int v : lin.vehicles) cols.emplace_back(K.middleCols<kDof>(static_cast<Eigen::Index>(v) * kDof));
    std::vector<const MatX*> col_ptrs;
    for (const auto& c : cols) col_ptrs.push_back(&c);
    K_next = UpdateMatrix::build(n, col_ptrs, lin, obs.dt_s).solve(K, options_.max_update_condition);
  }
  K_next = symmetric_part(K_next);

  state_.X = retract(state_.X, obs.dt_s * (K_next * r));
  state_.K = std::move(K_next);
  state_.last_observation[source_key(obs)] = obs.t_ns;
  if (options_.check_positive_definite) check_gain();
}

void JointFilter::check_gain() {
  if (Eigen::LLT<MatX>(state_.K).info() != Eigen::Success) {
    ++pd_failures_;
    log::warn("joint gain lost positive definiteness at t = {} ns ({} failures)", state_.t_ns, pd_failures_);
  }
}

}  // namespace meswarm
