#pragma once

#include <map>
#include <span>
#include <tuple>

#include "meswarm/gain_dynamics.hpp"
#include "meswarm/lie.hpp"
#include "meswarm/models.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

struct FilterOptions {
  IntegrationScheme scheme = IntegrationScheme::kExactHold;
  /// Keep the -P_s(ad_{Kr} K) addend in the gain update. Only meaningful for
  /// the centralised filter.
  bool with_curvature = true;
  /// 1/rcond above this raises UpdateSingularError.
  double max_update_condition = 1e12;
  /// Cholesky-check K after every update and log failures.
  bool check_positive_definite = true;
};

struct Prior {
  NetworkState X0;
  MatX K0;  // 15n x 15n, SPD
};

/// Block-diagonal K0 from per-vehicle 15x15 blocks.
MatX block_diagonal_gain(const std::vector<Mat15>& blocks);

/// (kind, observer, subject)
using SourceKey = std::tuple<int, int, int>;
SourceKey source_key(const Observation& obs);

struct JointFilterState {
  NetworkState X;
  MatX K;
  TimeNs t_ns = 0;
  std::map<SourceKey, TimeNs> last_observation;
};

/// Throws ConfigError unless K0 is square 15n x 15n, symmetric and SPD.
void validate_prior(const Prior& prior);

/// Centralised discrete-time minimum-energy filter on G(n). One writer at a
/// time; accessors return snapshots.
class JointFilter {
 public:
  JointFilter(const Prior& prior, WorldConfig world, NoiseModel noise, FilterOptions options = {},
              TimeNs t0_ns = 0);

  /// One IMU tick: one sample per vehicle, common period dt.
  void propagate(std::span<const ImuSample> imu, double dt);

  /// Sequential measurement update at the current tick. Throws
  /// UpdateSingularError (state left untouched) or ObservationError.
  void update(const Observation& obs);
  void update(const Observation& obs, bool with_curvature);

  NetworkState estimate() const { return state_.X; }
  MatX gain() const { return state_.K; }
  const JointFilterState& state() const { return state_; }
  int vehicle_count() const { return static_cast<int>(state_.X.size()); }
  TimeNs time_ns() const { return state_.t_ns; }

  /// Number of updates after which the Cholesky check of K failed.
  int positive_definite_failures() const { return pd_failures_; }

  const WorldConfig& world() const { return world_; }
  const NoiseModel& noise() const { return noise_; }
  const FilterOptions& options() const { return options_; }

 private:
  void check_gain();

  JointFilterState state_;
  WorldConfig world_;
  NoiseModel noise_;
  FilterOptions options_;
  std::vector<Mat15> process_weights_;
  int pd_failures_ = 0;
};

}  // namespace meswarm
