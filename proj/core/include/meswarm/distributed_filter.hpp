#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meswarm/gain_dynamics.hpp"
#include "meswarm/joint_filter.hpp"
#include "meswarm/models.hpp"
#include "meswarm/net_message.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

/// One vehicle's share of the decentralised filter: its own estimate, its
/// 15n x 15 column of K and the propagation factor accumulated since the last
/// exchange.
class VehicleNode {
 public:
  VehicleNode(int id, VehicleState X0, MatX k_column, WorldConfig world, NoiseModel noise,
              FilterOptions options = {});

  int id() const { return id_; }
  int network_size() const { return n_; }
  Tick tick() const { return tick_; }

  const VehicleState& estimate() const { return X_; }
  const MatX& k_column() const { return k_col_; }
  Mat15 diagonal_block() const { return k_col_.middleRows<kDof>(static_cast<Eigen::Index>(id_) * kDof); }
  const Mat15& accumulated_factor() const { return lambda_acc_; }
  Tick factor_span_begin() const { return span_begin_; }

  /// One IMU tick of the local estimate, the diagonal block of K and the
  /// propagation factor. Cross-vehicle blocks are left for the next exchange.
  void propagate_local(const ImuSample& u, double dt);

  /// Hands out the accumulated factor and resets it to the identity.
  PropagationFactor emit_propagation_factor();

  /// Advances block (peer, self) of the column with Lambda_peer K Lambda_own^T.
  /// Throws SyncError if the two spans differ or the peer skipped an epoch.
  void absorb_propagation_factor(const PropagationFactor& own, const PropagationFactor& peer);

  PeerStateRequest request_peer_state(int peer) const;
  PeerStateReply reply_peer_state(const PeerStateRequest& request) const;

  /// Computes r and S = I + dt K E for an observation made by this node.
  /// Inter-vehicle observations need the target's reply for this tick, else
  /// ProtocolError. Throws UpdateSingularError if S is singular.
  UpdateBroadcast originate_update(const Observation& obs, const std::optional<PeerStateReply>& peer,
                                   UpdateEncoding encoding = UpdateEncoding::kDense) const;

  /// K_col <- S^-1 K_col, then X <- X exp(dt K_col^T r).
  void apply_update(const UpdateBroadcast& msg);

 private:
  int id_;
  int n_;
  VehicleState X_;
  MatX k_col_;
  Mat15 lambda_acc_ = Mat15::Identity();
  Tick tick_ = 0;
  Tick span_begin_ = 0;
  std::map<int, Tick> synced_until_;
  WorldConfig world_;
  NoiseModel noise_;
  FilterOptions options_;
  Mat15 process_weight_;
};

struct BusRecord {
  Tick tick;
  std::string type;
  int from;
};

/// Records every message with its tick. Optionally streams the full textual
/// encoding (one line per message) to a sink.
class MessageBus {
 public:
  enum class LogDetail { kFull, kHeaders };

  void set_sink(std::ostream* sink, LogDetail detail = LogDetail::kFull);
  void post(Tick tick, const NetMessage& msg);

  const std::vector<BusRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::size_t count(std::string_view type) const;

 private:
  std::vector<BusRecord> records_;
  std::ostream* sink_ = nullptr;
  LogDetail detail_ = LogDetail::kFull;
};

/// Drives n VehicleNodes through the message protocol: lazy factor exchange
/// when an update is originated, peer-state request/reply for inter-vehicle
/// observations, then one update broadcast applied by every node.
class DistributedNetwork {
 public:
  DistributedNetwork(const Prior& prior, const WorldConfig& world, const NoiseModel& noise,
                     FilterOptions options = {}, UpdateEncoding encoding = UpdateEncoding::kDense);

  void propagate(std::span<const ImuSample> imu, double dt);

  /// Processes one observation at the current tick. Throws
  /// UpdateSingularError before any node is modified if S is singular.
  void process(const Observation& obs);

  /// Exchanges factors now if any tick has elapsed since the last exchange.
  void synchronize();

  int vehicle_count() const { return static_cast<int>(nodes_.size()); }
  Tick tick() const { return nodes_.front().tick(); }
  NetworkState estimate() const;
  /// K reassembled from the node columns; only meaningful right after a
  /// synchronize (cross blocks are stale between exchanges).
  MatX gain() const;

  std::vector<VehicleNode>& nodes() { return nodes_; }
  const std::vector<VehicleNode>& nodes() const { return nodes_; }
  MessageBus& bus() { return bus_; }
  const MessageBus& bus() const { return bus_; }

 private:
  std::vector<VehicleNode> nodes_;
  MessageBus bus_;
  UpdateEncoding encoding_;
};

}  // namespace meswarm
