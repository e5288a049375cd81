#include "meswarm/distributed_filter.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "meswarm/error.hpp"

namespace meswarm {

VehicleNode::VehicleNode(int id, VehicleState X0, MatX k_column, WorldConfig world, NoiseModel noise,
                         FilterOptions options)
    : id_(id),
      n_(static_cast<int>(k_column.rows() / kDof)),
      X_(std::move(X0)),
      k_col_(std::move(k_column)),
      world_(std::move(world)),
      noise_(std::move(noise)),
      options_(options) {
  if (k_col_.cols() != kDof || k_col_.rows() % kDof != 0 || n_ < 1) {
    throw ConfigError("node K column must be 15n x 15");
  }
  if (id_ < 0 || id_ >= n_) throw ConfigError("node id out of range");
  const Mat15 diag = diagonal_block();
  if ((diag - diag.transpose()).norm() > 1e-9 * std::max(1.0, diag.norm())) {
    throw ConfigError("diagonal block of the node K column is not symmetric");
  }
  for (int b = 0; b < n_; ++b) {
    if (b != id_) synced_until_[b] = 0;
  }
  process_weight_ = process_weight(noise_, id_);
}

void VehicleNode::propagate_local(const ImuSample& u, double dt) {
  if (!(dt > 0.0)) throw ConfigError("IMU period must be positive");
  const Mat15 A = a_check_single(X_, u);
  const GainTransition T = gain_transition(A, process_weight_, dt);
  auto diag = k_col_.middleRows<kDof>(static_cast<Eigen::Index>(id_) * kDof);
  Mat15 next;
  if (options_.scheme == IntegrationScheme::kExactHold) {
    next = T.Phi * diag * T.Phi.transpose() + T.Qd;
  } else {
    next = diag + dt * (A * diag + diag * A.transpose() + process_weight_);
  }
  diag = 0.5 * (next + next.transpose());
  lambda_acc_ = T.Phi * lambda_acc_;
  X_ = propagate_state(X_, u, dt, world_, options_.scheme);
  ++tick_;
}

PropagationFactor VehicleNode::emit_propagation_factor() {
  PropagationFactor msg{id_, lambda_acc_, span_begin_, tick_};
  lambda_acc_.setIdentity();
  span_begin_ = tick_;
  return msg;
}

void VehicleNode::absorb_propagation_factor(const PropagationFactor& own, const PropagationFactor& peer) {
  if (own.from != id_) throw ProtocolError("absorb: 'own' factor was not emitted by this node");
  if (peer.from == id_ || peer.from < 0 || peer.from >= n_) throw ProtocolError("absorb: invalid peer id");
  if (own.span_begin != peer.span_begin || own.span_end != peer.span_end) {
    throw SyncError("node " + std::to_string(id_) + ": factor span [" + std::to_string(peer.span_begin) + ", " +
                    std::to_string(peer.span_end) + ") from node " + std::to_string(peer.from) +
                    " does not match own span [" + std::to_string(own.span_begin) + ", " +
                    std::to_string(own.span_end) + ")");
  }
  Tick& synced = synced_until_.at(peer.from);
  if (peer.span_begin != synced) {
    throw SyncError("node " + std::to_string(id_) + ": missing epoch from node " + std::to_string(peer.from) +
                    " (synced until tick " + std::to_string(synced) + ")");
  }
  auto block = k_col_.middleRows<kDof>(static_cast<Eigen::Index>(peer.from) * kDof);
  block = (peer.lambda * block * own.lambda.transpose()).eval();
  synced = peer.span_end;
}

PeerStateRequest VehicleNode::request_peer_state(int peer) const {
  if (peer == id_ || peer < 0 || peer >= n_) throw ProtocolError("invalid peer for state request");
  return {id_, peer, tick_};
}

PeerStateReply VehicleNode::reply_peer_state(const PeerStateRequest& request) const {
  if (request.to != id_) throw ProtocolError("state request addressed to another node");
  if (request.tick != tick_) throw ProtocolError("state request for a different tick");
  return {id_, request.from, tick_, X_, k_col_};
}

UpdateBroadcast VehicleNode::originate_update(const Observation& obs, const std::optional<PeerStateReply>& peer,
                                              UpdateEncoding encoding) const {
  if (obs.observer != id_) throw ProtocolError("only the observing vehicle can originate an update");
  if (!(obs.dt_s > 0.0)) throw ObservationError("observation interval must be positive");

  MeasurementLinearization lin;
  std::vector<const MatX*> cols{&k_col_};
  if (obs.kind == ObservationKind::kLandmark) {
    lin = linearize_landmark(X_, obs, world_, noise_);
  } else {
    if (obs.subject == id_) throw ObservationError("a vehicle cannot observe its own marker");
    if (obs.subject < 0 || obs.subject >= n_) throw ObservationError("target vehicle out of range");
    if (!peer || peer->from != obs.subject || peer->to != id_ || peer->tick != tick_) {
      throw ProtocolError("inter-vehicle update needs the target's state for this tick; request it first");
    }
    lin = linearize_intervehicle(X_, peer->state, obs, world_, noise_);
    cols.push_back(&peer->k_column);
  }

  UpdateBroadcast msg;
  msg.origin = id_;
  msg.tick = tick_;
  msg.kind = obs.kind;
  msg.subject = obs.subject;
  msg.dt = obs.dt_s;
  msg.r = lin.dense_residual(n_);
  msg.S = UpdateMatrix::build(n_, cols, lin, obs.dt_s);
  msg.encoding = encoding;
  const double rc = msg.S.rcond();
  if (!(rc > 0.0) || 1.0 / rc > options_.max_update_condition) {
    throw UpdateSingularError("update matrix is singular (condition estimate " + std::to_string(1.0 / rc) + ")");
  }
  return msg;
}

void VehicleNode::apply_update(const UpdateBroadcast& msg) {
  if (msg.tick != tick_) throw ProtocolError("update broadcast is for a different tick");
  if (msg.S.network_size() != n_ || msg.r.size() != k_col_.rows()) {
    throw ProtocolError("update broadcast has the wrong network size");
  }
  MatX next = msg.S.solve(k_col_, options_.max_update_condition);
  auto diag = next.middleRows<kDof>(static_cast<Eigen::Index>(id_) * kDof);
  diag = (0.5 * (diag + diag.transpose())).eval();
  k_col_ = std::move(next);

  const TangentVector step = msg.dt * (k_col_.transpose() * msg.r);
  X_ = compose(X_, group_exp(step));
  X_.pose.R = reorthonormalize(X_.pose.R);
}

void MessageBus::set_sink(std::ostream* sink, LogDetail detail) {
  sink_ = sink;
  detail_ = detail;
}

void MessageBus::post(Tick tick, const NetMessage& msg) {
  records_.push_back({tick, std::string(message_type(msg)), message_sender(msg)});
  if (sink_ == nullptr) return;
  if (detail_ == LogDetail::kFull) {
    *sink_ << encode_bus_record(tick, msg) << '\n';
  } else {
    *sink_ << "{\"tick\":" << tick << ",\"type\":\"" << message_type(msg) << "\",\"from\":" << message_sender(msg)
           << "}\n";
  }
}

std::size_t MessageBus::count(std::string_view type) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [&](const BusRecord& r) { return r.type == type; }));
}

DistributedNetwork::DistributedNetwork(const Prior& prior, const WorldConfig& world, const NoiseModel& noise,
                                       FilterOptions options, UpdateEncoding encoding)
    : encoding_(encoding) {
  validate_prior(prior);
  noise.validate();
  const MatX K = symmetric_part(prior.K0);
  for (std::size_t a = 0; a < prior.X0.size(); ++a) {
    nodes_.emplace_back(static_cast<int>(a), prior.X0[a], K.middleCols<kDof>(static_cast<Eigen::Index>(a) * kDof),
                        world, noise, options);
  }
}

void DistributedNetwork::propagate(std::span<const ImuSample> imu, double dt) {
  if (imu.size() != nodes_.size()) throw ConfigError("propagate needs exactly one IMU sample per vehicle");
  for (std::size_t a = 0; a < nodes_.size(); ++a) nodes_[a].propagate_local(imu[a], dt);
}

void DistributedNetwork::synchronize() {
  if (nodes_.size() < 2 || nodes_.front().factor_span_begin() == nodes_.front().tick()) return;
  const Tick now = tick();
  std::vector<PropagationFactor> factors;
  factors.reserve(nodes_.size());
  for (auto& node : nodes_) {
    factors.push_back(node.emit_propagation_factor());
    bus_.post(now, factors.back());
  }
  for (auto& node : nodes_) {
    for (const auto& f : factors) {
      if (f.from != node.id()) node.absorb_propagation_factor(factors[node.id()], f);
    }
  }
}

void DistributedNetwork::process(const Observation& obs) {
  const int n = vehicle_count();
  if (obs.observer < 0 || obs.observer >= n) throw ObservationError("observer out of range");
  if (obs.kind == ObservationKind::kInterVehicle && (obs.subject < 0 || obs.subject >= n)) {
    throw ObservationError("target vehicle out of range");
  }
  if (obs.kind == ObservationKind::kInterVehicle && obs.subject == obs.observer) {
    throw ObservationError("a vehicle cannot observe its own marker");
  }
  synchronize();

  const Tick now = tick();
  VehicleNode& origin = nodes_[obs.observer];
  std::optional<PeerStateReply> reply;
  if (obs.kind == ObservationKind::kInterVehicle) {
    const PeerStateRequest request = origin.request_peer_state(obs.subject);
    bus_.post(now, request);
    reply = nodes_[obs.subject].reply_peer_state(request);
    bus_.post(now, *reply);
  }
  const UpdateBroadcast msg = origin.originate_update(obs, reply, encoding_);
  bus_.post(now, msg);
  for (auto& node : nodes_) node.apply_update(msg);
}

NetworkState DistributedNetwork::estimate() const {
  NetworkState X;
  X.reserve(nodes_.size());
  for (const auto& node : nodes_) X.push_back(node.estimate());
  return X;
}

MatX DistributedNetwork::gain() const {
  const auto dim = static_cast<Eigen::Index>(nodes_.size()) * kDof;
  MatX K(dim, dim);
  for (const auto& node : nodes_) K.middleCols<kDof>(static_cast<Eigen::Index>(node.id()) * kDof) = node.k_column();
  return K;
}

}  // namespace meswarm
