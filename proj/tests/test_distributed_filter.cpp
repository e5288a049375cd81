#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <variant>

#include "meswarm/distributed_filter.hpp"
#include "meswarm/error.hpp"
#include "test_support.hpp"

namespace meswarm {
namespace {

using testing::Random;

Prior random_prior(Random& rng, int n, bool coupled = true) {
  Prior p;
  for (int i = 0; i < n; ++i) p.X0.push_back(rng.state());
  p.K0 = rng.spd(15 * n, 0.05, 1.0);
  if (!coupled) {
    std::vector<Mat15> blocks;
    for (int i = 0; i < n; ++i) blocks.push_back(p.K0.block<15, 15>(15 * i, 15 * i));
    p.K0 = block_diagonal_gain(blocks);
  }
  return p;
}

WorldConfig test_world(Random& rng) {
  WorldConfig w;
  w.landmarks = {{0, rng.vec3(4.0)}, {1, rng.vec3(4.0)}};
  w.markers = {{1, rng.vec3(0.2)}};
  return w;
}

VehicleNode make_node(const Prior& prior, int id, const WorldConfig& world) {
  return VehicleNode(id, prior.X0[id], prior.K0.middleCols(15 * id, 15), world, NoiseModel{});
}

TEST(VehicleNode, FreshFactorIsIdentityWithEmptySpan) {
  Random rng(1);
  const Prior prior = random_prior(rng, 2);
  VehicleNode node = make_node(prior, 0, WorldConfig{});
  const PropagationFactor f = node.emit_propagation_factor();
  EXPECT_EQ(f.lambda, Mat15::Identity());
  EXPECT_EQ(f.span_begin, f.span_end);
}

TEST(VehicleNode, SingleTickFactorIsMatrixExponential) {
  Random rng(2);
  const Prior prior = random_prior(rng, 2);
  VehicleNode node = make_node(prior, 1, WorldConfig{});
  const ImuSample u = rng.imu();
  node.propagate_local(u, 0.005);
  const Mat15 oracle = testing::series_exp(a_check_single(prior.X0[1], u) * 0.005, 30);
  EXPECT_LE(testing::max_abs(node.emit_propagation_factor().lambda - oracle), 1e-13);
}

TEST(VehicleNode, FactorIsOrderedProductOfStepExponentials) {
  Random rng(3);
  const Prior prior = random_prior(rng, 2);
  VehicleNode node = make_node(prior, 0, WorldConfig{});
  Mat15 oracle = Mat15::Identity();
  for (int k = 0; k < 25; ++k) {
    const ImuSample u = rng.imu();
    oracle = testing::series_exp(a_check_single(node.estimate(), u) * 0.005, 30) * oracle;
    node.propagate_local(u, 0.005);
  }
  const PropagationFactor f = node.emit_propagation_factor();
  EXPECT_LE(testing::max_abs(f.lambda - oracle), 1e-12);
  EXPECT_EQ(f.span_begin, 0);
  EXPECT_EQ(f.span_end, 25);
}

TEST(VehicleNode, ConsecutiveFactorsTelescope) {
  Random rng(4);
  const Prior prior = random_prior(rng, 2);
  VehicleNode a = make_node(prior, 0, WorldConfig{}), b = make_node(prior, 0, WorldConfig{});
  std::vector<ImuSample> u;
  for (int k = 0; k < 20; ++k) u.push_back(rng.imu());
  for (int k = 0; k < 8; ++k) a.propagate_local(u[k], 0.005);
  const PropagationFactor first = a.emit_propagation_factor();
  for (int k = 8; k < 20; ++k) a.propagate_local(u[k], 0.005);
  const PropagationFactor second = a.emit_propagation_factor();
  for (const auto& s : u) b.propagate_local(s, 0.005);
  const PropagationFactor whole = b.emit_propagation_factor();
  EXPECT_EQ(second.span_begin, first.span_end);
  EXPECT_LE(testing::max_abs(second.lambda * first.lambda - whole.lambda), 1e-12);
}

TEST(VehicleNode, EquilibriumDiagonalBlockGainsProcessWeight) {
  // With K = 0-like tiny prior and equilibrium inputs the diagonal block grows
  // by the exactly integrated process weight.
  Random rng(5);
  Prior prior = random_prior(rng, 1);
  VehicleNode node = make_node(prior, 0, WorldConfig{});
  ImuSample u;
  u.gyro = prior.X0[0].gyro_bias;
  u.accel = prior.X0[0].accel_bias;
  node.propagate_local(u, 0.005);
  const Mat15 A = a_check_single(prior.X0[0], u);
  const GainTransition T = gain_transition(A, process_weight(NoiseModel{}, 0), 0.005);
  const Mat15 expected = T.Phi * prior.K0 * T.Phi.transpose() + T.Qd;
  EXPECT_LE(testing::max_abs(node.diagonal_block() - expected), 1e-13);
}

TEST(VehicleNode, IdentityFactorsLeaveCrossBlockUnchanged) {
  Random rng(6);
  const Prior prior = random_prior(rng, 2);
  VehicleNode node = make_node(prior, 0, WorldConfig{});
  const MatX before = node.k_column();
  node.absorb_propagation_factor({0, Mat15::Identity(), 0, 0}, {1, Mat15::Identity(), 0, 0});
  EXPECT_EQ(node.k_column(), before);
}

TEST(VehicleNode, ZeroCrossBlockStaysZero) {
  Random rng(7);
  const Prior prior = random_prior(rng, 2, false);
  VehicleNode node = make_node(prior, 0, WorldConfig{});
  node.absorb_propagation_factor({0, Mat15(rng.spd(15)), 0, 5}, {1, Mat15(rng.spd(15)), 0, 5});
  EXPECT_TRUE(node.k_column().middleRows(15, 15).isZero());
}

TEST(VehicleNode, SpanMismatchIsSyncError) {
  Random rng(8);
  const Prior prior = random_prior(rng, 3);
  VehicleNode node = make_node(prior, 0, WorldConfig{});
  EXPECT_THROW(node.absorb_propagation_factor({0, Mat15::Identity(), 0, 4}, {1, Mat15::Identity(), 0, 3}),
               SyncError);
  // Node 2 skipped the [0, 4) epoch.
  EXPECT_THROW(node.absorb_propagation_factor({0, Mat15::Identity(), 4, 8}, {2, Mat15::Identity(), 4, 8}),
               SyncError);
  EXPECT_THROW(node.absorb_propagation_factor({1, Mat15::Identity(), 0, 4}, {2, Mat15::Identity(), 0, 4}),
               ProtocolError);
}

TEST(VehicleNode, IntervehicleUpdateNeedsPeerState) {
  Random rng(9);
  const WorldConfig world = test_world(rng);
  const Prior prior = random_prior(rng, 2);
  VehicleNode node = make_node(prior, 0, world);
  const Observation obs{ObservationKind::kInterVehicle, 0, 1, rng.vec3(), 0, 0.1};
  EXPECT_THROW(node.originate_update(obs, std::nullopt), ProtocolError);
  VehicleNode peer = make_node(prior, 1, world);
  EXPECT_NO_THROW(node.originate_update(obs, peer.reply_peer_state(node.request_peer_state(1))));
}

TEST(VehicleNode, PerfectMeasurementStillContracts) {
  Random rng(10);
  const WorldConfig world = test_world(rng);
  const Prior prior = random_prior(rng, 2);
  const VehicleNode node = make_node(prior, 1, world);
  const Vec3 y = predict_landmark(prior.X0[1], world.landmarks.at(0));
  const UpdateBroadcast msg = node.originate_update({ObservationKind::kLandmark, 1, 0, y, 0, 0.1}, std::nullopt);
  EXPECT_LE(msg.r.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_GT(testing::max_abs(msg.S.dense() - MatX::Identity(30, 30)), 0.0);
  EXPECT_EQ(msg.S.vehicles(), std::vector<int>{1});
}

TEST(VehicleNode, IdentityUpdateIsNoOp) {
  Random rng(11);
  const Prior prior = random_prior(rng, 2);
  VehicleNode node = make_node(prior, 0, WorldConfig{});
  UpdateBroadcast msg;
  msg.dt = 0.1;
  msg.r = VecX::Zero(30);
  msg.S = UpdateMatrix(2, {0}, MatX::Identity(30, 30).middleCols(0, 15));
  const MatX before = node.k_column();
  node.apply_update(msg);
  EXPECT_LE(testing::max_abs(node.k_column() - before), 1e-15);
  EXPECT_LE((node.estimate().x() - prior.X0[0].x()).norm(), 1e-15);
}

TEST(VehicleNode, UpdateMatrixMatchesJointFilterWithoutCurvature) {
  Random rng(12);
  const WorldConfig world = test_world(rng);
  for (int trial = 0; trial < 50; ++trial) {
    const Prior prior = random_prior(rng, 3);
    const bool landmark = trial % 2 == 0;
    const Observation obs = landmark ? Observation{ObservationKind::kLandmark, 2, 1, rng.vec3(3.0), 0, 0.1}
                                     : Observation{ObservationKind::kInterVehicle, 0, 1, rng.vec3(3.0), 0, 0.1};
    const VehicleNode origin = make_node(prior, obs.observer, world);
    std::optional<PeerStateReply> reply;
    if (!landmark) reply = make_node(prior, 1, world).reply_peer_state(origin.request_peer_state(1));
    const UpdateBroadcast msg = origin.originate_update(obs, reply);
    const auto lin = linearize(prior.X0, obs, world, NoiseModel{});
    const MatX oracle = MatX::Identity(45, 45) + obs.dt_s * prior.K0 * lin.dense_E(3);
    EXPECT_LE(testing::max_abs(msg.S.dense() - oracle), 1e-10 * std::max(1.0, testing::max_abs(oracle)));
  }
}

TEST(UpdateMatrix, DenseAndStructuredSolvesAgree) {
  Random rng(13);
  MatX cols = 0.3 * MatX::Random(45, 30);
  cols.block(15, 0, 30, 30) += MatX::Identity(30, 30);
  const UpdateMatrix S(3, {1, 2}, cols);
  const MatX B = MatX::Random(45, 15);
  const MatX Z = S.solve(B, 1e12);
  EXPECT_LE(testing::max_abs(S.dense() * Z - B), 1e-12);
  const UpdateMatrix round = UpdateMatrix::from_dense(S.dense(), {1, 2});
  EXPECT_EQ(round.columns(), S.columns());
  MatX bad = S.dense();
  bad(0, 0) = 2.0;
  EXPECT_THROW(UpdateMatrix::from_dense(bad, {1, 2}), ConfigError);
}

TEST(DistributedNetwork, SingleVehicleMatchesJointFilter) {
  Random rng(14);
  const WorldConfig world = test_world(rng);
  const Prior prior = random_prior(rng, 1);
  FilterOptions options;
  options.with_curvature = false;
  JointFilter joint(prior, world, NoiseModel{}, options);
  DistributedNetwork net(prior, world, NoiseModel{}, options);
  for (int k = 0; k < 100; ++k) {
    if (k % 20 == 0) {
      const Observation obs{ObservationKind::kLandmark, 0, k % 40 == 0 ? 0 : 1, rng.vec3(3.0), joint.time_ns(), 0.1};
      joint.update(obs);
      net.process(obs);
    }
    const ImuSample u = rng.imu();
    joint.propagate(std::span(&u, 1), 0.005);
    net.propagate(std::span(&u, 1), 0.005);
  }
  EXPECT_LE(testing::max_abs(net.gain() - joint.gain()), 1e-10);
  EXPECT_LE((net.estimate()[0].x() - joint.estimate()[0].x()).norm(), 1e-10);
  EXPECT_EQ(net.bus().count("propagation_factor"), 0u);
}

TEST(DistributedNetwork, DecouplingIsExactBetweenMeasurements) {
  Random rng(15);
  const WorldConfig world = test_world(rng);
  const Prior prior = random_prior(rng, 3);
  JointFilter joint(prior, world, NoiseModel{});
  DistributedNetwork net(prior, world, NoiseModel{});
  for (int k = 0; k < 200; ++k) {
    const std::vector<ImuSample> u = {rng.imu(), rng.imu(), rng.imu()};
    joint.propagate(u, 0.005);
    net.propagate(u, 0.005);
    if (k % 37 == 0) {
      // Diagonal blocks are always current, cross blocks only after an exchange.
      for (int a = 0; a < 3; ++a) {
        EXPECT_LE(testing::max_abs(net.nodes()[a].diagonal_block() - joint.gain().block(15 * a, 15 * a, 15, 15)), 1e-9);
      }
      net.synchronize();
      EXPECT_LE(testing::max_abs(net.gain() - joint.gain()), 1e-9 * testing::max_abs(joint.gain()));
    }
  }
  for (int a = 0; a < 3; ++a) {
    EXPECT_LE((net.estimate()[a].x() - joint.estimate()[a].x()).norm(), 1e-9);
  }
}

TEST(VehicleNode, DenseAndFactoredWireEncodingsApplyIdentically) {
  Random rng(16);
  const WorldConfig world = test_world(rng);
  for (int trial = 0; trial < 10; ++trial) {
    const Prior prior = random_prior(rng, 3);
    const Observation obs{ObservationKind::kInterVehicle, 2, 0, rng.vec3(3.0), 0, 0.1};
    const VehicleNode origin = make_node(prior, 2, world);
    const auto reply = make_node(prior, 0, world).reply_peer_state(origin.request_peer_state(0));
    const auto dense = std::get<UpdateBroadcast>(decode(encode(origin.originate_update(obs, reply, UpdateEncoding::kDense))));
    const auto factored =
        std::get<UpdateBroadcast>(decode(encode(origin.originate_update(obs, reply, UpdateEncoding::kFactored))));
    EXPECT_EQ(factored.encoding, UpdateEncoding::kFactored);
    EXPECT_EQ(dense.S.vehicles(), factored.S.vehicles());
    for (int a = 0; a < 3; ++a) {
      VehicleNode x = make_node(prior, a, world), y = make_node(prior, a, world);
      x.apply_update(dense);
      y.apply_update(factored);
      EXPECT_EQ(x.k_column(), y.k_column());
      EXPECT_EQ(x.estimate().x(), y.estimate().x());
    }
  }
}

TEST(DistributedNetwork, MessageCountsPerUpdate) {
  Random rng(17);
  const WorldConfig world = test_world(rng);
  const Prior prior = random_prior(rng, 4);
  DistributedNetwork net(prior, world, NoiseModel{});
  const std::vector<ImuSample> u = {rng.imu(), rng.imu(), rng.imu(), rng.imu()};
  net.propagate(u, 0.005);
  net.process({ObservationKind::kLandmark, 0, 0, rng.vec3(), 0, 0.1});
  EXPECT_EQ(net.bus().count("propagation_factor"), 4u);
  EXPECT_EQ(net.bus().count("update"), 1u);
  // A second update in the same tick needs no new exchange.
  net.process({ObservationKind::kInterVehicle, 2, 1, rng.vec3(), 0, 0.1});
  EXPECT_EQ(net.bus().count("propagation_factor"), 4u);
  EXPECT_EQ(net.bus().count("peer_state_request"), 1u);
  EXPECT_EQ(net.bus().count("peer_state_reply"), 1u);
  EXPECT_EQ(net.bus().count("update"), 2u);
}

TEST(DistributedNetwork, NoMessagesWithoutObservations) {
  Random rng(18);
  const Prior prior = random_prior(rng, 3);
  std::ostringstream log;
  DistributedNetwork net(prior, WorldConfig{}, NoiseModel{});
  net.bus().set_sink(&log);
  for (int k = 0; k < 100; ++k) {
    const std::vector<ImuSample> u = {rng.imu(), rng.imu(), rng.imu()};
    net.propagate(u, 0.005);
  }
  EXPECT_EQ(net.bus().size(), 0u);
  EXPECT_TRUE(log.str().empty());
}

TEST(DistributedNetwork, BusLogHasOneLinePerMessage) {
  Random rng(19);
  const WorldConfig world = test_world(rng);
  const Prior prior = random_prior(rng, 2);
  for (auto detail : {MessageBus::LogDetail::kFull, MessageBus::LogDetail::kHeaders}) {
    std::ostringstream log;
    DistributedNetwork net(prior, world, NoiseModel{});
    net.bus().set_sink(&log, detail);
    const std::vector<ImuSample> u = {rng.imu(), rng.imu()};
    net.propagate(u, 0.005);
    net.process({ObservationKind::kInterVehicle, 0, 1, rng.vec3(), 0, 0.1});
    const std::string text = log.str();
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), net.bus().size());
    EXPECT_EQ(text.rfind("{\"tick\":1,", 0), 0u);
  }
}

}  // namespace
}  // namespace meswarm
