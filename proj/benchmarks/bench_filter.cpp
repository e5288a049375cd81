#include <benchmark/benchmark.h>

#include <random>

#include "meswarm/distributed_filter.hpp"
#include "meswarm/joint_filter.hpp"

namespace meswarm {
namespace {

Vec15 random_tangent(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec15 q;
  for (int i = 0; i < 15; ++i) q(i) = u(rng);
  return q;
}

Prior make_prior(int n, std::mt19937_64& rng) {
  Prior p;
  std::vector<Mat15> blocks;
  for (int i = 0; i < n; ++i) {
    p.X0.push_back(group_exp(random_tangent(rng, 1.0)));
    blocks.push_back(0.1 * Mat15::Identity());
  }
  p.K0 = block_diagonal_gain(blocks);
  return p;
}

WorldConfig make_world() {
  WorldConfig w;
  w.landmarks = {{0, Vec3(-2.5, -2.0, 0.5)}, {1, Vec3(2.5, -1.5, 2.0)}, {2, Vec3(0.0, 3.0, 1.0)}};
  return w;
}

std::vector<ImuSample> hover_imu(int n) {
  ImuSample u;
  u.accel = Vec3(0.1, -0.2, 9.81);
  u.gyro = Vec3(0.01, 0.02, -0.03);
  return std::vector<ImuSample>(static_cast<std::size_t>(n), u);
}

void BM_GroupExp(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Vec15 q = random_tangent(rng, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(group_exp(q));
}
BENCHMARK(BM_GroupExp);

void BM_AdjointMatrix(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Vec15 q = random_tangent(rng, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(adjoint_matrix(q));
}
BENCHMARK(BM_AdjointMatrix);

void BM_JointPropagate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  JointFilter f(make_prior(n, rng), make_world(), NoiseModel{});
  const auto imu = hover_imu(n);
  for (auto _ : state) f.propagate(imu, 0.005);
}
BENCHMARK(BM_JointPropagate)->Arg(1)->Arg(3)->Arg(6);

void BM_JointLandmarkUpdate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  const Prior prior = make_prior(n, rng);
  const WorldConfig world = make_world();
  const auto imu = hover_imu(n);
  JointFilter f(prior, world, NoiseModel{});
  for (auto _ : state) {
    f.propagate(imu, 0.005);
    f.update({ObservationKind::kLandmark, 0, 1, predict_landmark(f.estimate()[0], world.landmarks.at(1)),
              f.time_ns(), 0.1});
  }
}
BENCHMARK(BM_JointLandmarkUpdate)->Arg(3)->Arg(6);

void BM_JointIntervehicleUpdate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  const WorldConfig world = make_world();
  const auto imu = hover_imu(n);
  JointFilter f(make_prior(n, rng), world, NoiseModel{});
  for (auto _ : state) {
    f.propagate(imu, 0.005);
    const auto X = f.estimate();
    f.update({ObservationKind::kInterVehicle, 0, 1, predict_intervehicle(X[0], X[1], world.marker(1)), f.time_ns(),
              0.1});
  }
}
BENCHMARK(BM_JointIntervehicleUpdate)->Arg(3)->Arg(6);

void BM_DistributedPropagate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(6);
  DistributedNetwork net(make_prior(n, rng), make_world(), NoiseModel{});
  const auto imu = hover_imu(n);
  for (auto _ : state) net.propagate(imu, 0.005);
}
BENCHMARK(BM_DistributedPropagate)->Arg(6);

void BM_DistributedProcess(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  const WorldConfig world = make_world();
  const auto imu = hover_imu(n);
  DistributedNetwork net(make_prior(n, rng), world, NoiseModel{},
                         {}, state.range(1) ? UpdateEncoding::kFactored : UpdateEncoding::kDense);
  for (auto _ : state) {
    for (int k = 0; k < 20; ++k) net.propagate(imu, 0.005);
    const auto X = net.estimate();
    net.process({ObservationKind::kLandmark, 0, 1, predict_landmark(X[0], world.landmarks.at(1)), 0, 0.1});
    net.process({ObservationKind::kInterVehicle, 2, 1, predict_intervehicle(X[2], X[1], world.marker(1)), 0, 0.1});
  }
}
BENCHMARK(BM_DistributedProcess)->Args({6, 0})->Args({6, 1});

}  // namespace
}  // namespace meswarm

BENCHMARK_MAIN();
