#include <benchmark/benchmark.h>

#include "microswarm/planner.hpp"

using namespace microswarm;

static void BM_CollisionFree(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::VectorXd pos(2 * n), ori = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    pos[2 * j] = 1.0 + (j % 8) * 2.0;
    pos[2 * j + 1] = 1.0 + (j / 8) * 2.0;
  }
  const SwarmState q(pos, ori);
  Environment env{0, 0, 20, 20, {{Eigen::Vector2d(15, 15), 2.0}}};
  SafetyParams safety;
  for (auto _ : state) {
    benchmark::DoNotOptimize(collision_free(q, env, safety));
  }
}
BENCHMARK(BM_CollisionFree)->Arg(5)->Arg(14)->Arg(62);

static void BM_RandomWalkSeparation(benchmark::State& state) {
  const GroupAllocation alloc = allocate_groups(5);
  SwarmParams params;
  params.n = 5;
  Environment env{0, 0, 20, 20, {}};
  SafetyParams safety;
  Eigen::VectorXd pos(10), ori = Eigen::VectorXd::Zero(5);
  for (int j = 0; j < 5; ++j) {
    pos[2 * j] = 10.0 + 0.45 * std::cos(1.2566 * j);
    pos[2 * j + 1] = 10.0 + 0.45 * std::sin(1.2566 * j);
  }
  const SwarmState q(pos, ori);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        random_walk(q, env, safety, alloc, params, ++seed));
  }
}
BENCHMARK(BM_RandomWalkSeparation)->Unit(benchmark::kMillisecond);
