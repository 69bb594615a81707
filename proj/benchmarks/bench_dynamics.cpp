#include <benchmark/benchmark.h>

#include "microswarm/effort.hpp"
#include "microswarm/random.hpp"

using namespace microswarm;

namespace {

SwarmState line_start(int n) {
  Eigen::VectorXd pos(2 * n), ori(n);
  for (int j = 0; j < n; ++j) {
    pos[2 * j] = 0.0;
    pos[2 * j + 1] = j;
    ori[j] = 0.1 * j;
  }
  return SwarmState(pos, ori);
}

}  // namespace

static void BM_StepDiscrete(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GroupAllocation alloc = allocate_groups(n);
  SwarmParams params;
  params.n = n;
  SwarmState q = line_start(n);
  int group = 0;
  for (auto _ : state) {
    q = step_discrete(q, group, 0.5, alloc, params);
    group = (group + 1) % alloc.num_groups();
    benchmark::DoNotOptimize(q);
  }
}
BENCHMARK(BM_StepDiscrete)->Arg(6)->Arg(14)->Arg(62);

static void BM_Rollout(benchmark::State& state) {
  const int n = 6;
  const GroupAllocation alloc = allocate_groups(n);
  SwarmParams params;
  params.n = n;
  const SwarmState q0 = line_start(n);
  const int k = static_cast<int>(state.range(0));
  const ActivationSequence nu = random_activation_sequence(k, 3, 7);
  const ControlSequence u(k, 0.8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rollout(q0, nu, u, alloc, params));
  }
}
BENCHMARK(BM_Rollout)->Arg(40)->Arg(200);

static void BM_MinEffortSolve(benchmark::State& state) {
  const int n = 6;
  const GroupAllocation alloc = allocate_groups(n);
  SwarmParams params;
  params.n = n;
  Eigen::VectorXd goal(12);
  goal << 2, 1, 2, 2, 2, 3, 2, 4, 2, 5, 2, 6;
  EffortProblem problem{line_start(n), goal,
                        random_activation_sequence(20, 3, 3), 3.5, 1e-3};
  EffortOptions options;
  options.starts = 2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        min_effort_control(problem, alloc, params, options));
  }
}
BENCHMARK(BM_MinEffortSolve)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
