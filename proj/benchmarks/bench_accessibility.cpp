#include <benchmark/benchmark.h>

#include "microswarm/accessibility.hpp"
#include "microswarm/random.hpp"

using namespace microswarm;

namespace {

SwarmState random_state(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd pos(2 * n), ori(n);
  for (int j = 0; j < n; ++j) {
    pos[2 * j] = rng.uniform(0, 20);
    pos[2 * j + 1] = rng.uniform(0, 20);
    ori[j] = rng.uniform(0, 6.28);
  }
  return SwarmState(pos, ori);
}

}  // namespace

static void BM_EnumerateBrackets(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(enumerate_brackets(DegreeBudget{}, m));
  }
}
BENCHMARK(BM_EnumerateBrackets)->Arg(2)->Arg(3)->Arg(4);

static void BM_PositionRank(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GroupAllocation alloc = allocate_groups(n);
  SwarmParams params;
  params.n = n;
  const auto brackets = enumerate_brackets(DegreeBudget{}, alloc.num_groups());
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        position_rank(random_state(n, ++seed), brackets, alloc, params));
  }
}
BENCHMARK(BM_PositionRank)->Arg(2)->Arg(6)->Arg(14)->Unit(benchmark::kMillisecond);
