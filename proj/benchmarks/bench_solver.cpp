#include <benchmark/benchmark.h>

#include "rispricing/channel.hpp"
#include "rispricing/follower.hpp"
#include "rispricing/leader.hpp"

namespace {

using namespace rispricing;

struct Instance {
  Scenario sc;
  ChannelSet ch;
};

Instance default_instance(std::uint64_t seed) {
  Instance in;
  in.sc.rng_seed = seed;
  in.ch = generate_channels(in.sc, build_geometry(in.sc));
  return in;
}

void BM_SolveP1AllPurchased(benchmark::State& state) {
  const Instance in = default_instance(1);
  const std::vector<bool> all(static_cast<std::size_t>(in.sc.num_ris()), true);
  const PriceVector prices = PriceVector::zeros(in.sc.num_ris());
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_p1(in.ch, prices, all, in.sc));
  }
}
BENCHMARK(BM_SolveP1AllPurchased)->Unit(benchmark::kMillisecond);

void BM_RateTable(benchmark::State& state) {
  const Instance in = default_instance(2);
  const PriceVector prices = PriceVector::zeros(in.sc.num_ris());
  for (auto _ : state) {
    FollowerResponseCache cache(in.ch, in.sc);
    benchmark::DoNotOptimize(cache.best_mask(prices, true));
  }
}
BENCHMARK(BM_RateTable)->Unit(benchmark::kMillisecond);

void BM_StackelbergSolve(benchmark::State& state) {
  const Instance in = default_instance(3);
  const auto scheme = state.range(0) == 0 ? PricingScheme::uniform : PricingScheme::non_uniform;
  for (auto _ : state) {
    benchmark::DoNotOptimize(stackelberg_solve(in.ch, in.sc, scheme));
  }
}
BENCHMARK(BM_StackelbergSolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ChannelGeneration(benchmark::State& state) {
  Scenario sc;
  const Geometry g = build_geometry(sc);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    sc.rng_seed = seed++;
    benchmark::DoNotOptimize(generate_channels(sc, g));
  }
}
BENCHMARK(BM_ChannelGeneration);

}  // namespace

BENCHMARK_MAIN();
