#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "lforge/audit.hpp"
#include "lforge/mixture_world.hpp"
#include "lforge/search.hpp"

using namespace lforge;

static void BM_Mutate(benchmark::State& state) {
  Rng rng = make_rng(1);
  const auto parent = sample_prior(LatentSpaceSpec::z(static_cast<std::size_t>(state.range(0))), rng);
  for (auto _ : state) benchmark::DoNotOptimize(mutate(parent, 4, 0.25, rng));
}
BENCHMARK(BM_Mutate)->Arg(32)->Arg(512);

static void BM_Evaluate(benchmark::State& state) {
  const auto world = state.range(0) == 0 ? default_world() : full_scale_world();
  SimulatedOracle oracle(world);
  Rng rng = make_rng(2);
  const auto v = sample_prior(world->space, rng);
  for (auto _ : state) benchmark::DoNotOptimize(oracle.evaluate(v));
}
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1);

static void BM_Explore(benchmark::State& state) {
  const auto world = default_world();
  SimulatedOracle oracle(world);
  const GroupLabel target("Caucasian");
  SearchConfig config;
  config.max_iter = static_cast<std::uint32_t>(state.range(0));
  Rng rng = make_rng(3);
  const auto seed = find_seed(oracle, target, 1'000'000, rng).latent;
  for (auto _ : state) benchmark::DoNotOptimize(explore(seed, target, config, oracle, rng));
}
BENCHMARK(BM_Explore)->Arg(50)->Arg(500);

static void BM_PairwiseUniqueness(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(4);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> emb(n, std::vector<double>(128));
  for (auto& e : emb) {
    double s = 0.0;
    for (auto& x : e) {
      x = normal(gen);
      s += x * x;
    }
    for (auto& x : e) x /= std::sqrt(s);
  }
  for (auto _ : state) benchmark::DoNotOptimize(uniqueness_from_embeddings(emb));
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_PairwiseUniqueness)->Arg(200)->Arg(1000)->Complexity(benchmark::oNSquared);

BENCHMARK_MAIN();
