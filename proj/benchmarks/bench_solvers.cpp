#include <benchmark/benchmark.h>

#include <random>

#include "costot/exact_ot.hpp"
#include "costot/features.hpp"
#include "costot/scene.hpp"
#include "costot/sinkhorn.hpp"
#include "costot/trainer.hpp"

namespace {

using namespace costot;

CostMatrix random_cost(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  Matrix c(rows, cols);
  for (auto& x : c.values()) x = dist(rng);
  return CostMatrix(std::move(c));
}

void run_sinkhorn(benchmark::State& state, bool log_domain) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cost = random_cost(n, n, 1);
  const auto u = ProbabilityVector::uniform(n);
  SinkhornConfig cfg;
  cfg.lambda = 0.1;
  cfg.log_domain = log_domain;
  std::size_t iterations = 0;
  for (auto _ : state) {
    const auto r = sinkhorn_solve(cost, u, u, cfg);
    iterations = r.iterations;
    benchmark::DoNotOptimize(r.distance);
  }
  state.counters["sweeps"] = static_cast<double>(iterations);
}

void BM_SinkhornLinear(benchmark::State& state) { run_sinkhorn(state, false); }
void BM_SinkhornLog(benchmark::State& state) { run_sinkhorn(state, true); }
BENCHMARK(BM_SinkhornLinear)->RangeMultiplier(4)->Range(8, 512);
BENCHMARK(BM_SinkhornLog)->RangeMultiplier(4)->Range(8, 512);

void BM_SinkhornAnnealedTight(benchmark::State& state) {
  const auto cost = random_cost(32, 32, 2);
  const auto u = ProbabilityVector::uniform(32);
  SinkhornConfig cfg;
  cfg.lambda = 1.0 / static_cast<double>(state.range(0));
  cfg.delta_v_threshold = 1e-6;
  cfg.max_iters = 1000000;
  cfg.epsilon_scaling = true;
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn_solve(cost, u, u, cfg).distance);
}
BENCHMARK(BM_SinkhornAnnealedTight)->Arg(2)->Arg(10)->Arg(20)->Arg(100);

void BM_PermutationOracle(benchmark::State& state) {
  const auto cost = random_cost(state.range(0), state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(exact_ot_permutation(cost).value);
}
BENCHMARK(BM_PermutationOracle)->DenseRange(4, 8);

void BM_SimplexOracle(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cost = random_cost(n, n, 4);
  const auto u = ProbabilityVector::uniform(n);
  for (auto _ : state) benchmark::DoNotOptimize(exact_ot_simplex(cost, u, u).value);
}
BENCHMARK(BM_SimplexOracle)->RangeMultiplier(2)->Range(4, 32);

void BM_CostVolume(benchmark::State& state) {
  SceneParams p;
  p.height = p.width = static_cast<std::size_t>(state.range(0));
  p.dim = 64;
  p.class_count = 16;
  const auto scene = generate_scene(p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_cost_volume(scene.pixel_features, scene.prototypes).similarity());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scene.pixel_count() * 16));
}
BENCHMARK(BM_CostVolume)->Arg(8)->Arg(32)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
  const auto scene = generate_scene(SceneParams{});
  auto model = make_initial_model(scene, 1.0, 7);
  const SinkhornConfig cfg;
  for (auto _ : state) {
    const auto plan = inner_loop(scene, model, cfg);
    model = outer_step(scene, model, plan, 1e-6);
    benchmark::DoNotOptimize(model.text_embeddings);
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
