#include <benchmark/benchmark.h>

#include "test_util.hpp"
#include "vlselect/knn.hpp"
#include "vlselect/rankalyzer.hpp"
#include "vlselect/selector.hpp"
#include "vlselect/synth.hpp"

namespace {

using namespace vlselect;
using vlselect::testing::make_ids;
using vlselect::testing::random_unit_matrix;

void BM_QueryTopK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto index = build_index(random_unit_matrix(n, dim, 1), make_ids(n));
  const auto q = random_unit_matrix(1, dim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(query_topk(index, q.row(0), 32));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_QueryTopK)->Args({10000, 64})->Args({100000, 64})->Args({100000, 384})->Unit(benchmark::kMillisecond);

void BM_RankOf(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto index = build_index(random_unit_matrix(n, 64, 3), make_ids(n));
  const auto q = random_unit_matrix(1, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(rank_of(index, q.row(0), n / 2));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_RankOf)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_RelevanceScores(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto nq = static_cast<std::size_t>(state.range(1));
  const auto index = build_index(random_unit_matrix(n, 64, 5), make_ids(n));
  const auto queries = random_unit_matrix(nq, 64, 6);
  for (auto _ : state) benchmark::DoNotOptimize(relevance_scores(index, queries, Space::Concept));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * nq));
}
BENCHMARK(BM_RelevanceScores)->Args({50000, 16})->Args({50000, 128})->Unit(benchmark::kMillisecond);

void BM_SelectRoundRobin(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto index = build_index(random_unit_matrix(n, 64, 7), make_ids(n));
  const auto queries = random_unit_matrix(64, 64, 8);
  const auto budget = resolve_budget(0.05, n);
  for (auto _ : state) benchmark::DoNotOptimize(select_targeted(index, queries, budget, TargetMode::RoundRobin));
}
BENCHMARK(BM_SelectRoundRobin)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_BenchmarkCrossRank(benchmark::State& state) {
  SynthConfig cfg;
  cfg.pool_size = static_cast<std::size_t>(state.range(0));
  auto world = generate_world(cfg);
  add_benchmark(world, Alignment::SkillDriven, 20, 1);
  const auto ids = world.pool.ids();
  const Index ci(*world.pool.concept_space, ids);
  const Index si(*world.pool.skill_space, ids);
  for (auto _ : state) benchmark::DoNotOptimize(benchmark_cross_rank(ci, si, world.benchmarks[0].corpus));
}
BENCHMARK(BM_BenchmarkCrossRank)->Arg(5000)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
