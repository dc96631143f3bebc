// Serial reference against the OpenMP path for each batch kernel.
//
//   lark_bench --benchmark_filter=Retrieve

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lark/backend.hpp"
#include "lark/batch.hpp"
#include "lark/retrieval.hpp"

namespace {

using namespace lark;

struct Workload {
  KnowledgeGraph kg;
  std::vector<QueryDag> queries;
};

// Skewed random graph with projection chains sampled along real edges.
const Workload& workload() {
  static const Workload w = [] {
    std::mt19937_64 rng(31);
    const std::uint32_t n = 20000;
    std::vector<double> weights(n);
    for (std::uint32_t i = 0; i < n; ++i) weights[i] = 1.0 / (i + 1.0);
    std::discrete_distribution<std::uint32_t> head(weights.begin(), weights.end());
    std::uniform_int_distribution<std::uint32_t> tail(0, n - 1), rel(0, 31);
    std::vector<Triplet> ts;
    for (int i = 0; i < 120000; ++i) ts.push_back({EntityId{head(rng)}, RelationId{rel(rng)}, EntityId{tail(rng)}});
    KnowledgeGraph kg(std::move(ts));

    std::vector<QueryDag> qs;
    const auto& all = kg.triplets();
    std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
    for (int i = 0; i < 2000; ++i) {
      const auto& a = all[pick(rng)];
      const auto& b = all[pick(rng)];
      switch (i % 3) {
        case 0: qs.push_back({"q", QueryType::k1p, {a.head}, {a.relation}}); break;
        case 1: qs.push_back({"q", QueryType::k2p, {a.head}, {a.relation, b.relation}}); break;
        default: qs.push_back({"q", QueryType::k2i, {a.head, b.head}, {a.relation, b.relation}}); break;
      }
    }
    return Workload{std::move(kg), std::move(qs)};
  }();
  return w;
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::kParallel : Execution::kSerial; }

void BM_GroundTruth(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ground_truth_batch(w.kg, w.queries, NegationSemantics::kTemplateOtherRelation, mode(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.queries.size()));
}

void BM_Retrieve(benchmark::State& state) {
  const auto& w = workload();
  RetrievalConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(retrieve_batch(w.kg, w.queries, cfg, default_tokenizer(), mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.queries.size()));
}

void BM_PromptTokens(benchmark::State& state) {
  const auto& w = workload();
  const auto nbs = retrieve_batch(w.kg, w.queries, RetrievalConfig{}, default_tokenizer());
  for (auto _ : state) {
    benchmark::DoNotOptimize(prompt_token_counts(w.queries, nbs, default_tokenizer(), mode(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.queries.size()));
}

BENCHMARK(BM_GroundTruth)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Retrieve)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PromptTokens)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
