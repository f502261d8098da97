#include <benchmark/benchmark.h>

#include "support/oracles.hpp"
#include "xlie/metrics.hpp"

namespace {

void BM_ScoreNer(benchmark::State& state) {
  testgen::Rng rng(13);
  std::vector<xlie::Sample> gold;
  std::vector<xlie::Sample> pred;
  while (gold.size() < static_cast<std::size_t>(state.range(0))) {
    oracle::CorpusPair corpus = oracle::random_corpus(rng, oracle::Task::kNer);
    for (std::size_t i = 0;
         i < corpus.gold.size() &&
         gold.size() < static_cast<std::size_t>(state.range(0));
         ++i) {
      corpus.gold[i].id = "s" + std::to_string(gold.size());
      corpus.pred[i].id = corpus.gold[i].id;
      gold.push_back(corpus.gold[i]);
      pred.push_back(corpus.pred[i]);
    }
  }
  for (auto _ : state) {
    xlie::ScoreCard card = xlie::score_ner(pred, gold);
    benchmark::DoNotOptimize(card);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreNer)->Arg(100)->Arg(1000)->Arg(10000);

}  // namespace
