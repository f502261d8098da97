#include <benchmark/benchmark.h>

#include "support/generators.hpp"
#include "xlie/codegen.hpp"
#include "xlie/parser.hpp"

namespace {

// Pre-rendered random completions, reparsed per iteration.
struct ParserFixture {
  ParserFixture() {
    testgen::Rng rng(99);
    for (int i = 0; i < 64; ++i) {
      testgen::CaseData data = testgen::random_case(rng);
      completions.push_back(
          xlie::render_completion(data.instances, &data.ontology));
      ontologies.push_back(data.ontology);
      sentences.push_back(data.sentence);
    }
  }
  std::vector<std::string> completions;
  std::vector<xlie::Ontology> ontologies;
  std::vector<std::string> sentences;
};

const ParserFixture& fixture() {
  static ParserFixture instance;
  return instance;
}

void BM_ParseCompletion(benchmark::State& state) {
  const ParserFixture& fix = fixture();
  std::size_t i = 0;
  std::size_t bytes = 0;
  for (auto _ : state) {
    std::size_t k = i++ % fix.completions.size();
    xlie::ParseReport report = xlie::parse_completion(
        fix.completions[k], fix.ontologies[k], fix.sentences[k]);
    benchmark::DoNotOptimize(report);
    bytes += fix.completions[k].size();
  }
  state.SetBytesProcessed(static_cast<int64_t>(bytes));
}
BENCHMARK(BM_ParseCompletion);

void BM_ParseFlatList(benchmark::State& state) {
  xlie::Ontology ontology =
      xlie::load_ontology("task: NER\nconcepts:\n  - id: PER\n");
  std::string completion = "results = [";
  for (int i = 0; i < state.range(0); ++i) {
    if (i) completion += ", ";
    completion += "PER(\"Steve\")";
  }
  completion += "]";
  for (auto _ : state) {
    xlie::ParseReport report =
        xlie::parse_completion(completion, ontology, "Steve");
    benchmark::DoNotOptimize(report);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ParseFlatList)->Range(16, 4096)->Complexity(benchmark::oN);

}  // namespace
