#include <benchmark/benchmark.h>

#include "support/generators.hpp"
#include "xlie/codegen.hpp"

namespace {

void BM_RenderInstruction(benchmark::State& state) {
  testgen::Rng rng(7);
  testgen::CaseData data = testgen::random_case(rng);
  for (auto _ : state) {
    std::string text = xlie::render_instruction(data.ontology, data.sentence);
    benchmark::DoNotOptimize(text);
  }
}
BENCHMARK(BM_RenderInstruction);

void BM_RenderCompletion(benchmark::State& state) {
  testgen::Rng rng(8);
  std::vector<testgen::CaseData> cases;
  for (int i = 0; i < 32; ++i) cases.push_back(testgen::random_case(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    const testgen::CaseData& data = cases[i++ % cases.size()];
    std::string text = xlie::render_completion(data.instances, &data.ontology);
    benchmark::DoNotOptimize(text);
  }
}
BENCHMARK(BM_RenderCompletion);

}  // namespace
