#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xlie/codegen.hpp"
#include "xlie/ontology.hpp"
#include "xlie/projection_types.hpp"
#include "xlie/sample.hpp"

namespace xlie {

// A faithful bilingual sample pair with index-wise instance correspondence.
struct AlignedPair {
  Sample source;
  Sample target;
  std::pair<std::string, std::string> direction;  // (src lang, tgt lang)
};

enum class Directions { kOne, kBoth };

// Converts a flat span sample into an entity-instance sample under the
// ontology's concepts (span offsets preserved when present).
Sample span_sample_to_sample(const SpanSample& sample);

// Fixed task description heading every alignment instruction starts with.
std::string alignment_task_description();

// Filters records to status ok and emits one pair per direction: source to
// target, plus the reverse when directions is kBoth.
std::vector<AlignedPair> assemble_parallel_dataset(
    const std::vector<ProjectionRecord>& records, Directions directions);

// Instruction = task description + source instruction + source completion +
// target instruction; completion = target completion only. Throws
// ValidationError on instance-count mismatch or an unfaithful pair.
PromptPair build_alignment_sample(const AlignedPair& pair,
                                  const Ontology& src_ontology,
                                  const Ontology& tgt_ontology,
                                  bool with_comments = true,
                                  std::string_view dataset = "");

}  // namespace xlie
