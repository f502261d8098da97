#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xlie/ontology.hpp"
#include "xlie/sample.hpp"
#include "xlie/utf8.hpp"

namespace xlie {

// Bracket/paren nesting deeper than this is rejected as fatal.
inline constexpr int kMaxParseDepth = 8;

struct DroppedCall {
  std::string text;
  std::string reason;
};

struct UnresolvedSpan {
  std::size_t instance_index = 0;
  std::string slot_name;
  std::string text;
};

struct ParseReport {
  std::vector<ExtractionInstance> instances;
  std::vector<DroppedCall> dropped;
  std::optional<std::string> fatal;
  // Span slots whose text does not occur in the sentence; the instance is
  // kept with an absent offset.
  std::vector<UnresolvedSpan> unresolved;

  bool ok() const { return !fatal.has_value(); }
};

// Parses a model completion in the code-prompt dialect without executing
// anything. Text before the `results =` anchor is ignored; schema-invalid
// calls are dropped with a reason; span offsets are resolved against
// `sentence` (leftmost occurrence not yet used; text absent from the
// sentence leaves the offset unset and is recorded in `unresolved`).
// Unbalanced or over-deep input is fatal, with the valid prefix's calls
// preserved under `dropped`.
ParseReport parse_completion(std::string_view text, const Ontology& ontology,
                             std::string_view sentence);

// Leftmost occurrence of `span_text` in `sentence` (code-point interval) that
// does not overlap any interval in `used`; absent when there is none.
std::optional<utf8::Interval> resolve_offsets(
    std::string_view span_text, std::string_view sentence,
    const std::vector<utf8::Interval>& used);

// Fills in missing span offsets across a sample's instances using the same
// leftmost-unused policy the completion parser applies. Slots that already
// carry offsets are left alone but still claim their interval.
void resolve_sample_offsets(Sample& sample);

}  // namespace xlie
