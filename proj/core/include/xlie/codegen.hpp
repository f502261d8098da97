#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xlie/ontology.hpp"
#include "xlie/sample.hpp"

namespace xlie {

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what)
      : std::runtime_error(what) {}
};

struct PromptMeta {
  std::string dataset;
  std::string language;
  TaskKind task = TaskKind::kNer;
  std::string sample_id;
};

// One instruction-tuning unit: rendered instruction plus expected completion.
struct PromptPair {
  std::string instruction;
  std::string completion;
  PromptMeta meta;
};

// Quotes a string in the code-prompt dialect: double quotes, backslash
// escapes for quote and backslash only, everything else verbatim.
std::string quote_string(std::string_view text);

std::string task_docstring(TaskKind task);

// Schema code plus task prompt: the three base classes, one class per
// concept (comment block when with_comments), the task docstring, and the
// sentence bound to a string variable. Byte-identical for identical inputs.
// `lang` selects which per-language description is shown.
std::string render_instruction(const Ontology& ontology,
                               std::string_view sentence,
                               bool with_comments = true,
                               std::string_view lang = "en");

// `results = [...]` with constructor calls in input order. Slots render
// positionally in declared attribute order; after a gap in the declaration
// order the remaining slots switch to keyword form (requires `ontology`).
std::string render_completion(const std::vector<ExtractionInstance>& instances,
                              const Ontology* ontology = nullptr);

PromptPair build_training_pair(const Ontology& ontology, const Sample& sample,
                               bool with_comments = true,
                               std::string_view dataset = "");

}  // namespace xlie
