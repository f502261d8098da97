#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xlie/llm.hpp"
#include "xlie/ontology.hpp"

namespace xlie {

class DescriptionError : public std::runtime_error {
 public:
  explicit DescriptionError(const std::string& what)
      : std::runtime_error(what) {}
};

struct RevisionEntry {
  std::string instance;
  bool changed = false;
  std::string text;  // description after considering this instance
  std::string note;  // e.g. transport failures that were skipped
};

// Generated concept description. `text` always begins with
// "<concept id> refers to".
struct DescriptionDraft {
  std::string concept_id;
  std::string text;
  std::vector<std::string> init_examples;
  std::vector<RevisionEntry> history;
};

std::string description_init_prompt(const std::string& entity_type,
                                    const std::vector<std::string>& examples);
std::string description_polish_prompt(const std::string& entity_type,
                                      const std::string& current_description,
                                      const std::string& instance);

// Pulls the first "<type> refers to ..." line out of a model response.
std::optional<std::string> extract_description(const std::string& entity_type,
                                               const std::string& response);

// Samples up to `sample_cap` instance strings (seeded), prompts for an
// initial description, and retries once before giving up when the response
// lacks the required phrase.
DescriptionDraft init_description(const Concept& concept_def,
                                  const std::vector<Sample>& corpus,
                                  LlmClient& client, const std::string& model,
                                  std::uint64_t seed,
                                  std::size_t sample_cap = 10);

// Iteratively refines the draft against up to `rounds` further instances,
// drawn disjointly from the initialization sample when supply permits.
// Responses without the required phrase leave the prior text in place.
DescriptionDraft polish_description(DescriptionDraft draft,
                                    const std::vector<Sample>& corpus,
                                    const Concept& concept_def,
                                    LlmClient& client, const std::string& model,
                                    std::uint64_t seed,
                                    std::size_t rounds = 20);

}  // namespace xlie
