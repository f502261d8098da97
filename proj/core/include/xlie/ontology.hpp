#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xlie/sample.hpp"

namespace xlie {

enum class TaskKind { kNer, kRe, kEd, kEae };
enum class BaseKind { kEntity, kRelation, kEvent };

const char* task_kind_name(TaskKind kind);
std::optional<TaskKind> task_kind_from_name(const std::string& name);
const char* base_kind_name(BaseKind kind);

class OntologyError : public std::runtime_error {
 public:
  explicit OntologyError(const std::string& what) : std::runtime_error(what) {}
};

struct Attribute {
  std::string name;
  SlotKind kind = SlotKind::kSpan;
};

struct ConceptExample {
  std::string text;
  int frequency = 1;
};

// One schema concept. The canonical id is the English class name used in the
// code prompt; per-language surface names all resolve back to it.
struct Concept {
  std::string canonical_id;
  BaseKind base = BaseKind::kEntity;
  std::map<std::string, std::string> surface_names;   // lang -> display name
  std::vector<Attribute> attributes;
  std::map<std::string, std::string> descriptions;    // lang -> text; "" = unscoped
  std::vector<ConceptExample> examples;

  const Attribute* find_attribute(const std::string& name) const;
  // Description for `lang`, falling back to the unscoped entry, then "en".
  const std::string* description_for(const std::string& lang) const;
};

// Immutable after load; safe to share across pipeline workers.
class Ontology {
 public:
  Ontology() = default;
  Ontology(TaskKind task, std::vector<Concept> concepts);

  TaskKind task_kind() const { return task_kind_; }
  const std::vector<Concept>& concepts() const { return concepts_; }

  const Concept* find_concept(const std::string& canonical_id) const;

  // The unique concept whose surface name in `lang` is `name`; canonical ids
  // also match when lang is "en". Throws OntologyError("unknown-name...") when
  // nothing matches.
  const Concept& resolve_surface(const std::string& lang,
                                 const std::string& name) const;

 private:
  void validate() const;

  TaskKind task_kind_ = TaskKind::kNer;
  std::vector<Concept> concepts_;
  std::map<std::string, std::size_t> by_id_;
};

// Parses the YAML ontology config (see docs/formats.md for the normative
// field names) and validates all schema invariants.
Ontology load_ontology(const std::string& config_text);
Ontology load_ontology_file(const std::string& path);

// Serializes back to the config format. gen-descriptions uses this to write
// generated descriptions into the config document.
std::string save_ontology(const Ontology& ontology);

bool is_dialect_identifier(const std::string& name);

// Up to `cap` distinct instance strings of `concept` found in the corpus,
// ordered by descending frequency; ties break by first corpus occurrence.
std::vector<std::string> sample_examples(const std::vector<Sample>& corpus,
                                         const Concept& concept_def,
                                         std::size_t cap = 10);

// Distinct instance strings of `concept` in first-occurrence order (the pool
// the description generator draws from).
std::vector<std::string> instance_strings(const std::vector<Sample>& corpus,
                                          const Concept& concept_def);

// Validates an instance tree against the schema: known concept, declared slot
// names in declaration order with matching kinds. Returns an error message or
// nullopt when valid.
std::optional<std::string> validate_instance(const Ontology& ontology,
                                             const ExtractionInstance& instance);

// Default constructor attributes for concepts that do not declare their own.
std::vector<Attribute> default_attributes(BaseKind base);

}  // namespace xlie
