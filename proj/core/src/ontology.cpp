#include "xlie/ontology.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace xlie {

namespace {

std::optional<BaseKind> base_kind_from_name(const std::string& name) {
  if (name == "Entity") return BaseKind::kEntity;
  if (name == "Relation") return BaseKind::kRelation;
  if (name == "Event") return BaseKind::kEvent;
  return std::nullopt;
}

bool base_allowed(TaskKind task, BaseKind base) {
  switch (task) {
    case TaskKind::kNer:
      return base == BaseKind::kEntity;
    case TaskKind::kRe:
      return base == BaseKind::kRelation || base == BaseKind::kEntity;
    case TaskKind::kEd:
    case TaskKind::kEae:
      return base == BaseKind::kEvent || base == BaseKind::kEntity;
  }
  return false;
}

// Collects instance strings depth-first, nested references included.
void collect_instance_strings(const ExtractionInstance& instance,
                              const std::string& concept_id,
                              std::vector<std::string>& out) {
  if (instance.concept_id == concept_id) {
    if (const SpanValue* span = primary_span(instance)) {
      out.push_back(span->text);
    }
  }
  for (const Slot& slot : instance.slots) {
    for (const ExtractionInstance& child : slot.children) {
      collect_instance_strings(child, concept_id, out);
    }
  }
}

}  // namespace

const char* task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kNer:
      return "NER";
    case TaskKind::kRe:
      return "RE";
    case TaskKind::kEd:
      return "ED";
    case TaskKind::kEae:
      return "EAE";
  }
  return "NER";
}

std::optional<TaskKind> task_kind_from_name(const std::string& name) {
  if (name == "NER") return TaskKind::kNer;
  if (name == "RE") return TaskKind::kRe;
  if (name == "ED") return TaskKind::kEd;
  if (name == "EAE") return TaskKind::kEae;
  return std::nullopt;
}

const char* base_kind_name(BaseKind kind) {
  switch (kind) {
    case BaseKind::kEntity:
      return "Entity";
    case BaseKind::kRelation:
      return "Relation";
    case BaseKind::kEvent:
      return "Event";
  }
  return "Entity";
}

bool is_dialect_identifier(const std::string& name) {
  if (name.empty()) return false;
  auto head = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
  if (!head(name[0])) return false;
  return std::all_of(name.begin() + 1, name.end(), tail);
}

std::vector<Attribute> default_attributes(BaseKind base) {
  switch (base) {
    case BaseKind::kEntity:
      return {{"mention", SlotKind::kSpan}};
    case BaseKind::kRelation:
      return {{"subject", SlotKind::kRef}, {"object", SlotKind::kRef}};
    case BaseKind::kEvent:
      return {{"trigger", SlotKind::kSpan}};
  }
  return {};
}

const Attribute* Concept::find_attribute(const std::string& name) const {
  for (const Attribute& attribute : attributes) {
    if (attribute.name == name) return &attribute;
  }
  return nullptr;
}

const std::string* Concept::description_for(const std::string& lang) const {
  for (const std::string& key : {lang, std::string(), std::string("en")}) {
    auto it = descriptions.find(key);
    if (it != descriptions.end() && !it->second.empty()) return &it->second;
  }
  return nullptr;
}

Ontology::Ontology(TaskKind task, std::vector<Concept> concepts)
    : task_kind_(task), concepts_(std::move(concepts)) {
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    by_id_.emplace(concepts_[i].canonical_id, i);
  }
  validate();
}

void Ontology::validate() const {
  std::set<std::string> ids;
  // (lang, name) -> canonical id; canonical ids double as English names.
  std::map<std::pair<std::string, std::string>, std::string> surface_owner;

  auto claim_surface = [&](const std::string& lang, const std::string& name,
                           const std::string& owner) {
    auto key = std::make_pair(lang, name);
    auto [it, inserted] = surface_owner.emplace(key, owner);
    if (!inserted && it->second != owner) {
      throw OntologyError("ambiguous-surface-name: \"" + name + "\" (" + lang +
                          ") maps to both " + it->second + " and " + owner);
    }
  };

  for (const Concept& concept_def : concepts_) {
    if (!is_dialect_identifier(concept_def.canonical_id)) {
      throw OntologyError("invalid-identifier: \"" + concept_def.canonical_id +
                          "\" is not a valid class name");
    }
    if (!ids.insert(concept_def.canonical_id).second) {
      throw OntologyError("duplicate-canonical-id: " +
                          concept_def.canonical_id);
    }
    if (!base_allowed(task_kind_, concept_def.base)) {
      throw OntologyError(std::string("base-not-allowed: ") +
                          base_kind_name(concept_def.base) +
                          " concepts cannot appear in a " +
                          task_kind_name(task_kind_) + " ontology");
    }
    claim_surface("en", concept_def.canonical_id, concept_def.canonical_id);
    for (const auto& [lang, name] : concept_def.surface_names) {
      claim_surface(lang, name, concept_def.canonical_id);
    }
    std::set<std::string> attribute_names;
    for (const Attribute& attribute : concept_def.attributes) {
      if (!is_dialect_identifier(attribute.name)) {
        throw OntologyError("invalid-identifier: attribute \"" +
                            attribute.name + "\" of " +
                            concept_def.canonical_id);
      }
      if (!attribute_names.insert(attribute.name).second) {
        throw OntologyError("duplicate-attribute: " + attribute.name +
                            " in " + concept_def.canonical_id);
      }
    }
  }
}

const Concept* Ontology::find_concept(const std::string& canonical_id) const {
  auto it = by_id_.find(canonical_id);
  if (it == by_id_.end()) return nullptr;
  return &concepts_[it->second];
}

const Concept& Ontology::resolve_surface(const std::string& lang,
                                         const std::string& name) const {
  if (lang == "en") {
    if (const Concept* concept_def = find_concept(name)) return *concept_def;
  }
  for (const Concept& concept_def : concepts_) {
    auto it = concept_def.surface_names.find(lang);
    if (it != concept_def.surface_names.end() && it->second == name) {
      return concept_def;
    }
  }
  throw OntologyError("unknown-name: \"" + name + "\" (" + lang + ")");
}

namespace {

Concept parse_concept(const YAML::Node& node) {
  Concept concept_def;
  if (!node["id"]) throw OntologyError("concept missing required key \"id\"");
  concept_def.canonical_id = node["id"].as<std::string>();

  std::string base_name =
      node["base"] ? node["base"].as<std::string>() : "Entity";
  auto base = base_kind_from_name(base_name);
  if (!base) {
    throw OntologyError("unknown-base-kind: \"" + base_name + "\" in " +
                        concept_def.canonical_id);
  }
  concept_def.base = *base;

  if (const YAML::Node& names = node["names"]) {
    for (const auto& entry : names) {
      concept_def.surface_names[entry.first.as<std::string>()] =
          entry.second.as<std::string>();
    }
  }

  if (const YAML::Node& attributes = node["attributes"]) {
    for (const auto& attr_node : attributes) {
      Attribute attribute;
      attribute.name = attr_node["name"].as<std::string>();
      std::string kind_name =
          attr_node["kind"] ? attr_node["kind"].as<std::string>() : "span";
      auto kind = slot_kind_from_name(kind_name);
      if (!kind) {
        throw OntologyError("unknown-slot-kind: \"" + kind_name + "\" in " +
                            concept_def.canonical_id);
      }
      attribute.kind = *kind;
      concept_def.attributes.push_back(std::move(attribute));
    }
  } else {
    concept_def.attributes = default_attributes(concept_def.base);
  }

  if (const YAML::Node& description = node["description"]) {
    if (description.IsMap()) {
      for (const auto& entry : description) {
        concept_def.descriptions[entry.first.as<std::string>()] =
            entry.second.as<std::string>();
      }
    } else {
      concept_def.descriptions[""] = description.as<std::string>();
    }
  }

  if (const YAML::Node& examples = node["examples"]) {
    for (const auto& example : examples) {
      ConceptExample item;
      if (example.IsMap()) {
        item.text = example["text"].as<std::string>();
        if (example["freq"]) item.frequency = example["freq"].as<int>();
      } else {
        item.text = example.as<std::string>();
      }
      concept_def.examples.push_back(std::move(item));
    }
  }
  return concept_def;
}

}  // namespace

Ontology load_ontology(const std::string& config_text) {
  YAML::Node root;
  try {
    root = YAML::Load(config_text);
  } catch (const YAML::Exception& e) {
    throw OntologyError(std::string("config-parse-error: ") + e.what());
  }
  if (!root.IsMap()) throw OntologyError("config root must be a mapping");

  std::string task_name = root["task"] ? root["task"].as<std::string>() : "";
  auto task = task_kind_from_name(task_name);
  if (!task) throw OntologyError("unknown-task: \"" + task_name + "\"");

  std::vector<Concept> concepts;
  if (const YAML::Node& list = root["concepts"]) {
    for (const auto& node : list) concepts.push_back(parse_concept(node));
  }
  return Ontology(*task, std::move(concepts));
}

Ontology load_ontology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw OntologyError("cannot open ontology config: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_ontology(buffer.str());
}

std::string save_ontology(const Ontology& ontology) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "task" << YAML::Value
      << task_kind_name(ontology.task_kind());
  out << YAML::Key << "concepts" << YAML::Value << YAML::BeginSeq;
  for (const Concept& concept_def : ontology.concepts()) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << concept_def.canonical_id;
    out << YAML::Key << "base" << YAML::Value
        << base_kind_name(concept_def.base);
    if (!concept_def.surface_names.empty()) {
      out << YAML::Key << "names" << YAML::Value << YAML::BeginMap;
      for (const auto& [lang, name] : concept_def.surface_names) {
        out << YAML::Key << lang << YAML::Value << name;
      }
      out << YAML::EndMap;
    }
    out << YAML::Key << "attributes" << YAML::Value << YAML::BeginSeq;
    for (const Attribute& attribute : concept_def.attributes) {
      out << YAML::BeginMap;
      out << YAML::Key << "name" << YAML::Value << attribute.name;
      out << YAML::Key << "kind" << YAML::Value
          << slot_kind_name(attribute.kind);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    if (!concept_def.descriptions.empty()) {
      auto unscoped = concept_def.descriptions.find("");
      if (concept_def.descriptions.size() == 1 &&
          unscoped != concept_def.descriptions.end()) {
        out << YAML::Key << "description" << YAML::Value << unscoped->second;
      } else {
        out << YAML::Key << "description" << YAML::Value << YAML::BeginMap;
        for (const auto& [lang, text] : concept_def.descriptions) {
          if (lang.empty()) continue;
          out << YAML::Key << lang << YAML::Value << text;
        }
        out << YAML::EndMap;
      }
    }
    if (!concept_def.examples.empty()) {
      out << YAML::Key << "examples" << YAML::Value << YAML::BeginSeq;
      for (const ConceptExample& example : concept_def.examples) {
        if (example.frequency != 1) {
          out << YAML::BeginMap;
          out << YAML::Key << "text" << YAML::Value << example.text;
          out << YAML::Key << "freq" << YAML::Value << example.frequency;
          out << YAML::EndMap;
        } else {
          out << example.text;
        }
      }
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<std::string> sample_examples(const std::vector<Sample>& corpus,
                                         const Concept& concept_def,
                                         std::size_t cap) {
  struct Tally {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::map<std::string, Tally> tallies;
  std::size_t order = 0;
  for (const Sample& sample : corpus) {
    for (const ExtractionInstance& instance : sample.instances) {
      std::vector<std::string> strings;
      collect_instance_strings(instance, concept_def.canonical_id, strings);
      for (std::string& text : strings) {
        auto [it, inserted] = tallies.emplace(std::move(text), Tally{});
        if (inserted) it->second.first_seen = order;
        ++it->second.count;
        ++order;
      }
    }
  }

  std::vector<std::pair<std::string, Tally>> ranked(tallies.begin(),
                                                    tallies.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });

  std::vector<std::string> out;
  for (const auto& [text, tally] : ranked) {
    if (out.size() >= cap) break;
    out.push_back(text);
  }
  return out;
}

std::vector<std::string> instance_strings(const std::vector<Sample>& corpus,
                                          const Concept& concept_def) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const Sample& sample : corpus) {
    for (const ExtractionInstance& instance : sample.instances) {
      std::vector<std::string> strings;
      collect_instance_strings(instance, concept_def.canonical_id, strings);
      for (std::string& text : strings) {
        if (seen.insert(text).second) out.push_back(std::move(text));
      }
    }
  }
  return out;
}

namespace {

std::optional<std::string> validate_instance_node(
    const Ontology& ontology, const ExtractionInstance& instance) {
  const Concept* concept_def = ontology.find_concept(instance.concept_id);
  if (!concept_def) return "unknown-class: " + instance.concept_id;

  std::size_t attr_cursor = 0;
  for (const Slot& slot : instance.slots) {
    const Attribute* attribute = concept_def->find_attribute(slot.name);
    if (!attribute) {
      return "unknown-attribute: " + slot.name + " in " +
             instance.concept_id;
    }
    if (attribute->kind != slot.kind) {
      return "slot-kind-mismatch: " + slot.name + " in " +
             instance.concept_id;
    }
    // Declaration order; duplicates would fail the strictly-increasing check.
    std::size_t index = 0;
    while (index < concept_def->attributes.size() &&
           concept_def->attributes[index].name != slot.name) {
      ++index;
    }
    if (index < attr_cursor) {
      return "slot-order: " + slot.name + " out of declaration order in " +
             instance.concept_id;
    }
    attr_cursor = index + 1;

    if (slot.kind == SlotKind::kRef && slot.children.size() != 1) {
      return "ref-slot-arity: " + slot.name + " in " + instance.concept_id;
    }
    for (const ExtractionInstance& child : slot.children) {
      if (auto error = validate_instance_node(ontology, child)) return error;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_instance(
    const Ontology& ontology, const ExtractionInstance& instance) {
  return validate_instance_node(ontology, instance);
}

}  // namespace xlie
