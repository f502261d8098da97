#include "xlie/codegen.hpp"

#include <sstream>

namespace xlie {

namespace {

constexpr std::string_view kBaseClasses =
    "class Entity:\n"
    "    def __init__(self, mention: str):\n"
    "        self.mention = mention\n"
    "\n"
    "class Relation:\n"
    "    def __init__(self, subject: Entity, object: Entity):\n"
    "        self.subject = subject\n"
    "        self.object = object\n"
    "\n"
    "class Event:\n"
    "    def __init__(self, trigger: str):\n"
    "        self.trigger = trigger\n";

const char* type_hint(SlotKind kind) {
  switch (kind) {
    case SlotKind::kSpan:
      return "str";
    case SlotKind::kRef:
      return "Entity";
    case SlotKind::kRefList:
      return "list";
  }
  return "str";
}

void render_concept_class(std::ostringstream& out, const Concept& concept_def,
                          bool with_comments, std::string_view lang) {
  out << "class " << concept_def.canonical_id << "("
      << base_kind_name(concept_def.base) << "):\n";
  if (with_comments) {
    if (const std::string* description =
            concept_def.description_for(std::string(lang))) {
      out << "    # " << *description << "\n";
    }
    out << "    # Examples:";
    std::size_t shown = 0;
    for (const ConceptExample& example : concept_def.examples) {
      if (shown >= 10) break;
      out << (shown == 0 ? " " : ", ") << quote_string(example.text);
      ++shown;
    }
    out << "\n";
  }
  out << "    def __init__(self";
  for (const Attribute& attribute : concept_def.attributes) {
    out << ", " << attribute.name << ": " << type_hint(attribute.kind);
  }
  out << "):\n";
  for (const Attribute& attribute : concept_def.attributes) {
    out << "        self." << attribute.name << " = " << attribute.name
        << "\n";
  }
  if (concept_def.attributes.empty()) out << "        pass\n";
}

void render_call(std::ostringstream& out, const ExtractionInstance& instance,
                 const Ontology* ontology);

void render_value(std::ostringstream& out, const Slot& slot,
                  const Ontology* ontology) {
  switch (slot.kind) {
    case SlotKind::kSpan:
      out << quote_string(slot.span.text);
      break;
    case SlotKind::kRef:
      render_call(out, slot.ref(), ontology);
      break;
    case SlotKind::kRefList: {
      out << "[";
      bool first = true;
      for (const ExtractionInstance& child : slot.children) {
        if (!first) out << ", ";
        first = false;
        render_call(out, child, ontology);
      }
      out << "]";
      break;
    }
  }
}

void render_call(std::ostringstream& out, const ExtractionInstance& instance,
                 const Ontology* ontology) {
  out << instance.concept_id << "(";
  const Concept* concept_def =
      ontology ? ontology->find_concept(instance.concept_id) : nullptr;
  bool keyword_mode = false;
  std::size_t declared_index = 0;
  bool first = true;
  for (const Slot& slot : instance.slots) {
    if (!first) out << ", ";
    first = false;
    if (concept_def && !keyword_mode) {
      if (declared_index >= concept_def->attributes.size() ||
          concept_def->attributes[declared_index].name != slot.name) {
        keyword_mode = true;
      }
      ++declared_index;
    }
    if (keyword_mode) out << slot.name << "=";
    render_value(out, slot, ontology);
  }
  out << ")";
}

}  // namespace

std::string quote_string(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 2);
  out.push_back('"');
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string task_docstring(TaskKind task) {
  switch (task) {
    case TaskKind::kNer:
      return "This is a named entity recognition task. Extract every entity "
             "mention from the sentence and instantiate the matching entity "
             "class for each one, collecting the objects in the list "
             "\"results\".";
    case TaskKind::kRe:
      return "This is a relation extraction task. Extract every relation "
             "from the sentence and instantiate the matching relation class "
             "for each one, collecting the objects in the list \"results\".";
    case TaskKind::kEd:
      return "This is an event detection task. Extract every event trigger "
             "from the sentence and instantiate the matching event class for "
             "each one, collecting the objects in the list \"results\".";
    case TaskKind::kEae:
      return "This is an event argument extraction task. For each event in "
             "the sentence, instantiate the matching event class with its "
             "trigger and argument spans, collecting the objects in the list "
             "\"results\".";
  }
  return "";
}

std::string render_instruction(const Ontology& ontology,
                               std::string_view sentence, bool with_comments,
                               std::string_view lang) {
  std::ostringstream out;
  out << kBaseClasses;
  for (const Concept& concept_def : ontology.concepts()) {
    out << "\n";
    render_concept_class(out, concept_def, with_comments, lang);
  }
  out << "\n\"\"\"\n"
      << task_docstring(ontology.task_kind()) << "\n\"\"\"\n"
      << "sentence = " << quote_string(sentence) << "\n";
  return out.str();
}

std::string render_completion(const std::vector<ExtractionInstance>& instances,
                              const Ontology* ontology) {
  std::ostringstream out;
  out << "results = [";
  bool first = true;
  for (const ExtractionInstance& instance : instances) {
    if (!first) out << ", ";
    first = false;
    render_call(out, instance, ontology);
  }
  out << "]";
  return out.str();
}

namespace {

const std::string* find_missing_span(const ExtractionInstance& instance,
                                     const std::string& sentence) {
  for (const Slot& slot : instance.slots) {
    if (slot.kind == SlotKind::kSpan) {
      if (!utf8::contains(sentence, slot.span.text)) return &slot.span.text;
    }
    for (const ExtractionInstance& child : slot.children) {
      if (const std::string* missing = find_missing_span(child, sentence)) {
        return missing;
      }
    }
  }
  return nullptr;
}

}  // namespace

PromptPair build_training_pair(const Ontology& ontology, const Sample& sample,
                               bool with_comments, std::string_view dataset) {
  for (const ExtractionInstance& instance : sample.instances) {
    if (auto error = validate_instance(ontology, instance)) {
      throw ValidationError("sample " + sample.id + ": " + *error);
    }
    if (const std::string* missing =
            find_missing_span(instance, sample.sentence)) {
      throw ValidationError("sample " + sample.id + ": span \"" + *missing +
                            "\" does not occur in the sentence");
    }
  }
  PromptPair pair;
  pair.instruction = render_instruction(ontology, sample.sentence,
                                        with_comments, sample.language);
  pair.completion = render_completion(sample.instances, &ontology);
  pair.meta = PromptMeta{std::string(dataset), sample.language,
                         ontology.task_kind(), sample.id};
  return pair;
}

}  // namespace xlie
