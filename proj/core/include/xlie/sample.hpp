#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xlie/utf8.hpp"

namespace xlie {

// Slot payload shapes: a text span, a nested instance, or a list of nested
// instances.
enum class SlotKind { kSpan, kRef, kRefList };

const char* slot_kind_name(SlotKind kind);
std::optional<SlotKind> slot_kind_from_name(const std::string& name);

struct ExtractionInstance;

// A text span slot. `offset` is the resolved code-point interval in the
// owning sentence; absent when the span could not be located.
struct SpanValue {
  std::string text;
  std::optional<utf8::Interval> offset;
};

struct Slot {
  std::string name;
  SlotKind kind = SlotKind::kSpan;
  SpanValue span;                             // kind == kSpan
  std::vector<ExtractionInstance> children;   // kRef: exactly one; kRefList: any

  const ExtractionInstance& ref() const { return children.front(); }
};

// One typed extraction: an entity mention, relation triple, event trigger, or
// event plus its arguments. Slots follow the concept's declared attribute
// order.
struct ExtractionInstance {
  std::string concept_id;
  std::vector<Slot> slots;

  const Slot* find_slot(const std::string& name) const;
};

struct Sample {
  std::string id;
  std::string language;
  std::string sentence;
  std::vector<ExtractionInstance> instances;
};

bool operator==(const SpanValue& a, const SpanValue& b);
bool operator==(const Slot& a, const Slot& b);
bool operator==(const ExtractionInstance& a, const ExtractionInstance& b);
bool operator==(const Sample& a, const Sample& b);

// Structural equality on concept ids, slot names, slot kinds, and span texts,
// ignoring resolved offsets. This is the round-trip contract between
// rendering and parsing.
bool same_extraction_text(const ExtractionInstance& a,
                          const ExtractionInstance& b);
bool same_extraction_text(const std::vector<ExtractionInstance>& a,
                          const std::vector<ExtractionInstance>& b);

// First span-kind slot in depth-first order; the instance's display string
// (entity mention, event trigger). Null for pure reference instances.
const SpanValue* primary_span(const ExtractionInstance& instance);

}  // namespace xlie
