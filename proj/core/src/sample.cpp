#include "xlie/sample.hpp"

namespace xlie {

const char* slot_kind_name(SlotKind kind) {
  switch (kind) {
    case SlotKind::kSpan:
      return "span";
    case SlotKind::kRef:
      return "ref";
    case SlotKind::kRefList:
      return "ref_list";
  }
  return "span";
}

std::optional<SlotKind> slot_kind_from_name(const std::string& name) {
  if (name == "span") return SlotKind::kSpan;
  if (name == "ref") return SlotKind::kRef;
  if (name == "ref_list") return SlotKind::kRefList;
  return std::nullopt;
}

const Slot* ExtractionInstance::find_slot(const std::string& name) const {
  for (const Slot& slot : slots) {
    if (slot.name == name) return &slot;
  }
  return nullptr;
}

bool operator==(const SpanValue& a, const SpanValue& b) {
  return a.text == b.text && a.offset == b.offset;
}

bool operator==(const Slot& a, const Slot& b) {
  return a.name == b.name && a.kind == b.kind && a.span == b.span &&
         a.children == b.children;
}

bool operator==(const ExtractionInstance& a, const ExtractionInstance& b) {
  return a.concept_id == b.concept_id && a.slots == b.slots;
}

bool operator==(const Sample& a, const Sample& b) {
  return a.id == b.id && a.language == b.language && a.sentence == b.sentence &&
         a.instances == b.instances;
}

bool same_extraction_text(const ExtractionInstance& a,
                          const ExtractionInstance& b) {
  if (a.concept_id != b.concept_id || a.slots.size() != b.slots.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.slots.size(); ++i) {
    const Slot& sa = a.slots[i];
    const Slot& sb = b.slots[i];
    if (sa.name != sb.name || sa.kind != sb.kind) return false;
    if (sa.kind == SlotKind::kSpan) {
      if (sa.span.text != sb.span.text) return false;
    } else {
      if (!same_extraction_text(sa.children, sb.children)) return false;
    }
  }
  return true;
}

bool same_extraction_text(const std::vector<ExtractionInstance>& a,
                          const std::vector<ExtractionInstance>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_extraction_text(a[i], b[i])) return false;
  }
  return true;
}

const SpanValue* primary_span(const ExtractionInstance& instance) {
  for (const Slot& slot : instance.slots) {
    if (slot.kind == SlotKind::kSpan) return &slot.span;
  }
  for (const Slot& slot : instance.slots) {
    for (const ExtractionInstance& child : slot.children) {
      if (const SpanValue* span = primary_span(child)) return span;
    }
  }
  return nullptr;
}

}  // namespace xlie
