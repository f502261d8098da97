#include "xlie/metrics.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "xlie/utf8.hpp"

namespace xlie {

ScoreCard ScoreCard::from_counts(std::size_t tp, std::size_t predicted,
                                 std::size_t gold) {
  ScoreCard card;
  card.true_positives = tp;
  card.predicted_count = predicted;
  card.gold_count = gold;
  card.precision = predicted == 0 ? 0.0
                                  : static_cast<double>(tp) /
                                        static_cast<double>(predicted);
  card.recall =
      gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
  card.f1 = (card.precision + card.recall) == 0.0
                ? 0.0
                : 2.0 * card.precision * card.recall /
                      (card.precision + card.recall);
  return card;
}

namespace {

constexpr char kSep = '\x1f';

// Serialized match key for one scored unit. Units whose offsets are
// unresolved keep the raw span text plus a marker, so identical duplicates
// still deduplicate but never match a gold key (gold keys always carry
// offsets or the same marker with different provenance is irrelevant:
// unmatchable keys are excluded from the gold index).
struct Unit {
  std::string key;
  bool matchable = true;
};

void append_interval(std::ostringstream& out, const SpanValue& span) {
  if (span.offset) {
    out << span.offset->start << '-' << span.offset->end;
  } else {
    out << "?" << kSep << span.text;
  }
}

const Slot* nth_slot_of_kind(const ExtractionInstance& instance, SlotKind kind,
                             std::size_t n) {
  std::size_t seen = 0;
  for (const Slot& slot : instance.slots) {
    if (slot.kind != kind) continue;
    if (seen == n) return &slot;
    ++seen;
  }
  return nullptr;
}

// (interval, concept) of an entity-like instance: its first span slot.
std::optional<Unit> entity_unit(const ExtractionInstance& instance) {
  const Slot* mention = nth_slot_of_kind(instance, SlotKind::kSpan, 0);
  if (!mention) return std::nullopt;
  std::ostringstream out;
  append_interval(out, mention->span);
  out << kSep << instance.concept_id;
  return Unit{out.str(), mention->span.offset.has_value()};
}

std::vector<Unit> ner_units(const Sample& sample) {
  std::vector<Unit> units;
  for (const ExtractionInstance& instance : sample.instances) {
    if (auto unit = entity_unit(instance)) units.push_back(std::move(*unit));
  }
  return units;
}

std::vector<Unit> re_units(const Sample& sample) {
  std::vector<Unit> units;
  for (const ExtractionInstance& instance : sample.instances) {
    const Slot* subject = nth_slot_of_kind(instance, SlotKind::kRef, 0);
    const Slot* object = nth_slot_of_kind(instance, SlotKind::kRef, 1);
    if (!subject || !object || subject->children.empty() ||
        object->children.empty()) {
      continue;
    }
    auto subject_unit = entity_unit(subject->ref());
    auto object_unit = entity_unit(object->ref());
    if (!subject_unit || !object_unit) continue;
    std::ostringstream out;
    out << instance.concept_id << kSep << subject_unit->key << kSep
        << object_unit->key;
    units.push_back(
        Unit{out.str(), subject_unit->matchable && object_unit->matchable});
  }
  return units;
}

std::vector<Unit> ed_units(const Sample& sample) {
  return ner_units(sample);  // trigger is the first span slot
}

std::vector<Unit> eae_units(const Sample& sample) {
  std::vector<Unit> units;
  for (const ExtractionInstance& instance : sample.instances) {
    const Slot* trigger = nth_slot_of_kind(instance, SlotKind::kSpan, 0);
    if (!trigger) continue;
    std::ostringstream event;
    event << instance.concept_id << kSep;
    append_interval(event, trigger->span);
    bool event_matchable = trigger->span.offset.has_value();

    for (const Slot& slot : instance.slots) {
      if (&slot == trigger) continue;
      auto add_arg = [&](const SpanValue& span) {
        std::ostringstream out;
        out << event.str() << kSep << slot.name << kSep;
        append_interval(out, span);
        units.push_back(
            Unit{out.str(), event_matchable && span.offset.has_value()});
      };
      if (slot.kind == SlotKind::kSpan) {
        add_arg(slot.span);
      } else {
        for (const ExtractionInstance& child : slot.children) {
          const Slot* mention = nth_slot_of_kind(child, SlotKind::kSpan, 0);
          if (mention) add_arg(mention->span);
        }
      }
    }
  }
  return units;
}

using UnitExtractor = std::vector<Unit> (*)(const Sample&);

// Aligns by sample id; ids must be unique and the sets identical.
std::vector<std::pair<const Sample*, const Sample*>> align_corpora(
    const std::vector<Sample>& pred, const std::vector<Sample>& gold) {
  std::map<std::string, const Sample*> gold_by_id;
  for (const Sample& sample : gold) {
    if (!gold_by_id.emplace(sample.id, &sample).second) {
      throw MetricsError("misaligned corpora: duplicate gold id \"" +
                         sample.id + "\"");
    }
  }
  std::set<std::string> pred_ids;
  std::vector<std::pair<const Sample*, const Sample*>> pairs;
  for (const Sample& sample : pred) {
    if (!pred_ids.insert(sample.id).second) {
      throw MetricsError("misaligned corpora: duplicate prediction id \"" +
                         sample.id + "\"");
    }
    auto it = gold_by_id.find(sample.id);
    if (it == gold_by_id.end()) {
      throw MetricsError("misaligned corpora: prediction id \"" + sample.id +
                         "\" has no gold sample");
    }
    pairs.emplace_back(&sample, it->second);
  }
  if (pred_ids.size() != gold_by_id.size()) {
    throw MetricsError("misaligned corpora: gold has " +
                       std::to_string(gold_by_id.size()) +
                       " samples, predictions have " +
                       std::to_string(pred_ids.size()));
  }
  return pairs;
}

ScoreCard score_with(UnitExtractor extract, const std::vector<Sample>& pred,
                     const std::vector<Sample>& gold) {
  auto pairs = align_corpora(pred, gold);
  std::size_t tp = 0;
  std::size_t predicted = 0;
  std::size_t gold_total = 0;
  for (const auto& [pred_sample, gold_sample] : pairs) {
    std::vector<Unit> pred_units = extract(*pred_sample);
    std::vector<Unit> gold_units = extract(*gold_sample);
    gold_total += gold_units.size();

    std::map<std::string, std::size_t> gold_pool;
    for (const Unit& unit : gold_units) {
      if (unit.matchable) ++gold_pool[unit.key];
    }

    std::set<std::string> seen;
    for (const Unit& unit : pred_units) {
      if (!seen.insert(unit.key).second) continue;  // dedup
      ++predicted;
      if (!unit.matchable) continue;
      auto it = gold_pool.find(unit.key);
      if (it != gold_pool.end() && it->second > 0) {
        --it->second;
        ++tp;
      }
    }
  }
  return ScoreCard::from_counts(tp, predicted, gold_total);
}

}  // namespace

ScoreCard score_ner(const std::vector<Sample>& pred,
                    const std::vector<Sample>& gold) {
  return score_with(&ner_units, pred, gold);
}

ScoreCard score_re(const std::vector<Sample>& pred,
                   const std::vector<Sample>& gold) {
  return score_with(&re_units, pred, gold);
}

ScoreCard score_ed(const std::vector<Sample>& pred,
                   const std::vector<Sample>& gold) {
  return score_with(&ed_units, pred, gold);
}

ScoreCard score_eae(const std::vector<Sample>& pred,
                    const std::vector<Sample>& gold) {
  return score_with(&eae_units, pred, gold);
}

double score_faithfulness(const std::vector<ProjectionRecord>& records) {
  if (records.empty()) {
    throw MetricsError("faithfulness undefined for an empty record set");
  }
  std::size_t faithful = 0;
  for (const ProjectionRecord& record : records) {
    if (is_faithful(record)) ++faithful;
  }
  return static_cast<double>(faithful) / static_cast<double>(records.size());
}

}  // namespace xlie
