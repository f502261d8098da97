#include "xlie/aligndata.hpp"

#include "xlie/utf8.hpp"

namespace xlie {

Sample span_sample_to_sample(const SpanSample& sample) {
  Sample out;
  out.id = sample.id;
  out.language = sample.language;
  out.sentence = sample.sentence;
  for (const SpanAnnotation& span : sample.spans) {
    ExtractionInstance instance;
    instance.concept_id = span.type;
    Slot slot;
    slot.name = "mention";
    slot.kind = SlotKind::kSpan;
    slot.span.text = span.text;
    if (span.start) {
      slot.span.offset =
          utf8::Interval{*span.start, *span.start + utf8::length(span.text)};
    }
    instance.slots.push_back(std::move(slot));
    out.instances.push_back(std::move(instance));
  }
  return out;
}

std::string alignment_task_description() {
  return "Given the fully annotated source-language example below, predict "
         "the extraction results for the target-language sentence that "
         "follows.";
}

std::vector<AlignedPair> assemble_parallel_dataset(
    const std::vector<ProjectionRecord>& records, Directions directions) {
  std::vector<AlignedPair> pairs;
  for (const ProjectionRecord& record : records) {
    if (record.status != RecordStatus::kOk || !record.target) continue;
    Sample source = span_sample_to_sample(record.source);
    Sample target = span_sample_to_sample(*record.target);
    pairs.push_back(AlignedPair{
        source, target, {source.language, target.language}});
    if (directions == Directions::kBoth) {
      pairs.push_back(AlignedPair{
          target, source, {target.language, source.language}});
    }
  }
  return pairs;
}

PromptPair build_alignment_sample(const AlignedPair& pair,
                                  const Ontology& src_ontology,
                                  const Ontology& tgt_ontology,
                                  bool with_comments,
                                  std::string_view dataset) {
  if (pair.source.instances.size() != pair.target.instances.size()) {
    throw ValidationError(
        "aligned pair " + pair.source.id + ": instance counts differ (" +
        std::to_string(pair.source.instances.size()) + " vs " +
        std::to_string(pair.target.instances.size()) + ")");
  }
  for (std::size_t i = 0; i < pair.source.instances.size(); ++i) {
    if (pair.source.instances[i].concept_id !=
        pair.target.instances[i].concept_id) {
      throw ValidationError("aligned pair " + pair.source.id +
                            ": concept mismatch at instance " +
                            std::to_string(i));
    }
  }
  for (const ExtractionInstance& instance : pair.target.instances) {
    const SpanValue* span = primary_span(instance);
    if (span && !utf8::contains(pair.target.sentence, span->text)) {
      throw ValidationError("aligned pair " + pair.source.id +
                            ": unfaithful target span \"" + span->text + "\"");
    }
  }

  PromptPair src_pair =
      build_training_pair(src_ontology, pair.source, with_comments, dataset);
  std::string tgt_instruction = render_instruction(
      tgt_ontology, pair.target.sentence, with_comments, pair.target.language);

  PromptPair out;
  out.instruction = alignment_task_description() + "\n\n" +
                    src_pair.instruction + src_pair.completion + "\n\n" +
                    tgt_instruction;
  out.completion = render_completion(pair.target.instances, &tgt_ontology);
  out.meta = PromptMeta{std::string(dataset), pair.target.language,
                        tgt_ontology.task_kind(), pair.target.id};
  return out;
}

}  // namespace xlie
