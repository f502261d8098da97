#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace xlie {

// One annotated span of a flat NER-style sample: the unit the label
// projection pipeline translates.
struct SpanAnnotation {
  std::string text;
  std::string type;
  std::optional<std::size_t> start;  // code-point offset when resolved

  bool operator==(const SpanAnnotation& other) const = default;
};

struct SpanSample {
  std::string id;
  std::string language;
  std::string sentence;
  std::vector<SpanAnnotation> spans;

  bool operator==(const SpanSample& other) const = default;
};

enum class Stage { kJoint, kSpanRephrase, kSentenceRephrase, kFailover, kManual };
const char* stage_name(Stage stage);
std::optional<Stage> stage_from_name(const std::string& name);

struct StageEntry {
  Stage stage = Stage::kJoint;
  std::string model;
  std::string request;
  std::string response;
  std::string outcome;  // "ok" or "error: <reason>"
};

enum class RecordStatus { kOk, kNeedsReview, kFailed };
const char* record_status_name(RecordStatus status);
std::optional<RecordStatus> record_status_from_name(const std::string& name);

// A source sample paired with its (possibly unfinished) target-language
// counterpart plus the per-stage transcript.
struct ProjectionRecord {
  SpanSample source;
  std::optional<SpanSample> target;
  std::vector<StageEntry> stage_log;
  RecordStatus status = RecordStatus::kFailed;
};

// True when the target exists and every target span occurs verbatim in the
// target sentence.
bool is_faithful(const ProjectionRecord& record);

// Pipeline prompt template. Bodies may only use the declared placeholders
// {src_sentence}, {src_spans}, {src_span}, {tgt_sentence}, {tgt_lang_spans};
// language names are baked in when the template is built for a pair.
struct PromptTemplate {
  std::string name;  // joint_translation | span_rephrase | sentence_rephrase
  std::string body;
};

PromptTemplate make_joint_template(const std::string& src_lang,
                                   const std::string& tgt_lang);
PromptTemplate make_span_rephrase_template(const std::string& src_lang,
                                           const std::string& tgt_lang);
PromptTemplate make_sentence_rephrase_template(const std::string& src_lang,
                                               const std::string& tgt_lang);

// Throws std::invalid_argument when the body uses an undeclared placeholder.
void validate_template(const PromptTemplate& tmpl);

std::string format_template(const PromptTemplate& tmpl,
                            const std::map<std::string, std::string>& values);

// English display name for a language code ("zh" -> "Chinese"); the code
// itself when unknown.
std::string language_display_name(const std::string& code);

}  // namespace xlie
