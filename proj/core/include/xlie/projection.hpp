#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xlie/llm.hpp"
#include "xlie/projection_types.hpp"

namespace xlie {

struct LangPair {
  std::string src = "en";
  std::string tgt = "zh";
};

struct ProjectionPolicy {
  std::string primary_model;
  std::string fallback_model;  // empty disables failover
  int failover_attempts = 1;   // whole-pipeline reruns with the fallback model
  int concurrency = 1;         // corpus worker threads
  double temperature = 0.0;
  int max_tokens = 2048;
  // Opt-in full-width/ASCII folding for span presence checks; raw exact
  // matching otherwise.
  bool fold_width_spans = false;
  std::string checkpoint_path;  // empty disables checkpointing
};

// Tolerant extractors for the labeled response blocks. Quotes are required;
// surrounding prose is ignored.
std::optional<std::string> extract_sentence_field(std::string_view text);
std::optional<std::vector<std::string>> extract_spans_field(
    std::string_view text);

bool span_in_sentence(const std::string& span, const std::string& sentence,
                      bool fold_width);

struct JointResult {
  std::string sentence;
  std::vector<std::string> spans;
};

// Stage 1: one call translating sentence and spans together. Returns nullopt
// on an unparseable response or span-count mismatch; the outcome is recorded
// in `log` either way.
std::optional<JointResult> joint_translate(const SpanSample& src,
                                           const LangPair& langs,
                                           LlmClient& client,
                                           const std::string& model,
                                           const ProjectionPolicy& policy,
                                           std::vector<StageEntry>* log = nullptr);

struct SpanRephraseResult {
  std::vector<std::string> spans;
  bool flag = false;  // true when some span is still missing afterwards
};

// Stage 2: for each target span absent from the target sentence, asks for a
// semantically matching span; substitutes corrections that do occur. Spans
// already present cost no calls.
SpanRephraseResult span_rephrase(const std::string& src_sentence,
                                 const std::vector<std::string>& src_spans,
                                 std::vector<std::string> tgt_spans,
                                 const std::string& tgt_sentence,
                                 const LangPair& langs, LlmClient& client,
                                 const std::string& model,
                                 const ProjectionPolicy& policy,
                                 std::vector<StageEntry>* log = nullptr);

// Stage 3: re-translates the source sentence constrained to contain the
// target spans. Returns nullopt on the refusal marker.
std::optional<std::string> sentence_rephrase(
    const std::vector<std::string>& tgt_spans, const std::string& src_sentence,
    const LangPair& langs, LlmClient& client, const std::string& model,
    const ProjectionPolicy& policy, std::vector<StageEntry>* log = nullptr);

// Runs stages 1 -> 2 -> (3 when flagged), verifies faithfulness, and applies
// the whole-pipeline failover with the fallback model when spans are still
// missing. Transport-level failures yield status failed; residual missing
// spans yield needs_review.
ProjectionRecord project_sample(const SpanSample& src, const LangPair& langs,
                                LlmClient& client,
                                const ProjectionPolicy& policy);

struct ProjectionOutcome {
  std::vector<ProjectionRecord> records;  // corpus order
  std::optional<double> faithfulness;     // absent for an empty corpus
  std::vector<ProjectionRecord> review_export;
};

// Bounded-concurrency map of project_sample preserving corpus order. With a
// checkpoint path, records already ok in the checkpoint are reused without
// any further calls and freshly computed records are appended.
ProjectionOutcome project_corpus(const std::vector<SpanSample>& corpus,
                                 const LangPair& langs, LlmClient& client,
                                 const ProjectionPolicy& policy);

}  // namespace xlie
