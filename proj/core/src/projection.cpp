#include "xlie/projection.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "xlie/codegen.hpp"
#include "xlie/jsonl.hpp"
#include "xlie/parser.hpp"

namespace xlie {

namespace {

constexpr const char* kRefusalMarker = "modification failure";

const std::map<std::string, std::string>& language_names() {
  static const std::map<std::string, std::string> names = {
      {"en", "English"}, {"zh", "Chinese"}, {"de", "German"},
      {"es", "Spanish"}, {"nl", "Dutch"},   {"ru", "Russian"},
      {"bn", "Bengali"}, {"fa", "Persian"}, {"hi", "Hindi"},
      {"ko", "Korean"},  {"tr", "Turkish"}, {"fr", "French"},
      {"ja", "Japanese"}};
  return names;
}

std::string join_quoted(const std::vector<std::string>& spans) {
  std::string out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i > 0) out += ", ";
    out += quote_string(spans[i]);
  }
  return out;
}

bool is_en_zh(const std::string& src, const std::string& tgt) {
  return src == "English" && tgt == "Chinese";
}

}  // namespace

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kJoint:
      return "joint";
    case Stage::kSpanRephrase:
      return "span_rephrase";
    case Stage::kSentenceRephrase:
      return "sentence_rephrase";
    case Stage::kFailover:
      return "failover";
    case Stage::kManual:
      return "manual";
  }
  return "joint";
}

std::optional<Stage> stage_from_name(const std::string& name) {
  if (name == "joint") return Stage::kJoint;
  if (name == "span_rephrase") return Stage::kSpanRephrase;
  if (name == "sentence_rephrase") return Stage::kSentenceRephrase;
  if (name == "failover") return Stage::kFailover;
  if (name == "manual") return Stage::kManual;
  return std::nullopt;
}

const char* record_status_name(RecordStatus status) {
  switch (status) {
    case RecordStatus::kOk:
      return "ok";
    case RecordStatus::kNeedsReview:
      return "needs_review";
    case RecordStatus::kFailed:
      return "failed";
  }
  return "failed";
}

std::optional<RecordStatus> record_status_from_name(const std::string& name) {
  if (name == "ok") return RecordStatus::kOk;
  if (name == "needs_review") return RecordStatus::kNeedsReview;
  if (name == "failed") return RecordStatus::kFailed;
  return std::nullopt;
}

bool is_faithful(const ProjectionRecord& record) {
  if (!record.target) return false;
  for (const SpanAnnotation& span : record.target->spans) {
    if (!utf8::contains(record.target->sentence, span.text)) return false;
  }
  return true;
}

std::string language_display_name(const std::string& code) {
  auto it = language_names().find(code);
  if (it != language_names().end()) return it->second;
  return code;
}

// --- Prompt templates -------------------------------------------------------

PromptTemplate make_joint_template(const std::string& src_lang,
                                   const std::string& tgt_lang) {
  std::string src = language_display_name(src_lang);
  std::string tgt = language_display_name(tgt_lang);
  std::string body;
  body += "Translate the sentence and spans from " + src + " to " + tgt +
          ".\n\n";
  body +=
      "Please follow these guidelines:\n"
      "1. Translate each span considering the context of the sentence.\n"
      "2. Ensure the number of spans after translation matches the original "
      "number of spans.\n"
      "3. When outputting spans, ensure only to output the translation of "
      "each span.\n\n";
  if (is_en_zh(src, tgt)) {
    body +=
        "The following is a few examples:\n\n"
        "[English]\n"
        "\"sentence\": \"The EU rejected Germany's call for a boycott of "
        "British lamb.\"\n"
        "\"spans\": [\"EU\"]\n\n"
        "[Chinese]\n"
        "\"sentence\": \"欧盟拒绝德国呼吁抵制英国羊肉。\"\n"
        "\"spans\": [\"欧盟\"]\n\n"
        "[English]\n"
        "\"sentence\": \"FM involves 2 - 4.7% of the general population.\"\n"
        "\"spans\": []\n\n"
        "[Chinese]\n"
        "\"sentence\": \"FM 影响了2 - 4.7% 的普通人群。\"\n"
        "\"spans\": []\n\n"
        "[English]\n"
        "\"sentence\": \"4000 guests from home and abroad attended the "
        "opening ceremony.\"\n"
        "\"spans\": [\"home\", \"abroad\"]\n\n"
        "[Chinese]\n"
        "\"sentence\": \"4000名来自国内和国外的嘉宾出席了开幕式。\"\n"
        "\"spans\": [\"国内\", \"国外\"]\n\n";
  }
  body += "Please translate the following sentence and spans:\n";
  body += "[" + src + "]\n";
  body += "\"sentence\": \"{src_sentence}\"\n";
  body += "\"spans\": [{src_spans}]\n\n";
  body += "[" + tgt + "]\n";
  return PromptTemplate{"joint_translation", std::move(body)};
}

PromptTemplate make_span_rephrase_template(const std::string& src_lang,
                                           const std::string& tgt_lang) {
  std::string src = language_display_name(src_lang);
  std::string tgt = language_display_name(tgt_lang);
  std::string body;
  body += "Please find the " + tgt + " span corresponding to the " + src +
          " span in the " + tgt + " sentence.\n\n";
  body += "Please follow these guidelines:\n";
  body += "1. Only find the span in the " + tgt +
          " sentence that corresponds to the " + src + " span.\n";
  body += "2. Ensure that the " + tgt +
          " span must be semantically consistent with the " + src +
          " span.\n\n";
  if (is_en_zh(src, tgt)) {
    body +=
        "The following is an example:\n\n"
        "[English]\n"
        "\"sentence\": \"Siemens invested 800 million US dollars to complete "
        "the electric power plant project.\"\n"
        "\"spans\": [\"US\"]\n\n"
        "[Chinese]\n"
        "\"sentence\": \"西门子投资了8亿美元完成了电力厂项目。\"\n"
        "\"spans\": [\"美\"]\n\n";
  }
  body += "Please find the corresponding span in the " + tgt +
          " sentence:\n\n";
  body += "[" + src + "]\n";
  body += "\"sentence\": \"{src_sentence}\"\n";
  body += "\"spans\": [{src_span}]\n\n";
  body += "[" + tgt + "]\n";
  body += "\"sentence\": \"{tgt_sentence}\"\n";
  body += "\"spans\":";
  return PromptTemplate{"span_rephrase", std::move(body)};
}

PromptTemplate make_sentence_rephrase_template(const std::string& src_lang,
                                               const std::string& tgt_lang) {
  std::string src = language_display_name(src_lang);
  std::string tgt = language_display_name(tgt_lang);
  std::string body;
  body += "Please translate the following sentence from " + src + " to " +
          tgt + ".\n\n";
  body += "Please follow these guidelines:\n";
  body +=
      "1. Ensure that the translation includes the following spans: "
      "[{tgt_lang_spans}].\n";
  body +=
      "2. If the target sentence is semantically inconsistent with the "
      "source sentence, return \"modification failure\".\n\n";
  body += "[" + src + "]\n";
  body += "\"sentence\": \"{src_sentence}\"\n\n";
  body += "[" + tgt + "]\n";
  body += "\"sentence\":";
  return PromptTemplate{"sentence_rephrase", std::move(body)};
}

void validate_template(const PromptTemplate& tmpl) {
  static const std::set<std::string> declared = {
      "src_sentence", "src_spans", "src_span", "tgt_sentence",
      "tgt_lang_spans"};
  const std::string& body = tmpl.body;
  std::size_t pos = 0;
  while ((pos = body.find('{', pos)) != std::string::npos) {
    std::size_t close = body.find('}', pos);
    if (close == std::string::npos) break;
    std::string name = body.substr(pos + 1, close - pos - 1);
    if (!declared.count(name)) {
      throw std::invalid_argument("template \"" + tmpl.name +
                                  "\" uses undeclared placeholder {" + name +
                                  "}");
    }
    pos = close + 1;
  }
}

std::string format_template(const PromptTemplate& tmpl,
                            const std::map<std::string, std::string>& values) {
  validate_template(tmpl);
  std::string out;
  const std::string& body = tmpl.body;
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t open = body.find('{', pos);
    if (open == std::string::npos) {
      out.append(body, pos, std::string::npos);
      break;
    }
    out.append(body, pos, open - pos);
    std::size_t close = body.find('}', open);
    std::string name = body.substr(open + 1, close - open - 1);
    auto it = values.find(name);
    out += (it != values.end()) ? it->second : "";
    pos = close + 1;
  }
  return out;
}

// --- Response extraction ------------------------------------------------------

namespace {

// Reads a quoted string starting at `pos` (which must point at '"'),
// honoring \" and \\ escapes.
std::optional<std::string> read_quoted(std::string_view text,
                                       std::size_t pos,
                                       std::size_t* end_pos = nullptr) {
  if (pos >= text.size() || text[pos] != '"') return std::nullopt;
  std::string value;
  std::size_t i = pos + 1;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\\' && i + 1 < text.size() &&
        (text[i + 1] == '"' || text[i + 1] == '\\')) {
      value.push_back(text[i + 1]);
      i += 2;
      continue;
    }
    if (c == '"') {
      if (end_pos) *end_pos = i + 1;
      return value;
    }
    value.push_back(c);
    ++i;
  }
  return std::nullopt;
}

std::size_t skip_ws_and_colon(std::string_view text, std::size_t pos) {
  while (pos < text.size() &&
         (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
          text[pos] == '\r' || text[pos] == ':')) {
    ++pos;
  }
  return pos;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin])))
    ++begin;
  while (end > begin &&
         std::isspace(static_cast<unsigned char>(text[end - 1])))
    --end;
  return std::string(text.substr(begin, end - begin));
}

}  // namespace

std::optional<std::string> extract_sentence_field(std::string_view text) {
  std::size_t pos = text.find("\"sentence\"");
  if (pos == std::string_view::npos) return std::nullopt;
  pos = skip_ws_and_colon(text, pos + 10);
  return read_quoted(text, pos);
}

std::optional<std::vector<std::string>> extract_spans_field(
    std::string_view text) {
  std::size_t pos = text.find("\"spans\"");
  if (pos != std::string_view::npos) {
    pos = skip_ws_and_colon(text, pos + 7);
    if (pos >= text.size() || text[pos] != '[') return std::nullopt;
  } else {
    pos = text.find('[');
    if (pos == std::string_view::npos) {
      // Bare quoted span with no list markers.
      std::size_t quote = text.find('"');
      if (quote == std::string_view::npos) return std::nullopt;
      auto value = read_quoted(text, quote);
      if (!value) return std::nullopt;
      return std::vector<std::string>{*value};
    }
  }
  // pos points at '['. Collect quoted strings up to the matching ']',
  // ignoring anything else in between.
  std::vector<std::string> spans;
  std::size_t i = pos + 1;
  while (i < text.size()) {
    char c = text[i];
    if (c == ']') return spans;
    if (c == '"') {
      std::size_t end = i;
      auto value = read_quoted(text, i, &end);
      if (!value) return std::nullopt;
      spans.push_back(*value);
      i = end;
      continue;
    }
    ++i;
  }
  return std::nullopt;  // unterminated list
}

// --- Span presence -----------------------------------------------------------

namespace {

// Raw surface form of `span` in `sentence`: the span itself on an exact
// match, or the width-folded match's surface when folding is enabled.
std::optional<std::string> find_span_surface(const std::string& span,
                                             const std::string& sentence,
                                             bool fold_width) {
  if (span.empty()) return std::nullopt;
  if (utf8::contains(sentence, span)) return span;
  if (!fold_width) return std::nullopt;
  std::u32string folded_sentence = utf8::decode(utf8::fold_fullwidth(sentence));
  std::u32string folded_span = utf8::decode(utf8::fold_fullwidth(span));
  auto pos = utf8::find(folded_sentence, folded_span, 0);
  if (!pos) return std::nullopt;
  // Folding is one code point to one code point, so raw indices line up.
  return utf8::substr(sentence, *pos, folded_span.size());
}

}  // namespace

bool span_in_sentence(const std::string& span, const std::string& sentence,
                      bool fold_width) {
  return find_span_surface(span, sentence, fold_width).has_value();
}

// --- Pipeline stages ----------------------------------------------------------

namespace {

void log_entry(std::vector<StageEntry>* log, Stage stage,
               const std::string& model, const std::string& request,
               const std::string& response, const std::string& outcome) {
  if (log) {
    log->push_back(StageEntry{stage, model, request, response, outcome});
  }
}

ChatRequest make_request(const std::string& model, const std::string& prompt,
                         const ProjectionPolicy& policy,
                         const std::string& tag) {
  ChatRequest request;
  request.model = model;
  request.messages.push_back(ChatMessage{"user", prompt});
  request.temperature = policy.temperature;
  request.max_tokens = policy.max_tokens;
  request.tag = tag;
  return request;
}

}  // namespace

std::optional<JointResult> joint_translate(const SpanSample& src,
                                           const LangPair& langs,
                                           LlmClient& client,
                                           const std::string& model,
                                           const ProjectionPolicy& policy,
                                           std::vector<StageEntry>* log) {
  PromptTemplate tmpl = make_joint_template(langs.src, langs.tgt);
  std::vector<std::string> src_texts;
  src_texts.reserve(src.spans.size());
  for (const SpanAnnotation& span : src.spans) src_texts.push_back(span.text);
  std::string prompt = format_template(
      tmpl, {{"src_sentence", src.sentence}, {"src_spans", join_quoted(src_texts)}});

  std::string content;
  try {
    content = client.complete(make_request(model, prompt, policy, "joint")).content;
  } catch (const LlmError& error) {
    log_entry(log, Stage::kJoint, model, prompt, "",
              std::string("error: ") + error.what());
    throw;
  }

  auto sentence = extract_sentence_field(content);
  auto spans = extract_spans_field(content);
  if (!sentence || !spans) {
    log_entry(log, Stage::kJoint, model, prompt, content,
              "error: unparseable-response");
    return std::nullopt;
  }
  if (spans->size() != src.spans.size()) {
    log_entry(log, Stage::kJoint, model, prompt, content,
              "error: span-count-mismatch (" + std::to_string(spans->size()) +
                  " of " + std::to_string(src.spans.size()) + ")");
    return std::nullopt;
  }
  log_entry(log, Stage::kJoint, model, prompt, content, "ok");
  return JointResult{*sentence, *spans};
}

SpanRephraseResult span_rephrase(const std::string& src_sentence,
                                 const std::vector<std::string>& src_spans,
                                 std::vector<std::string> tgt_spans,
                                 const std::string& tgt_sentence,
                                 const LangPair& langs, LlmClient& client,
                                 const std::string& model,
                                 const ProjectionPolicy& policy,
                                 std::vector<StageEntry>* log) {
  PromptTemplate tmpl = make_span_rephrase_template(langs.src, langs.tgt);
  SpanRephraseResult result;
  result.spans = std::move(tgt_spans);

  for (std::size_t i = 0; i < result.spans.size() && i < src_spans.size();
       ++i) {
    if (span_in_sentence(result.spans[i], tgt_sentence,
                         policy.fold_width_spans)) {
      continue;
    }
    std::string prompt =
        format_template(tmpl, {{"src_sentence", src_sentence},
                               {"src_span", quote_string(src_spans[i])},
                               {"tgt_sentence", tgt_sentence}});
    std::string content;
    try {
      content =
          client.complete(make_request(model, prompt, policy, "span_rephrase"))
              .content;
    } catch (const LlmError& error) {
      log_entry(log, Stage::kSpanRephrase, model, prompt, "",
                std::string("error: ") + error.what());
      throw;
    }

    auto corrections = extract_spans_field(content);
    std::string corrected =
        (corrections && !corrections->empty()) ? corrections->front() : "";
    if (!corrected.empty() &&
        span_in_sentence(corrected, tgt_sentence, policy.fold_width_spans)) {
      result.spans[i] = corrected;
      log_entry(log, Stage::kSpanRephrase, model, prompt, content, "ok");
    } else {
      result.flag = true;
      log_entry(log, Stage::kSpanRephrase, model, prompt, content,
                "error: correction-missing-from-sentence");
    }
  }
  return result;
}

std::optional<std::string> sentence_rephrase(
    const std::vector<std::string>& tgt_spans, const std::string& src_sentence,
    const LangPair& langs, LlmClient& client, const std::string& model,
    const ProjectionPolicy& policy, std::vector<StageEntry>* log) {
  PromptTemplate tmpl = make_sentence_rephrase_template(langs.src, langs.tgt);
  std::string prompt =
      format_template(tmpl, {{"src_sentence", src_sentence},
                             {"tgt_lang_spans", join_quoted(tgt_spans)}});
  std::string content;
  try {
    content =
        client.complete(make_request(model, prompt, policy, "sentence_rephrase"))
            .content;
  } catch (const LlmError& error) {
    log_entry(log, Stage::kSentenceRephrase, model, prompt, "",
              std::string("error: ") + error.what());
    throw;
  }

  std::string candidate;
  if (auto labeled = extract_sentence_field(content)) {
    candidate = *labeled;
  } else {
    candidate = trim(content);
    if (candidate.size() >= 2 && candidate.front() == '"' &&
        candidate.back() == '"') {
      candidate = candidate.substr(1, candidate.size() - 2);
    }
  }
  // The refusal marker may arrive bare, quoted, or wrapped in prose.
  if (candidate.empty() || content.find(kRefusalMarker) != std::string::npos) {
    log_entry(log, Stage::kSentenceRephrase, model, prompt, content,
              "error: modification-failure");
    return std::nullopt;
  }
  log_entry(log, Stage::kSentenceRephrase, model, prompt, content, "ok");
  return candidate;
}

// --- Sample and corpus orchestration ------------------------------------------

namespace {

std::optional<SpanSample> run_attempt(const SpanSample& src,
                                      const LangPair& langs, LlmClient& client,
                                      const std::string& model,
                                      const ProjectionPolicy& policy,
                                      std::vector<StageEntry>& log) {
  auto joint = joint_translate(src, langs, client, model, policy, &log);
  if (!joint) return std::nullopt;

  std::vector<std::string> src_texts;
  src_texts.reserve(src.spans.size());
  for (const SpanAnnotation& span : src.spans) src_texts.push_back(span.text);

  SpanRephraseResult rephrased =
      span_rephrase(src.sentence, src_texts, joint->spans, joint->sentence,
                    langs, client, model, policy, &log);

  std::string tgt_sentence = joint->sentence;
  if (rephrased.flag) {
    auto rewritten = sentence_rephrase(rephrased.spans, src.sentence, langs,
                                       client, model, policy, &log);
    if (rewritten) tgt_sentence = *rewritten;
  }

  SpanSample target;
  target.id = src.id;
  target.language = langs.tgt;
  target.sentence = std::move(tgt_sentence);
  for (std::size_t i = 0; i < rephrased.spans.size(); ++i) {
    SpanAnnotation span;
    span.text = rephrased.spans[i];
    span.type = i < src.spans.size() ? src.spans[i].type : "";
    target.spans.push_back(std::move(span));
  }
  return target;
}

// Rewrites spans to their raw surface forms and resolves offsets; false when
// some span is missing from the sentence.
bool finalize_target(SpanSample& target, bool fold_width) {
  for (SpanAnnotation& span : target.spans) {
    auto surface = find_span_surface(span.text, target.sentence, fold_width);
    if (!surface) return false;
    span.text = *surface;
  }
  std::vector<utf8::Interval> used;
  for (SpanAnnotation& span : target.spans) {
    auto interval = resolve_offsets(span.text, target.sentence, used);
    if (interval) {
      used.push_back(*interval);
      span.start = interval->start;
    }
  }
  return true;
}

}  // namespace

ProjectionRecord project_sample(const SpanSample& src, const LangPair& langs,
                                LlmClient& client,
                                const ProjectionPolicy& policy) {
  ProjectionRecord record;
  record.source = src;
  if (record.source.language.empty()) record.source.language = langs.src;

  int total_attempts = 1;
  if (!policy.fallback_model.empty() && policy.failover_attempts > 0) {
    total_attempts += policy.failover_attempts;
  }

  try {
    for (int attempt = 0; attempt < total_attempts; ++attempt) {
      std::string model =
          attempt == 0 ? policy.primary_model : policy.fallback_model;
      if (attempt > 0) {
        record.stage_log.push_back(StageEntry{
            Stage::kFailover, model, "", "",
            "rerun pipeline with fallback model"});
      }
      auto target =
          run_attempt(src, langs, client, model, policy, record.stage_log);
      if (target) {
        record.target = target;
        if (finalize_target(*record.target, policy.fold_width_spans)) {
          record.status = RecordStatus::kOk;
          return record;
        }
      }
    }
    record.status = RecordStatus::kNeedsReview;
  } catch (const LlmError&) {
    // Attempt details are already in the stage log.
    record.status = RecordStatus::kFailed;
  }
  return record;
}

ProjectionOutcome project_corpus(const std::vector<SpanSample>& corpus,
                                 const LangPair& langs, LlmClient& client,
                                 const ProjectionPolicy& policy) {
  const std::size_t n = corpus.size();
  std::vector<std::optional<ProjectionRecord>> slots(n);
  std::vector<bool> from_cache(n, false);

  const bool checkpointing = !policy.checkpoint_path.empty();
  if (checkpointing && std::filesystem::exists(policy.checkpoint_path)) {
    std::map<std::string, ProjectionRecord> cached;
    for (ProjectionRecord& record : read_record_jsonl(policy.checkpoint_path)) {
      if (record.status == RecordStatus::kOk) {
        cached[record.source.id] = std::move(record);  // last one wins
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto it = cached.find(corpus[i].id);
      if (it != cached.end()) {
        slots[i] = it->second;
        from_cache[i] = true;
      }
    }
  }

  std::ofstream checkpoint_out;
  if (checkpointing) {
    checkpoint_out.open(policy.checkpoint_path, std::ios::app);
    if (!checkpoint_out) {
      throw JsonlError("cannot open checkpoint for append: " +
                       policy.checkpoint_path);
    }
  }
  std::mutex flush_mutex;
  std::size_t next_flush = 0;
  auto flush_ready = [&] {
    while (next_flush < n && slots[next_flush].has_value()) {
      if (checkpointing && !from_cache[next_flush]) {
        checkpoint_out << record_to_json_line(*slots[next_flush]) << "\n";
        checkpoint_out.flush();
      }
      ++next_flush;
    }
  };
  {
    std::lock_guard lock(flush_mutex);
    flush_ready();  // cached prefix
  }

  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    while (true) {
      std::size_t index = cursor.fetch_add(1);
      if (index >= n) return;
      if (from_cache[index]) continue;
      ProjectionRecord record;
      try {
        record = project_sample(corpus[index], langs, client, policy);
      } catch (const std::exception& e) {
        record.source = corpus[index];
        record.status = RecordStatus::kFailed;
        record.stage_log.push_back(StageEntry{Stage::kJoint, "", "", "",
                                              std::string("error: ") + e.what()});
      }
      std::lock_guard lock(flush_mutex);
      slots[index] = std::move(record);
      flush_ready();
    }
  };

  int worker_count = std::max(1, policy.concurrency);
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(worker_count);
    for (int i = 0; i < worker_count; ++i) threads.emplace_back(worker);
    for (std::thread& thread : threads) thread.join();
  }

  ProjectionOutcome outcome;
  outcome.records.reserve(n);
  std::size_t faithful = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ProjectionRecord& record = *slots[i];
    if (is_faithful(record)) ++faithful;
    if (record.status == RecordStatus::kNeedsReview) {
      outcome.review_export.push_back(record);
    }
    outcome.records.push_back(std::move(record));
  }
  if (n > 0) {
    outcome.faithfulness =
        static_cast<double>(faithful) / static_cast<double>(n);
  }
  return outcome;
}

}  // namespace xlie
