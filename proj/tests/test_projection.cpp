#include "xlie/projection.hpp"

#include <atomic>
#include <filesystem>

#include "doctest.h"
#include "xlie/jsonl.hpp"
#include "xlie/metrics.hpp"

using namespace xlie;

namespace {

const char* kJointEnZh =
    R"TPL(Translate the sentence and spans from English to Chinese.

Please follow these guidelines:
1. Translate each span considering the context of the sentence.
2. Ensure the number of spans after translation matches the original number of spans.
3. When outputting spans, ensure only to output the translation of each span.

The following is a few examples:

[English]
"sentence": "The EU rejected Germany's call for a boycott of British lamb."
"spans": ["EU"]

[Chinese]
"sentence": "欧盟拒绝德国呼吁抵制英国羊肉。"
"spans": ["欧盟"]

[English]
"sentence": "FM involves 2 - 4.7% of the general population."
"spans": []

[Chinese]
"sentence": "FM 影响了2 - 4.7% 的普通人群。"
"spans": []

[English]
"sentence": "4000 guests from home and abroad attended the opening ceremony."
"spans": ["home", "abroad"]

[Chinese]
"sentence": "4000名来自国内和国外的嘉宾出席了开幕式。"
"spans": ["国内", "国外"]

Please translate the following sentence and spans:
[English]
"sentence": "{src_sentence}"
"spans": [{src_spans}]

[Chinese]
)TPL";

SpanSample make_source(const std::string& id, const std::string& sentence,
                       std::vector<std::pair<std::string, std::string>> spans) {
  SpanSample sample;
  sample.id = id;
  sample.language = "en";
  sample.sentence = sentence;
  for (auto& [text, type] : spans) {
    sample.spans.push_back(SpanAnnotation{text, type, std::nullopt});
  }
  return sample;
}

ProjectionPolicy basic_policy() {
  ProjectionPolicy policy;
  policy.primary_model = "base-model";
  return policy;
}

ClientPolicy quick_client_policy() {
  ClientPolicy policy;
  policy.max_retries = 0;
  policy.backoff_initial_ms = 0;
  policy.concurrency = 8;
  return policy;
}

std::shared_ptr<LlmClient> scripted(std::vector<MockTransport::Scripted> steps) {
  return make_mock_client(std::move(steps), quick_client_policy());
}

}  // namespace

TEST_CASE("en->zh joint template matches the canonical prompt byte for byte") {
  PromptTemplate tmpl = make_joint_template("en", "zh");
  CHECK(tmpl.name == "joint_translation");
  CHECK(tmpl.body == kJointEnZh);
}

TEST_CASE("en->zh span rephrase template carries the worked example") {
  PromptTemplate tmpl = make_span_rephrase_template("en", "zh");
  CHECK(tmpl.body.find("Please find the Chinese span corresponding to the "
                       "English span in the Chinese sentence.") == 0);
  CHECK(tmpl.body.find("\"sentence\": \"Siemens invested 800 million US "
                       "dollars to complete the electric power plant "
                       "project.\"") != std::string::npos);
  CHECK(tmpl.body.find("\"sentence\": \"西门子投资了8亿美元完成了电力厂项目。\"") !=
        std::string::npos);
  CHECK(tmpl.body.find("\"spans\": [\"美\"]") != std::string::npos);
  CHECK(tmpl.body.rfind("\"spans\":") == tmpl.body.size() - 8);
}

TEST_CASE("sentence rephrase template pins the refusal contract") {
  PromptTemplate tmpl = make_sentence_rephrase_template("en", "zh");
  CHECK(tmpl.body.find("Please translate the following sentence from English "
                       "to Chinese.") == 0);
  CHECK(tmpl.body.find("1. Ensure that the translation includes the following "
                       "spans: [{tgt_lang_spans}].") != std::string::npos);
  CHECK(tmpl.body.find("return \"modification failure\"") != std::string::npos);
}

TEST_CASE("other language pairs substitute names into the same skeleton") {
  PromptTemplate tmpl = make_joint_template("en", "de");
  CHECK(tmpl.body.find("from English to German.") != std::string::npos);
  CHECK(tmpl.body.find("[German]") != std::string::npos);
  // The worked examples are en->zh specific and are omitted elsewhere.
  CHECK(tmpl.body.find("欧盟") == std::string::npos);
  CHECK(language_display_name("xx") == "xx");
}

TEST_CASE("template placeholders are validated") {
  PromptTemplate bad{"joint_translation", "hello {nonsense}"};
  CHECK_THROWS_AS(validate_template(bad), std::invalid_argument);
  PromptTemplate good{"joint_translation", "a {src_sentence} b"};
  CHECK(format_template(good, {{"src_sentence", "X"}}) == "a X b");
}

TEST_CASE("labeled-block extraction is tolerant of surrounding prose") {
  std::string response =
      "Sure, here you go:\n\"sentence\": \"欧盟拒绝了。\"\n\"spans\": [\"欧盟\"]\nDone!";
  CHECK(*extract_sentence_field(response) == "欧盟拒绝了。");
  CHECK(*extract_spans_field(response) == std::vector<std::string>{"欧盟"});

  CHECK(*extract_spans_field("\"spans\": []") == std::vector<std::string>{});
  CHECK(*extract_spans_field("[\"a\", \"b\"]") ==
        std::vector<std::string>{"a", "b"});
  CHECK(*extract_spans_field("\"美\"") == std::vector<std::string>{"美"});
  CHECK(!extract_spans_field("no quotes at all").has_value());
  CHECK(!extract_sentence_field("nothing labeled").has_value());
  CHECK(!extract_spans_field("\"spans\": [\"unterminated").has_value());
}

TEST_CASE("joint translation reproduces the canonical exemplar byte-exactly") {
  auto client = scripted(
      {{"\"sentence\": \"欧盟拒绝德国呼吁抵制英国羊肉。\"\n\"spans\": [\"欧盟\"]"}});
  SpanSample src = make_source(
      "ex1", "The EU rejected Germany's call for a boycott of British lamb.",
      {{"EU", "ORG"}});
  std::vector<StageEntry> log;
  auto result = joint_translate(src, LangPair{"en", "zh"}, *client,
                                "base-model", basic_policy(), &log);
  REQUIRE(result.has_value());
  CHECK(result->sentence == "欧盟拒绝德国呼吁抵制英国羊肉。");
  CHECK(result->spans == std::vector<std::string>{"欧盟"});
  REQUIRE(log.size() == 1);
  CHECK(log[0].stage == Stage::kJoint);
  CHECK(log[0].outcome == "ok");
  CHECK(log[0].request.find("\"sentence\": \"The EU rejected Germany's call "
                            "for a boycott of British lamb.\"") !=
        std::string::npos);
  CHECK(log[0].request.find("\"spans\": [\"EU\"]") != std::string::npos);
}

TEST_CASE("joint translation passes the empty-span exemplar through") {
  auto client = scripted(
      {{"\"sentence\": \"FM 影响了2 - 4.7% 的普通人群。\"\n\"spans\": []"}});
  SpanSample src = make_source(
      "ex2", "FM involves 2 - 4.7% of the general population.", {});
  auto result = joint_translate(src, LangPair{"en", "zh"}, *client,
                                "base-model", basic_policy());
  REQUIRE(result.has_value());
  CHECK(result->sentence == "FM 影响了2 - 4.7% 的普通人群。");
  CHECK(result->spans.empty());
}

TEST_CASE("joint translation rejects span-count mismatches") {
  auto client =
      scripted({{"\"sentence\": \"三个变两个\"\n\"spans\": [\"a\", \"b\"]"}});
  SpanSample src = make_source("ex3", "one two three",
                               {{"one", "T"}, {"two", "T"}, {"three", "T"}});
  std::vector<StageEntry> log;
  auto result = joint_translate(src, LangPair{"en", "zh"}, *client,
                                "base-model", basic_policy(), &log);
  CHECK(!result.has_value());
  REQUIRE(log.size() == 1);
  CHECK(log[0].outcome.find("span-count-mismatch") != std::string::npos);
}

TEST_CASE("joint translation flags unparseable responses") {
  auto client = scripted({{"I refuse to answer in the expected format"}});
  SpanSample src = make_source("ex4", "hello", {});
  std::vector<StageEntry> log;
  auto result = joint_translate(src, LangPair{"en", "zh"}, *client,
                                "base-model", basic_policy(), &log);
  CHECK(!result.has_value());
  CHECK(log[0].outcome.find("unparseable-response") != std::string::npos);
}

TEST_CASE("span rephrase reproduces the US->美 exemplar") {
  auto client = scripted({{"\"spans\": [\"美\"]"}});
  std::vector<StageEntry> log;
  SpanRephraseResult result = span_rephrase(
      "Siemens invested 800 million US dollars to complete the electric power "
      "plant project.",
      {"US"}, {"US"}, "西门子投资了8亿美元完成了电力厂项目。",
      LangPair{"en", "zh"}, *client, "base-model", basic_policy(), &log);
  CHECK(result.spans == std::vector<std::string>{"美"});
  CHECK(!result.flag);
  REQUIRE(log.size() == 1);
  CHECK(log[0].stage == Stage::kSpanRephrase);
  CHECK(log[0].outcome == "ok");
}

TEST_CASE("span rephrase issues zero calls when every span is present") {
  auto client = scripted({});  // any request would throw
  std::vector<StageEntry> log;
  SpanRephraseResult result =
      span_rephrase("src", {"欧盟"}, {"欧盟"}, "欧盟拒绝了。",
                    LangPair{"en", "zh"}, *client, "base-model",
                    basic_policy(), &log);
  CHECK(result.spans == std::vector<std::string>{"欧盟"});
  CHECK(!result.flag);
  CHECK(log.empty());
}

TEST_CASE("span rephrase keeps the original and sets the flag when the "
          "correction is also absent") {
  auto client = scripted({{"\"spans\": [\"不存在\"]"}});
  SpanRephraseResult result =
      span_rephrase("src", {"US"}, {"US"}, "西门子投资了项目。",
                    LangPair{"en", "zh"}, *client, "base-model",
                    basic_policy());
  CHECK(result.spans == std::vector<std::string>{"US"});
  CHECK(result.flag);
}

TEST_CASE("sentence rephrase returns the rewritten sentence") {
  auto labeled = scripted({{"\"sentence\": \"新的句子包含美元。\""}});
  auto result = sentence_rephrase({"美元"}, "src sentence", LangPair{"en", "zh"},
                                  *labeled, "base-model", basic_policy());
  REQUIRE(result.has_value());
  CHECK(*result == "新的句子包含美元。");

  auto raw = scripted({{"直接输出的句子。"}});
  auto raw_result = sentence_rephrase({}, "src", LangPair{"en", "zh"}, *raw,
                                      "base-model", basic_policy());
  REQUIRE(raw_result.has_value());
  CHECK(*raw_result == "直接输出的句子。");
}

TEST_CASE("sentence rephrase treats the refusal marker as a stage error") {
  auto client = scripted({{"modification failure"}});
  std::vector<StageEntry> log;
  auto result = sentence_rephrase({"x"}, "src", LangPair{"en", "zh"}, *client,
                                  "base-model", basic_policy(), &log);
  CHECK(!result.has_value());
  REQUIRE(log.size() == 1);
  CHECK(log[0].outcome.find("modification-failure") != std::string::npos);
}

TEST_CASE("clean stage-1 success leaves exactly one stage entry") {
  auto client = scripted(
      {{"\"sentence\": \"欧盟拒绝德国呼吁抵制英国羊肉。\"\n\"spans\": [\"欧盟\"]"}});
  SpanSample src = make_source("s1", "The EU rejected the call.", {{"EU", "ORG"}});
  ProjectionRecord record =
      project_sample(src, LangPair{"en", "zh"}, *client, basic_policy());
  CHECK(record.status == RecordStatus::kOk);
  REQUIRE(record.stage_log.size() == 1);
  CHECK(record.stage_log[0].stage == Stage::kJoint);
  REQUIRE(record.target.has_value());
  CHECK(record.target->sentence == "欧盟拒绝德国呼吁抵制英国羊肉。");
  REQUIRE(record.target->spans.size() == 1);
  CHECK(record.target->spans[0].text == "欧盟");
  CHECK(record.target->spans[0].type == "ORG");
  CHECK(record.target->spans[0].start == 0);
  CHECK(record.target->language == "zh");
}

TEST_CASE("stage 2 fixing one span logs joint plus span_rephrase") {
  auto client = scripted({{"\"sentence\": \"西门子投资了8亿美元。\"\n\"spans\": [\"US\"]"},
                          {"\"spans\": [\"美\"]"}});
  SpanSample src = make_source("s2", "Siemens invested US dollars.",
                               {{"US", "GPE"}});
  ProjectionRecord record =
      project_sample(src, LangPair{"en", "zh"}, *client, basic_policy());
  CHECK(record.status == RecordStatus::kOk);
  REQUIRE(record.stage_log.size() == 2);
  CHECK(record.stage_log[0].stage == Stage::kJoint);
  CHECK(record.stage_log[1].stage == Stage::kSpanRephrase);
  CHECK(record.target->spans[0].text == "美");
}

TEST_CASE("stage 3 runs only when stage 2 leaves the flag set") {
  // Joint emits a missing span; rephrase fails to fix; sentence rephrase
  // produces a sentence that does contain it.
  auto client = scripted({{"\"sentence\": \"句子没有目标。\"\n\"spans\": [\"美元\"]"},
                          {"\"spans\": [\"还是没有\"]"},
                          {"\"sentence\": \"新句子含有美元了。\""}});
  SpanSample src = make_source("s3", "It cost US dollars.", {{"US dollars", "MON"}});
  ProjectionRecord record =
      project_sample(src, LangPair{"en", "zh"}, *client, basic_policy());
  CHECK(record.status == RecordStatus::kOk);
  REQUIRE(record.stage_log.size() == 3);
  CHECK(record.stage_log[2].stage == Stage::kSentenceRephrase);
  CHECK(record.target->sentence == "新句子含有美元了。");
}

TEST_CASE("scripted all-stage failure with failover ends needs_review") {
  // Two full attempts (primary then fallback), each: joint ok but missing
  // span, failed rephrase, failed sentence rephrase.
  std::vector<MockTransport::Scripted> steps = {
      {"\"sentence\": \"没有。\"\n\"spans\": [\"ghost\"]"},
      {"\"spans\": [\"nope\"]"},
      {"modification failure"},
      {"\"sentence\": \"还是没有。\"\n\"spans\": [\"ghost\"]"},
      {"\"spans\": [\"nope\"]"},
      {"modification failure"}};
  auto transport = std::make_shared<MockTransport>(steps);
  LlmClient client(transport, quick_client_policy());

  ProjectionPolicy policy = basic_policy();
  policy.fallback_model = "strong-model";
  SpanSample src = make_source("s4", "ghost sentence", {{"ghost", "T"}});
  ProjectionRecord record =
      project_sample(src, LangPair{"en", "zh"}, client, policy);

  CHECK(record.status == RecordStatus::kNeedsReview);
  int failovers = 0;
  for (const StageEntry& entry : record.stage_log) {
    if (entry.stage == Stage::kFailover) ++failovers;
  }
  CHECK(failovers == 1);
  // Second pipeline run used the fallback model.
  auto requests = transport->requests();
  REQUIRE(requests.size() == 6);
  CHECK(requests[0].model == "base-model");
  CHECK(requests[3].model == "strong-model");
  CHECK(requests[3].temperature == 0.0);
}

TEST_CASE("no fallback model means no failover entry") {
  auto client = scripted({{"garbage"}});
  SpanSample src = make_source("s5", "x", {});
  ProjectionRecord record =
      project_sample(src, LangPair{"en", "zh"}, *client, basic_policy());
  CHECK(record.status == RecordStatus::kNeedsReview);
  for (const StageEntry& entry : record.stage_log) {
    CHECK(entry.stage != Stage::kFailover);
  }
}

TEST_CASE("ok status implies unit faithfulness") {
  auto client = scripted(
      {{"\"sentence\": \"欧盟拒绝了。\"\n\"spans\": [\"欧盟\"]"}});
  SpanSample src = make_source("s6", "The EU refused.", {{"EU", "ORG"}});
  ProjectionRecord record =
      project_sample(src, LangPair{"en", "zh"}, *client, basic_policy());
  REQUIRE(record.status == RecordStatus::kOk);
  CHECK(score_faithfulness({record}) == 1.0);
}

TEST_CASE("transport-level failure marks the record failed") {
  auto client = scripted({{"", false, true}});  // non-transient fatal
  SpanSample src = make_source("s7", "x", {{"x", "T"}});
  ProjectionRecord record =
      project_sample(src, LangPair{"en", "zh"}, *client, basic_policy());
  CHECK(record.status == RecordStatus::kFailed);
  CHECK(!record.target.has_value());
}

TEST_CASE("width folding is strictly opt-in and rewrites the surface form") {
  SpanSample src = make_source("s8", "US dollars", {{"US", "GPE"}});
  // The translation uses full-width letters; raw matching fails.
  std::vector<MockTransport::Scripted> steps = {
      {"\"sentence\": \"他们用ＵＳ美元。\"\n\"spans\": [\"US\"]"},
      {"\"spans\": [\"不在\"]"},
      {"modification failure"}};

  ProjectionRecord strict = project_sample(
      src, LangPair{"en", "zh"}, *scripted(steps), basic_policy());
  CHECK(strict.status == RecordStatus::kNeedsReview);

  ProjectionPolicy folding = basic_policy();
  folding.fold_width_spans = true;
  ProjectionRecord folded = project_sample(
      src, LangPair{"en", "zh"}, *scripted({steps[0]}), folding);
  CHECK(folded.status == RecordStatus::kOk);
  // Span text now carries the raw sentence surface, so exact faithfulness
  // holds downstream.
  CHECK(folded.target->spans[0].text == "ＵＳ");
  CHECK(score_faithfulness({folded}) == 1.0);
}

namespace {

// Deterministic keyed mock: succeeds for every record, embedding the source
// span back into the target sentence.
std::string keyed_success(const ChatRequest& request) {
  const std::string& prompt = request.messages.front().content;
  if (request.tag != "joint") return "\"spans\": []";
  auto pos = prompt.find("\"sentence\": \"src ");
  std::size_t id_start = pos + 17;
  std::size_t id_end = prompt.find('"', id_start);
  std::string id = prompt.substr(id_start, id_end - id_start);
  return "\"sentence\": \"目标 span-" + id + " 句子\"\n\"spans\": [\"span-" + id +
         "\"]";
}

std::vector<SpanSample> keyed_corpus(int n) {
  std::vector<SpanSample> corpus;
  for (int i = 0; i < n; ++i) {
    std::string id = std::to_string(i);
    corpus.push_back(make_source("id" + id, "src " + id,
                                 {{"span-" + id, "T"}}));
  }
  return corpus;
}

}  // namespace

TEST_CASE("empty corpus produces empty outputs") {
  auto client = scripted({});
  ProjectionOutcome outcome = project_corpus({}, LangPair{"en", "zh"}, *client,
                                             basic_policy());
  CHECK(outcome.records.empty());
  CHECK(!outcome.faithfulness.has_value());
  CHECK(outcome.review_export.empty());
}

TEST_CASE("all-success corpus scores faithfulness 1.0 in input order") {
  auto transport = std::make_shared<CallbackTransport>(keyed_success);
  LlmClient client(transport, quick_client_policy());
  std::vector<SpanSample> corpus = keyed_corpus(10);
  ProjectionOutcome outcome =
      project_corpus(corpus, LangPair{"en", "zh"}, client, basic_policy());
  REQUIRE(outcome.records.size() == 10);
  CHECK(*outcome.faithfulness == 1.0);
  for (int i = 0; i < 10; ++i) {
    CHECK(outcome.records[i].source.id == corpus[i].id);
    CHECK(outcome.records[i].status == RecordStatus::kOk);
  }
}

TEST_CASE("outputs are byte-identical regardless of worker count") {
  std::vector<SpanSample> corpus = keyed_corpus(40);
  auto run = [&](int workers) {
    auto transport = std::make_shared<CallbackTransport>(keyed_success);
    LlmClient client(transport, quick_client_policy());
    ProjectionPolicy policy = basic_policy();
    policy.concurrency = workers;
    ProjectionOutcome outcome =
        project_corpus(corpus, LangPair{"en", "zh"}, client, policy);
    std::string serialized;
    for (const ProjectionRecord& record : outcome.records) {
      serialized += record_to_json_line(record);
      serialized += "\n";
    }
    return serialized;
  };
  std::string sequential = run(1);
  CHECK(run(4) == sequential);
  CHECK(run(9) == sequential);
}

TEST_CASE("a 15-in-10000 mock failure rate exports exactly 15 records") {
  // Failure ids: 0, 667, 1334, ... (15 of 10000).
  auto flaky = [](const ChatRequest& request) -> std::string {
    const std::string& prompt = request.messages.front().content;
    auto pos = prompt.find("\"sentence\": \"src ");
    if (pos != std::string::npos) {
      int id = std::atoi(prompt.c_str() + pos + 17);
      if (id % 667 == 0) {
        if (request.tag == "joint") {
          return "\"sentence\": \"空白\"\n\"spans\": [\"span-" +
                 std::to_string(id) + "\"]";
        }
      }
    }
    if (request.tag == "span_rephrase") return "\"spans\": [\"不在\"]";
    if (request.tag == "sentence_rephrase") return "modification failure";
    return keyed_success(request);
  };
  auto transport = std::make_shared<CallbackTransport>(flaky);
  LlmClient client(transport, quick_client_policy());
  ProjectionPolicy policy = basic_policy();
  policy.concurrency = 8;

  std::vector<SpanSample> corpus = keyed_corpus(10000);
  ProjectionOutcome outcome =
      project_corpus(corpus, LangPair{"en", "zh"}, client, policy);
  CHECK(outcome.review_export.size() == 15);
  CHECK(*outcome.faithfulness == (10000.0 - 15.0) / 10000.0);
}

TEST_CASE("checkpoint resume never re-issues calls for ok records") {
  std::string path = "test_projection_checkpoint.jsonl";
  std::filesystem::remove(path);
  std::vector<SpanSample> corpus = keyed_corpus(8);
  ProjectionPolicy policy = basic_policy();
  policy.checkpoint_path = path;

  {
    auto transport = std::make_shared<CallbackTransport>(keyed_success);
    LlmClient client(transport, quick_client_policy());
    ProjectionOutcome outcome =
        project_corpus(corpus, LangPair{"en", "zh"}, client, policy);
    CHECK(outcome.records.size() == 8);
    CHECK(transport->requests().size() == 8);  // one joint call per record
  }
  {
    auto transport = std::make_shared<CallbackTransport>(keyed_success);
    LlmClient client(transport, quick_client_policy());
    ProjectionOutcome outcome =
        project_corpus(corpus, LangPair{"en", "zh"}, client, policy);
    CHECK(outcome.records.size() == 8);
    CHECK(*outcome.faithfulness == 1.0);
    CHECK(transport->requests().empty());
  }
  std::filesystem::remove(path);
}

TEST_CASE("non-ok records are reprocessed on resume") {
  std::string path = "test_projection_checkpoint_retry.jsonl";
  std::filesystem::remove(path);
  std::vector<SpanSample> corpus = keyed_corpus(6);
  ProjectionPolicy policy = basic_policy();
  policy.checkpoint_path = path;

  auto flaky = [](const ChatRequest& request) -> std::string {
    const std::string& prompt = request.messages.front().content;
    if (prompt.find("src 2") != std::string::npos ||
        prompt.find("span-2") != std::string::npos) {
      return "unusable";
    }
    return keyed_success(request);
  };

  {
    auto transport = std::make_shared<CallbackTransport>(flaky);
    LlmClient client(transport, quick_client_policy());
    ProjectionOutcome outcome =
        project_corpus(corpus, LangPair{"en", "zh"}, client, policy);
    CHECK(outcome.review_export.size() == 1);
  }
  {
    auto transport = std::make_shared<CallbackTransport>(keyed_success);
    LlmClient client(transport, quick_client_policy());
    ProjectionOutcome outcome =
        project_corpus(corpus, LangPair{"en", "zh"}, client, policy);
    CHECK(outcome.review_export.empty());
    for (const ChatRequest& request : transport->requests()) {
      CHECK(request.messages.front().content.find("src 2") !=
            std::string::npos);
    }
    CHECK(!transport->requests().empty());
  }
  std::filesystem::remove(path);
}
