#include "xlie/metrics.hpp"

#include <algorithm>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"

using namespace xlie;

namespace {

ExtractionInstance entity(const std::string& type, const std::string& text,
                          std::size_t start) {
  ExtractionInstance inst;
  inst.concept_id = type;
  Slot slot;
  slot.name = "mention";
  slot.kind = SlotKind::kSpan;
  slot.span.text = text;
  slot.span.offset = utf8::Interval{start, start + utf8::length(text)};
  inst.slots.push_back(std::move(slot));
  return inst;
}

Sample flat_sample(const std::string& id,
                   std::vector<ExtractionInstance> instances) {
  Sample sample;
  sample.id = id;
  sample.sentence = "synthetic";
  sample.instances = std::move(instances);
  return sample;
}

ExtractionInstance relation(const std::string& type, ExtractionInstance subj,
                            ExtractionInstance obj) {
  ExtractionInstance rel;
  rel.concept_id = type;
  Slot subject{"subject", SlotKind::kRef, {}, {std::move(subj)}};
  Slot object{"object", SlotKind::kRef, {}, {std::move(obj)}};
  rel.slots.push_back(std::move(subject));
  rel.slots.push_back(std::move(object));
  return rel;
}

ExtractionInstance event_with_args(
    const std::string& type, const std::string& trigger, std::size_t tstart,
    std::vector<std::tuple<std::string, std::string, std::size_t>> args) {
  ExtractionInstance event;
  event.concept_id = type;
  Slot trig{"trigger", SlotKind::kSpan, {trigger, utf8::Interval{tstart, tstart + utf8::length(trigger)}}, {}};
  event.slots.push_back(std::move(trig));
  for (auto& [role, text, start] : args) {
    Slot slot{role, SlotKind::kSpan, {text, utf8::Interval{start, start + utf8::length(text)}}, {}};
    event.slots.push_back(std::move(slot));
  }
  return event;
}

}  // namespace

TEST_CASE("identical corpora score 1.0 on every task") {
  std::vector<Sample> ner = {
      flat_sample("a", {entity("PER", "Steve", 0), entity("ORG", "Apple", 20)})};
  CHECK(score_ner(ner, ner).f1 == 1.0);
  CHECK(score_ed(ner, ner).f1 == 1.0);

  std::vector<Sample> re = {flat_sample(
      "a", {relation("WorkFor", entity("PER", "Steve", 0),
                     entity("ORG", "Apple", 20))})};
  CHECK(score_re(re, re).f1 == 1.0);

  std::vector<Sample> eae = {flat_sample(
      "a", {event_with_args("Attack", "war", 0, {{"target", "city", 4}})})};
  CHECK(score_eae(eae, eae).f1 == 1.0);
}

TEST_CASE("NER hand-checked card: 3 gold, 2 correct, 1 wrong type") {
  std::vector<Sample> gold = {flat_sample("a", {entity("PER", "Steve", 0),
                                                entity("ORG", "Apple", 10),
                                                entity("LOC", "Berlin", 20)})};
  std::vector<Sample> pred = {flat_sample("a", {entity("PER", "Steve", 0),
                                                entity("ORG", "Apple", 10),
                                                entity("GPE", "Berlin", 20)})};
  ScoreCard card = score_ner(pred, gold);
  CHECK(card.true_positives == 2);
  CHECK(card.predicted_count == 3);
  CHECK(card.gold_count == 3);
  CHECK(card.precision == 2.0 / 3.0);
  CHECK(card.recall == 2.0 / 3.0);
  CHECK(card.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("empty predictions against nonempty gold score zero") {
  std::vector<Sample> gold = {flat_sample("a", {entity("PER", "Steve", 0)})};
  std::vector<Sample> pred = {flat_sample("a", {})};
  ScoreCard card = score_ner(pred, gold);
  CHECK(card.f1 == 0.0);
  CHECK(card.precision == 0.0);
  CHECK(card.recall == 0.0);
}

TEST_CASE("RE: off-by-one object span counts as wrong") {
  std::vector<Sample> gold = {flat_sample(
      "a", {relation("WorkFor", entity("PER", "Steve", 0),
                     entity("ORG", "Apple", 20))})};
  std::vector<Sample> pred = {flat_sample(
      "a", {relation("WorkFor", entity("PER", "Steve", 0),
                     entity("ORG", "Apple", 21))})};
  ScoreCard card = score_re(pred, gold);
  CHECK(card.true_positives == 0);
  CHECK(card.f1 == 0.0);
}

TEST_CASE("RE hand-checked card: both gold found plus one hallucination") {
  std::vector<Sample> gold = {flat_sample(
      "a", {relation("WorkFor", entity("PER", "Steve", 0),
                     entity("ORG", "Apple", 20)),
            relation("LiveIn", entity("PER", "Steve", 0),
                     entity("LOC", "SF", 30))})};
  std::vector<Sample> pred = gold;
  pred[0].instances.push_back(relation("WorkFor", entity("PER", "Tim", 40),
                                       entity("ORG", "Apple", 20)));
  ScoreCard card = score_re(pred, gold);
  CHECK(card.true_positives == 2);
  CHECK(card.predicted_count == 3);
  CHECK(card.gold_count == 2);
  CHECK(card.precision == 2.0 / 3.0);
  CHECK(card.recall == 1.0);
  CHECK(card.f1 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("ED trigger+type matching") {
  std::vector<Sample> gold = {flat_sample("a", {entity("Attack", "war", 0),
                                                entity("Move", "went", 10)})};
  std::vector<Sample> pred = {flat_sample("a", {entity("Attack", "war", 0),
                                                entity("Attack", "went", 10)})};
  ScoreCard card = score_ed(pred, gold);
  CHECK(card.true_positives == 1);
  CHECK(card.predicted_count == 2);
  CHECK(card.gold_count == 2);
}

TEST_CASE("EAE scores argument units under gold event conditioning") {
  std::vector<Sample> gold = {flat_sample(
      "a", {event_with_args("Attack", "war", 0,
                            {{"agent", "army", 4}, {"target", "city", 9}})})};
  SUBCASE("wrong role") {
    std::vector<Sample> pred = {flat_sample(
        "a", {event_with_args("Attack", "war", 0,
                              {{"agent", "army", 4}, {"place", "city", 9}})})};
    ScoreCard card = score_eae(pred, gold);
    CHECK(card.true_positives == 1);
    CHECK(card.predicted_count == 2);
    CHECK(card.gold_count == 2);
  }
  SUBCASE("wrong trigger disqualifies all arguments") {
    std::vector<Sample> pred = {flat_sample(
        "a", {event_with_args("Attack", "fight", 14,
                              {{"agent", "army", 4}, {"target", "city", 9}})})};
    ScoreCard card = score_eae(pred, gold);
    CHECK(card.true_positives == 0);
    CHECK(card.predicted_count == 2);
  }
}

TEST_CASE("duplicate predictions deduplicate before matching") {
  std::vector<Sample> gold = {flat_sample("a", {entity("PER", "Steve", 0)})};
  std::vector<Sample> pred = {flat_sample(
      "a", {entity("PER", "Steve", 0), entity("PER", "Steve", 0)})};
  ScoreCard card = score_ner(pred, gold);
  CHECK(card.true_positives == 1);
  CHECK(card.predicted_count == 1);
  CHECK(card.f1 == 1.0);
}

TEST_CASE("unresolved prediction offsets never match but still count") {
  ExtractionInstance ghost;
  ghost.concept_id = "PER";
  Slot slot{"mention", SlotKind::kSpan, {"Ghost", std::nullopt}, {}};
  ghost.slots.push_back(slot);

  std::vector<Sample> gold = {flat_sample("a", {entity("PER", "Steve", 0)})};
  std::vector<Sample> pred = {flat_sample("a", {entity("PER", "Steve", 0), ghost})};
  ScoreCard card = score_ner(pred, gold);
  CHECK(card.true_positives == 1);
  CHECK(card.predicted_count == 2);
}

TEST_CASE("misaligned corpora are an error") {
  std::vector<Sample> gold = {flat_sample("a", {}), flat_sample("b", {})};
  std::vector<Sample> missing = {flat_sample("a", {})};
  CHECK_THROWS_AS(score_ner(missing, gold), MetricsError);

  std::vector<Sample> stranger = {flat_sample("a", {}), flat_sample("c", {})};
  CHECK_THROWS_AS(score_ner(stranger, gold), MetricsError);

  std::vector<Sample> duplicate = {flat_sample("a", {}), flat_sample("a", {})};
  CHECK_THROWS_AS(score_ner(duplicate, gold), MetricsError);
}

TEST_CASE("sample and instance order never change the card") {
  testgen::Rng rng(5);
  for (int round = 0; round < 20; ++round) {
    oracle::CorpusPair corpus = oracle::random_corpus(rng, oracle::Task::kNer);
    ScoreCard base = score_ner(corpus.pred, corpus.gold);

    std::mt19937_64 shuffle_rng(round);
    oracle::CorpusPair shuffled = corpus;
    std::shuffle(shuffled.pred.begin(), shuffled.pred.end(), shuffle_rng);
    std::shuffle(shuffled.gold.begin(), shuffled.gold.end(), shuffle_rng);
    for (Sample& sample : shuffled.pred) {
      std::shuffle(sample.instances.begin(), sample.instances.end(),
                   shuffle_rng);
    }
    ScoreCard permuted = score_ner(shuffled.pred, shuffled.gold);
    CHECK(base.true_positives == permuted.true_positives);
    CHECK(base.predicted_count == permuted.predicted_count);
    CHECK(base.gold_count == permuted.gold_count);
  }
}

TEST_CASE("adding a correct prediction never lowers recall; adding an "
          "incorrect one never raises precision") {
  testgen::Rng rng(31);
  for (int round = 0; round < 20; ++round) {
    oracle::CorpusPair corpus = oracle::random_corpus(rng, oracle::Task::kNer, 6);
    if (corpus.gold.empty() || corpus.gold[0].instances.empty()) continue;
    ScoreCard base = score_ner(corpus.pred, corpus.gold);

    oracle::CorpusPair plus_correct = corpus;
    plus_correct.pred[0].instances.push_back(corpus.gold[0].instances[0]);
    ScoreCard improved = score_ner(plus_correct.pred, plus_correct.gold);
    CHECK(improved.recall >= base.recall);

    oracle::CorpusPair plus_wrong = corpus;
    plus_wrong.pred[0].instances.push_back(entity("Nonsense", "zz", 9999));
    ScoreCard worsened = score_ner(plus_wrong.pred, plus_wrong.gold);
    CHECK(worsened.precision <= base.precision);
  }
}

TEST_CASE("scorers agree with the brute-force oracle on random corpora") {
  testgen::Rng rng(77);
  for (int round = 0; round < 50; ++round) {
    oracle::Task task = static_cast<oracle::Task>(round % 4);
    oracle::CorpusPair corpus = oracle::random_corpus(rng, task);
    oracle::Counts expected =
        oracle::score_corpus(task, corpus.pred, corpus.gold);
    ScoreCard card;
    switch (task) {
      case oracle::Task::kNer:
        card = score_ner(corpus.pred, corpus.gold);
        break;
      case oracle::Task::kRe:
        card = score_re(corpus.pred, corpus.gold);
        break;
      case oracle::Task::kEd:
        card = score_ed(corpus.pred, corpus.gold);
        break;
      case oracle::Task::kEae:
        card = score_eae(corpus.pred, corpus.gold);
        break;
    }
    CHECK(card.true_positives == expected.tp);
    CHECK(card.predicted_count == expected.predicted);
    CHECK(card.gold_count == expected.gold);
  }
}

TEST_CASE("faithfulness ratio over projection records") {
  auto record = [](const std::string& sentence,
                   std::vector<std::string> spans, bool with_target = true) {
    ProjectionRecord rec;
    rec.source.id = "s";
    rec.source.sentence = "src";
    if (with_target) {
      SpanSample target;
      target.sentence = sentence;
      for (const std::string& text : spans) {
        target.spans.push_back(SpanAnnotation{text, "T", std::nullopt});
      }
      rec.target = target;
      rec.status = RecordStatus::kOk;
    }
    return rec;
  };

  SUBCASE("all spans present -> 1.0") {
    std::vector<ProjectionRecord> records = {
        record("欧盟拒绝德国呼吁。", {"欧盟", "德国"}),
        record("plain sentence", {})};
    CHECK(score_faithfulness(records) == 1.0);
  }
  SUBCASE("93 of 100 -> 0.93") {
    std::vector<ProjectionRecord> records;
    for (int i = 0; i < 93; ++i) records.push_back(record("好的 span", {"span"}));
    for (int i = 0; i < 7; ++i) records.push_back(record("好的", {"missing"}));
    CHECK(score_faithfulness(records) == 0.93);
  }
  SUBCASE("one missing span out of n records") {
    std::vector<ProjectionRecord> records;
    for (int i = 0; i < 4; ++i) records.push_back(record("ok span", {"span"}));
    records.push_back(record("ok", {"span"}));
    CHECK(score_faithfulness(records) == 4.0 / 5.0);
  }
  SUBCASE("missing target counts as unfaithful") {
    std::vector<ProjectionRecord> records = {record("x", {}, false)};
    CHECK(score_faithfulness(records) == 0.0);
  }
  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(score_faithfulness({}), MetricsError);
  }
}
