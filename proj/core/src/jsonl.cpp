#include "xlie/jsonl.hpp"

#include <fstream>

#include "json.hpp"

namespace xlie {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json instance_to_json(const ExtractionInstance& instance);

ordered_json slot_to_json(const Slot& slot) {
  ordered_json out;
  out["name"] = slot.name;
  out["kind"] = slot_kind_name(slot.kind);
  switch (slot.kind) {
    case SlotKind::kSpan:
      out["text"] = slot.span.text;
      if (slot.span.offset) {
        out["start"] = slot.span.offset->start;
        out["end"] = slot.span.offset->end;
      }
      break;
    case SlotKind::kRef:
      out["instance"] = instance_to_json(slot.ref());
      break;
    case SlotKind::kRefList: {
      ordered_json items = ordered_json::array();
      for (const ExtractionInstance& child : slot.children) {
        items.push_back(instance_to_json(child));
      }
      out["instances"] = std::move(items);
      break;
    }
  }
  return out;
}

ordered_json instance_to_json(const ExtractionInstance& instance) {
  ordered_json out;
  out["concept"] = instance.concept_id;
  ordered_json slots = ordered_json::array();
  for (const Slot& slot : instance.slots) slots.push_back(slot_to_json(slot));
  out["slots"] = std::move(slots);
  return out;
}

ExtractionInstance instance_from_json(const ordered_json& node);

Slot slot_from_json(const ordered_json& node) {
  Slot slot;
  slot.name = node.at("name").get<std::string>();
  std::string kind_name = node.value("kind", std::string("span"));
  auto kind = slot_kind_from_name(kind_name);
  if (!kind) throw JsonlError("unknown slot kind \"" + kind_name + "\"");
  slot.kind = *kind;
  switch (slot.kind) {
    case SlotKind::kSpan:
      slot.span.text = node.value("text", std::string());
      if (node.contains("start") && node.contains("end")) {
        slot.span.offset = utf8::Interval{node.at("start").get<std::size_t>(),
                                          node.at("end").get<std::size_t>()};
      }
      break;
    case SlotKind::kRef:
      slot.children.push_back(instance_from_json(node.at("instance")));
      break;
    case SlotKind::kRefList:
      for (const auto& child : node.value("instances", ordered_json::array())) {
        slot.children.push_back(instance_from_json(child));
      }
      break;
  }
  return slot;
}

ExtractionInstance instance_from_json(const ordered_json& node) {
  ExtractionInstance instance;
  instance.concept_id = node.at("concept").get<std::string>();
  for (const auto& slot : node.value("slots", ordered_json::array())) {
    instance.slots.push_back(slot_from_json(slot));
  }
  return instance;
}

ordered_json parse_line(const std::string& line) {
  ordered_json node = ordered_json::parse(line, nullptr, false);
  if (node.is_discarded()) throw JsonlError("invalid JSON: " + line);
  return node;
}

ordered_json span_to_json(const SpanAnnotation& span) {
  ordered_json out;
  out["text"] = span.text;
  out["type"] = span.type;
  if (span.start) out["start"] = *span.start;
  return out;
}

SpanAnnotation span_from_json(const ordered_json& node) {
  SpanAnnotation span;
  span.text = node.at("text").get<std::string>();
  span.type = node.value("type", std::string());
  if (node.contains("start") && !node.at("start").is_null()) {
    span.start = node.at("start").get<std::size_t>();
  }
  return span;
}

ordered_json span_sample_to_json(const SpanSample& sample) {
  ordered_json out;
  out["id"] = sample.id;
  if (!sample.language.empty()) out["lang"] = sample.language;
  out["sentence"] = sample.sentence;
  ordered_json spans = ordered_json::array();
  for (const SpanAnnotation& span : sample.spans) {
    spans.push_back(span_to_json(span));
  }
  out["spans"] = std::move(spans);
  return out;
}

SpanSample span_sample_from_json(const ordered_json& node) {
  SpanSample sample;
  sample.id = node.value("id", std::string());
  sample.language = node.value("lang", std::string());
  sample.sentence = node.at("sentence").get<std::string>();
  for (const auto& span : node.value("spans", ordered_json::array())) {
    sample.spans.push_back(span_from_json(span));
  }
  return sample;
}

template <typename T, typename FromLine>
std::vector<T> read_jsonl_file(const std::string& path, FromLine from_line) {
  std::ifstream in(path);
  if (!in) throw JsonlError("cannot open file: " + path);
  std::vector<T> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      out.push_back(from_line(line));
    } catch (const std::exception& e) {
      throw JsonlError(path + ":" + std::to_string(line_number) + ": " +
                       e.what());
    }
  }
  return out;
}

template <typename T, typename ToLine>
void write_jsonl_file(const std::string& path, const std::vector<T>& items,
                      ToLine to_line) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw JsonlError("cannot write file: " + path);
  for (const T& item : items) out << to_line(item) << "\n";
}

}  // namespace

std::string sample_to_json_line(const Sample& sample) {
  ordered_json out;
  out["id"] = sample.id;
  if (!sample.language.empty()) out["lang"] = sample.language;
  out["sentence"] = sample.sentence;
  ordered_json instances = ordered_json::array();
  for (const ExtractionInstance& instance : sample.instances) {
    instances.push_back(instance_to_json(instance));
  }
  out["instances"] = std::move(instances);
  return out.dump();
}

Sample sample_from_json_line(const std::string& line) {
  ordered_json node = parse_line(line);
  Sample sample;
  sample.id = node.value("id", std::string());
  sample.language = node.value("lang", std::string());
  sample.sentence = node.at("sentence").get<std::string>();
  for (const auto& instance : node.value("instances", ordered_json::array())) {
    sample.instances.push_back(instance_from_json(instance));
  }
  return sample;
}

std::string span_sample_to_json_line(const SpanSample& sample) {
  return span_sample_to_json(sample).dump();
}

SpanSample span_sample_from_json_line(const std::string& line) {
  return span_sample_from_json(parse_line(line));
}

std::string record_to_json_line(const ProjectionRecord& record) {
  ordered_json out;
  out["id"] = record.source.id;
  out["status"] = record_status_name(record.status);
  out["source"] = span_sample_to_json(record.source);
  if (record.target) {
    out["target"] = span_sample_to_json(*record.target);
  } else {
    out["target"] = nullptr;
  }
  ordered_json log = ordered_json::array();
  for (const StageEntry& entry : record.stage_log) {
    log.push_back(ordered_json{{"stage", stage_name(entry.stage)},
                               {"model", entry.model},
                               {"request", entry.request},
                               {"response", entry.response},
                               {"outcome", entry.outcome}});
  }
  out["stage_log"] = std::move(log);
  return out.dump();
}

ProjectionRecord record_from_json_line(const std::string& line) {
  ordered_json node = parse_line(line);
  ProjectionRecord record;
  record.source = span_sample_from_json(node.at("source"));
  if (node.contains("target") && !node.at("target").is_null()) {
    record.target = span_sample_from_json(node.at("target"));
  }
  std::string status_name = node.value("status", std::string("failed"));
  auto status = record_status_from_name(status_name);
  if (!status) throw JsonlError("unknown record status \"" + status_name + "\"");
  record.status = *status;
  for (const auto& entry : node.value("stage_log", ordered_json::array())) {
    StageEntry stage_entry;
    std::string name = entry.value("stage", std::string("joint"));
    auto stage = stage_from_name(name);
    if (!stage) throw JsonlError("unknown stage \"" + name + "\"");
    stage_entry.stage = *stage;
    stage_entry.model = entry.value("model", std::string());
    stage_entry.request = entry.value("request", std::string());
    stage_entry.response = entry.value("response", std::string());
    stage_entry.outcome = entry.value("outcome", std::string());
    record.stage_log.push_back(std::move(stage_entry));
  }
  return record;
}

std::string prompt_pair_to_json_line(const PromptPair& pair) {
  ordered_json out;
  out["instruction"] = pair.instruction;
  out["completion"] = pair.completion;
  out["meta"] = ordered_json{{"dataset", pair.meta.dataset},
                             {"lang", pair.meta.language},
                             {"task", task_kind_name(pair.meta.task)},
                             {"sample_id", pair.meta.sample_id}};
  return out.dump();
}

PromptPair prompt_pair_from_json_line(const std::string& line) {
  ordered_json node = parse_line(line);
  PromptPair pair;
  pair.instruction = node.at("instruction").get<std::string>();
  pair.completion = node.at("completion").get<std::string>();
  if (node.contains("meta")) {
    const auto& meta = node.at("meta");
    pair.meta.dataset = meta.value("dataset", std::string());
    pair.meta.language = meta.value("lang", std::string());
    if (auto task = task_kind_from_name(meta.value("task", std::string()))) {
      pair.meta.task = *task;
    }
    pair.meta.sample_id = meta.value("sample_id", std::string());
  }
  return pair;
}

std::string parse_report_to_json_line(const std::string& id,
                                      const ParseReport& report) {
  ordered_json out;
  out["id"] = id;
  ordered_json instances = ordered_json::array();
  for (const ExtractionInstance& instance : report.instances) {
    instances.push_back(instance_to_json(instance));
  }
  out["instances"] = std::move(instances);
  ordered_json dropped = ordered_json::array();
  for (const DroppedCall& call : report.dropped) {
    dropped.push_back(ordered_json{{"text", call.text}, {"reason", call.reason}});
  }
  out["dropped"] = std::move(dropped);
  if (report.fatal) {
    out["fatal"] = *report.fatal;
  } else {
    out["fatal"] = nullptr;
  }
  ordered_json unresolved = ordered_json::array();
  for (const UnresolvedSpan& span : report.unresolved) {
    unresolved.push_back(ordered_json{{"instance", span.instance_index},
                                      {"slot", span.slot_name},
                                      {"text", span.text}});
  }
  out["unresolved"] = std::move(unresolved);
  return out.dump();
}

CompletionRow completion_row_from_json_line(const std::string& line) {
  ordered_json node = parse_line(line);
  CompletionRow row;
  row.id = node.value("id", std::string());
  row.sentence = node.at("sentence").get<std::string>();
  row.completion = node.at("completion").get<std::string>();
  return row;
}

std::vector<Sample> read_sample_jsonl(const std::string& path) {
  return read_jsonl_file<Sample>(path, sample_from_json_line);
}

void write_sample_jsonl(const std::string& path,
                        const std::vector<Sample>& samples) {
  write_jsonl_file(path, samples, sample_to_json_line);
}

std::vector<SpanSample> read_span_jsonl(const std::string& path) {
  return read_jsonl_file<SpanSample>(path, span_sample_from_json_line);
}

void write_span_jsonl(const std::string& path,
                      const std::vector<SpanSample>& samples) {
  write_jsonl_file(path, samples, span_sample_to_json_line);
}

std::vector<ProjectionRecord> read_record_jsonl(const std::string& path) {
  return read_jsonl_file<ProjectionRecord>(path, record_from_json_line);
}

void write_record_jsonl(const std::string& path,
                        const std::vector<ProjectionRecord>& records) {
  write_jsonl_file(path, records, record_to_json_line);
}

std::vector<CompletionRow> read_completion_jsonl(const std::string& path) {
  return read_jsonl_file<CompletionRow>(path, completion_row_from_json_line);
}

void write_prompt_pair_jsonl(const std::string& path,
                             const std::vector<PromptPair>& pairs) {
  write_jsonl_file(path, pairs, prompt_pair_to_json_line);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw JsonlError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void write_lines(const std::string& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw JsonlError("cannot write file: " + path);
  for (const std::string& line : lines) out << line << "\n";
}

}  // namespace xlie
