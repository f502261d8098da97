#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "xlie/codegen.hpp"
#include "xlie/parser.hpp"
#include "xlie/projection_types.hpp"
#include "xlie/sample.hpp"

namespace xlie {

class JsonlError : public std::runtime_error {
 public:
  explicit JsonlError(const std::string& what) : std::runtime_error(what) {}
};

// One parse-completions input row.
struct CompletionRow {
  std::string id;
  std::string sentence;
  std::string completion;
};

// Line-level converters (exact field layouts in docs/formats.md).
std::string sample_to_json_line(const Sample& sample);
Sample sample_from_json_line(const std::string& line);

std::string span_sample_to_json_line(const SpanSample& sample);
SpanSample span_sample_from_json_line(const std::string& line);

std::string record_to_json_line(const ProjectionRecord& record);
ProjectionRecord record_from_json_line(const std::string& line);

std::string prompt_pair_to_json_line(const PromptPair& pair);
PromptPair prompt_pair_from_json_line(const std::string& line);

std::string parse_report_to_json_line(const std::string& id,
                                      const ParseReport& report);

CompletionRow completion_row_from_json_line(const std::string& line);

// File helpers; all throw JsonlError with the path and line number.
std::vector<Sample> read_sample_jsonl(const std::string& path);
void write_sample_jsonl(const std::string& path,
                        const std::vector<Sample>& samples);

std::vector<SpanSample> read_span_jsonl(const std::string& path);
void write_span_jsonl(const std::string& path,
                      const std::vector<SpanSample>& samples);

std::vector<ProjectionRecord> read_record_jsonl(const std::string& path);
void write_record_jsonl(const std::string& path,
                        const std::vector<ProjectionRecord>& records);

std::vector<CompletionRow> read_completion_jsonl(const std::string& path);

void write_prompt_pair_jsonl(const std::string& path,
                             const std::vector<PromptPair>& pairs);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path,
                 const std::vector<std::string>& lines);

}  // namespace xlie
