// Command line front end for the cross-lingual IE toolkit: schema rendering,
// instruction-tuning data construction, completion parsing, label projection,
// description generation, and scoring. Machine-readable results go to stdout,
// logs and human-readable reports to stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xlie/aligndata.hpp"
#include "xlie/codegen.hpp"
#include "xlie/descriptions.hpp"
#include "xlie/jsonl.hpp"
#include "xlie/llm.hpp"
#include "xlie/metrics.hpp"
#include "xlie/ontology.hpp"
#include "xlie/parser.hpp"
#include "xlie/projection.hpp"

namespace {

using nlohmann::ordered_json;
using namespace xlie;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_input_file(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw UsageError("input file not found: " + path);
  }
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : fallback;
}

std::shared_ptr<LlmClient> make_client(const std::string& base_url_flag,
                                       const ClientPolicy& policy,
                                       const std::string& audit_path) {
  std::string base_url = base_url_flag.empty()
                             ? env_or(kBaseUrlEnv, "")
                             : base_url_flag;
  if (base_url.empty()) {
    throw UsageError(std::string("no endpoint configured: pass --base-url or "
                                 "set ") +
                     kBaseUrlEnv);
  }
  std::string api_key = env_or(kApiKeyEnv, "");
  auto client = std::make_shared<LlmClient>(
      make_http_transport(base_url, api_key), policy);
  if (!audit_path.empty()) client->set_audit_path(audit_path);
  return client;
}

void print_usage_report(const LlmClient& client) {
  for (const UsageRow& row : client.usage()) {
    std::cerr << "usage: stage=" << row.tag << " model=" << row.model
              << " calls=" << row.calls << " prompt_tokens="
              << row.prompt_tokens << " completion_tokens="
              << row.completion_tokens << "\n";
  }
}

// --- render-schema ----------------------------------------------------------

struct RenderSchemaArgs {
  std::string ontology_path;
  std::string sentence;
  std::string lang = "en";
  bool no_comments = false;
};

int cmd_render_schema(const RenderSchemaArgs& args, bool /*dry_run*/) {
  require_input_file(args.ontology_path);
  Ontology ontology = load_ontology_file(args.ontology_path);
  std::cout << render_instruction(ontology, args.sentence, !args.no_comments,
                                  args.lang);
  return kExitOk;
}

// --- build-instructions -------------------------------------------------------

struct BuildInstructionsArgs {
  std::string ontology_path;
  std::string input_path;
  std::string output_path;
  std::string dataset;
  bool no_comments = false;
};

int cmd_build_instructions(const BuildInstructionsArgs& args, bool dry_run) {
  require_input_file(args.ontology_path);
  require_input_file(args.input_path);
  Ontology ontology = load_ontology_file(args.ontology_path);
  std::vector<Sample> samples = read_sample_jsonl(args.input_path);

  std::vector<PromptPair> pairs;
  pairs.reserve(samples.size());
  for (const Sample& sample : samples) {
    pairs.push_back(
        build_training_pair(ontology, sample, !args.no_comments, args.dataset));
  }
  if (dry_run) {
    if (!pairs.empty()) std::cout << pairs.front().instruction;
    std::cerr << "dry run: " << pairs.size() << " pairs built, nothing written\n";
    return kExitOk;
  }
  write_prompt_pair_jsonl(args.output_path, pairs);
  std::cerr << "wrote " << pairs.size() << " pairs to " << args.output_path
            << "\n";
  return kExitOk;
}

// --- parse-completions ----------------------------------------------------------

struct ParseCompletionsArgs {
  std::string ontology_path;
  std::string input_path;
  std::string output_path;
};

int cmd_parse_completions(const ParseCompletionsArgs& args, bool dry_run) {
  require_input_file(args.ontology_path);
  require_input_file(args.input_path);
  Ontology ontology = load_ontology_file(args.ontology_path);
  std::vector<CompletionRow> rows = read_completion_jsonl(args.input_path);

  std::vector<std::string> lines;
  lines.reserve(rows.size());
  std::size_t fatal_count = 0;
  for (const CompletionRow& row : rows) {
    ParseReport report = parse_completion(row.completion, ontology, row.sentence);
    if (!report.ok()) ++fatal_count;
    lines.push_back(parse_report_to_json_line(row.id, report));
  }
  if (dry_run) {
    if (!lines.empty()) std::cout << lines.front() << "\n";
    std::cerr << "dry run: " << lines.size() << " completions parsed, nothing written\n";
    return kExitOk;
  }
  write_lines(args.output_path, lines);
  std::cerr << "parsed " << rows.size() << " completions (" << fatal_count
            << " fatal) to " << args.output_path << "\n";
  return kExitOk;
}

// --- project-labels --------------------------------------------------------------

struct ProjectLabelsArgs {
  std::string input_path;
  std::string output_path;
  std::string review_path;
  std::string src_lang = "en";
  std::string tgt_lang = "zh";
  std::string model;
  std::string fallback_model;
  std::string checkpoint_path;
  std::string base_url;
  std::string audit_path;
  int concurrency = 1;
  int retries = 2;
  int max_tokens = 2048;
  bool fold_width = false;
};

int cmd_project_labels(const ProjectLabelsArgs& args, bool dry_run) {
  require_input_file(args.input_path);
  std::vector<SpanSample> corpus = read_span_jsonl(args.input_path);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].id.empty()) corpus[i].id = std::to_string(i);
    if (corpus[i].language.empty()) corpus[i].language = args.src_lang;
  }

  LangPair langs{args.src_lang, args.tgt_lang};
  ProjectionPolicy policy;
  policy.primary_model = args.model;
  policy.fallback_model = args.fallback_model;
  policy.concurrency = args.concurrency;
  policy.max_tokens = args.max_tokens;
  policy.fold_width_spans = args.fold_width;
  policy.checkpoint_path = args.checkpoint_path;

  if (dry_run) {
    if (corpus.empty()) {
      std::cerr << "dry run: empty corpus\n";
      return kExitOk;
    }
    PromptTemplate tmpl = make_joint_template(langs.src, langs.tgt);
    std::vector<std::string> spans;
    for (const SpanAnnotation& span : corpus.front().spans) {
      spans.push_back(quote_string(span.text));
    }
    std::string joined;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (i) joined += ", ";
      joined += spans[i];
    }
    std::cout << format_template(tmpl,
                                 {{"src_sentence", corpus.front().sentence},
                                  {"src_spans", joined}});
    std::cerr << "dry run: no requests issued\n";
    return kExitOk;
  }

  if (args.model.empty()) throw UsageError("--model is required");

  ClientPolicy client_policy;
  client_policy.concurrency = args.concurrency;
  client_policy.max_retries = args.retries;
  client_policy.primary_model = args.model;
  client_policy.fallback_model = args.fallback_model;
  auto client = make_client(args.base_url, client_policy, args.audit_path);

  ProjectionOutcome outcome = project_corpus(corpus, langs, *client, policy);

  if (!args.output_path.empty()) {
    write_record_jsonl(args.output_path, outcome.records);
  }
  if (!args.review_path.empty()) {
    write_record_jsonl(args.review_path, outcome.review_export);
  }

  std::size_t ok = 0, review = 0, failed = 0;
  for (const ProjectionRecord& record : outcome.records) {
    switch (record.status) {
      case RecordStatus::kOk: ++ok; break;
      case RecordStatus::kNeedsReview: ++review; break;
      case RecordStatus::kFailed: ++failed; break;
    }
  }
  ordered_json summary{{"records", outcome.records.size()},
                       {"ok", ok},
                       {"needs_review", review},
                       {"failed", failed}};
  if (outcome.faithfulness) summary["faithfulness"] = *outcome.faithfulness;
  std::cout << summary.dump() << "\n";
  print_usage_report(*client);
  return failed == 0 ? kExitOk : kExitRuntime;
}

// --- gen-descriptions -------------------------------------------------------------

struct GenDescriptionsArgs {
  std::string ontology_path;
  std::string corpus_path;
  std::string out_path;
  std::string model;
  std::string lang = "en";
  std::string concept_filter;
  std::string base_url;
  std::string audit_path;
  std::uint64_t seed = 0;
  int polish_rounds = 20;
  int retries = 2;
};

int cmd_gen_descriptions(const GenDescriptionsArgs& args, bool dry_run) {
  require_input_file(args.ontology_path);
  require_input_file(args.corpus_path);
  Ontology ontology = load_ontology_file(args.ontology_path);
  std::vector<Sample> corpus = read_sample_jsonl(args.corpus_path);

  if (dry_run) {
    for (const Concept& concept_def : ontology.concepts()) {
      if (!args.concept_filter.empty() &&
          concept_def.canonical_id != args.concept_filter) {
        continue;
      }
      std::vector<std::string> pool = instance_strings(corpus, concept_def);
      if (pool.empty()) continue;
      if (pool.size() > 10) pool.resize(10);
      std::cout << description_init_prompt(concept_def.canonical_id, pool);
      break;
    }
    std::cerr << "dry run: no requests issued\n";
    return kExitOk;
  }

  if (args.model.empty()) throw UsageError("--model is required");
  ClientPolicy client_policy;
  client_policy.max_retries = args.retries;
  client_policy.primary_model = args.model;
  auto client = make_client(args.base_url, client_policy, args.audit_path);

  std::vector<Concept> concepts = ontology.concepts();
  std::size_t generated = 0;
  for (Concept& concept_def : concepts) {
    if (!args.concept_filter.empty() &&
        concept_def.canonical_id != args.concept_filter) {
      continue;
    }
    if (instance_strings(corpus, concept_def).empty()) {
      std::cerr << "skipping " << concept_def.canonical_id
                << ": no corpus instances\n";
      continue;
    }
    DescriptionDraft draft = init_description(concept_def, corpus, *client,
                                              args.model, args.seed);
    draft = polish_description(std::move(draft), corpus, concept_def, *client,
                               args.model, args.seed + 1,
                               static_cast<std::size_t>(args.polish_rounds));
    concept_def.descriptions[args.lang] = draft.text;
    ++generated;
    std::cerr << concept_def.canonical_id << ": " << draft.text << "\n";
  }

  Ontology updated(ontology.task_kind(), std::move(concepts));
  std::string out_path =
      args.out_path.empty() ? args.ontology_path : args.out_path;
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw JsonlError("cannot write ontology config: " + out_path);
  out << save_ontology(updated);
  std::cerr << "wrote " << generated << " descriptions to " << out_path << "\n";
  print_usage_report(*client);
  return kExitOk;
}

// --- build-alignment-data ------------------------------------------------------------

struct BuildAlignmentArgs {
  std::string records_path;
  std::string src_ontology_path;
  std::string tgt_ontology_path;
  std::string output_path;
  std::string directions = "both";
  std::string dataset;
  bool no_comments = false;
};

int cmd_build_alignment(const BuildAlignmentArgs& args, bool dry_run) {
  require_input_file(args.records_path);
  require_input_file(args.src_ontology_path);
  require_input_file(args.tgt_ontology_path);
  if (args.directions != "both" && args.directions != "one") {
    throw UsageError("--directions must be both or one");
  }
  Ontology src_ontology = load_ontology_file(args.src_ontology_path);
  Ontology tgt_ontology = load_ontology_file(args.tgt_ontology_path);
  std::vector<ProjectionRecord> records = read_record_jsonl(args.records_path);

  std::vector<AlignedPair> pairs = assemble_parallel_dataset(
      records,
      args.directions == "both" ? Directions::kBoth : Directions::kOne);

  // All records in one checkpoint share a direction; reversed pairs swap the
  // two schemas.
  std::string forward_lang =
      records.empty() ? std::string() : records.front().source.language;

  std::vector<PromptPair> out;
  out.reserve(pairs.size());
  for (const AlignedPair& pair : pairs) {
    bool forward = pair.direction.first == forward_lang;
    const Ontology& src_onto = forward ? src_ontology : tgt_ontology;
    const Ontology& tgt_onto = forward ? tgt_ontology : src_ontology;
    out.push_back(build_alignment_sample(pair, src_onto, tgt_onto,
                                         !args.no_comments, args.dataset));
    if (dry_run) break;
  }

  if (dry_run) {
    if (!out.empty()) std::cout << out.front().instruction;
    std::cerr << "dry run: " << pairs.size()
              << " pairs assembled, nothing written\n";
    return kExitOk;
  }
  write_prompt_pair_jsonl(args.output_path, out);
  std::cerr << "wrote " << out.size() << " alignment samples to "
            << args.output_path << "\n";
  return kExitOk;
}

// --- evaluate ----------------------------------------------------------------------

struct EvaluateArgs {
  std::string task = "ner";
  std::string gold_path;
  std::string pred_path;
};

int cmd_evaluate(const EvaluateArgs& args, bool /*dry_run*/) {
  require_input_file(args.gold_path);
  require_input_file(args.pred_path);
  std::vector<Sample> gold = read_sample_jsonl(args.gold_path);
  std::vector<Sample> pred = read_sample_jsonl(args.pred_path);
  for (Sample& sample : gold) resolve_sample_offsets(sample);
  for (Sample& sample : pred) resolve_sample_offsets(sample);

  ScoreCard card;
  if (args.task == "ner") {
    card = score_ner(pred, gold);
  } else if (args.task == "re") {
    card = score_re(pred, gold);
  } else if (args.task == "ed") {
    card = score_ed(pred, gold);
  } else if (args.task == "eae") {
    card = score_eae(pred, gold);
  } else {
    throw UsageError("--task must be one of ner, re, ed, eae");
  }

  ordered_json report{{"task", args.task},
                      {"true_positives", card.true_positives},
                      {"predicted", card.predicted_count},
                      {"gold", card.gold_count},
                      {"precision", card.precision},
                      {"recall", card.recall},
                      {"f1", card.f1}};
  std::cout << report.dump() << "\n";
  std::cerr << "task = " << args.task << "\n"
            << "tp/pred/gold = " << card.true_positives << "/"
            << card.predicted_count << "/" << card.gold_count << "\n"
            << "precision = " << card.precision << "\n"
            << "recall = " << card.recall << "\n"
            << "f1 = " << card.f1 << "\n";
  return kExitOk;
}

// --- faithfulness ---------------------------------------------------------------------

struct FaithfulnessArgs {
  std::string records_path;
};

int cmd_faithfulness(const FaithfulnessArgs& args, bool /*dry_run*/) {
  require_input_file(args.records_path);
  std::vector<ProjectionRecord> records = read_record_jsonl(args.records_path);
  double score = score_faithfulness(records);
  std::size_t faithful = 0;
  for (const ProjectionRecord& record : records) {
    if (is_faithful(record)) ++faithful;
  }
  ordered_json report{{"faithfulness", score},
                      {"records", records.size()},
                      {"faithful", faithful}};
  std::cout << report.dump() << "\n";
  std::cerr << "faithfulness = " << score << " (" << faithful << "/"
            << records.size() << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual IE toolkit: code-prompt schemas, completion "
               "parsing, label projection, and span-offset scoring"};
  app.require_subcommand(1);
  bool dry_run = false;
  app.add_flag("--dry-run", dry_run,
               "Print the first formatted prompt/artifact and exit without "
               "calling any model or writing outputs");

  RenderSchemaArgs render_args;
  CLI::App* render = app.add_subcommand(
      "render-schema", "Render the schema code prompt for an ontology");
  render->add_option("--ontology", render_args.ontology_path, "Ontology config")
      ->required();
  render->add_option("--sentence", render_args.sentence, "Sentence to bind");
  render->add_option("--lang", render_args.lang, "Description language");
  render->add_flag("--no-comments", render_args.no_comments,
                   "Omit class comment blocks");

  BuildInstructionsArgs build_args;
  CLI::App* build = app.add_subcommand(
      "build-instructions", "Build instruction-tuning pairs from a corpus");
  build->add_option("--ontology", build_args.ontology_path, "Ontology config")
      ->required();
  build->add_option("--input", build_args.input_path, "Sample JSONL")
      ->required();
  build->add_option("--output", build_args.output_path, "PromptPair JSONL");
  build->add_option("--dataset", build_args.dataset, "Dataset id for meta");
  build->add_flag("--no-comments", build_args.no_comments,
                  "Omit class comment blocks");

  ParseCompletionsArgs parse_args;
  CLI::App* parse = app.add_subcommand(
      "parse-completions", "Parse model completions into typed extractions");
  parse->add_option("--ontology", parse_args.ontology_path, "Ontology config")
      ->required();
  parse->add_option("--input", parse_args.input_path,
                    "JSONL of {id, sentence, completion}")
      ->required();
  parse->add_option("--output", parse_args.output_path, "ParseReport JSONL");

  ProjectLabelsArgs project_args;
  CLI::App* project = app.add_subcommand(
      "project-labels", "Run the three-stage label projection pipeline");
  project->add_option("--input", project_args.input_path, "Span-sample JSONL")
      ->required();
  project->add_option("--output", project_args.output_path, "Record JSONL");
  project->add_option("--review", project_args.review_path,
                      "needs_review export JSONL");
  project->add_option("--src-lang", project_args.src_lang, "Source language");
  project->add_option("--tgt-lang", project_args.tgt_lang, "Target language");
  project->add_option("--model", project_args.model, "Primary model id");
  project->add_option("--fallback-model", project_args.fallback_model,
                      "Stronger model for failover");
  project->add_option("--checkpoint", project_args.checkpoint_path,
                      "Checkpoint JSONL (resume skips ok records)");
  project->add_option("--concurrency", project_args.concurrency,
                      "Worker threads / in-flight request bound");
  project->add_option("--retries", project_args.retries,
                      "Retries per request on transient failures");
  project->add_option("--max-tokens", project_args.max_tokens,
                      "Completion token limit");
  project->add_option("--base-url", project_args.base_url,
                      "Chat-completions endpoint base URL");
  project->add_option("--audit-log", project_args.audit_path,
                      "Append raw request/response JSONL here");
  project->add_flag("--fold-width", project_args.fold_width,
                    "Fold full-width ASCII when checking span presence");

  GenDescriptionsArgs desc_args;
  CLI::App* desc = app.add_subcommand(
      "gen-descriptions", "Generate concept descriptions from the corpus");
  desc->add_option("--ontology", desc_args.ontology_path, "Ontology config")
      ->required();
  desc->add_option("--corpus", desc_args.corpus_path, "Sample JSONL")
      ->required();
  desc->add_option("--out", desc_args.out_path,
                   "Output config path (defaults to --ontology, in place)");
  desc->add_option("--model", desc_args.model, "Model id");
  desc->add_option("--lang", desc_args.lang, "Description language key");
  desc->add_option("--concept", desc_args.concept_filter,
                   "Only this concept id");
  desc->add_option("--seed", desc_args.seed, "Sampling seed");
  desc->add_option("--polish-rounds", desc_args.polish_rounds,
                   "Polish instances to consider");
  desc->add_option("--retries", desc_args.retries, "Transient retry count");
  desc->add_option("--base-url", desc_args.base_url, "Endpoint base URL");
  desc->add_option("--audit-log", desc_args.audit_path, "Audit JSONL path");

  BuildAlignmentArgs align_args;
  CLI::App* align = app.add_subcommand(
      "build-alignment-data",
      "Build translated-instances-prediction tuning samples");
  align->add_option("--records", align_args.records_path,
                    "Projection record/checkpoint JSONL")
      ->required();
  align->add_option("--src-ontology", align_args.src_ontology_path,
                    "Source-language ontology config")
      ->required();
  align->add_option("--tgt-ontology", align_args.tgt_ontology_path,
                    "Target-language ontology config")
      ->required();
  align->add_option("--output", align_args.output_path, "PromptPair JSONL");
  align->add_option("--directions", align_args.directions, "both | one");
  align->add_option("--dataset", align_args.dataset, "Dataset id for meta");
  align->add_flag("--no-comments", align_args.no_comments,
                  "Omit class comment blocks");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score predictions with span-based offset micro-F1");
  evaluate->add_option("--task", eval_args.task, "ner | re | ed | eae")
      ->required();
  evaluate->add_option("--gold", eval_args.gold_path, "Gold sample JSONL")
      ->required();
  evaluate->add_option("--pred", eval_args.pred_path, "Predicted sample JSONL")
      ->required();

  FaithfulnessArgs faith_args;
  CLI::App* faith = app.add_subcommand(
      "faithfulness", "Score projection faithfulness over a record file");
  faith->add_option("--records", faith_args.records_path, "Record JSONL")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      return app.exit(e);
    }
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return kExitValidation;
  }

  try {
    if (render->parsed()) return cmd_render_schema(render_args, dry_run);
    if (build->parsed()) return cmd_build_instructions(build_args, dry_run);
    if (parse->parsed()) return cmd_parse_completions(parse_args, dry_run);
    if (project->parsed()) return cmd_project_labels(project_args, dry_run);
    if (desc->parsed()) return cmd_gen_descriptions(desc_args, dry_run);
    if (align->parsed()) return cmd_build_alignment(align_args, dry_run);
    if (evaluate->parsed()) return cmd_evaluate(eval_args, dry_run);
    if (faith->parsed()) return cmd_faithfulness(faith_args, dry_run);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const OntologyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const MetricsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const JsonlError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const LlmError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
