#include "xlie/descriptions.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace xlie {

namespace {

constexpr const char* kInitGuide =
    "# Writing Entity Descriptions\n"
    "\n"
    "## Introduction\n"
    "This guide provides a step-by-step process for writing a clear, "
    "concise, and accurate description of an entity type based on a provided "
    "list of examples. The objective is to generalize the shared "
    "characteristics of the examples without referencing any specific "
    "instance, giving a broad and comprehensive understanding of the entity "
    "type.\n"
    "\n"
    "## Prerequisites\n"
    "Before you begin, make sure you have the following:\n"
    "- **Entity Type**: The name of the entity type that requires a "
    "description.\n"
    "- **Entity List**: A set of examples representing this entity type.\n"
    "- **Basic Description**: While not mandatory, familiarity with the "
    "general concept of the entity type could be beneficial.\n"
    "\n"
    "## Step-by-Step Instructions\n"
    "### Step 1: Begin with the Required Phrase\n"
    "Each description should start with:\n"
    "**\"[Entity Type] refers to\"**\n"
    "This ensures consistency across all descriptions. Replace **[Entity "
    "Type]** with the actual type name.\n"
    "\n"
    "### Step 2: Generalize the Shared Characteristics\n"
    "- Review the **Entity List** to identify common traits among all "
    "examples.\n"
    "- Avoid referring to specific examples directly. Generalize to cover "
    "the entire group.\n"
    "- Example: If the list includes various vehicles (cars, trucks), the "
    "description should focus on common traits such as modes of "
    "transportation designed for movement.\n"
    "\n"
    "### Step 3: Provide Comprehensive Coverage\n"
    "- The description should encapsulate all critical aspects represented "
    "in the example list, accounting for any outliers or unusual cases.\n"
    "    - Example: If the list includes motorized vehicles and "
    "non-motorized bicycles, ensure the description covers both.\n"
    "\n"
    "### Step 4: Output the Description\n"
    "- After completing the description, present it without referencing "
    "explicit examples. It should summarize the entity type in a single, "
    "generalized statement.\n"
    "- If you want to revise the description, output the modified "
    "description in the format.\n"
    "\n"
    "## Conclusion\n"
    "By following these steps, you will create an accurate, clear, and "
    "generalized description of an entity type. Start with the required "
    "phrase, focus on generalization, and keep the language simple yet "
    "precise.\n";

constexpr const char* kPolishGuide =
    "# Evaluating and Revising Entity Description\n"
    "\n"
    "## Introduction\n"
    "This guide provides a systematic approach to evaluate whether a given "
    "description accurately represents the characteristics of an entity "
    "type. If the description is accurate and complete, no revision is "
    "necessary. However, if inaccuracies or omissions exist, revisions are "
    "required to ensure clarity and consistency in classifying entities.\n"
    "\n"
    "## Step-by-Step Instructions\n"
    "### Step 1: Analyze the Entity Type Description\n"
    "- Carefully review the **entity type description** provided.\n"
    "- Example: For the entity type \"Animal,\" the description may include "
    "\"living organisms that move, breathe, and consume organic matter.\"\n"
    "\n"
    "### Step 2: Analyze the Entity\n"
    "- Review the specific entity's characteristics, noting its unique "
    "features.\n"
    "- Example: If the entity is \"dog,\" note traits like \"mammal, "
    "four-legged, domesticated, etc.\"\n"
    "\n"
    "### Step 3: Evaluate the Description's Accuracy and Completeness\n"
    "- Compare the entity type description with the entity's "
    "characteristics.\n"
    "    - Does the description fully encompass the defining features of the "
    "entity?\n"
    "    - Are any characteristics missing or misrepresented?\n"
    "- Check for completeness:\n"
    "    - Does the description cover all essential traits necessary for "
    "classification?\n"
    "- Verify accuracy:\n"
    "    - Are the described attributes factually correct?\n"
    "\n"
    "### Step 4: Revise the Description (if necessary)\n"
    "- If the description is incomplete or inaccurate, revise it to reflect "
    "the entity's correct characteristics.\n"
    "- Ensure the revised description is clear, precise, and free from "
    "ambiguities.\n"
    "\n"
    "## Conclusion\n"
    "Following these steps will ensure each entity's description is both "
    "accurate and comprehensive. This process maintains clarity and "
    "consistency in classifying entities under their respective types.\n";

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += items[i];
  }
  return out;
}

std::vector<std::string> seeded_pick(std::vector<std::string> pool,
                                     std::uint64_t seed, std::size_t count) {
  if (pool.size() > count) {
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(count);
  }
  return pool;
}

ChatRequest description_request(const std::string& model,
                                const std::string& prompt,
                                const std::string& tag) {
  ChatRequest request;
  request.model = model;
  request.messages.push_back(ChatMessage{"user", prompt});
  request.temperature = 0.0;
  request.tag = tag;
  return request;
}

}  // namespace

std::string description_init_prompt(const std::string& entity_type,
                                    const std::vector<std::string>& examples) {
  std::string prompt = kInitGuide;
  prompt += "\n## Input\n";
  prompt += "Entity Type: " + entity_type + "\n";
  prompt += "Entity Example List: [" + join_list(examples) + "]\n";
  prompt += "\n## Example Template for Output\n";
  prompt += "Entity Type: " + entity_type + "\n";
  prompt += "Entity Example List: [" + join_list(examples) + "]\n";
  prompt += "Entity Type Description: \"" + entity_type +
            " refers to...\"(in the language of the Entity list)\n";
  return prompt;
}

std::string description_polish_prompt(const std::string& entity_type,
                                      const std::string& current_description,
                                      const std::string& instance) {
  std::string prompt = kPolishGuide;
  prompt += "\n## Input\n";
  prompt += "Entity Type: " + entity_type + "\n";
  prompt += "Entity Type Description: \"" + current_description + "\"\n";
  prompt += "Entity Example List: [" + instance + "]\n";
  prompt += "\n## Example Template for Output\n";
  prompt += "Entity Type: " + entity_type + "\n";
  prompt += "Entity Example List: [" + instance + "]\n";
  prompt += "Entity Type Description: \"" + entity_type +
            " refers to...\"(in the language of the Entity list)\n";
  return prompt;
}

std::optional<std::string> extract_description(const std::string& entity_type,
                                               const std::string& response) {
  const std::string phrase = entity_type + " refers to";
  std::size_t pos = response.find(phrase);
  if (pos == std::string::npos) return std::nullopt;

  std::size_t end;
  if (pos > 0 && response[pos - 1] == '"') {
    end = response.find('"', pos);
  } else {
    end = response.find('\n', pos);
  }
  std::string text = response.substr(
      pos, end == std::string::npos ? std::string::npos : end - pos);
  while (!text.empty() &&
         (text.back() == ' ' || text.back() == '\r' || text.back() == '"')) {
    text.pop_back();
  }
  if (text.size() <= phrase.size()) return std::nullopt;  // phrase alone
  return text;
}

DescriptionDraft init_description(const Concept& concept_def,
                                  const std::vector<Sample>& corpus,
                                  LlmClient& client, const std::string& model,
                                  std::uint64_t seed, std::size_t sample_cap) {
  std::vector<std::string> pool = instance_strings(corpus, concept_def);
  if (pool.empty()) {
    throw DescriptionError("no corpus instances of concept " +
                           concept_def.canonical_id);
  }
  DescriptionDraft draft;
  draft.concept_id = concept_def.canonical_id;
  draft.init_examples = seeded_pick(std::move(pool), seed, sample_cap);

  std::string prompt =
      description_init_prompt(concept_def.canonical_id, draft.init_examples);
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string content =
        client.complete(description_request(model, prompt, "description_init"))
            .content;
    if (auto text = extract_description(concept_def.canonical_id, content)) {
      draft.text = *text;
      return draft;
    }
  }
  throw DescriptionError("response for " + concept_def.canonical_id +
                         " never contained \"" + concept_def.canonical_id +
                         " refers to\"");
}

DescriptionDraft polish_description(DescriptionDraft draft,
                                    const std::vector<Sample>& corpus,
                                    const Concept& concept_def,
                                    LlmClient& client, const std::string& model,
                                    std::uint64_t seed, std::size_t rounds) {
  std::vector<std::string> pool = instance_strings(corpus, concept_def);
  std::set<std::string> used(draft.init_examples.begin(),
                             draft.init_examples.end());
  std::vector<std::string> fresh;
  for (std::string& text : pool) {
    if (!used.count(text)) fresh.push_back(std::move(text));
  }
  std::vector<std::string> picked = seeded_pick(std::move(fresh), seed, rounds);

  for (const std::string& instance : picked) {
    RevisionEntry entry;
    entry.instance = instance;
    std::string prompt = description_polish_prompt(draft.concept_id,
                                                   draft.text, instance);
    try {
      std::string content =
          client
              .complete(description_request(model, prompt, "description_polish"))
              .content;
      auto revised = extract_description(draft.concept_id, content);
      if (revised && *revised != draft.text) {
        draft.text = *revised;
        entry.changed = true;
      }
    } catch (const LlmError& error) {
      entry.note = std::string("skipped: ") + error.what();
    }
    entry.text = draft.text;
    draft.history.push_back(std::move(entry));
  }
  return draft;
}

}  // namespace xlie
