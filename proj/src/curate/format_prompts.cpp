#include "forge/curate/format_prompts.hpp"

#include <algorithm>
#include <cctype>

#include "forge/error.hpp"
#include "forge/jsonl.hpp"

namespace forge::curate {

namespace {

std::string fold(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

const PromptRegistry& PromptRegistry::builtin() {
  static const PromptRegistry r = [] {
    PromptRegistry p;
    p.prompts = {
        {1, "Answer the question using a single word or phrase."},
        {2, "Answer the question using a single number or phrase."},
        {3, "Answer with the option's letter from the given choices directly."},
        {4, "Give the short answer directly."},
        {5, "Answer the question using a single word or phrase."},
        {6, "When the provided information is insufficient, respond with <no answer>."},
        {7, "Directly provide the HTML code."},
        {8, "First show your reasoning process and then give the final answer."},
        {9, "When the provided information is insufficient, respond with 'Unanswerable'. Answer the question using a "
            "single word or phrase."},
        {10, "Answer with the letter."},
    };
    const std::vector<std::pair<std::string, std::vector<int>>> table{
        {"SketchyVQA", {1}}, {"OODVQA", {1}},   {"VizWiz", {9}},       {"Q-Instruct", {1, 3}}, {"ChartQA", {2}},
        {"DocVQA", {4}},     {"DVQA", {1}},     {"AI2D", {1}},         {"ScreenQA", {1, 6}},   {"CLEVR", {1}},
        {"TallyQA", {1}},    {"PathVQA", {1}},  {"MathInstruct", {8}}, {"Design2Code", {7}},   {"IconQA", {1, 10}},
        {"HiTab", {1}},      {"WTQ", {1}},      {"WikiSQL", {1}},      {"Inter-GPS", {10}},    {"Visual7W", {3}},
        {"TQA", {10}},       {"RAVEN", {1}},
    };
    for (const auto& [name, idx] : table) p.datasets[name] = idx;
    return p;
  }();
  return r;
}

PromptRegistry PromptRegistry::from_json(const nlohmann::json& j) {
  PromptRegistry p;
  try {
    for (const auto& [k, v] : j.at("prompts").items()) p.prompts[std::stoi(k)] = v.get<std::string>();
    for (const auto& [k, v] : j.at("datasets").items()) p.datasets[k] = v.get<std::vector<int>>();
  } catch (const std::exception& e) {
    throw ParseError(std::string("prompt registry: ") + e.what());
  }
  for (const auto& [name, idx] : p.datasets)
    for (int i : idx)
      if (!p.prompts.contains(i)) throw ParseError("prompt registry: " + name + " uses undefined prompt " + std::to_string(i));
  return p;
}

PromptRegistry PromptRegistry::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

nlohmann::json PromptRegistry::to_json() const {
  nlohmann::json pj = nlohmann::json::object(), dj = nlohmann::json::object();
  for (const auto& [i, s] : prompts) pj[std::to_string(i)] = s;
  for (const auto& [name, idx] : datasets) dj[name] = idx;
  return {{"prompts", pj}, {"datasets", dj}};
}

const std::vector<int>* PromptRegistry::lookup(const std::string& dataset) const {
  const auto key = fold(dataset);
  for (const auto& [name, idx] : datasets)
    if (fold(name) == key) return &idx;
  return nullptr;
}

Record attach_format_prompt(const Record& record, const PromptRegistry& registry, bool strict) {
  const auto* idx = registry.lookup(record.source);
  if (!idx) {
    if (strict) throw NotFound("no response-format prompt registered for source '" + record.source + "'");
    return record;
  }
  Record out = record;
  for (int i : *idx) {
    const auto& prompt = registry.prompts.at(i);
    if (out.instruction.find(prompt) != std::string::npos) continue;
    if (!out.instruction.empty()) out.instruction += '\n';
    out.instruction += prompt;
  }
  return out;
}

}  // namespace forge::curate
