#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "forge/curate/pool.hpp"
#include "json.hpp"

namespace forge::curate {

// Response-formatting prompts by 1-based index, and the dataset -> prompt
// indices they receive. Dataset names match case-insensitively.
struct PromptRegistry {
  std::map<int, std::string> prompts;
  std::map<std::string, std::vector<int>> datasets;

  static const PromptRegistry& builtin();
  static PromptRegistry from_json(const nlohmann::json& j);
  static PromptRegistry load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Prompts for `dataset` in listed order, or nothing when unmapped.
  const std::vector<int>* lookup(const std::string& dataset) const;
};

// Appends each mapped prompt to the instruction on its own line unless the
// instruction already contains it. Unmapped sources pass through, or throw
// NotFound when `strict`.
Record attach_format_prompt(const Record& record, const PromptRegistry& registry, bool strict = false);

}  // namespace forge::curate
