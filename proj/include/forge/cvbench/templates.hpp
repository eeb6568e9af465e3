#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "forge/cvbench/scene.hpp"
#include "json.hpp"

namespace forge::cvbench {

// Question phrasings keyed by task. Placeholders are written {name}.
struct PromptTemplates {
  std::string version;
  std::string spatial;   // {object}, {anchor}
  std::string count;     // {plural}
  std::string depth;     // {a}, {a_color}, {b}, {b_color}
  std::string distance;  // {anchor}, {anchor_color}, {a}, {a_color}, {b}, {b_color}
  std::string answer_suffix;

  static const PromptTemplates& builtin();
  static PromptTemplates from_json(const nlohmann::json& j);
  static PromptTemplates load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Replaces every {key}; an unknown placeholder left in the text is an error.
std::string fill_template(const std::string& text, const std::map<std::string, std::string>& values);

// Full user turn: question, lettered options, answer instruction.
std::string render_prompt(const QuestionItem& item, const PromptTemplates& templates = PromptTemplates::builtin());

// Naive English plural used in count questions.
std::string plural(const std::string& noun);

}  // namespace forge::cvbench
