#include "forge/cvbench/templates.hpp"

#include "forge/error.hpp"
#include "forge/jsonl.hpp"

namespace forge::cvbench {

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates t{
      "1",
      "Considering the relative positions of the {object} and the {anchor} in the image provided, where is the "
      "{object} located with respect to the {anchor}? Select from the following choices.",
      "How many {plural} are in the image? Select from the following choices.",
      "Estimate the real-world distances between objects in this image. Which object is closer to the camera "
      "taking this photo, the {a} (highlighted by a {a_color} box) or the {b} (highlighted by a {b_color} box)?",
      "Estimate the real-world distances between objects in this image. Which object is closer to the {anchor} "
      "(highlighted by a {anchor_color} box), the {a} (highlighted by a {a_color} box) or the {b} (highlighted by "
      "a {b_color} box)?",
      "Answer with the option's letter from the given choices directly.",
  };
  return t;
}

PromptTemplates PromptTemplates::from_json(const nlohmann::json& j) {
  try {
    const auto& p = j.at("prompts");
    return {j.at("version").get<std::string>(), p.at("spatial_relationship"), p.at("object_count"),
            p.at("depth_order"),                 p.at("relative_distance"),    j.at("answer_suffix")};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("prompt templates: ") + e.what());
  }
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

nlohmann::json PromptTemplates::to_json() const {
  return {{"version", version},
          {"prompts",
           {{"spatial_relationship", spatial},
            {"object_count", count},
            {"depth_order", depth},
            {"relative_distance", distance}}},
          {"answer_suffix", answer_suffix}};
}

std::string fill_template(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t at = 0;
  while (at < text.size()) {
    auto open = text.find('{', at);
    if (open == std::string::npos) {
      out.append(text, at);
      break;
    }
    auto close = text.find('}', open);
    if (close == std::string::npos) throw InvalidArgument("unterminated placeholder in template");
    out.append(text, at, open - at);
    auto key = text.substr(open + 1, close - open - 1);
    auto it = values.find(key);
    if (it == values.end()) throw InvalidArgument("template placeholder {" + key + "} has no value");
    out += it->second;
    at = close + 1;
  }
  return out;
}

std::string render_prompt(const QuestionItem& item, const PromptTemplates& templates) {
  std::string out = "USER: <image>\n" + item.prompt;
  for (std::size_t n = 0; n < item.choices.size(); ++n) {
    out += "\n(";
    out += static_cast<char>('A' + n);
    out += ") " + item.choices[n];
  }
  return out + "\n" + templates.answer_suffix + " ASSISTANT:";
}

std::string plural(const std::string& noun) {
  if (noun.empty() || noun.back() == 's') return noun;
  return noun + "s";
}

}  // namespace forge::cvbench
