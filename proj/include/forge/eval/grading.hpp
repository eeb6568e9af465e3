#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "forge/clients.hpp"
#include "json.hpp"

namespace forge::eval {

struct Verdict {
  bool correct = false;
  std::string rule_fired;  // one rule name, see fuzzy_match
};

// Lowercased text with punctuation stripped and articles dropped, plus any
// leading multiple-choice letter ("(a) Apple", "A. Apple", "b)") split off.
struct NormalizedAnswer {
  std::string text;    // normalized stem, tokens joined by single spaces
  std::optional<char> letter;
  bool letter_only = false;  // the answer was just a choice letter
  std::optional<double> number;
  bool fractional = false;  // the number was written with a fractional part
};
NormalizedAnswer normalize_answer(const std::string& raw);

// Rules, first match wins:
//   exact          normalized stems equal
//   choice-letter  both carry a choice letter (or one is a bare letter) and the letters agree
//   numeric        both are numbers and equal; with a fractional part on either
//                  side a relative error <= 0.05 (against gt) also passes
//   token-substring one stem is a contiguous token run of the other
// Otherwise INCORRECT with rule "choice-letter", "numeric" or "no-match".
Verdict fuzzy_match(const std::string& pred, const std::string& gt);

inline constexpr double kNumericTolerance = 0.05;

// The grader prompt with both placeholders substituted.
const std::string& grader_template();
std::string grader_prompt(const std::string& answer, const std::string& gt_answer);

// Accepts CORRECT / INCORRECT in any case, with surrounding punctuation or an
// "evaluation:" prefix. Returns nothing for anything else.
std::optional<bool> parse_grader_reply(const std::string& reply);

// One retry on a non-conforming reply, then ClientError with the raw text.
Verdict grade_llm(const std::string& pred, const std::string& gt, clients::ChatClient& client);

struct GradeItem {
  std::string id;
  std::string prediction;
  std::string answer;
  std::string benchmark;
};

struct GradedResult {
  std::string id;
  std::string benchmark;
  Verdict verdict;
};

GradeItem grade_item_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GradedResult& r);

using Grader = std::function<Verdict(const std::string& pred, const std::string& gt)>;

// Grades on at most `workers` threads; output order matches input order.
std::vector<GradedResult> grade_all(const std::vector<GradeItem>& items, const Grader& grader, std::size_t workers = 1);

struct AccuracyRow {
  std::string benchmark;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? 100.0 * double(correct) / double(total) : 0.0; }
};
std::vector<AccuracyRow> accuracy_by_benchmark(const std::vector<GradedResult>& results);

}  // namespace forge::eval
