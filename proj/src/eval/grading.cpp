#include "forge/eval/grading.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "forge/error.hpp"

namespace forge::eval {

namespace {

std::vector<std::string> tokens_of(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) out += (out.empty() ? "" : " ") + t;
  return out;
}

bool is_article(const std::string& w) { return w == "a" || w == "an" || w == "the"; }

// "1,234.5", "-3", "12%", "$4" -> number; anything else -> nullopt.
std::optional<double> parse_number(std::string s, bool& fractional) {
  s.erase(std::remove(s.begin(), s.end(), ','), s.end());
  if (!s.empty() && s.front() == '$') s.erase(0, 1);
  if (!s.empty() && s.back() == '%') s.pop_back();
  if (s.empty()) return std::nullopt;
  std::size_t i = 0, digits = 0;
  if (s[i] == '+' || s[i] == '-') ++i;
  bool dot = false;
  fractional = false;
  for (; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++digits;
      if (dot && s[i] != '0') fractional = true;
    } else if (s[i] == '.' && !dot) {
      dot = true;
    } else {
      return std::nullopt;
    }
  }
  if (digits == 0) return std::nullopt;
  return std::stod(s);
}

}  // namespace

NormalizedAnswer normalize_answer(const std::string& raw) {
  NormalizedAnswer out;
  std::string s;
  for (char c : raw) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto b = s.find_first_not_of(" \t\r\n");
  s = b == std::string::npos ? std::string() : s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();

  // Choice letter: "(a) stem", "a) stem", "a. stem", "a: stem", or a bare "a"/"(a)".
  auto letter_at = [&](std::size_t pos) {
    return pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos])) &&
           (pos + 1 == s.size() || !std::isalpha(static_cast<unsigned char>(s[pos + 1])));
  };
  std::size_t stem_from = 0;
  if (!s.empty() && s[0] == '(' && letter_at(1) && s.size() > 2 && s[2] == ')') {
    out.letter = s[1];
    stem_from = 3;
  } else if (letter_at(0) && s.size() > 1 && (s[1] == ')' || s[1] == '.' || s[1] == ':')) {
    out.letter = s[0];
    stem_from = 2;
  } else if (s.size() == 1 && std::isalpha(static_cast<unsigned char>(s[0]))) {
    out.letter = s[0];
    stem_from = 1;
  }
  std::string rest = s.substr(stem_from);

  // Numbers are read before punctuation stripping so "3.5" keeps its point.
  {
    auto toks = tokens_of(rest);
    if (toks.size() == 1) {
      bool frac = false;
      out.number = parse_number(toks[0], frac);
      out.fractional = frac;
    }
  }

  std::string cleaned;
  for (char c : rest) {
    if (std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80) {
      cleaned += c;
    } else if (c == '.' && out.number) {
      cleaned += c;
    } else {
      cleaned += ' ';
    }
  }
  std::vector<std::string> kept;
  for (auto& t : tokens_of(cleaned))
    if (!is_article(t)) kept.push_back(t);
  out.text = join(kept);
  out.letter_only = out.letter && out.text.empty();
  return out;
}

namespace {

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

Verdict fuzzy_match(const std::string& pred, const std::string& gt) {
  const auto p = normalize_answer(pred), g = normalize_answer(gt);
  if (!p.text.empty() && p.text == g.text) return {true, "exact"};
  if (p.letter_only && g.letter_only) return {p.letter == g.letter, "choice-letter"};
  if ((p.letter_only && g.letter) || (g.letter_only && p.letter)) return {p.letter == g.letter, "choice-letter"};
  if (p.number && g.number) {
    if (*p.number == *g.number) return {true, "numeric"};
    if (p.fractional || g.fractional) {
      const double rel = std::abs(*p.number - *g.number) / std::max(std::abs(*g.number), 1e-12);
      if (rel <= kNumericTolerance + 1e-12) return {true, "numeric"};
    }
    return {false, "numeric"};
  }
  const auto pt = tokens_of(p.text), gt_toks = tokens_of(g.text);
  if (contains_run(pt, gt_toks) || contains_run(gt_toks, pt)) return {true, "token-substring"};
  return {false, "no-match"};
}

const std::string& grader_template() {
  static const std::string t =
      "You are a reliable grader. Reply with only either of the following \n"
      "2 words: CORRECT or INCORRECT.\n"
      "You will be given an 'answer' and a 'gt_answer' (ground truth answer)\n"
      ",and you must reply with either CORRECT or INCORRECT based on the \n"
      "response. Tolerate a 0.05 relative error for numerical answers.\n"
      "answer: 25\ngt_answer: 29\nevaluation: INCORRECT\n"
      "answer: Yes\ngt_answer: Yes\nevaluation: CORRECT\n"
      "answer: 80\ngt_answer: 80\nevaluation: CORRECT\n"
      "answer: Ireland\ngt_answer: Italy\nevaluation: INCORRECT\n"
      "answer: UK\ngt_answer: UK\nevaluation: CORRECT\n"
      "answer: 2019\ngt_answer: 2011\nevaluation: INCORRECT\n"
      "answer: {answer}\ngt_answer: {gt_answer}\nevaluation:";
  return t;
}

std::string grader_prompt(const std::string& answer, const std::string& gt_answer) {
  std::string out = grader_template();
  // gt_answer first: "{answer}" is not a substring of "{gt_answer}", but the
  // substituted answer text could contain either placeholder.
  const auto gpos = out.rfind("{gt_answer}");
  out.replace(gpos, 11, gt_answer);
  const auto apos = out.rfind("{answer}", gpos);
  out.replace(apos, 8, answer);
  return out;
}

std::optional<bool> parse_grader_reply(const std::string& reply) {
  std::string s;
  for (char c : reply) s += std::isalpha(static_cast<unsigned char>(c)) ? char(std::toupper(static_cast<unsigned char>(c))) : ' ';
  auto toks = tokens_of(s);
  if (!toks.empty() && toks[0] == "EVALUATION") toks.erase(toks.begin());
  if (toks.size() != 1) return std::nullopt;
  if (toks[0] == "CORRECT") return true;
  if (toks[0] == "INCORRECT") return false;
  return std::nullopt;
}

Verdict grade_llm(const std::string& pred, const std::string& gt, clients::ChatClient& client) {
  const std::vector<clients::ChatMessage> msgs{{"user", grader_prompt(pred, gt)}};
  std::string reply;
  for (int attempt = 0; attempt < 2; ++attempt) {
    reply = client.complete(msgs);
    if (auto v = parse_grader_reply(reply)) return {*v, "llm-grader"};
  }
  throw ClientError("grader reply is neither CORRECT nor INCORRECT after a retry", reply);
}

GradeItem grade_item_from_json(const nlohmann::json& j) {
  try {
    auto str = [&](const char* a, const char* b) {
      const auto& v = j.contains(a) ? j.at(a) : j.at(b);
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    return {j.value("id", ""), str("prediction", "answer_pred"), str("answer", "gt_answer"), j.value("benchmark", "")};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("grade item: ") + e.what());
  }
}

nlohmann::json to_json(const GradedResult& r) {
  return {{"id", r.id},
          {"benchmark", r.benchmark},
          {"verdict", r.verdict.correct ? "CORRECT" : "INCORRECT"},
          {"rule", r.verdict.rule_fired}};
}

std::vector<GradedResult> grade_all(const std::vector<GradeItem>& items, const Grader& grader, std::size_t workers) {
  std::vector<GradedResult> out(items.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i; (i = next++) < items.size();) {
      try {
        out[i] = {items[i].id, items[i].benchmark, grader(items[i].prediction, items[i].answer)};
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, items.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<AccuracyRow> accuracy_by_benchmark(const std::vector<GradedResult>& results) {
  std::map<std::string, AccuracyRow> rows;
  for (const auto& r : results) {
    auto& row = rows[r.benchmark];
    row.benchmark = r.benchmark;
    ++row.total;
    row.correct += r.verdict.correct;
  }
  std::vector<AccuracyRow> out;
  for (auto& [k, v] : rows) out.push_back(v);
  return out;
}

}  // namespace forge::eval
