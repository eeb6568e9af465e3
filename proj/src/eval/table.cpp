#include "forge/eval/table.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "forge/error.hpp"

namespace forge::eval {

std::string to_string(BenchCategory c) {
  switch (c) {
    case BenchCategory::general: return "General";
    case BenchCategory::knowledge: return "Knowledge";
    case BenchCategory::ocr_chart: return "OCR&Chart";
    case BenchCategory::vision_centric: return "Vision-Centric";
  }
  return "?";
}

BenchCategory bench_category_from_string(const std::string& s) {
  std::string key;
  for (char ch : s)
    if (std::isalnum(static_cast<unsigned char>(ch))) key += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (key == "general") return BenchCategory::general;
  if (key == "knowledge") return BenchCategory::knowledge;
  if (key == "ocrchart" || key == "chartocr" || key == "ocr") return BenchCategory::ocr_chart;
  if (key == "visioncentric" || key == "vision") return BenchCategory::vision_centric;
  throw InvalidArgument("unknown benchmark category '" + s + "'");
}

const std::vector<BenchCategory>& all_bench_categories() {
  static const std::vector<BenchCategory> all{BenchCategory::general, BenchCategory::knowledge,
                                              BenchCategory::ocr_chart, BenchCategory::vision_centric};
  return all;
}

std::size_t ScoreTable::index_of(const std::string& benchmark) const {
  for (std::size_t b = 0; b < benchmarks.size(); ++b)
    if (benchmarks[b].name == benchmark) return b;
  throw NotFound("no benchmark named '" + benchmark + "'");
}

void ScoreTable::validate() const {
  std::set<std::string> names;
  for (const auto& b : benchmarks) {
    if (!names.insert(b.name).second) throw ValidationError("duplicate benchmark '" + b.name + "'");
    if (!(b.scale_divisor > 0.0)) throw ValidationError("benchmark '" + b.name + "' has a non-positive divisor");
  }
  if (scores.size() != models.size()) throw ValidationError("score rows do not match the model list");
  for (std::size_t m = 0; m < scores.size(); ++m) {
    if (scores[m].size() != benchmarks.size()) {
      throw ValidationError("model '" + models[m] + "' has " + std::to_string(scores[m].size()) + " scores for " +
                            std::to_string(benchmarks.size()) + " benchmarks");
    }
    for (std::size_t b = 0; b < benchmarks.size(); ++b) {
      if (!std::isfinite(scores[m][b])) {
        throw ValidationError("non-finite score for " + models[m] + " on " + benchmarks[b].name);
      }
    }
  }
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw ParseError("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": '" + s + "' is not a number");
  }
}

}  // namespace

std::vector<BenchmarkMeta> load_benchmark_meta(const std::filesystem::path& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw ParseError(path.string() + ": empty metadata file");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[trim(rows[0][i])] = i;
  for (const char* need : {"benchmark", "category"}) {
    if (!col.count(need)) throw ParseError(path.string() + ": missing column '" + need + "'");
  }
  auto cell = [&](const std::vector<std::string>& r, const char* name) -> std::string {
    auto it = col.find(name);
    return it == col.end() || it->second >= r.size() ? std::string() : trim(r[it->second]);
  };
  std::vector<BenchmarkMeta> out;
  for (std::size_t n = 1; n < rows.size(); ++n) {
    const auto& r = rows[n];
    const auto where = path.string() + ":" + std::to_string(n + 1);
    BenchmarkMeta m;
    m.name = cell(r, "benchmark");
    if (m.name.empty()) throw ParseError(where + ": empty benchmark name");
    m.category = bench_category_from_string(cell(r, "category"));
    if (auto d = cell(r, "divisor"); !d.empty()) m.scale_divisor = to_double(d, where);
    if (auto c = cell(r, "num_choices"); !c.empty()) m.num_choices = static_cast<int>(to_double(c, where));
    if (auto s = cell(r, "size"); !s.empty()) m.size = static_cast<std::size_t>(to_double(s, where));
    if (auto p = cell(r, "paired"); !p.empty()) m.paired_scoring = p == "1" || p == "true" || p == "yes";
    out.push_back(std::move(m));
  }
  return out;
}

ScoreTable load_score_table(const std::filesystem::path& scores_csv, const std::vector<BenchmarkMeta>& meta) {
  auto rows = read_csv(scores_csv);
  if (rows.empty() || rows[0].size() < 2) throw ParseError(scores_csv.string() + ": need a header with benchmarks");
  std::map<std::string, const BenchmarkMeta*> by_name;
  for (const auto& m : meta) by_name[m.name] = &m;
  ScoreTable t;
  for (std::size_t c = 1; c < rows[0].size(); ++c) {
    auto name = trim(rows[0][c]);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError(scores_csv.string() + ": no metadata for benchmark '" + name + "'");
    t.benchmarks.push_back(*it->second);
  }
  for (std::size_t n = 1; n < rows.size(); ++n) {
    const auto& r = rows[n];
    const auto where = scores_csv.string() + ":" + std::to_string(n + 1);
    if (r.size() != rows[0].size()) throw ParseError(where + ": expected " + std::to_string(rows[0].size()) + " cells");
    t.models.push_back(trim(r[0]));
    std::vector<double> s;
    for (std::size_t c = 1; c < r.size(); ++c) s.push_back(to_double(trim(r[c]), where));
    t.scores.push_back(std::move(s));
  }
  t.validate();
  return t;
}

ScoreTable load_score_table(const std::filesystem::path& scores_csv, const std::filesystem::path& meta_csv) {
  return load_score_table(scores_csv, load_benchmark_meta(meta_csv));
}

}  // namespace forge::eval
