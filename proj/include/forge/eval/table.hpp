#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace forge::eval {

enum class BenchCategory { general, knowledge, ocr_chart, vision_centric };

std::string to_string(BenchCategory c);  // "General", "Knowledge", "OCR&Chart", "Vision-Centric"
BenchCategory bench_category_from_string(const std::string& s);
const std::vector<BenchCategory>& all_bench_categories();

struct BenchmarkMeta {
  std::string name;
  BenchCategory category = BenchCategory::general;
  double scale_divisor = 1.0;  // 20 for MME perception
  std::optional<int> num_choices;
  std::size_t size = 0;         // 0 when unknown
  bool paired_scoring = false;  // yes/no pairs scored jointly
};

struct ScoreTable {
  std::vector<std::string> models;
  std::vector<BenchmarkMeta> benchmarks;
  std::vector<std::vector<double>> scores;  // [model][benchmark]

  std::size_t index_of(const std::string& benchmark) const;  // throws NotFound
  double scaled(std::size_t model, std::size_t bench) const { return scores[model][bench] / benchmarks[bench].scale_divisor; }
  // Finite scores, rectangular shape, positive divisors, unique names.
  void validate() const;
};

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);
std::string csv_escape(const std::string& field);

// Header `benchmark,category,divisor,num_choices,size[,paired]`; empty cells
// take the defaults.
std::vector<BenchmarkMeta> load_benchmark_meta(const std::filesystem::path& path);

// Header `model,<bench>,<bench>,...`. Every column needs a metadata row.
ScoreTable load_score_table(const std::filesystem::path& scores_csv, const std::vector<BenchmarkMeta>& meta);
ScoreTable load_score_table(const std::filesystem::path& scores_csv, const std::filesystem::path& meta_csv);

}  // namespace forge::eval
