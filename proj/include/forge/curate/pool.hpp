#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace forge::curate {

enum class Category { general, ocr, counting, code, math, science, language };

std::string to_string(Category c);  // "General", "OCR", ...
Category category_from_string(const std::string& s);  // case-insensitive
const std::vector<Category>& all_categories();

struct Record {
  std::string id;
  std::string source;
  Category category = Category::general;
  std::string instruction;
  std::string response;
  std::optional<std::string> image;
};

struct DataPool {
  std::vector<Record> records;

  std::map<std::string, std::size_t> source_counts() const;
  std::map<Category, std::size_t> category_counts() const;
  std::size_t size() const noexcept { return records.size(); }
};

nlohmann::json to_json(const Record& r);
Record record_from_json(const nlohmann::json& j);
DataPool load_pool(const std::filesystem::path& path);
void save_pool(const std::filesystem::path& path, const DataPool& pool);

struct CurvePoint {
  std::size_t rank = 0;        // 1-based, smallest source first
  std::size_t cumulative = 0;  // sum of the `rank` smallest source counts
  std::string source;
};

// Sources sorted by ascending count (ties by name). Throws on an empty pool.
std::vector<CurvePoint> cumulative_curve(const DataPool& pool);

// Knee of the curve: the point farthest above the chord from the first to
// the last point, after scaling both axes to [0, 1]. Returns that source's
// count as a threshold suggestion.
std::size_t suggest_threshold(std::span<const CurvePoint> curve);

// Every source above t keeps exactly t records, drawn uniformly without
// replacement from a stream seeded by (seed, source); kept records stay in
// their original order. Smaller sources pass through.
DataPool apply_threshold(const DataPool& pool, std::size_t t, std::uint64_t seed);

struct CuratorConfig {
  std::size_t threshold = 250000;
  std::map<Category, double> ratios;
  std::size_t target_size = 1350000;
  std::uint64_t seed = 0;

  // Ratios non-negative and summing to 1 within 1e-9; t and N positive.
  void validate() const;
};

CuratorConfig curator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CuratorConfig& c);

struct MixResult {
  DataPool pool;
  std::map<Category, std::size_t> targets;    // round(ratio * N), summing to N
  std::map<Category, std::size_t> taken;      // after redistribution
  std::map<Category, std::size_t> shortfall;  // target minus available, where short

  std::string report() const;
};

// Samples round(ratio * N) records per category. Categories that run short
// give their deficit to the remaining categories in proportion to their
// ratios. Throws when N exceeds the pool, or when a category with positive
// ratio has no records at all.
MixResult mix_by_ratio(const DataPool& pool, const CuratorConfig& cfg);

}  // namespace forge::curate
