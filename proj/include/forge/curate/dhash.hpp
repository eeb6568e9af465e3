#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "forge/curate/image.hpp"
#include "json.hpp"

namespace forge::curate {

// 64-bit difference hash: resize to 9 x 8 (bilinear), then bit r*8+c is set
// when pixel (r, c) is darker than pixel (r, c+1). Bit 0 is the most
// significant, so the hex form reads row-major.
std::uint64_t dhash(const GrayImage& img);
std::string hash_hex(std::uint64_t h);
int hamming(std::uint64_t a, std::uint64_t b) noexcept;

struct HashSet {
  std::string name;
  std::vector<std::uint64_t> hashes;
};

// Hashes every decodable image below `dir` (sorted by path) on at most
// `workers` threads (0 = hardware concurrency). Files that fail to decode
// are listed in `skipped`.
HashSet hash_directory(const std::filesystem::path& dir, std::vector<std::string>* skipped = nullptr,
                       std::size_t workers = 0);

struct LeakageRow {
  std::string test_set;
  std::size_t test_size = 0;
  std::vector<std::size_t> matches;  // one per train set
  double pct(std::size_t train) const;
};

struct LeakageReport {
  std::vector<std::string> train_sets;
  std::vector<LeakageRow> rows;
  LeakageRow totals;  // column sums

  // Aligned text table with "7,244 (14.62%)" cells.
  std::string table() const;
  nlohmann::json to_json() const;
};

// A test image counts once when any train hash lies within `max_hamming`
// bits of it; 0 means exact equality.
LeakageReport leakage_scan(std::span<const HashSet> train, std::span<const HashSet> tests, int max_hamming = 0);

// "7,244"
std::string group_thousands(std::size_t n);
// "7,244 (14.62%)"
std::string format_leak_cell(std::size_t matches, std::size_t total);

}  // namespace forge::curate
