#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "forge/sva/aggregator.hpp"
#include "json.hpp"

namespace forge::sva {

// Loop-based attention over explicitly materialized keys. Slow; used only to
// cross-check sva_forward.
num::Tensor dense_reference_forward(const SvaConfig& cfg, const SvaParams& params,
                                    std::span<const EncoderFeatureMap> features);

struct BenchSettings {
  SvaConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> encoder_names;  // defaults to enc0, enc1, ...
  // Text-tensor files; random draws from `seed` when empty.
  std::vector<std::filesystem::path> feature_files;
  std::filesystem::path params_file;
  bool grad_check = true;
  double eps = 1e-5;
  double forward_tolerance = 1e-9;
  double gradient_tolerance = 1e-4;

  // {"sva": {...}, "seed": 0, "encoders": [...], "features": [...],
  //  "params": "...", "grad_check": true, "eps": 1e-5}; relative paths are
  // resolved against `base`.
  static BenchSettings from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
};

struct BenchCheck {
  std::string name;
  double value = 0;
  bool pass = true;
  double seconds = 0;
};

struct BenchReport {
  std::vector<BenchCheck> checks;
  std::string attention_table;
  bool pass() const;
  nlohmann::json to_json() const;
};

BenchReport run_bench(const BenchSettings& settings);

}  // namespace forge::sva
