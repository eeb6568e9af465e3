#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace forge::sva {

// Shape of a spatial aggregator: a grid_side x grid_side query grid of width
// `channels`, attending to one feature map per encoder whose side is
// multipliers[k] * grid_side.
struct SvaConfig {
  std::size_t grid_side = 1;
  std::size_t channels = 1;
  std::vector<std::size_t> multipliers{1};
  std::size_t depth = 1;   // stacked cross-attention layers per group
  std::size_t groups = 1;  // independent query grids, concatenated on the token axis
  std::optional<std::size_t> host_stride;
  bool positional_encoding = true;
  bool global_query_augmentation = true;
  bool residual = true;

  std::size_t encoders() const noexcept { return multipliers.size(); }
  std::size_t tokens_per_group() const noexcept { return grid_side * grid_side; }
  std::size_t output_tokens() const noexcept { return groups * tokens_per_group(); }
  std::size_t feature_side(std::size_t encoder) const { return multipliers.at(encoder) * grid_side; }
  // Keys seen by one query: sum of m_k^2.
  std::size_t keys_per_query() const;
  bool has_positional(std::size_t encoder) const { return positional_encoding && multipliers.at(encoder) > 1; }

  // Throws InvalidArgument on any zero size or empty encoder list.
  void validate() const;

  // Layers inserted in the host model always run with one layer and one group.
  SvaConfig for_host_insertion() const;
};

SvaConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SvaConfig& cfg);

// Host stride used by the released model sizes ("8B", "13B", "34B").
std::optional<std::size_t> host_stride_preset(const std::string& model_size);

}  // namespace forge::sva
