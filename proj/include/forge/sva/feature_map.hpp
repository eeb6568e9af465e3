#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "forge/numcore/tensor.hpp"
#include "forge/sva/config.hpp"

namespace forge::sva {

// One encoder's grid after adaptation: side multiplier * grid_side, width C.
struct EncoderFeatureMap {
  std::size_t encoder = 0;
  std::size_t multiplier = 1;
  num::Tensor grid;  // (m L) x (m L) x C
};

// Resizes a raw h x w x d grid to the encoder's side (bilinear, half-pixel
// centres) and maps channels with `channel_map` [d x C].
EncoderFeatureMap adapt_encoder_output(const num::Tensor& raw, const SvaConfig& cfg, std::size_t encoder,
                                       const num::Tensor& channel_map);

// Multi-stage backbones: every stage is resized to the same side, the stages
// are concatenated along channels, then mapped by `channel_map`
// [(sum of stage widths) x C].
EncoderFeatureMap adapt_multistage_output(std::span<const num::Tensor> stages, const SvaConfig& cfg,
                                          std::size_t encoder, const num::Tensor& channel_map);

// Rows m*i .. m*(i+1) and columns m*j .. m*(j+1) of the grid, flattened
// row-major to [m^2 x C]. A positional tile [m x m x C], when given, is added
// to the slice.
num::Tensor sub_region_view(const EncoderFeatureMap& f, std::size_t grid_side, std::size_t i, std::size_t j,
                            const std::optional<num::Tensor>& positional = std::nullopt);

// Checks count, multipliers and shapes against the config; errors name the
// offending encoder.
void validate_features(const SvaConfig& cfg, std::span<const EncoderFeatureMap> features);

}  // namespace forge::sva
