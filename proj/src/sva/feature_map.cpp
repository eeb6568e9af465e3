#include "forge/sva/feature_map.hpp"

#include <string>

#include "forge/error.hpp"
#include "forge/numcore/ops.hpp"

namespace forge::sva {

namespace {

EncoderFeatureMap project_channels(const num::Tensor& resized, const SvaConfig& cfg, std::size_t encoder,
                                   const num::Tensor& channel_map) {
  const std::size_t side = resized.dim(0), width = resized.dim(2);
  if (channel_map.rank() != 2 || channel_map.dim(0) != width || channel_map.dim(1) != cfg.channels) {
    throw DimensionError("encoder " + std::to_string(encoder) + ": channel map " + channel_map.shape_string() +
                         " does not map " + std::to_string(width) + " channels to " + std::to_string(cfg.channels));
  }
  auto flat = resized.reshaped({side * side, width});
  auto projected = num::matmul(flat, channel_map).reshaped({side, side, cfg.channels});
  return {encoder, cfg.multipliers[encoder], std::move(projected)};
}

}  // namespace

EncoderFeatureMap adapt_encoder_output(const num::Tensor& raw, const SvaConfig& cfg, std::size_t encoder,
                                       const num::Tensor& channel_map) {
  cfg.validate();
  if (encoder >= cfg.encoders()) throw InvalidArgument("encoder index " + std::to_string(encoder) + " out of range");
  if (raw.rank() != 3) throw DimensionError("encoder " + std::to_string(encoder) + ": raw output must be h x w x d");
  const std::size_t side = cfg.feature_side(encoder);
  return project_channels(num::bilinear_resize(raw, side, side), cfg, encoder, channel_map);
}

EncoderFeatureMap adapt_multistage_output(std::span<const num::Tensor> stages, const SvaConfig& cfg,
                                          std::size_t encoder, const num::Tensor& channel_map) {
  cfg.validate();
  if (encoder >= cfg.encoders()) throw InvalidArgument("encoder index " + std::to_string(encoder) + " out of range");
  if (stages.empty()) throw InvalidArgument("encoder " + std::to_string(encoder) + ": no stages given");
  const std::size_t side = cfg.feature_side(encoder);
  num::Tensor stacked;
  for (const auto& stage : stages) {
    if (stage.rank() != 3) throw DimensionError("encoder " + std::to_string(encoder) + ": stage must be h x w x d");
    auto resized = num::bilinear_resize(stage, side, side);
    stacked = stacked.empty() ? resized : num::concat_last(stacked, resized);
  }
  return project_channels(stacked, cfg, encoder, channel_map);
}

num::Tensor sub_region_view(const EncoderFeatureMap& f, std::size_t grid_side, std::size_t i, std::size_t j,
                            const std::optional<num::Tensor>& positional) {
  const std::size_t m = f.multiplier;
  if (i >= grid_side || j >= grid_side) {
    throw InvalidArgument("sub_region_view: cell (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") outside a grid of side " + std::to_string(grid_side));
  }
  const auto& g = f.grid;
  if (g.rank() != 3 || g.dim(0) != m * grid_side || g.dim(1) != m * grid_side) {
    throw DimensionError("encoder " + std::to_string(f.encoder) + ": grid " + g.shape_string() +
                         " does not have side " + std::to_string(m * grid_side));
  }
  const std::size_t side = g.dim(1), C = g.dim(2);
  if (positional && positional->shape() != num::Shape{m, m, C}) {
    throw DimensionError("encoder " + std::to_string(f.encoder) + ": positional tile " + positional->shape_string());
  }
  std::vector<double> out;
  out.reserve(m * m * C);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const std::size_t cell = (m * i + a) * side + (m * j + b);
      for (std::size_t c = 0; c < C; ++c) {
        double v = g[cell * C + c];
        if (positional) v += (*positional)[(a * m + b) * C + c];
        out.push_back(v);
      }
    }
  }
  return num::Tensor({m * m, C}, std::move(out));
}

void validate_features(const SvaConfig& cfg, std::span<const EncoderFeatureMap> features) {
  if (features.size() != cfg.encoders()) {
    throw DimensionError("expected " + std::to_string(cfg.encoders()) + " encoder feature maps, got " +
                         std::to_string(features.size()));
  }
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto& f = features[k];
    const std::size_t side = cfg.feature_side(k);
    if (f.multiplier != cfg.multipliers[k]) {
      throw DimensionError("encoder " + std::to_string(k) + ": multiplier " + std::to_string(f.multiplier) +
                           " disagrees with config " + std::to_string(cfg.multipliers[k]));
    }
    if (f.grid.shape() != num::Shape{side, side, cfg.channels}) {
      throw DimensionError("encoder " + std::to_string(k) + ": expected grid " +
                           num::shape_to_string({side, side, cfg.channels}) + ", got " + f.grid.shape_string());
    }
  }
}

}  // namespace forge::sva
