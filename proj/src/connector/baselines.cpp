#include "forge/connector/baselines.hpp"

#include <cmath>
#include <random>
#include <string>

#include "forge/error.hpp"
#include "forge/numcore/ops.hpp"

namespace forge::connector {

namespace {

std::size_t exact_sqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : 0;
}

}  // namespace

EnsembleOutput concat_ensemble(std::span<const num::Tensor> maps, std::size_t target_tokens,
                               const num::Tensor& projection) {
  if (maps.empty()) throw InvalidArgument("concat_ensemble: no encoder maps");
  const std::size_t side = exact_sqrt(target_tokens);
  if (side == 0) throw InvalidArgument("concat_ensemble: target " + std::to_string(target_tokens) + " is not a square");
  num::Tensor stacked;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto& raw = maps[k];
    if (raw.rank() != 2) throw DimensionError("encoder " + std::to_string(k) + ": expected tokens x channels");
    const std::size_t native = exact_sqrt(raw.dim(0));
    if (native == 0) {
      throw InvalidArgument("encoder " + std::to_string(k) + ": " + std::to_string(raw.dim(0)) +
                            " tokens do not form a square grid");
    }
    auto grid = num::bilinear_resize(raw.reshaped({native, native, raw.dim(1)}), side, side);
    auto flat = grid.reshaped({target_tokens, raw.dim(1)});
    stacked = stacked.empty() ? flat : num::concat_last(stacked, flat);
  }
  if (projection.rank() != 2 || projection.dim(0) != stacked.dim(1)) {
    throw DimensionError("concat_ensemble: projection " + projection.shape_string() + " does not accept " +
                         std::to_string(stacked.dim(1)) + " channels");
  }
  auto projected = num::matmul(stacked, projection);
  return {std::move(stacked), std::move(projected)};
}

ResamplerParams ResamplerParams::identity(std::size_t channels) {
  auto id = num::Tensor::identity(channels);
  return {id, id, id};
}

ResamplerParams ResamplerParams::random(std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(channels)));
  auto draw = [&] {
    std::vector<double> v(channels * channels);
    for (auto& x : v) x = dist(rng);
    return num::Tensor({channels, channels}, std::move(v));
  };
  auto q = draw(), k = draw(), v = draw();
  return {q, k, v};
}

num::Tensor resampler(const num::Tensor& latents, std::span<const num::Tensor> features, const ResamplerParams& params,
                      ResamplerOptions options) {
  if (latents.rank() != 2) throw DimensionError("resampler: latents must be R x C");
  if (features.empty()) throw InvalidArgument("resampler: empty feature set");
  const std::size_t C = latents.dim(1);
  for (const auto* w : {&params.query_proj, &params.key_proj, &params.value_proj}) {
    if (w->shape() != num::Shape{C, C}) throw DimensionError("resampler: projection " + w->shape_string());
  }
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (features[k].rank() != 2 || features[k].dim(1) != C) {
      throw DimensionError("encoder " + std::to_string(k) + ": features " + features[k].shape_string() +
                           " are not n x " + std::to_string(C));
    }
  }
  auto tokens = num::concat_rows(features);
  auto q = num::matmul(latents, params.query_proj);
  auto k = num::matmul(tokens, params.key_proj);
  auto v = num::matmul(tokens, params.value_proj);
  auto logits = num::scale(num::matmul(q, num::transpose(k)), 1.0 / std::sqrt(static_cast<double>(C)));
  auto out = num::matmul(num::softmax_last(logits), v);
  return options.residual ? num::add(latents, out) : out;
}

}  // namespace forge::connector
