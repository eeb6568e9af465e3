#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "forge/numcore/tensor.hpp"

namespace forge::connector {

struct EnsembleOutput {
  num::Tensor tokens;     // [target x sum(d_k)]
  num::Tensor projected;  // [target x C]
};

// Each raw map is [n_k x d_k] with n_k a perfect square. Maps are reshaped to
// sqrt(n_k) x sqrt(n_k), bilinearly resized to sqrt(target) per side,
// flattened and concatenated along channels, then multiplied by
// projection [sum(d_k) x C].
EnsembleOutput concat_ensemble(std::span<const num::Tensor> maps, std::size_t target_tokens,
                               const num::Tensor& projection);

struct ResamplerParams {
  num::Tensor query_proj;  // C x C
  num::Tensor key_proj;    // C x C
  num::Tensor value_proj;  // C x C

  static ResamplerParams identity(std::size_t channels);
  static ResamplerParams random(std::size_t channels, std::uint64_t seed);
};

struct ResamplerOptions {
  bool residual = false;
};

// Global cross-attention: every latent row attends to every token of every
// feature block jointly, logits scaled by 1/sqrt(C).
num::Tensor resampler(const num::Tensor& latents, std::span<const num::Tensor> features, const ResamplerParams& params,
                      ResamplerOptions options = {});

}  // namespace forge::connector
