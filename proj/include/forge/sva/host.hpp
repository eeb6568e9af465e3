#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "forge/numcore/tensor.hpp"
#include "forge/sva/aggregator.hpp"

namespace forge::sva {

// h <- h + h * weight + bias, applied to every row independently.
struct HostBlock {
  num::Tensor weight;  // C x C
  num::Tensor bias;    // [C]
};

// Stand-in for the language model: a stack of near-identity affine blocks.
struct HostStub {
  std::vector<HostBlock> blocks;

  static HostStub random(std::size_t layers, std::size_t channels, std::uint64_t seed, double perturbation = 0.05);

  std::size_t layers() const noexcept { return blocks.size(); }
  std::size_t channels() const;
  num::Tensor forward(const num::Tensor& hidden) const;
};

// Rows [begin, begin + length) of the hidden state hold the visual tokens.
struct VisualSpan {
  std::size_t begin = 0;
  std::size_t length = 0;
};

struct HostForwardResult {
  num::Tensor hidden;
  std::vector<std::size_t> insertion_layers;  // 1-based host layer numbers
};

// Runs the stub; after every block whose 1-based number is a multiple of
// cfg.host_stride, the visual rows attend to the uncompressed features
// through one cross-attention layer (one group, depth one) and are updated
// in place. insertions[n] parameterizes the n-th insertion.
HostForwardResult host_insert_forward(const num::Tensor& hidden, VisualSpan span, const HostStub& stub,
                                      std::span<const EncoderFeatureMap> features,
                                      std::span<const CrossAttentionParams> insertions,
                                      const std::vector<std::optional<num::Tensor>>& positional, const SvaConfig& cfg,
                                      AttentionLog* log = nullptr);

// 1-based layers after which an insertion runs.
std::vector<std::size_t> insertion_schedule(std::size_t layers, std::optional<std::size_t> stride);

std::vector<CrossAttentionParams> init_insertion_params(const SvaConfig& cfg, std::size_t layers,
                                                        std::uint64_t seed);

}  // namespace forge::sva
