#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "forge/numcore/autodiff.hpp"
#include "forge/numcore/grad_check.hpp"
#include "forge/sva/config.hpp"

namespace forge::sva {

// Projections of one cross-attention layer. All matrices act on row vectors:
// q = x * query_proj.
struct CrossAttentionParams {
  num::Tensor query_proj;                  // C x C
  std::vector<num::Tensor> key_proj;       // per encoder, C x C
  std::vector<num::Tensor> value_proj;     // per encoder, C x C
  std::optional<num::Tensor> global_proj;  // 2C x C, only with query augmentation
};

struct SvaParams {
  std::vector<num::Tensor> latents;                       // per group, [C]
  std::vector<std::vector<CrossAttentionParams>> layers;  // [depth][group]
  std::vector<std::optional<num::Tensor>> positional;     // per encoder, m x m x C when m > 1

  // Latents and positional encodings ~ N(0, 0.02^2); projections orthogonal.
  static SvaParams initialize(const SvaConfig& cfg, std::uint64_t seed);

  void validate(const SvaConfig& cfg) const;

  // Flat, deterministic listing used for fixtures and gradient checks.
  std::vector<num::NamedTensor> named() const;
  static SvaParams from_named(const SvaConfig& cfg, std::span<const num::NamedTensor> tensors);
};

CrossAttentionParams initialize_cross_attention(const SvaConfig& cfg, std::mt19937_64& rng);
// Identity query/key/value projections; global_proj (when present) keeps the
// query half and drops the pooled half.
CrossAttentionParams identity_cross_attention(const SvaConfig& cfg);
void validate_cross_attention(const SvaConfig& cfg, const CrossAttentionParams& p, const std::string& where);

// Column-orthonormal rows x cols matrix (rows >= cols) from Gaussian draws.
num::Tensor orthogonal_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

// ---- tape bindings ----

struct CrossAttentionVars {
  num::Var query_proj;
  std::vector<num::Var> key_proj;
  std::vector<num::Var> value_proj;
  std::optional<num::Var> global_proj;
};

struct SvaVars {
  std::vector<num::Var> latents;
  std::vector<std::vector<CrossAttentionVars>> layers;
  std::vector<std::optional<num::Var>> positional;
};

// Places every tensor on the tape, as parameters when `trainable`.
SvaVars bind_params(num::Tape& tape, const SvaConfig& cfg, const SvaParams& params, bool trainable);
// Rebuilds the structure from Vars listed in SvaParams::named() order.
SvaVars bind_ordered(const SvaConfig& cfg, std::span<const num::Var> vars);
CrossAttentionVars bind_cross_attention(num::Tape& tape, const CrossAttentionParams& p, bool trainable,
                                        const std::string& prefix);

}  // namespace forge::sva
