#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/numcore/autodiff.hpp"
#include "forge/sva/config.hpp"
#include "forge/sva/feature_map.hpp"
#include "forge/sva/params.hpp"

namespace forge::sva {

// Query grid of one group. Before the first layer every row of `expanded`
// equals `latent`.
struct QueryGrid {
  num::Tensor latent;    // [C]
  num::Tensor expanded;  // [L^2 x C]
  std::size_t group = 0;

  static QueryGrid from_latent(const num::Tensor& latent, std::size_t grid_side, std::size_t group);
};

// What one query saw in one cross-attention pass.
struct AttentionRecord {
  enum class Site { connector, host };
  Site site = Site::connector;
  std::size_t layer = 0;  // connector depth index, or 1-based host layer
  std::size_t group = 0;
  std::size_t query = 0;  // row-major index i * L + j
  std::vector<double> logits;
  std::vector<double> weights;                // softmax over all keys, encoder-major
  std::vector<std::size_t> keys_per_encoder;  // m_k^2 for each encoder
};

struct AttentionLog {
  std::vector<AttentionRecord> records;
};

// One spatially aligned cross-attention layer on the tape.
//   queries:   [L^2 x C]
//   features:  one (m_k L) x (m_k L) x C grid per encoder
//   positional: per encoder, a tile added to every sub-region (may be empty)
// The pooled global feature (mean over encoders of each grid's spatial mean)
// is concatenated to each query row and mapped back to C before the query
// projection when augmentation is on.
num::Var cross_attend(const SvaConfig& cfg, num::Var queries, std::span<const num::Var> features,
                      const CrossAttentionVars& layer, std::span<const std::optional<num::Var>> positional,
                      AttentionLog* log = nullptr, std::size_t layer_index = 0, std::size_t group = 0,
                      AttentionRecord::Site site = AttentionRecord::Site::connector);

// All groups, each through `depth` layers; outputs concatenated on the token
// axis into [(G L^2) x C].
num::Var sva_forward(const SvaConfig& cfg, std::span<const num::Var> features, const SvaVars& params,
                     AttentionLog* log = nullptr);

// ---- tensor-level entry points ----

QueryGrid sva_cross_attend(const QueryGrid& queries, std::span<const EncoderFeatureMap> features,
                           const CrossAttentionParams& layer, const std::vector<std::optional<num::Tensor>>& positional,
                           const SvaConfig& cfg, AttentionLog* log = nullptr);

num::Tensor sva_forward(std::span<const EncoderFeatureMap> features, const SvaParams& params, const SvaConfig& cfg,
                        AttentionLog* log = nullptr);

// Key rows (encoder, flattened grid row) visible to each query, encoder-major
// and row-major within each sub-region.
std::vector<std::vector<num::KeyRef>> sub_region_key_sets(const SvaConfig& cfg);

// Mean over logged queries of the softmax mass that landed on each encoder.
std::vector<double> attention_mass_by_encoder(const AttentionLog& log);

// "SigLIP 29.7%" style lines, one per encoder.
std::string format_attention_report(std::span<const std::string> encoder_names, std::span<const double> fractions);

}  // namespace forge::sva
