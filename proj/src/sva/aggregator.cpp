#include "forge/sva/aggregator.hpp"

#include <cmath>
#include <cstdio>

#include "forge/error.hpp"
#include "forge/numcore/ops.hpp"

namespace forge::sva {

QueryGrid QueryGrid::from_latent(const num::Tensor& latent, std::size_t grid_side, std::size_t group) {
  if (latent.rank() != 1) throw DimensionError("query latent must be a vector, got " + latent.shape_string());
  return {latent, num::repeat_rows(latent, grid_side * grid_side), group};
}

std::vector<std::vector<num::KeyRef>> sub_region_key_sets(const SvaConfig& cfg) {
  const std::size_t L = cfg.grid_side;
  std::vector<std::vector<num::KeyRef>> sets(L * L);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      auto& set = sets[i * L + j];
      set.reserve(cfg.keys_per_query());
      for (std::size_t k = 0; k < cfg.encoders(); ++k) {
        const std::size_t m = cfg.multipliers[k], side = m * L;
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = 0; b < m; ++b) {
            set.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>((m * i + a) * side + (m * j + b))});
          }
      }
    }
  }
  return sets;
}

num::Var cross_attend(const SvaConfig& cfg, num::Var queries, std::span<const num::Var> features,
                      const CrossAttentionVars& layer, std::span<const std::optional<num::Var>> positional,
                      AttentionLog* log, std::size_t layer_index, std::size_t group, AttentionRecord::Site site) {
  const std::size_t L = cfg.grid_side, C = cfg.channels, N = cfg.encoders();
  if (queries.shape() != num::Shape{L * L, C}) {
    throw DimensionError("cross_attend: queries " + queries.value().shape_string() + " do not form a " +
                         std::to_string(L) + "x" + std::to_string(L) + " grid of width " + std::to_string(C));
  }
  if (features.size() != N) {
    throw DimensionError("cross_attend: expected " + std::to_string(N) + " encoder feature maps, got " +
                         std::to_string(features.size()));
  }
  if (layer.key_proj.size() != N || layer.value_proj.size() != N) {
    throw DimensionError("cross_attend: layer carries projections for " + std::to_string(layer.key_proj.size()) +
                         " encoders, config has " + std::to_string(N));
  }
  for (std::size_t k = 0; k < N; ++k) {
    const std::size_t side = cfg.feature_side(k);
    if (features[k].shape() != num::Shape{side, side, C}) {
      throw DimensionError("encoder " + std::to_string(k) + ": expected grid " +
                           num::shape_to_string({side, side, C}) + ", got " + features[k].value().shape_string());
    }
  }

  num::Var query_in = queries;
  if (cfg.global_query_augmentation) {
    if (!layer.global_proj) throw DimensionError("cross_attend: query augmentation needs a global projection");
    num::Var pooled = num::global_mean_pool(features[0]);
    for (std::size_t k = 1; k < N; ++k) pooled = num::add(pooled, num::global_mean_pool(features[k]));
    pooled = num::scale(pooled, 1.0 / static_cast<double>(N));
    query_in = num::matmul(num::concat_last(queries, num::repeat_rows(pooled, L * L)), *layer.global_proj);
  }
  num::Var q = num::matmul(query_in, layer.query_proj);

  std::vector<num::Var> keys, values;
  for (std::size_t k = 0; k < N; ++k) {
    num::Var grid = features[k];
    if (cfg.has_positional(k)) {
      if (k >= positional.size() || !positional[k]) {
        throw DimensionError("encoder " + std::to_string(k) + ": positional encodings are enabled but missing");
      }
      grid = num::add_tiled(grid, *positional[k]);
    }
    const std::size_t side = cfg.feature_side(k);
    num::Var flat = num::reshape(grid, {side * side, C});
    keys.push_back(num::matmul(flat, layer.key_proj[k]));
    values.push_back(num::matmul(flat, layer.value_proj[k]));
  }

  num::AttentionTrace trace;
  num::Var attended = num::indexed_attention(q, keys, values, sub_region_key_sets(cfg),
                                             1.0 / std::sqrt(static_cast<double>(C)), log ? &trace : nullptr);
  if (log) {
    std::vector<std::size_t> per_encoder;
    for (auto m : cfg.multipliers) per_encoder.push_back(m * m);
    for (std::size_t r = 0; r < L * L; ++r) {
      log->records.push_back(AttentionRecord{site, layer_index, group, r, std::move(trace.logits[r]),
                                             std::move(trace.weights[r]), per_encoder});
    }
  }
  return cfg.residual ? num::add(queries, attended) : attended;
}

num::Var sva_forward(const SvaConfig& cfg, std::span<const num::Var> features, const SvaVars& params,
                     AttentionLog* log) {
  cfg.validate();
  if (params.latents.size() != cfg.groups || params.layers.size() != cfg.depth) {
    throw DimensionError("sva_forward: parameters do not match depth/groups of the config");
  }
  std::vector<num::Var> outputs;
  for (std::size_t g = 0; g < cfg.groups; ++g) {
    num::Var x = num::repeat_rows(params.latents[g], cfg.tokens_per_group());
    for (std::size_t d = 0; d < cfg.depth; ++d) {
      x = cross_attend(cfg, x, features, params.layers[d].at(g), params.positional, log, d, g);
    }
    outputs.push_back(x);
  }
  return outputs.size() == 1 ? outputs.front() : num::concat_rows(outputs);
}

namespace {

std::vector<num::Var> feature_constants(num::Tape& tape, const SvaConfig& cfg,
                                        std::span<const EncoderFeatureMap> features) {
  validate_features(cfg, features);
  std::vector<num::Var> out;
  for (const auto& f : features) out.push_back(tape.constant(f.grid));
  return out;
}

}  // namespace

QueryGrid sva_cross_attend(const QueryGrid& queries, std::span<const EncoderFeatureMap> features,
                           const CrossAttentionParams& layer, const std::vector<std::optional<num::Tensor>>& positional,
                           const SvaConfig& cfg, AttentionLog* log) {
  cfg.validate();
  validate_cross_attention(cfg, layer, "cross_attend");
  num::Tape tape;
  auto feats = feature_constants(tape, cfg, features);
  auto vars = bind_cross_attention(tape, layer, false, "layer");
  std::vector<std::optional<num::Var>> pos;
  for (std::size_t k = 0; k < cfg.encoders(); ++k) {
    if (k < positional.size() && positional[k]) {
      pos.emplace_back(tape.constant(*positional[k]));
    } else {
      pos.emplace_back(std::nullopt);
    }
  }
  auto out = cross_attend(cfg, tape.constant(queries.expanded), feats, vars, pos, log, 0, queries.group);
  return {queries.latent, out.value(), queries.group};
}

num::Tensor sva_forward(std::span<const EncoderFeatureMap> features, const SvaParams& params, const SvaConfig& cfg,
                        AttentionLog* log) {
  num::Tape tape;
  auto feats = feature_constants(tape, cfg, features);
  auto vars = bind_params(tape, cfg, params, false);
  return sva_forward(cfg, feats, vars, log).value();
}

std::vector<double> attention_mass_by_encoder(const AttentionLog& log) {
  if (log.records.empty()) throw InvalidArgument("attention_mass_by_encoder: empty attention log");
  const std::size_t N = log.records.front().keys_per_encoder.size();
  std::vector<double> mass(N, 0.0);
  for (const auto& r : log.records) {
    if (r.keys_per_encoder.size() != N) throw DimensionError("attention log mixes encoder counts");
    std::size_t at = 0;
    for (std::size_t k = 0; k < N; ++k) {
      for (std::size_t j = 0; j < r.keys_per_encoder[k]; ++j) mass[k] += r.weights.at(at++);
    }
  }
  for (auto& m : mass) m /= static_cast<double>(log.records.size());
  return mass;
}

std::string format_attention_report(std::span<const std::string> encoder_names, std::span<const double> fractions) {
  if (encoder_names.size() != fractions.size()) throw InvalidArgument("one name per encoder fraction is required");
  std::string out;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " %.1f%%\n", 100.0 * fractions[k]);
    out += encoder_names[k] + buf;
  }
  return out;
}

}  // namespace forge::sva
