#include "forge/sva/params.hpp"

#include <cmath>
#include <map>

#include "forge/error.hpp"

namespace forge::sva {

namespace {

num::Tensor gaussian(num::Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> data(num::shape_volume(shape));
  for (auto& v : data) v = dist(rng);
  return num::Tensor(std::move(shape), std::move(data));
}

void require_shape(const num::Tensor& t, const num::Shape& shape, const std::string& what) {
  if (t.shape() != shape) {
    throw DimensionError(what + ": expected " + num::shape_to_string(shape) + ", got " + t.shape_string());
  }
}

std::string layer_prefix(std::size_t d, std::size_t g) {
  return "layer" + std::to_string(d) + ".group" + std::to_string(g);
}

void append_cross_attention(std::vector<num::NamedTensor>& out, const CrossAttentionParams& p,
                            const std::string& prefix) {
  out.push_back({prefix + ".query_proj", p.query_proj});
  for (std::size_t k = 0; k < p.key_proj.size(); ++k) {
    out.push_back({prefix + ".key_proj.enc" + std::to_string(k), p.key_proj[k]});
  }
  for (std::size_t k = 0; k < p.value_proj.size(); ++k) {
    out.push_back({prefix + ".value_proj.enc" + std::to_string(k), p.value_proj[k]});
  }
  if (p.global_proj) out.push_back({prefix + ".global_proj", *p.global_proj});
}

}  // namespace

num::Tensor orthogonal_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  if (cols > rows) throw InvalidArgument("orthogonal_matrix: need rows >= cols");
  std::normal_distribution<double> dist(0.0, 1.0);
  // Modified Gram-Schmidt over columns; redraw a column if it collapses.
  std::vector<std::vector<double>> basis;
  while (basis.size() < cols) {
    std::vector<double> v(rows);
    for (auto& e : v) e = dist(rng);
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < rows; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < rows; ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double e : v) norm += e * e;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (auto& e : v) e /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<double> data(rows * cols);
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < rows; ++r) data[r * cols + c] = basis[c][r];
  return num::Tensor({rows, cols}, std::move(data));
}

CrossAttentionParams initialize_cross_attention(const SvaConfig& cfg, std::mt19937_64& rng) {
  const std::size_t C = cfg.channels;
  CrossAttentionParams p;
  p.query_proj = orthogonal_matrix(C, C, rng);
  for (std::size_t k = 0; k < cfg.encoders(); ++k) p.key_proj.push_back(orthogonal_matrix(C, C, rng));
  for (std::size_t k = 0; k < cfg.encoders(); ++k) p.value_proj.push_back(orthogonal_matrix(C, C, rng));
  if (cfg.global_query_augmentation) p.global_proj = orthogonal_matrix(2 * C, C, rng);
  return p;
}

CrossAttentionParams identity_cross_attention(const SvaConfig& cfg) {
  const std::size_t C = cfg.channels;
  CrossAttentionParams p;
  p.query_proj = num::Tensor::identity(C);
  p.key_proj.assign(cfg.encoders(), num::Tensor::identity(C));
  p.value_proj.assign(cfg.encoders(), num::Tensor::identity(C));
  if (cfg.global_query_augmentation) {
    std::vector<double> data(2 * C * C, 0.0);
    for (std::size_t i = 0; i < C; ++i) data[i * C + i] = 1.0;
    p.global_proj = num::Tensor({2 * C, C}, std::move(data));
  }
  return p;
}

void validate_cross_attention(const SvaConfig& cfg, const CrossAttentionParams& p, const std::string& where) {
  const std::size_t C = cfg.channels;
  require_shape(p.query_proj, {C, C}, where + ".query_proj");
  if (p.key_proj.size() != cfg.encoders() || p.value_proj.size() != cfg.encoders()) {
    throw DimensionError(where + ": expected key/value projections for " + std::to_string(cfg.encoders()) +
                         " encoders");
  }
  for (std::size_t k = 0; k < cfg.encoders(); ++k) {
    require_shape(p.key_proj[k], {C, C}, where + ".key_proj.enc" + std::to_string(k));
    require_shape(p.value_proj[k], {C, C}, where + ".value_proj.enc" + std::to_string(k));
  }
  if (cfg.global_query_augmentation) {
    if (!p.global_proj) throw DimensionError(where + ": query augmentation is on but global_proj is missing");
    require_shape(*p.global_proj, {2 * C, C}, where + ".global_proj");
  }
}

SvaParams SvaParams::initialize(const SvaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  SvaParams p;
  for (std::size_t g = 0; g < cfg.groups; ++g) p.latents.push_back(gaussian({cfg.channels}, 0.02, rng));
  p.layers.resize(cfg.depth);
  for (std::size_t d = 0; d < cfg.depth; ++d)
    for (std::size_t g = 0; g < cfg.groups; ++g) p.layers[d].push_back(initialize_cross_attention(cfg, rng));
  for (std::size_t k = 0; k < cfg.encoders(); ++k) {
    const auto m = cfg.multipliers[k];
    if (cfg.has_positional(k)) {
      p.positional.emplace_back(gaussian({m, m, cfg.channels}, 0.02, rng));
    } else {
      p.positional.emplace_back(std::nullopt);
    }
  }
  return p;
}

void SvaParams::validate(const SvaConfig& cfg) const {
  cfg.validate();
  if (latents.size() != cfg.groups) throw DimensionError("sva params: expected one latent per group");
  for (std::size_t g = 0; g < latents.size(); ++g) {
    require_shape(latents[g], {cfg.channels}, "latent.g" + std::to_string(g));
  }
  if (layers.size() != cfg.depth) throw DimensionError("sva params: expected " + std::to_string(cfg.depth) + " layers");
  for (std::size_t d = 0; d < cfg.depth; ++d) {
    if (layers[d].size() != cfg.groups) throw DimensionError("sva params: layer " + std::to_string(d) + " group count");
    for (std::size_t g = 0; g < cfg.groups; ++g) validate_cross_attention(cfg, layers[d][g], layer_prefix(d, g));
  }
  if (positional.size() != cfg.encoders()) throw DimensionError("sva params: positional list must cover every encoder");
  for (std::size_t k = 0; k < cfg.encoders(); ++k) {
    const auto m = cfg.multipliers[k];
    if (cfg.has_positional(k)) {
      if (!positional[k]) throw DimensionError("sva params: encoder " + std::to_string(k) + " needs positional encodings");
      require_shape(*positional[k], {m, m, cfg.channels}, "positional.enc" + std::to_string(k));
    } else if (positional[k]) {
      throw DimensionError("sva params: encoder " + std::to_string(k) + " must not carry positional encodings");
    }
  }
}

std::vector<num::NamedTensor> SvaParams::named() const {
  std::vector<num::NamedTensor> out;
  for (std::size_t g = 0; g < latents.size(); ++g) out.push_back({"latent.g" + std::to_string(g), latents[g]});
  for (std::size_t d = 0; d < layers.size(); ++d)
    for (std::size_t g = 0; g < layers[d].size(); ++g) append_cross_attention(out, layers[d][g], layer_prefix(d, g));
  for (std::size_t k = 0; k < positional.size(); ++k) {
    if (positional[k]) out.push_back({"positional.enc" + std::to_string(k), *positional[k]});
  }
  return out;
}

SvaParams SvaParams::from_named(const SvaConfig& cfg, std::span<const num::NamedTensor> tensors) {
  std::map<std::string, const num::Tensor*> byname;
  for (const auto& t : tensors) byname[t.name] = &t.value;
  auto take = [&](const std::string& name) -> num::Tensor {
    auto it = byname.find(name);
    if (it == byname.end()) throw NotFound("sva params: missing tensor '" + name + "'");
    return *it->second;
  };
  SvaParams p;
  for (std::size_t g = 0; g < cfg.groups; ++g) p.latents.push_back(take("latent.g" + std::to_string(g)));
  p.layers.resize(cfg.depth);
  for (std::size_t d = 0; d < cfg.depth; ++d) {
    for (std::size_t g = 0; g < cfg.groups; ++g) {
      const auto prefix = layer_prefix(d, g);
      CrossAttentionParams l;
      l.query_proj = take(prefix + ".query_proj");
      for (std::size_t k = 0; k < cfg.encoders(); ++k) {
        l.key_proj.push_back(take(prefix + ".key_proj.enc" + std::to_string(k)));
        l.value_proj.push_back(take(prefix + ".value_proj.enc" + std::to_string(k)));
      }
      if (cfg.global_query_augmentation) l.global_proj = take(prefix + ".global_proj");
      p.layers[d].push_back(std::move(l));
    }
  }
  for (std::size_t k = 0; k < cfg.encoders(); ++k) {
    if (cfg.has_positional(k)) {
      p.positional.emplace_back(take("positional.enc" + std::to_string(k)));
    } else {
      p.positional.emplace_back(std::nullopt);
    }
  }
  p.validate(cfg);
  return p;
}

CrossAttentionVars bind_cross_attention(num::Tape& tape, const CrossAttentionParams& p, bool trainable,
                                        const std::string& prefix) {
  auto put = [&](const std::string& name, const num::Tensor& t) {
    return trainable ? tape.parameter(name, t) : tape.constant(t);
  };
  CrossAttentionVars v;
  v.query_proj = put(prefix + ".query_proj", p.query_proj);
  for (std::size_t k = 0; k < p.key_proj.size(); ++k) {
    v.key_proj.push_back(put(prefix + ".key_proj.enc" + std::to_string(k), p.key_proj[k]));
  }
  for (std::size_t k = 0; k < p.value_proj.size(); ++k) {
    v.value_proj.push_back(put(prefix + ".value_proj.enc" + std::to_string(k), p.value_proj[k]));
  }
  if (p.global_proj) v.global_proj = put(prefix + ".global_proj", *p.global_proj);
  return v;
}

SvaVars bind_params(num::Tape& tape, const SvaConfig& cfg, const SvaParams& params, bool trainable) {
  params.validate(cfg);
  std::vector<num::Var> vars;
  for (auto& nt : params.named()) vars.push_back(trainable ? tape.parameter(nt.name, nt.value) : tape.constant(nt.value));
  return bind_ordered(cfg, vars);
}

SvaVars bind_ordered(const SvaConfig& cfg, std::span<const num::Var> vars) {
  std::size_t at = 0;
  auto next = [&]() {
    if (at >= vars.size()) throw DimensionError("sva bind: too few parameter Vars");
    return vars[at++];
  };
  SvaVars v;
  for (std::size_t g = 0; g < cfg.groups; ++g) v.latents.push_back(next());
  v.layers.resize(cfg.depth);
  for (std::size_t d = 0; d < cfg.depth; ++d) {
    for (std::size_t g = 0; g < cfg.groups; ++g) {
      CrossAttentionVars l;
      l.query_proj = next();
      for (std::size_t k = 0; k < cfg.encoders(); ++k) l.key_proj.push_back(next());
      for (std::size_t k = 0; k < cfg.encoders(); ++k) l.value_proj.push_back(next());
      if (cfg.global_query_augmentation) l.global_proj = next();
      v.layers[d].push_back(std::move(l));
    }
  }
  for (std::size_t k = 0; k < cfg.encoders(); ++k) {
    if (cfg.has_positional(k)) {
      v.positional.emplace_back(next());
    } else {
      v.positional.emplace_back(std::nullopt);
    }
  }
  if (at != vars.size()) throw DimensionError("sva bind: " + std::to_string(vars.size() - at) + " unused parameter Vars");
  return v;
}

}  // namespace forge::sva
