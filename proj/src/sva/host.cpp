#include "forge/sva/host.hpp"

#include <random>
#include <string>

#include "forge/error.hpp"
#include "forge/numcore/ops.hpp"

namespace forge::sva {

HostStub HostStub::random(std::size_t layers, std::size_t channels, std::uint64_t seed, double perturbation) {
  if (channels == 0) throw InvalidArgument("host stub needs at least one channel");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, perturbation);
  HostStub stub;
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<double> w(channels * channels), b(channels);
    for (auto& v : w) v = noise(rng);
    for (auto& v : b) v = noise(rng);
    stub.blocks.push_back({num::Tensor({channels, channels}, std::move(w)), num::Tensor({channels}, std::move(b))});
  }
  return stub;
}

std::size_t HostStub::channels() const {
  if (blocks.empty()) throw InvalidArgument("host stub has no blocks");
  return blocks.front().weight.dim(0);
}

namespace {

num::Tensor apply_block(const HostBlock& block, const num::Tensor& h) {
  const std::size_t T = h.dim(0), C = h.dim(1);
  if (block.weight.shape() != num::Shape{C, C} || block.bias.shape() != num::Shape{C}) {
    throw DimensionError("host block does not match hidden width " + std::to_string(C));
  }
  auto update = num::matmul(h, block.weight);
  std::vector<double> out(h.data().begin(), h.data().end());
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c) out[t * C + c] += update[t * C + c] + block.bias[c];
  return num::Tensor(h.shape(), std::move(out));
}

}  // namespace

num::Tensor HostStub::forward(const num::Tensor& hidden) const {
  num::Tensor h = hidden;
  for (const auto& block : blocks) h = apply_block(block, h);
  return h;
}

std::vector<std::size_t> insertion_schedule(std::size_t layers, std::optional<std::size_t> stride) {
  std::vector<std::size_t> out;
  if (!stride) return out;
  if (*stride == 0) throw InvalidArgument("host stride must be positive");
  for (std::size_t l = *stride; l <= layers; l += *stride) out.push_back(l);
  return out;
}

HostForwardResult host_insert_forward(const num::Tensor& hidden, VisualSpan span, const HostStub& stub,
                                      std::span<const EncoderFeatureMap> features,
                                      std::span<const CrossAttentionParams> insertions,
                                      const std::vector<std::optional<num::Tensor>>& positional, const SvaConfig& cfg,
                                      AttentionLog* log) {
  const SvaConfig inner = cfg.for_host_insertion();
  inner.validate();
  if (hidden.rank() != 2 || hidden.dim(1) != inner.channels) {
    throw DimensionError("host hidden state " + hidden.shape_string() + " is not T x " +
                         std::to_string(inner.channels));
  }
  if (span.length != inner.tokens_per_group()) {
    throw DimensionError("visual span holds " + std::to_string(span.length) + " rows, expected " +
                         std::to_string(inner.tokens_per_group()));
  }
  if (span.begin + span.length > hidden.dim(0)) throw DimensionError("visual span runs past the hidden state");
  const auto schedule = insertion_schedule(stub.layers(), cfg.host_stride);
  if (insertions.size() < schedule.size()) {
    throw InvalidArgument("host needs " + std::to_string(schedule.size()) + " insertion layers, got " +
                          std::to_string(insertions.size()));
  }
  validate_features(inner, features);

  HostForwardResult result{hidden, {}};
  std::size_t next = 0;
  for (std::size_t l = 1; l <= stub.layers(); ++l) {
    result.hidden = apply_block(stub.blocks[l - 1], result.hidden);
    if (next >= schedule.size() || schedule[next] != l) continue;

    num::Tape tape;
    std::vector<num::Var> feats;
    for (const auto& f : features) feats.push_back(tape.constant(f.grid));
    std::vector<std::optional<num::Var>> pos;
    for (std::size_t k = 0; k < inner.encoders(); ++k) {
      pos.push_back(k < positional.size() && positional[k] ? std::optional(tape.constant(*positional[k]))
                                                           : std::nullopt);
    }
    validate_cross_attention(inner, insertions[next], "host layer " + std::to_string(l));
    auto layer = bind_cross_attention(tape, insertions[next], false, "host");
    auto queries = tape.constant(num::slice_rows(result.hidden, span.begin, span.length));
    auto updated = cross_attend(inner, queries, feats, layer, pos, log, l, 0, AttentionRecord::Site::host);

    const std::size_t C = inner.channels;
    std::vector<double> out(result.hidden.data().begin(), result.hidden.data().end());
    const auto rows = updated.value().data();
    std::copy(rows.begin(), rows.end(), out.begin() + static_cast<std::ptrdiff_t>(span.begin * C));
    result.hidden = num::Tensor(result.hidden.shape(), std::move(out));
    result.insertion_layers.push_back(l);
    ++next;
  }
  return result;
}

std::vector<CrossAttentionParams> init_insertion_params(const SvaConfig& cfg, std::size_t layers,
                                                        std::uint64_t seed) {
  const SvaConfig inner = cfg.for_host_insertion();
  std::mt19937_64 rng(seed);
  std::vector<CrossAttentionParams> out;
  for (std::size_t n = 0; n < insertion_schedule(layers, cfg.host_stride).size(); ++n) {
    out.push_back(initialize_cross_attention(inner, rng));
  }
  return out;
}

}  // namespace forge::sva
