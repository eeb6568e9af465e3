#include "forge/sva/bench.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "forge/error.hpp"
#include "forge/numcore/grad_check.hpp"
#include "forge/numcore/tensor_io.hpp"

namespace forge::sva {

using Row = std::vector<double>;

namespace {

Row row_times(const Row& x, const num::Tensor& w) {
  Row out(w.dim(1), 0.0);
  for (std::size_t c = 0; c < w.dim(1); ++c)
    for (std::size_t r = 0; r < x.size(); ++r) out[c] += x[r] * w.at(r, c);
  return out;
}

num::Tensor uniform(std::mt19937_64& rng, num::Shape shape, double spread) {
  std::uniform_real_distribution<double> dist(-spread, spread);
  std::vector<double> v(num::shape_volume(shape));
  for (auto& x : v) x = dist(rng);
  return num::Tensor(std::move(shape), std::move(v));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

num::Tensor dense_reference_forward(const SvaConfig& cfg, const SvaParams& p,
                                    std::span<const EncoderFeatureMap> features) {
  validate_features(cfg, features);
  const std::size_t L = cfg.grid_side, C = cfg.channels, N = cfg.encoders();
  Row pooled(C, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    const auto& g = features[k].grid;
    const std::size_t cells = g.dim(0) * g.dim(1);
    for (std::size_t cell = 0; cell < cells; ++cell)
      for (std::size_t c = 0; c < C; ++c) pooled[c] += g[cell * C + c] / static_cast<double>(cells * N);
  }

  std::vector<double> out;
  for (std::size_t g = 0; g < cfg.groups; ++g) {
    std::vector<Row> x(L * L, Row(p.latents[g].data().begin(), p.latents[g].data().end()));
    for (std::size_t d = 0; d < cfg.depth; ++d) {
      const auto& layer = p.layers[d][g];
      std::vector<Row> next = x;
      for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
          Row qin = x[i * L + j];
          if (cfg.global_query_augmentation) {
            qin.insert(qin.end(), pooled.begin(), pooled.end());
            qin = row_times(qin, *layer.global_proj);
          }
          const Row q = row_times(qin, layer.query_proj);
          std::vector<Row> keys, vals;
          for (std::size_t k = 0; k < N; ++k) {
            const std::size_t m = cfg.multipliers[k], side = m * L;
            for (std::size_t a = 0; a < m; ++a)
              for (std::size_t b = 0; b < m; ++b) {
                Row f(C);
                for (std::size_t c = 0; c < C; ++c) {
                  f[c] = features[k].grid[((m * i + a) * side + (m * j + b)) * C + c];
                  if (cfg.has_positional(k)) f[c] += (*p.positional[k])[(a * m + b) * C + c];
                }
                keys.push_back(row_times(f, layer.key_proj[k]));
                vals.push_back(row_times(f, layer.value_proj[k]));
              }
          }
          std::vector<double> w(keys.size());
          double mx = -INFINITY;
          for (std::size_t n = 0; n < keys.size(); ++n) {
            double s = 0.0;
            for (std::size_t c = 0; c < C; ++c) s += q[c] * keys[n][c];
            w[n] = s / std::sqrt(static_cast<double>(C));
            mx = std::max(mx, w[n]);
          }
          double z = 0.0;
          for (auto& l : w) z += (l = std::exp(l - mx));
          Row upd(C, 0.0);
          for (std::size_t n = 0; n < keys.size(); ++n)
            for (std::size_t c = 0; c < C; ++c) upd[c] += w[n] / z * vals[n][c];
          for (std::size_t c = 0; c < C; ++c) next[i * L + j][c] = (cfg.residual ? x[i * L + j][c] : 0.0) + upd[c];
        }
      x = std::move(next);
    }
    for (const auto& r : x) out.insert(out.end(), r.begin(), r.end());
  }
  return num::Tensor({cfg.groups * L * L, C}, std::move(out));
}

BenchSettings BenchSettings::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  BenchSettings s;
  try {
    s.config = config_from_json(j.at("sva"));
    s.seed = j.value("seed", std::uint64_t{0});
    s.encoder_names = j.value("encoders", std::vector<std::string>{});
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base.empty() ? base / path : path;
    };
    for (const auto& f : j.value("features", std::vector<std::string>{})) s.feature_files.push_back(resolve(f));
    if (j.contains("params")) s.params_file = resolve(j["params"].get<std::string>());
    s.grad_check = j.value("grad_check", true);
    s.eps = j.value("eps", 1e-5);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bench config: ") + e.what());
  }
  if (!s.encoder_names.empty() && s.encoder_names.size() != s.config.encoders())
    throw InvalidArgument("bench config: one encoder name per multiplier is required");
  if (!s.feature_files.empty() && s.feature_files.size() != s.config.encoders())
    throw InvalidArgument("bench config: one feature file per encoder is required");
  return s;
}

bool BenchReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : checks)
    out.push_back({{"name", c.name}, {"value", c.value}, {"pass", c.pass}, {"seconds", c.seconds}});
  return out;
}

BenchReport run_bench(const BenchSettings& s) {
  const auto& cfg = s.config;
  cfg.validate();
  std::mt19937_64 rng(s.seed);
  BenchReport report;

  std::vector<EncoderFeatureMap> feats;
  for (std::size_t k = 0; k < cfg.encoders(); ++k) {
    const std::size_t side = cfg.feature_side(k);
    auto grid = s.feature_files.empty() ? uniform(rng, {side, side, cfg.channels}, 1.0)
                                        : num::load_tensor(s.feature_files[k].string());
    feats.push_back({k, cfg.multipliers[k], std::move(grid)});
  }
  validate_features(cfg, feats);
  const auto params = s.params_file.empty() ? SvaParams::initialize(cfg, rng())
                                            : SvaParams::from_named(cfg, num::load_bundle(s.params_file.string()));
  params.validate(cfg);

  auto t0 = std::chrono::steady_clock::now();
  AttentionLog log;
  const auto out = sva_forward(feats, params, cfg, &log);
  const double forward_s = seconds_since(t0);
  report.checks.push_back({"output_tokens", static_cast<double>(out.dim(0)), out.dim(0) == cfg.output_tokens(), 0});

  t0 = std::chrono::steady_clock::now();
  const double diff = num::max_abs_diff(out, dense_reference_forward(cfg, params, feats));
  report.checks.push_back({"forward_vs_dense_reference", diff, diff < s.forward_tolerance, forward_s + seconds_since(t0)});

  double worst = 0.0;
  for (const auto& r : log.records) {
    double sum = 0.0;
    for (double w : r.weights) sum += w;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  report.checks.push_back({"attention_normalization", worst, worst < 1e-9, 0});

  const auto mass = attention_mass_by_encoder(log);
  std::vector<std::string> names = s.encoder_names;
  if (names.empty())
    for (std::size_t k = 0; k < mass.size(); ++k) names.push_back("enc" + std::to_string(k));
  double total = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    report.checks.push_back({"attention_mass." + names[k], mass[k], mass[k] >= 0.0 && mass[k] <= 1.0, 0});
    total += mass[k];
  }
  report.checks.push_back({"attention_mass_sum", total, std::abs(total - 1.0) < 1e-9, 0});
  report.attention_table = format_attention_report(names, mass);

  if (s.grad_check) {
    t0 = std::chrono::steady_clock::now();
    const auto named = params.named();
    // Fixed random readout so every output coordinate reaches the loss.
    const auto readout = uniform(rng, {cfg.output_tokens(), cfg.channels}, 1.0);
    auto loss = [&](num::Tape& tape, std::span<const num::Var> vars) {
      std::vector<num::Var> fv;
      for (const auto& f : feats) fv.push_back(tape.constant(f.grid));
      return num::weighted_sum(sva_forward(cfg, fv, bind_ordered(cfg, vars)), readout);
    };
    const auto gc = num::grad_check(loss, named, s.eps);
    report.checks.push_back(
        {"grad_check_max_rel_error", gc.max_rel_error, gc.max_rel_error < s.gradient_tolerance, seconds_since(t0)});
  }
  return report;
}

}  // namespace forge::sva
