// One PASS/FAIL line per primary acceptance criterion. Exit status is the
// number of failing criteria.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "forge/curate/dhash.hpp"
#include "forge/curate/image.hpp"
#include "forge/curate/pool.hpp"
#include "forge/cvbench/generate.hpp"
#include "forge/cvbench/score.hpp"
#include "forge/eval/analytics.hpp"
#include "forge/eval/grading.hpp"
#include "forge/jsonl.hpp"
#include "forge/numcore/grad_check.hpp"
#include "forge/review/store.hpp"
#include "forge/sva/aggregator.hpp"
#include "../support/random.hpp"
#include "../support/review_items.hpp"
#include "../support/scenes.hpp"
#include "../support/sva_oracle.hpp"

using namespace forge;
using Clock = std::chrono::steady_clock;

namespace {

const std::filesystem::path kFixtures = FORGE_FIXTURE_DIR;
const std::filesystem::path kConfig = FORGE_CONFIG_DIR;

// Collects failed expectations; the first few are reported.
struct Verdict {
  std::vector<std::string> failures;
  std::string detail;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- SVA

sva::SvaConfig make_cfg(std::size_t L, std::size_t C, std::vector<std::size_t> m, std::size_t D, std::size_t G) {
  sva::SvaConfig cfg;
  cfg.grid_side = L;
  cfg.channels = C;
  cfg.multipliers = std::move(m);
  cfg.depth = D;
  cfg.groups = G;
  return cfg;
}

void sva_correctness(Verdict& v) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  int configs = 0;
  for (std::size_t N : {1, 2})
    for (std::size_t L : {1, 2, 3})
      for (std::size_t D : {1, 2})
        for (std::size_t G : {1, 2})
          for (bool aug : {false, true}) {
            std::vector<std::size_t> m = N == 1 ? std::vector<std::size_t>{2} : std::vector<std::size_t>{1, 2};
            auto cfg = make_cfg(L, 4, m, D, G);
            cfg.global_query_augmentation = aug;
            auto params = testing::random_sva_params(cfg, rng);
            auto feats = testing::random_features(cfg, rng);
            const double d = num::max_abs_diff(sva::sva_forward(feats, params, cfg),
                                               testing::dense_sva_oracle(cfg, params, feats));
            worst = std::max(worst, d);
            ++configs;
          }
  v.expect(worst < 1e-9, "max |delta| " + fmt("%.3g", worst) + " >= 1e-9");

  // One key per query with identity projections returns that key.
  auto cfg = make_cfg(3, 4, {1}, 1, 1);
  cfg.global_query_augmentation = false;
  cfg.residual = false;
  auto feats = testing::random_features(cfg, rng);
  sva::SvaParams p;
  p.latents = {testing::random_tensor(rng, {4})};
  p.layers = {{sva::identity_cross_attention(cfg)}};
  p.positional = {std::nullopt};
  const auto out = sva::sva_forward(feats, p, cfg);
  const bool exact = std::equal(out.data().begin(), out.data().end(), feats[0].grid.data().begin());
  v.expect(exact, "single-key case not exact");

  const double secs = seconds_since(t0);
  v.expect(secs < 5.0, "runtime " + fmt("%.2f", secs) + " s >= 5 s");
  v.detail = std::to_string(configs) + " configs, max|delta|=" + fmt("%.2g", worst) + ", single-key " +
             (exact ? "exact" : "inexact") + ", " + fmt("%.2f", secs) + " s";
}

void sva_gradients(Verdict& v) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  std::size_t tensors = 0;
  for (auto cfg : {make_cfg(3, 4, {1, 2}, 2, 2), make_cfg(2, 3, {2}, 1, 1), make_cfg(3, 4, {1, 2}, 1, 2)}) {
    auto named = testing::random_sva_params(cfg, rng, 0.5).named();
    auto feats = testing::random_features(cfg, rng);
    auto readout = testing::random_tensor(rng, {cfg.output_tokens(), cfg.channels});
    auto loss = [&](num::Tape& tape, std::span<const num::Var> vars) {
      std::vector<num::Var> fv;
      for (const auto& f : feats) fv.push_back(tape.constant(f.grid));
      return num::weighted_sum(sva::sva_forward(cfg, fv, sva::bind_ordered(cfg, vars)), readout);
    };
    const auto report = num::grad_check(loss, named, 1e-5);
    v.expect(report.params.size() == named.size(), "not every parameter was checked");
    tensors += report.params.size();
    for (const auto& pe : report.params) {
      worst = std::max(worst, pe.rel_error);
      v.expect(pe.rel_error < 1e-4, pe.name + " rel err " + fmt("%.3g", pe.rel_error));
    }
  }
  const double secs = seconds_since(t0);
  v.expect(secs < 60.0, "runtime " + fmt("%.1f", secs) + " s >= 60 s");
  v.detail = std::to_string(tensors) + " parameter tensors, max rel err " + fmt("%.2g", worst) + ", " +
             fmt("%.2f", secs) + " s";
}

void token_reduction(Verdict& v) {
  std::mt19937_64 rng(1003);
  int configs = 0;
  for (std::size_t L : {1, 2, 3, 5})
    for (std::size_t G : {1, 2, 3})
      for (auto m : {std::vector<std::size_t>{1}, std::vector<std::size_t>{1, 2}, std::vector<std::size_t>{3, 1}}) {
        auto cfg = make_cfg(L, 2, m, 1, G);
        auto out = sva::sva_forward(testing::random_features(cfg, rng), sva::SvaParams::initialize(cfg, rng()), cfg);
        v.expect(out.dim(0) == G * L * L, "L=" + std::to_string(L) + " G=" + std::to_string(G) + " gave " +
                                              std::to_string(out.dim(0)) + " tokens");
        ++configs;
      }
  auto big = make_cfg(24, 2, {1, 2}, 1, 1);
  auto out = sva::sva_forward(testing::random_features(big, rng), sva::SvaParams::initialize(big, 5), big);
  v.expect(out.dim(0) == 576, "L=24 G=1 gave " + std::to_string(out.dim(0)) + " tokens");
  v.detail = std::to_string(configs) + " configs equal G*L^2; L=24, G=1 -> " + std::to_string(out.dim(0)) + " tokens";
}

void attention_mass(Verdict& v) {
  std::mt19937_64 rng(1004);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto cfg = make_cfg(1 + trial % 3, 3, {1, 2, 3}, 1 + trial % 2, 1 + trial % 2);
    sva::AttentionLog log;
    sva::sva_forward(testing::random_features(cfg, rng), testing::random_sva_params(cfg, rng, 2.0), cfg, &log);
    const auto mass = sva::attention_mass_by_encoder(log);
    double sum = 0;
    for (double x : mass) sum += x;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  v.expect(worst < 1e-9, "fractions sum off by " + fmt("%.3g", worst));

  // Two encoders with identical maps and parameters.
  auto cfg = make_cfg(2, 3, {2, 2}, 1, 1);
  auto params = testing::random_sva_params(cfg, rng);
  for (auto& layer : params.layers[0]) {
    layer.key_proj[1] = layer.key_proj[0];
    layer.value_proj[1] = layer.value_proj[0];
  }
  params.positional[1] = params.positional[0];
  auto feats = testing::random_features(cfg, rng);
  feats[1].grid = feats[0].grid;
  sva::AttentionLog log;
  sva::sva_forward(feats, params, cfg, &log);
  const auto mass = sva::attention_mass_by_encoder(log);
  const bool halves = mass.size() == 2 && std::abs(mass[0] - 0.5) < 1e-9 && std::abs(mass[1] - 0.5) < 1e-9;
  v.expect(halves, "symmetric fixture gave " + fmt("%.6f", mass[0]) + " / " + fmt("%.6f", mass[1]));
  v.detail = "max |sum-1|=" + fmt("%.2g", worst) + ", symmetric fixture [" + fmt("%.12f", mass[0]) + ", " +
             fmt("%.12f", mass[1]) + "]";
}

// ---------------------------------------------------------------- CV-Bench

double dist(const cvbench::Vec3& p, const cvbench::Vec3& o) {
  double s = 0;
  for (int d = 0; d < 3; ++d) s += (p[d] - o[d]) * (p[d] - o[d]);
  return std::sqrt(s);
}

bool closer_all(const std::array<cvbench::Vec3, 8>& a, const std::array<cvbench::Vec3, 8>& b, const cvbench::Vec3& ref,
                double offset) {
  for (const auto& va : a)
    for (const auto& vb : b)
      if (!(dist(va, ref) + offset < dist(vb, ref))) return false;
  return true;
}

cvbench::Vec3 mean_point(const std::array<cvbench::Vec3, 8>& pts) {
  cvbench::Vec3 m{0, 0, 0};
  for (const auto& p : pts)
    for (int d = 0; d < 3; ++d) m[d] += p[d] / 8;
  return m;
}

void cvbench_generation(Verdict& v) {
  using namespace cvbench;
  constexpr int kScenes = 500;
  std::mt19937_64 rng(2001);
  std::size_t sp_items = 0, cnt_items = 0, depth_items = 0, dist_items = 0;

  for (int n = 0; n < kScenes; ++n) {
    const auto scene = testing::random_2d_scene(rng, "s" + std::to_string(n));
    std::set<std::string> cats;
    for (const auto& o : scene.objects) cats.insert(o.category);
    const auto items = gen_spatial(scene, rng());
    if (cats.size() != 2) {
      v.expect(items.empty(), "spatial item from a scene without exactly two categories");
      continue;
    }
    if (items.size() != 1) {
      v.expect(false, "spatial: expected one item for " + scene.id);
      continue;
    }
    const auto& a = scene.objects[items[0].object_refs[0]].bbox;
    const auto& o = scene.objects[items[0].object_refs[1]].bbox;
    const double dx = (o.x + o.w / 2) - (a.x + a.w / 2), dy = (o.y + o.h / 2) - (a.y + a.h / 2);
    const std::string want =
        std::fabs(dx) >= std::fabs(dy) ? (dx < 0 ? "left" : "right") : (dy < 0 ? "above" : "below");
    v.expect(items[0].answer() == want, "spatial disagreement on " + scene.id);
    ++sp_items;
  }

  const std::vector<std::string> vocab{"giraffe", "chair"};
  for (int n = 0; n < kScenes; ++n) {
    const auto scene = testing::random_2d_scene(rng, "c" + std::to_string(n));
    std::map<std::string, std::size_t> truth;
    for (const auto& o : scene.objects) ++truth[o.category];
    for (const auto& q : gen_count(scene, rng(), vocab)) {
      std::string cat;
      for (const auto& [c, k] : truth)
        if (q.prompt.find(plural(c)) != std::string::npos) cat = c;
      const bool absent = q.prompt.find("giraffes") != std::string::npos;
      const std::size_t want = absent ? 0 : truth[cat];
      v.expect(q.answer() == std::to_string(want), "count disagreement on " + scene.id);
      ++cnt_items;
    }
  }

  for (int n = 0; n < kScenes; ++n) {
    const auto scene = testing::random_3d_scene(rng, "d" + std::to_string(n));
    std::set<std::pair<std::size_t, std::size_t>> got, want;
    for (const auto& q : gen_depth_order(scene, 0.3, PromptTemplates::builtin(), rng())) {
      const auto i = q.object_refs[0], j = q.object_refs[1];
      got.insert({i, j});
      const bool i_closer = closer_all(*scene.objects[i].corners, *scene.objects[j].corners, {0, 0, 0}, 0.3);
      v.expect(q.answer() == (i_closer ? scene.objects[i].category : scene.objects[j].category),
               "depth answer disagreement on " + scene.id);
    }
    const auto& o = scene.objects;
    for (std::size_t i = 0; i < o.size(); ++i)
      for (std::size_t j = i + 1; j < o.size(); ++j)
        if (o[i].category != o[j].category &&
            (closer_all(*o[i].corners, *o[j].corners, {0, 0, 0}, 0.3) ||
             closer_all(*o[j].corners, *o[i].corners, {0, 0, 0}, 0.3)))
          want.insert({i, j});
    v.expect(got == want, "depth pair set disagreement on " + scene.id);
    depth_items += got.size();
  }

  for (int n = 0; n < kScenes; ++n) {
    const auto scene = testing::random_3d_scene(rng, "r" + std::to_string(n), 3, 5);
    std::set<std::array<std::size_t, 3>> got, want;
    for (const auto& q : gen_relative_distance(scene, 0.3)) {
      const auto k = q.object_refs[0], i = q.object_refs[1], j = q.object_refs[2];
      got.insert({k, i, j});
      const auto ref = mean_point(*scene.objects[k].corners);
      const bool i_closer = closer_all(*scene.objects[i].corners, *scene.objects[j].corners, ref, 0.3);
      v.expect(q.answer() == (i_closer ? scene.objects[i].category : scene.objects[j].category),
               "distance answer disagreement on " + scene.id);
    }
    const auto& o = scene.objects;
    for (std::size_t k = 0; k < o.size(); ++k)
      for (std::size_t i = 0; i < o.size(); ++i)
        for (std::size_t j = i + 1; j < o.size(); ++j) {
          if (i == k || j == k || o[i].category == o[k].category || o[j].category == o[k].category ||
              o[i].category == o[j].category)
            continue;
          const auto ref = mean_point(*o[k].corners);
          if (closer_all(*o[i].corners, *o[j].corners, ref, 0.3) || closer_all(*o[j].corners, *o[i].corners, ref, 0.3))
            want.insert({k, i, j});
        }
    v.expect(got == want, "distance triple set disagreement on " + scene.id);
    dist_items += got.size();
  }

  // Offset sweep: a larger margin only removes items.
  int sweeps = 0;
  for (int n = 0; n < 100; ++n) {
    const auto scene = testing::random_3d_scene(rng, "m" + std::to_string(n), 3, 5);
    std::set<std::pair<std::size_t, std::size_t>> prev;
    std::set<std::array<std::size_t, 3>> prev_t;
    for (int step = 0; step <= 50; ++step) {
      std::set<std::pair<std::size_t, std::size_t>> cur;
      for (const auto& q : gen_depth_order(scene, 0.1 * step)) cur.insert({q.object_refs[0], q.object_refs[1]});
      std::set<std::array<std::size_t, 3>> cur_t;
      for (const auto& q : gen_relative_distance(scene, 0.1 * step))
        cur_t.insert({q.object_refs[0], q.object_refs[1], q.object_refs[2]});
      if (step > 0) {
        v.expect(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()), "depth sweep not monotone");
        v.expect(std::includes(prev_t.begin(), prev_t.end(), cur_t.begin(), cur_t.end()), "distance sweep not monotone");
      }
      prev = std::move(cur);
      prev_t = std::move(cur_t);
    }
    ++sweeps;
  }

  // Count options over every n in [0, 20].
  for (std::size_t n = 0; n <= 20; ++n) {
    const auto w = count_window(n);
    std::set<std::size_t> uniq(w.begin(), w.end());
    v.expect(uniq.size() == 5, "count window repeats for n=" + std::to_string(n));
    v.expect(std::count(w.begin(), w.end(), n) == 1, "count window misses n=" + std::to_string(n));
    for (std::size_t i = 1; i < 5; ++i) v.expect(w[i] == w[i - 1] + 1, "count window not contiguous");
    v.expect(w[0] == (n < 2 ? 0 : n - 2), "count window start for n=" + std::to_string(n));
    Scene scene{"n" + std::to_string(n), Source::coco, 100, 100, {}};
    for (std::size_t i = 0; i < n; ++i) scene.objects.push_back({"cup", {1, 1, 2, 2}, {}});
    for (std::uint64_t seed = 0; seed < 8; ++seed)
      for (const auto& q : gen_count(scene, seed, std::vector<std::string>{"cup", "bowl"})) {
        std::set<std::string> c(q.choices.begin(), q.choices.end());
        v.expect(c.size() == 5, "count choices repeat");
        const std::string truth = q.prompt.find("bowls") != std::string::npos ? "0" : std::to_string(n);
        v.expect(q.answer() == truth, "count answer wrong for n=" + std::to_string(n));
      }
  }

  v.detail = std::to_string(kScenes) + " scenes per task (items: spatial " + std::to_string(sp_items) + ", count " +
             std::to_string(cnt_items) + ", depth " + std::to_string(depth_items) + ", distance " +
             std::to_string(dist_items) + "); " + std::to_string(sweeps) + " scenes x 50 offsets; n=0..20";
}

void cvbench_scoring(Verdict& v) {
  using namespace cvbench;
  const auto s = combine_accuracies(0.6, 0.8, 0.7);
  v.expect(s.overall == 0.7, "overall " + fmt("%.17g", s.overall) + " != 0.7");
  const auto graded = load_graded(kFixtures / "cvbench_composition.jsonl");
  const auto c = summarize(std::span<const GradedItem>(graded));
  auto at = [&](Task t) { return c.by_task.count(t) ? c.by_task.at(t) : 0; };
  v.expect(at(Task::spatial_relationship) == 650, "spatial count");
  v.expect(at(Task::object_count) == 788, "count count");
  v.expect(at(Task::depth_order) == 600, "depth count");
  v.expect(at(Task::relative_distance) == 600, "distance count");
  v.expect(c.total == 2638, "total " + std::to_string(c.total));
  v.expect(c.count_2d == 1438 && c.count_3d == 1200, "2D/3D split");
  // Bucket accuracies from a direct tally.
  double hit[3] = {}, seen[3] = {};
  for (const auto& g : graded) {
    const int b = is_3d(g.task) ? 2 : g.source == Source::coco ? 0 : 1;
    ++seen[b];
    hit[b] += g.correct;
  }
  const auto sc = score_cvbench(graded);
  const double want = ((hit[0] / seen[0] + hit[1] / seen[1]) / 2 + hit[2] / seen[2]) / 2;
  v.expect(std::abs(sc.overall - want) < 1e-15, "fixture score disagrees with direct tally");
  v.detail = "overall(0.6, 0.8, 0.7)=" + fmt("%.17g", s.overall) + "; fixture 650/788/600/600, total " +
             std::to_string(c.total);
}

// ---------------------------------------------------------------- curation

void curation(Verdict& v) {
  using namespace curate;
  const std::vector<std::pair<std::string, std::size_t>> counts{
      {"ocr_vqa", 80000},   {"docvqa", 149000},  {"chartqa", 152000}, {"mathv", 240000},  {"llava", 260000},
      {"sharegpt", 330000}, {"clevr", 360000},   {"textvqa", 420000}, {"laion", 455000},  {"coco", 700000}};
  DataPool pool;
  for (const auto& [src, n] : counts)
    for (std::size_t i = 0; i < n; ++i) pool.records.push_back({src + std::to_string(i), src, Category::general, {}, {}, {}});
  for (std::size_t t : {150000, 250000, 350000, 450000}) {
    const auto a = apply_threshold(pool, t, 11);
    const auto b = apply_threshold(pool, t, 11);
    auto got = a.source_counts();
    for (const auto& [src, n] : counts)
      v.expect(got[src] == std::min(n, t), "t=" + std::to_string(t) + " source " + src);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = a.records[i].id == b.records[i].id;
    v.expect(same, "threshold not deterministic at t=" + std::to_string(t));
  }
  pool = {};

  // Ample pools: preset ratios at several sizes plus random ratio vectors.
  auto preset = curator_config_from_json(read_json_file(kConfig / "ratio_preset.json"));
  std::mt19937_64 rng(3001);
  int mixes = 0;
  auto check_mix = [&](CuratorConfig cfg) {
    std::size_t rounded = 0;
    for (const auto& [c, r] : cfg.ratios) rounded += static_cast<std::size_t>(std::llround(r * double(cfg.target_size)));
    if (rounded != cfg.target_size) return;  // no assignment can hit every rounded target and total N
    DataPool p;
    for (auto c : all_categories())
      for (std::size_t i = 0; i < cfg.target_size / 2 + 10; ++i)
        p.records.push_back({to_string(c) + std::to_string(i), "src_" + to_string(c), c, {}, {}, {}});
    const auto r1 = mix_by_ratio(p, cfg), r2 = mix_by_ratio(p, cfg);
    auto got = r1.pool.category_counts();
    for (const auto& [c, ratio] : cfg.ratios) {
      const auto want = static_cast<std::size_t>(std::llround(ratio * double(cfg.target_size)));
      v.expect(got[c] == want, "mix " + to_string(c) + " got " + std::to_string(got[c]) + " want " + std::to_string(want));
    }
    bool same = r1.pool.size() == r2.pool.size();
    for (std::size_t i = 0; same && i < r1.pool.size(); ++i) same = r1.pool.records[i].id == r2.pool.records[i].id;
    v.expect(same, "mix not deterministic");
    ++mixes;
  };
  for (std::size_t n : {1000, 10000, 100000}) {
    auto cfg = preset;
    cfg.target_size = n;
    check_mix(cfg);
  }
  for (int trial = 0; trial < 60; ++trial) {
    CuratorConfig cfg;
    cfg.seed = trial;
    cfg.target_size = 100 + rng() % 2000;
    double sum = 0;
    std::vector<double> w;
    for (std::size_t k = 0; k < all_categories().size(); ++k) sum += w.emplace_back(double(1 + rng() % 100));
    for (std::size_t k = 0; k < w.size(); ++k) cfg.ratios[all_categories()[k]] = w[k] / sum;
    check_mix(cfg);
  }
  v.expect(mixes >= 20, "too few exact-rounding mixes exercised");
  v.detail = "t in {150k, 250k, 350k, 450k} on 10 sources; " + std::to_string(mixes) + " ample mixes exact and seeded";
}

// ---------------------------------------------------------------- dHash

curate::GrayImage raster(std::size_t w, std::size_t h, const std::function<double(std::size_t, std::size_t)>& f) {
  curate::GrayImage img{w, h, std::vector<double>(w * h)};
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) img.pixels[r * w + c] = f(r, c);
  return img;
}

void dhash_leakage(Verdict& v) {
  using namespace curate;
  v.expect(dhash(raster(9, 8, [](auto, auto) { return 128.0; })) == 0, "constant 9x8");
  v.expect(dhash(raster(320, 240, [](auto, auto) { return 40.0; })) == 0, "constant 320x240");
  v.expect(dhash(raster(9, 8, [](auto, auto c) { return 10.0 * double(c); })) == ~std::uint64_t{0}, "ramp 9x8");
  v.expect(dhash(raster(300, 200, [](auto, auto c) { return double(c); })) == ~std::uint64_t{0}, "ramp 300x200");

  std::mt19937_64 rng(4001);
  std::uniform_int_distribution<int> px(0, 255);
  int unchanged = 0;
  for (int n = 0; n < 100; ++n) {
    const auto native = raster(9, 8, [&](auto, auto) { return double(px(rng)); });
    auto bent = native;
    for (auto& x : bent.pixels) x = std::sqrt(x) * 5 + x * x / 300.0;
    const auto big = raster(64, 48, [&](auto, auto) { return double(px(rng)); });
    auto brighter = big;
    for (auto& x : brighter.pixels) x = 0.6 * x + 40.0;
    const bool ok = dhash(native) == dhash(bent) && dhash(big) == dhash(brighter);
    v.expect(ok, "monotone transform changed a hash");
    unchanged += ok;
  }

  // Planted duplicates written to disk and hashed back.
  testing::TempPath base("leak");
  const auto root = base.path.parent_path() / (base.path.stem().string() + "_dir");
  std::filesystem::remove_all(root);
  auto write_set = [&](const std::string& name, const std::vector<GrayImage>& imgs) {
    std::filesystem::create_directories(root / name);
    for (std::size_t i = 0; i < imgs.size(); ++i) {
      std::ofstream(root / name / ("img" + std::to_string(i) + ".pgm"), std::ios::binary) << encode_pgm(imgs[i]);
    }
  };
  auto random_image = [&] { return raster(48, 36, [&](auto, auto) { return double(px(rng)); }); };
  std::vector<GrayImage> train(60), test_a, test_b(25);
  for (auto& t : train) t = random_image();
  for (int i = 0; i < 20; ++i) {
    if (i < 7) {
      auto copy = train[i * 5];
      for (auto& x : copy.pixels) x = std::floor(x * 0.5 + 20.0);  // darker re-encode
      test_a.push_back(copy);
    } else {
      test_a.push_back(random_image());
    }
  }
  for (auto& t : test_b) t = random_image();
  write_set("Train", train);
  write_set("TestA", test_a);
  write_set("TestB", test_b);
  const std::vector<HashSet> tr{hash_directory(root / "Train")};
  const std::vector<HashSet> te{hash_directory(root / "TestA"), hash_directory(root / "TestB")};
  const auto rep = leakage_scan(tr, te);
  std::filesystem::remove_all(root);

  v.expect(rep.rows.size() == 2 && rep.rows[0].matches[0] == 7 && rep.rows[1].matches[0] == 0, "planted match counts");
  v.expect(rep.totals.test_size == 45 && rep.totals.matches[0] == 7, "total row");
  const auto table = rep.table();
  for (const auto* cell : {"7 (35.00%)", "0 (0.00%)", "7 (15.56%)"})
    v.expect(table.find(cell) != std::string::npos, std::string("table lacks cell ") + cell);
  v.expect(format_leak_cell(7244, 49548) == "7,244 (14.62%)", "thousands grouping");
  v.detail = "constant->0, ramp->all-ones, " + std::to_string(unchanged) +
             "/100 images stable under monotone maps; planted 7/20 and 0/25 recovered";
}

// ---------------------------------------------------------------- grading

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void grading(Verdict& v) {
  using eval::fuzzy_match;
  const std::vector<std::tuple<std::string, std::string, bool>> shots{
      {"25", "29", false}, {"Yes", "Yes", true}, {"80", "80", true},
      {"Ireland", "Italy", false}, {"UK", "UK", true}, {"2019", "2011", false}};
  int ok = 0;
  for (const auto& [p, g, want] : shots) {
    const bool good = fuzzy_match(p, g).correct == want;
    v.expect(good, "few-shot " + p + " vs " + g);
    ok += good;
  }
  for (const auto* pred : {"A", "(a)", "Apple", "a) Apple", "(A) apple"})
    v.expect(fuzzy_match(pred, "(a) Apple").correct, std::string("'") + pred + "' vs '(a) Apple'");
  v.expect(!fuzzy_match("B", "(a) Apple").correct, "'B' accepted for '(a) Apple'");
  v.expect(fuzzy_match("10.5", "10").correct, "relative error 0.05 rejected");
  v.expect(fuzzy_match("9.5", "10").correct, "relative error -0.05 rejected");
  v.expect(!fuzzy_match("10.51", "10").correct, "relative error 0.051 accepted");

  const auto fixture = slurp(kFixtures / "grader_prompt_template.txt");
  std::string want = fixture;
  want.replace(want.find("{answer}"), 8, "Paris");
  want.replace(want.find("{gt_answer}"), 11, "paris");
  v.expect(eval::grader_template() == fixture, "template differs from fixture");
  v.expect(eval::grader_prompt("Paris", "paris") == want, "filled prompt differs from fixture");
  v.detail = std::to_string(ok) + "/6 few-shot verdicts, (a) Apple variants, 10.5 vs 10 CORRECT, template " +
             std::to_string(fixture.size()) + " bytes identical";
}

// ---------------------------------------------------------------- analytics

eval::ScoreTable make_table(const std::vector<std::vector<double>>& scores) {
  eval::ScoreTable t;
  for (std::size_t m = 0; m < scores.size(); ++m) t.models.push_back("m" + std::to_string(m));
  for (std::size_t b = 0; b < scores[0].size(); ++b) {
    eval::BenchmarkMeta meta;
    meta.name = "b" + std::to_string(b);
    t.benchmarks.push_back(meta);
  }
  t.scores = scores;
  return t;
}

void analytics(Verdict& v) {
  using namespace eval;
  auto mme = make_table({{1500, 80}});
  mme.benchmarks[0].scale_divisor = 20;
  mme.benchmarks[1].category = BenchCategory::knowledge;
  const auto cs = category_scores(mme, {BenchCategory::general});
  v.expect(cs.values[0][0] == 75.0, "1500/20 gave " + fmt("%g", cs.values[0][0]));
  const auto shipped = load_benchmark_meta(kConfig / "benchmark_meta.csv");
  v.expect(shipped.size() > 0 && shipped[0].name == "MME-P" && shipped[0].scale_divisor == 20, "shipped MME divisor");

  // Covariance-formula oracle: cov(x, y) / (sd(x) sd(y)) with two-pass moments.
  std::mt19937_64 rng(5001);
  std::uniform_real_distribution<double> u(0, 100);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> s(12, std::vector<double>(6));
    for (auto& row : s)
      for (auto& x : row) x = u(rng);
    const auto c = correlation_matrix(make_table(s));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        double mi = 0, mj = 0;
        for (const auto& row : s) {
          mi += row[i] / 12;
          mj += row[j] / 12;
        }
        double cov = 0, vi = 0, vj = 0;
        for (const auto& row : s) {
          cov += (row[i] - mi) * (row[j] - mj);
          vi += (row[i] - mi) * (row[i] - mi);
          vj += (row[j] - mj) * (row[j] - mj);
        }
        worst = std::max(worst, std::abs(c.matrix[i][j] - cov / std::sqrt(vi * vj)));
      }
  }
  v.expect(worst < 1e-10, "correlation off by " + fmt("%.3g", worst));

  // Two planted benchmark clusters over 20 models.
  std::normal_distribution<double> g(0, 1);
  std::vector<double> f1(20), f2(20);
  for (auto& x : f1) x = g(rng);
  for (auto& x : f2) x = g(rng);
  std::vector<std::vector<double>> s(20, std::vector<double>(12));
  for (std::size_t m = 0; m < 20; ++m)
    for (std::size_t b = 0; b < 12; ++b) s[m][b] = 50 + 12 * (b < 6 ? f1[m] : f2[m]) + 0.8 * g(rng);
  const auto r = pca_cluster(make_table(s), 2, 3);
  std::size_t agree = 0, pairs = 0;
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = i + 1; j < 12; ++j) {
      ++pairs;
      agree += (r.labels[i] == r.labels[j]) == ((i < 6) == (j < 6));
    }
  v.expect(agree == pairs, "co-clustering " + std::to_string(agree) + "/" + std::to_string(pairs));

  auto on = make_table({{80, 60, 50, 30}, {70, 62, 52, 30}});
  auto off = make_table({{40, 55, 45.5, 30}, {30, 57, 47.5, 29}});
  const auto rows = vision_gap_report(on, off);
  std::map<std::string, bool> flag;
  for (const auto& row : rows) flag[row.benchmark] = row.vision_insensitive;
  v.expect(rows.front().benchmark == "b0", "largest gap not first");
  v.expect(!flag["b0"] && !flag["b1"] && flag["b2"] && flag["b3"], "gap flags (40, 5, 4.5, 0.5)");
  v.detail = "1500/20=" + fmt("%g", cs.values[0][0]) + ", correlation max err " + fmt("%.2g", worst) +
             ", co-clustering " + std::to_string(agree) + "/" + std::to_string(pairs) + ", gap flags 5.0 no / 4.5 yes";
}

// ---------------------------------------------------------------- review

void review_service(Verdict& v) {
  using namespace review;
  const auto items = testing::review_items(150);
  testing::TempPath j("accept-review");
  std::mt19937_64 rng(6001);
  std::map<std::string, Status> oracle;
  nlohmann::json live;
  {
    ReviewStore store(items, j.path);
    for (int i = 0; i < 1000; ++i) {
      DecisionRecord r;
      r.item_id = items[rng() % items.size()].id;
      const auto pick = rng() % 3;
      r.decision = pick == 0 ? Status::accepted : pick == 1 ? Status::modified : Status::rejected;
      if (r.decision == Status::modified) {
        r.edit.emplace();
        r.edit->answer_index = rng() % 2;
      }
      r.reviewer = "r" + std::to_string(rng() % 3);
      store.submit(r);
      oracle[r.item_id] = r.decision;
    }
    live = store.export_benchmark(true).records;
  }
  ReviewStore replayed(items, j.path);
  const auto st = replayed.statuses();
  bool same = true;
  for (const auto& q : items) {
    auto it = oracle.find(q.id);
    same = same && st.at(q.id) == (it == oracle.end() ? Status::pending : it->second);
  }
  v.expect(same, "replayed statuses differ from the decision oracle");
  const auto ex = replayed.export_benchmark(true);
  v.expect(nlohmann::json(ex.records) == live, "replayed export differs from live export");
  std::size_t bad = 0;
  for (const auto& q : ex.items) {
    auto it = oracle.find(q.id);
    bad += it == oracle.end() || it->second == Status::rejected;
  }
  v.expect(bad == 0, std::to_string(bad) + " rejected or pending items exported");
  std::size_t expected_export = 0;
  for (const auto& [id, s] : oracle) expected_export += s != Status::rejected;
  v.expect(ex.items.size() == expected_export, "export size");

  testing::TempPath j2("accept-stress");
  ReviewStore store(items, j2.path);
  constexpr int kThreads = 8, kEach = 200;
  std::vector<std::thread> pool;
  std::atomic<int> errors{0};
  for (int t = 0; t < kThreads; ++t)
    pool.emplace_back([&, t] {
      for (int i = 0; i < kEach; ++i) {
        DecisionRecord r;
        r.item_id = items[(t * 17 + i) % items.size()].id;
        r.decision = i % 2 ? Status::accepted : Status::rejected;
        r.reviewer = "t" + std::to_string(t);
        try {
          store.submit(r);
        } catch (...) {
          ++errors;
        }
      }
    });
  for (auto& th : pool) th.join();
  std::size_t lines = 0;
  {
    std::ifstream in(j2.path);
    std::string line;
    while (std::getline(in, line)) lines += !line.empty();
  }
  v.expect(errors == 0, "submissions threw");
  v.expect(lines == kThreads * kEach, "journal has " + std::to_string(lines) + " lines");
  v.expect(ReviewStore(items, j2.path).statuses() == store.statuses(), "stress journal replay differs");
  v.detail = "1000 decisions replayed identically, export " + std::to_string(ex.items.size()) + " items with 0 " +
             "rejected/pending, " + std::to_string(lines) + "/" + std::to_string(kThreads * kEach) +
             " concurrent records journaled";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"SVA correctness", sva_correctness},
      {"SVA gradients", sva_gradients},
      {"Token reduction", token_reduction},
      {"Attention-mass fractions", attention_mass},
      {"CV-Bench generation", cvbench_generation},
      {"CV-Bench scoring", cvbench_scoring},
      {"Curation", curation},
      {"dHash", dhash_leakage},
      {"Grading", grading},
      {"Analytics", analytics},
      {"Review service", review_service},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      run(v);
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool pass = v.failures.empty();
    failed += !pass;
    std::cout << (pass ? "PASS " : "FAIL ") << "[PRIMARY] " << name << ": " << v.detail;
    for (std::size_t i = 0; i < v.failures.size() && i < 3; ++i) std::cout << (i ? "; " : " | ") << v.failures[i];
    if (v.failures.size() > 3) std::cout << " (+" << v.failures.size() - 3 << " more)";
    std::cout << std::endl;
  }
  return failed;
}
