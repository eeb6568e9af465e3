#include "forge/cvbench/generate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "forge/seed.hpp"

namespace forge::cvbench {

namespace {

constexpr std::array<const char*, 3> kColors{"red", "blue", "green"};

std::string item_id(const Scene& s, const char* tag, std::size_t n) {
  return s.id + ":" + tag + ":" + std::to_string(n);
}

std::map<std::string, std::vector<std::size_t>> by_category(const Scene& s, bool need_3d) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (need_3d && !s.objects[i].corners) continue;
    out[s.objects[i].category].push_back(i);
  }
  return out;
}

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

// Shuffles choices and returns the new index of `answer`.
std::size_t shuffle_choices(std::vector<std::string>& choices, std::size_t answer, std::mt19937_64& rng) {
  const std::string keep = choices[answer];
  std::shuffle(choices.begin(), choices.end(), rng);
  return static_cast<std::size_t>(std::find(choices.begin(), choices.end(), keep) - choices.begin());
}

double min_dist(const std::array<Vec3, 8>& pts, const Vec3& to) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) d = std::min(d, euclidean(p, to));
  return d;
}

double max_dist(const std::array<Vec3, 8>& pts, const Vec3& to) {
  double d = 0.0;
  for (const auto& p : pts) d = std::max(d, euclidean(p, to));
  return d;
}

std::optional<int> separated(const std::array<Vec3, 8>& a, const std::array<Vec3, 8>& b, const Vec3& ref,
                             double offset) {
  if (max_dist(a, ref) + offset < min_dist(b, ref)) return 0;
  if (max_dist(b, ref) + offset < min_dist(a, ref)) return 1;
  return std::nullopt;
}

}  // namespace

std::optional<std::string> spatial_direction(const BBox& anchor, const BBox& object) {
  const double dx = object.cx() - anchor.cx(), dy = object.cy() - anchor.cy();
  if (dx == 0.0 && dy == 0.0) return std::nullopt;
  if (std::abs(dx) >= std::abs(dy)) return std::string(dx > 0 ? "right" : "left");
  return std::string(dy > 0 ? "below" : "above");
}

std::array<std::size_t, 5> count_window(std::size_t n) {
  const std::size_t lo = n >= 2 ? n - 2 : 0;
  return {lo, lo + 1, lo + 2, lo + 3, lo + 4};
}

std::optional<int> closer_to_camera(const std::array<Vec3, 8>& a, const std::array<Vec3, 8>& b, double offset) {
  return separated(a, b, Vec3{0, 0, 0}, offset);
}

std::optional<int> closer_to_anchor(const std::array<Vec3, 8>& anchor, const std::array<Vec3, 8>& a,
                                    const std::array<Vec3, 8>& b, double offset) {
  return separated(a, b, centroid(anchor), offset);
}

std::vector<QuestionItem> gen_spatial(const Scene& scene, std::uint64_t seed, const PromptTemplates& t) {
  auto cats = by_category(scene, false);
  if (cats.size() != 2) return {};
  std::mt19937_64 rng(seed);
  auto first = cats.begin(), second = std::next(first);
  if (std::uniform_int_distribution<int>(0, 1)(rng) == 1) std::swap(first, second);
  const std::size_t anchor = pick(first->second, rng), object = pick(second->second, rng);
  const auto& A = scene.objects[anchor];
  const auto& O = scene.objects[object];
  auto dir = spatial_direction(A.bbox, O.bbox);
  if (!dir) return {};

  QuestionItem q;
  q.id = item_id(scene, "spatial", 0);
  q.scene_id = scene.id;
  q.task = Task::spatial_relationship;
  q.source = scene.source;
  q.prompt = fill_template(t.spatial, {{"object", O.category}, {"anchor", A.category}});
  const bool horizontal = *dir == "left" || *dir == "right";
  q.choices = horizontal ? std::vector<std::string>{"left", "right"} : std::vector<std::string>{"above", "below"};
  q.answer_index = shuffle_choices(q.choices, *dir == q.choices[0] ? 0 : 1, rng);
  q.overlays = {{A.bbox, kColors[0]}, {O.bbox, kColors[1]}};
  q.object_refs = {anchor, object};
  return {q};
}

std::vector<QuestionItem> gen_count(const Scene& scene, std::uint64_t seed, std::span<const std::string> vocabulary,
                                    const PromptTemplates& t) {
  auto cats = by_category(scene, false);
  std::mt19937_64 rng(seed);
  std::vector<QuestionItem> out;
  auto make = [&](const std::string& category, std::size_t n, std::vector<std::size_t> refs) {
    QuestionItem q;
    q.id = item_id(scene, "count", out.size());
    q.scene_id = scene.id;
    q.task = Task::object_count;
    q.source = scene.source;
    q.prompt = fill_template(t.count, {{"plural", plural(category)}});
    const auto window = count_window(n);
    for (auto v : window) q.choices.push_back(std::to_string(v));
    const auto at = static_cast<std::size_t>(std::find(window.begin(), window.end(), n) - window.begin());
    q.answer_index = shuffle_choices(q.choices, at, rng);
    q.object_refs = std::move(refs);
    out.push_back(std::move(q));
  };
  if (!cats.empty()) {
    auto it = std::next(cats.begin(), static_cast<std::ptrdiff_t>(
                                          std::uniform_int_distribution<std::size_t>(0, cats.size() - 1)(rng)));
    make(it->first, it->second.size(), it->second);
  }
  std::vector<std::string> absent;
  for (const auto& c : vocabulary)
    if (!cats.contains(c) && std::find(absent.begin(), absent.end(), c) == absent.end()) absent.push_back(c);
  if (!absent.empty()) make(pick(absent, rng), 0, {});
  return out;
}

std::vector<QuestionItem> gen_depth_order(const Scene& scene, double offset, const PromptTemplates& t,
                                          std::optional<std::uint64_t> seed) {
  std::vector<QuestionItem> out;
  std::mt19937_64 rng(seed.value_or(0));
  const auto& objs = scene.objects;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (!objs[i].corners) continue;
    for (std::size_t j = i + 1; j < objs.size(); ++j) {
      if (!objs[j].corners || objs[i].category == objs[j].category) continue;
      auto closer = closer_to_camera(*objs[i].corners, *objs[j].corners, offset);
      if (!closer) continue;
      QuestionItem q;
      q.id = item_id(scene, "depth", out.size());
      q.scene_id = scene.id;
      q.task = Task::depth_order;
      q.source = scene.source;
      q.prompt = fill_template(t.depth, {{"a", objs[i].category},
                                         {"a_color", kColors[0]},
                                         {"b", objs[j].category},
                                         {"b_color", kColors[1]}});
      q.choices = {objs[i].category, objs[j].category};
      q.answer_index = static_cast<std::size_t>(*closer);
      if (seed) q.answer_index = shuffle_choices(q.choices, q.answer_index, rng);
      q.overlays = {{objs[i].bbox, kColors[0]}, {objs[j].bbox, kColors[1]}};
      q.object_refs = {i, j};
      out.push_back(std::move(q));
    }
  }
  return out;
}

std::vector<QuestionItem> gen_relative_distance(const Scene& scene, double offset, const PromptTemplates& t,
                                                std::optional<std::uint64_t> seed) {
  std::vector<QuestionItem> out;
  std::mt19937_64 rng(seed.value_or(0));
  const auto& objs = scene.objects;
  for (std::size_t n = 0; n < objs.size(); ++n) {
    if (!objs[n].corners) continue;
    for (std::size_t i = 0; i < objs.size(); ++i) {
      if (i == n || !objs[i].corners || objs[i].category == objs[n].category) continue;
      for (std::size_t j = i + 1; j < objs.size(); ++j) {
        if (j == n || !objs[j].corners) continue;
        if (objs[j].category == objs[n].category || objs[j].category == objs[i].category) continue;
        auto closer = closer_to_anchor(*objs[n].corners, *objs[i].corners, *objs[j].corners, offset);
        if (!closer) continue;
        QuestionItem q;
        q.id = item_id(scene, "distance", out.size());
        q.scene_id = scene.id;
        q.task = Task::relative_distance;
        q.source = scene.source;
        q.prompt = fill_template(t.distance, {{"anchor", objs[n].category},
                                              {"anchor_color", kColors[0]},
                                              {"a", objs[i].category},
                                              {"a_color", kColors[1]},
                                              {"b", objs[j].category},
                                              {"b_color", kColors[2]}});
        q.choices = {objs[i].category, objs[j].category};
        q.answer_index = static_cast<std::size_t>(*closer);
        if (seed) q.answer_index = shuffle_choices(q.choices, q.answer_index, rng);
        q.overlays = {{objs[n].bbox, kColors[0]}, {objs[i].bbox, kColors[1]}, {objs[j].bbox, kColors[2]}};
        q.object_refs = {n, i, j};
        out.push_back(std::move(q));
      }
    }
  }
  return out;
}

std::vector<QuestionItem> generate(std::span<const Scene> scenes, const GenOptions& options, std::uint64_t seed) {
  std::vector<QuestionItem> out;
  auto append = [&out](std::vector<QuestionItem> items) {
    for (auto& q : items) out.push_back(std::move(q));
  };
  for (const auto& scene : scenes) {
    scene.validate();
    const auto s = mix_seed(seed, scene.id);
    if (scene.source == Source::omni3d) {
      append(gen_depth_order(scene, options.depth_offset, options.templates, s));
      append(gen_relative_distance(scene, options.distance_offset, options.templates, s + 1));
    } else {
      append(gen_spatial(scene, s, options.templates));
      append(gen_count(scene, s + 1, options.count_vocabulary, options.templates));
    }
  }
  return out;
}

}  // namespace forge::cvbench
