#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/cvbench/scene.hpp"
#include "forge/cvbench/templates.hpp"

namespace forge::cvbench {

struct GenOptions {
  double depth_offset = 0.3;     // meters
  double distance_offset = 0.3;  // meters
  std::vector<std::string> count_vocabulary;  // candidates for existence checks
  PromptTemplates templates = PromptTemplates::builtin();
};

// ---- geometric rules ----

// "left"/"right" when the horizontal center offset dominates (ties go
// horizontal), otherwise "above"/"below" in image coordinates. Coincident
// centers have no answer.
std::optional<std::string> spatial_direction(const BBox& anchor, const BBox& object);

// Five consecutive counts starting at max(0, n - 2).
std::array<std::size_t, 5> count_window(std::size_t n);

// 0 when every vertex of `a` plus offset is nearer the camera origin than the
// nearest vertex of `b`, 1 for the mirror case, nothing otherwise.
std::optional<int> closer_to_camera(const std::array<Vec3, 8>& a, const std::array<Vec3, 8>& b, double offset);

// Same rule with distances measured to the anchor's centroid.
std::optional<int> closer_to_anchor(const std::array<Vec3, 8>& anchor, const std::array<Vec3, 8>& a,
                                    const std::array<Vec3, 8>& b, double offset);

// ---- per-task generators ----

// Needs exactly two distinct categories; one instance of each is boxed.
std::vector<QuestionItem> gen_spatial(const Scene& scene, std::uint64_t seed,
                                      const PromptTemplates& t = PromptTemplates::builtin());

// One count question for a present category, plus an existence check for a
// vocabulary category absent from the scene when one exists.
std::vector<QuestionItem> gen_count(const Scene& scene, std::uint64_t seed, std::span<const std::string> vocabulary,
                                    const PromptTemplates& t = PromptTemplates::builtin());

// One item per unordered pair of 3D objects from distinct categories that the
// offset rule separates. Choice order follows object order unless a seed is
// given.
std::vector<QuestionItem> gen_depth_order(const Scene& scene, double offset,
                                          const PromptTemplates& t = PromptTemplates::builtin(),
                                          std::optional<std::uint64_t> seed = std::nullopt);

// One item per (anchor, {A, B}) triple of 3D objects from three distinct
// categories that the offset rule separates.
std::vector<QuestionItem> gen_relative_distance(const Scene& scene, double offset,
                                                const PromptTemplates& t = PromptTemplates::builtin(),
                                                std::optional<std::uint64_t> seed = std::nullopt);

// Routes 2D sources to spatial and count, omni3d to depth and distance. Each
// scene draws from its own stream mixed from (seed, scene id).
std::vector<QuestionItem> generate(std::span<const Scene> scenes, const GenOptions& options, std::uint64_t seed);

}  // namespace forge::cvbench
