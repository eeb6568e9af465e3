#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace forge::cvbench {

enum class Source { coco, ade, omni3d };
enum class Task { spatial_relationship, object_count, depth_order, relative_distance };
enum class Status { pending, accepted, modified, rejected };

std::string to_string(Source s);
std::string to_string(Task t);
std::string to_string(Status s);
// Accepts "coco", "coco-like" and so on.
Source source_from_string(const std::string& s);
Task task_from_string(const std::string& s);
Status status_from_string(const std::string& s);
bool is_3d(Task t) noexcept;

using Vec3 = std::array<double, 3>;

struct BBox {
  double x = 0, y = 0, w = 0, h = 0;  // pixels, top-left origin
  double cx() const noexcept { return x + w / 2; }
  double cy() const noexcept { return y + h / 2; }
};

struct SceneObject {
  std::string category;
  BBox bbox;
  std::optional<std::array<Vec3, 8>> corners;  // camera frame, meters
};

struct Scene {
  std::string id;
  Source source = Source::coco;
  double width = 0, height = 0;  // image size; 0 when unknown
  std::vector<SceneObject> objects;

  // Throws ValidationError on a non-positive box.
  void validate() const;
};

struct Overlay {
  BBox bbox;
  std::string color;
};

struct QuestionItem {
  std::string id;
  std::string scene_id;
  Task task = Task::spatial_relationship;
  Source source = Source::coco;
  std::string prompt;  // question text only; see render_prompt for the full turn
  std::vector<std::string> choices;
  std::size_t answer_index = 0;
  std::vector<Overlay> overlays;
  std::vector<std::size_t> object_refs;  // indices into the scene's objects
  Status status = Status::pending;
  std::optional<std::string> edited_answer;

  // Edited answer when present, otherwise the generated choice.
  const std::string& answer() const;
  void validate() const;
};

nlohmann::json to_json(const Scene& s);
Scene scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QuestionItem& q);
QuestionItem item_from_json(const nlohmann::json& j);

std::vector<Scene> load_scenes(const std::filesystem::path& path);
std::vector<QuestionItem> load_items(const std::filesystem::path& path);
void save_items(const std::filesystem::path& path, const std::vector<QuestionItem>& items);

double euclidean(const Vec3& a, const Vec3& b) noexcept;
Vec3 centroid(const std::array<Vec3, 8>& corners) noexcept;
// Axis-aligned box corners around `center` with half extents `half`.
std::array<Vec3, 8> box_corners(const Vec3& center, const Vec3& half);

}  // namespace forge::cvbench
