#include "forge/cvbench/scene.hpp"

#include <cmath>

#include "forge/error.hpp"
#include "forge/jsonl.hpp"

namespace forge::cvbench {

using nlohmann::json;

std::string to_string(Source s) {
  switch (s) {
    case Source::coco: return "coco";
    case Source::ade: return "ade";
    case Source::omni3d: return "omni3d";
  }
  return "?";
}

std::string to_string(Task t) {
  switch (t) {
    case Task::spatial_relationship: return "spatial_relationship";
    case Task::object_count: return "object_count";
    case Task::depth_order: return "depth_order";
    case Task::relative_distance: return "relative_distance";
  }
  return "?";
}

std::string to_string(Status s) {
  switch (s) {
    case Status::pending: return "pending";
    case Status::accepted: return "accepted";
    case Status::modified: return "modified";
    case Status::rejected: return "rejected";
  }
  return "?";
}

Source source_from_string(const std::string& raw) {
  std::string s = raw;
  if (s.size() > 5 && s.ends_with("-like")) s.resize(s.size() - 5);
  if (s == "coco") return Source::coco;
  if (s == "ade" || s == "ade20k") return Source::ade;
  if (s == "omni3d") return Source::omni3d;
  throw ParseError("unknown scene source '" + raw + "'");
}

Task task_from_string(const std::string& s) {
  for (auto t : {Task::spatial_relationship, Task::object_count, Task::depth_order, Task::relative_distance}) {
    if (to_string(t) == s) return t;
  }
  throw ParseError("unknown task '" + s + "'");
}

Status status_from_string(const std::string& s) {
  for (auto st : {Status::pending, Status::accepted, Status::modified, Status::rejected}) {
    if (to_string(st) == s) return st;
  }
  throw ParseError("unknown review status '" + s + "'");
}

bool is_3d(Task t) noexcept { return t == Task::depth_order || t == Task::relative_distance; }

void Scene::validate() const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& b = objects[i].bbox;
    if (!(b.w > 0) || !(b.h > 0)) {
      throw ValidationError("scene " + id + ": object " + std::to_string(i) + " has a non-positive box");
    }
  }
}

const std::string& QuestionItem::answer() const {
  return edited_answer ? *edited_answer : choices.at(answer_index);
}

void QuestionItem::validate() const {
  if (answer_index >= choices.size()) throw ValidationError("item " + id + ": answer index out of range");
  if (is_3d(task)) {
    if (overlays.size() < 2) throw ValidationError("item " + id + ": 3D items need at least two overlays");
    for (std::size_t a = 0; a < overlays.size(); ++a)
      for (std::size_t b = a + 1; b < overlays.size(); ++b)
        if (overlays[a].color == overlays[b].color) throw ValidationError("item " + id + ": overlay colors repeat");
  }
}

namespace {

json box_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

BBox box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("bbox must be [x, y, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace

json to_json(const Scene& s) {
  json objs = json::array();
  for (const auto& o : s.objects) {
    json jo = {{"category", o.category}, {"bbox2d", box_json(o.bbox)}};
    if (o.corners) jo["corners3d"] = *o.corners;
    objs.push_back(std::move(jo));
  }
  json j = {{"id", s.id}, {"source", to_string(s.source)}, {"objects", std::move(objs)}};
  if (s.width > 0) j["width"] = s.width;
  if (s.height > 0) j["height"] = s.height;
  return j;
}

Scene scene_from_json(const json& j) {
  try {
    Scene s;
    s.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    s.source = source_from_string(j.at("source").get<std::string>());
    s.width = j.value("width", 0.0);
    s.height = j.value("height", 0.0);
    for (const auto& jo : j.at("objects")) {
      SceneObject o{jo.at("category").get<std::string>(), box_from(jo.at("bbox2d")), std::nullopt};
      if (jo.contains("corners3d") && !jo["corners3d"].is_null()) {
        const auto& c = jo["corners3d"];
        if (!c.is_array() || c.size() != 8) throw ValidationError("scene " + s.id + ": corners3d needs 8 points");
        std::array<Vec3, 8> pts{};
        for (std::size_t n = 0; n < 8; ++n) pts[n] = c[n].get<Vec3>();
        o.corners = pts;
      }
      s.objects.push_back(std::move(o));
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene record: ") + e.what());
  }
}

json to_json(const QuestionItem& q) {
  json overlays = json::array();
  for (const auto& o : q.overlays) overlays.push_back({{"bbox2d", box_json(o.bbox)}, {"color", o.color}});
  json j = {{"id", q.id},
            {"scene_id", q.scene_id},
            {"task", to_string(q.task)},
            {"source", to_string(q.source)},
            {"prompt", q.prompt},
            {"choices", q.choices},
            {"answer_index", q.answer_index},
            {"overlays", std::move(overlays)},
            {"object_refs", q.object_refs},
            {"status", to_string(q.status)}};
  if (q.edited_answer) j["edited_answer"] = *q.edited_answer;
  return j;
}

QuestionItem item_from_json(const json& j) {
  try {
    QuestionItem q;
    q.id = j.at("id").get<std::string>();
    q.scene_id = j.value("scene_id", "");
    q.task = task_from_string(j.at("task").get<std::string>());
    q.source = source_from_string(j.at("source").get<std::string>());
    q.prompt = j.value("prompt", "");
    q.choices = j.at("choices").get<std::vector<std::string>>();
    q.answer_index = j.at("answer_index").get<std::size_t>();
    if (j.contains("overlays")) {
      for (const auto& o : j["overlays"]) q.overlays.push_back({box_from(o.at("bbox2d")), o.at("color")});
    }
    q.object_refs = j.value("object_refs", std::vector<std::size_t>{});
    q.status = status_from_string(j.value("status", "pending"));
    if (j.contains("edited_answer") && !j["edited_answer"].is_null()) q.edited_answer = j["edited_answer"];
    q.validate();
    return q;
  } catch (const json::exception& e) {
    throw ParseError(std::string("item record: ") + e.what());
  }
}

std::vector<Scene> load_scenes(const std::filesystem::path& path) {
  std::vector<Scene> out;
  for (const auto& j : read_jsonl(path)) out.push_back(scene_from_json(j));
  return out;
}

std::vector<QuestionItem> load_items(const std::filesystem::path& path) {
  std::vector<QuestionItem> out;
  for (const auto& j : read_jsonl(path)) out.push_back(item_from_json(j));
  return out;
}

void save_items(const std::filesystem::path& path, const std::vector<QuestionItem>& items) {
  std::vector<json> records;
  for (const auto& q : items) records.push_back(to_json(q));
  write_jsonl(path, records);
}

double euclidean(const Vec3& a, const Vec3& b) noexcept {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

Vec3 centroid(const std::array<Vec3, 8>& corners) noexcept {
  Vec3 c{0, 0, 0};
  for (const auto& p : corners)
    for (int d = 0; d < 3; ++d) c[d] += p[d] / 8.0;
  return c;
}

std::array<Vec3, 8> box_corners(const Vec3& center, const Vec3& half) {
  std::array<Vec3, 8> out{};
  for (int n = 0; n < 8; ++n) {
    out[n] = {center[0] + ((n & 1) ? half[0] : -half[0]), center[1] + ((n & 2) ? half[1] : -half[1]),
              center[2] + ((n & 4) ? half[2] : -half[2])};
  }
  return out;
}

}  // namespace forge::cvbench
