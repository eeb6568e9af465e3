#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "forge/cvbench/scene.hpp"
#include "json.hpp"

namespace forge::cvbench {

struct GradedItem {
  std::string id;
  Task task = Task::spatial_relationship;
  Source source = Source::coco;
  bool correct = false;
};

GradedItem graded_from_json(const nlohmann::json& j);
std::vector<GradedItem> load_graded(const std::filesystem::path& path);

struct CvBenchScore {
  double acc_coco = 0, acc_ade = 0, acc_2d = 0, acc_3d = 0, overall = 0;
  std::size_t n_coco = 0, n_ade = 0, n_3d = 0;
};

// acc_2d is the mean of the COCO and ADE accuracies; overall weighs 2D and 3D
// equally.
CvBenchScore combine_accuracies(double acc_coco, double acc_ade, double acc_3d);

// 2D tasks bucket by source; 3D tasks pool depth order and relative distance.
// An empty bucket is an error naming it.
CvBenchScore score_cvbench(std::span<const GradedItem> graded);

struct Composition {
  std::map<Task, std::size_t> by_task;
  std::map<Source, std::size_t> by_source;
  std::size_t total = 0;
  std::size_t count_2d = 0, count_3d = 0;

  // Type / task / sources / count rows.
  std::string table() const;
};

Composition summarize(std::span<const QuestionItem> items);
Composition summarize(std::span<const GradedItem> items);

}  // namespace forge::cvbench
