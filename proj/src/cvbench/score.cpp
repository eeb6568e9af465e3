#include "forge/cvbench/score.hpp"

#include <set>
#include <sstream>

#include "forge/error.hpp"
#include "forge/jsonl.hpp"

namespace forge::cvbench {

GradedItem graded_from_json(const nlohmann::json& j) {
  try {
    return {j.value("id", ""), task_from_string(j.at("task").get<std::string>()),
            source_from_string(j.at("source").get<std::string>()), j.at("correct").get<bool>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("graded record: ") + e.what());
  }
}

std::vector<GradedItem> load_graded(const std::filesystem::path& path) {
  std::vector<GradedItem> out;
  for (const auto& j : read_jsonl(path)) out.push_back(graded_from_json(j));
  return out;
}

CvBenchScore combine_accuracies(double acc_coco, double acc_ade, double acc_3d) {
  CvBenchScore s;
  s.acc_coco = acc_coco;
  s.acc_ade = acc_ade;
  s.acc_3d = acc_3d;
  s.acc_2d = (acc_coco + acc_ade) / 2;
  s.overall = (s.acc_2d + acc_3d) / 2;
  return s;
}

CvBenchScore score_cvbench(std::span<const GradedItem> graded) {
  std::size_t hit[3] = {0, 0, 0}, seen[3] = {0, 0, 0};
  for (const auto& g : graded) {
    std::size_t bucket;
    if (is_3d(g.task)) {
      bucket = 2;
    } else if (g.source == Source::coco) {
      bucket = 0;
    } else if (g.source == Source::ade) {
      bucket = 1;
    } else {
      throw ValidationError("item " + g.id + ": 2D task from a 3D source");
    }
    ++seen[bucket];
    if (g.correct) ++hit[bucket];
  }
  const char* names[3] = {"coco", "ade", "3d"};
  for (int b = 0; b < 3; ++b) {
    if (seen[b] == 0) throw InvalidArgument(std::string("score_cvbench: empty bucket '") + names[b] + "'");
  }
  auto acc = [&](int b) { return static_cast<double>(hit[b]) / static_cast<double>(seen[b]); };
  auto s = combine_accuracies(acc(0), acc(1), acc(2));
  s.n_coco = seen[0];
  s.n_ade = seen[1];
  s.n_3d = seen[2];
  return s;
}

namespace {

template <class Item>
Composition tally(std::span<const Item> items) {
  Composition c;
  for (const auto& it : items) {
    ++c.by_task[it.task];
    ++c.by_source[it.source];
    ++c.total;
    ++(is_3d(it.task) ? c.count_3d : c.count_2d);
  }
  return c;
}

}  // namespace

Composition summarize(std::span<const QuestionItem> items) { return tally(items); }
Composition summarize(std::span<const GradedItem> items) { return tally(items); }

std::string Composition::table() const {
  std::ostringstream out;
  out << "type\ttask\tcount\n";
  for (auto t : {Task::spatial_relationship, Task::object_count, Task::depth_order, Task::relative_distance}) {
    auto it = by_task.find(t);
    out << (is_3d(t) ? "3D" : "2D") << '\t' << to_string(t) << '\t' << (it == by_task.end() ? 0 : it->second)
        << '\n';
  }
  out << "total\t\t" << total << '\n';
  return out.str();
}

}  // namespace forge::cvbench
