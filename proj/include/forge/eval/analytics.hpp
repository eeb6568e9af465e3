#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/eval/table.hpp"
#include "json.hpp"

namespace forge::eval {

struct CategoryScores {
  std::vector<std::string> models;
  std::vector<BenchCategory> categories;
  std::vector<std::vector<double>> values;  // [model][category]
};

// Each score divided by its benchmark's divisor, then an unweighted mean per
// category. Throws InvalidArgument when a requested category has no benchmark.
CategoryScores category_scores(const ScoreTable& table,
                               const std::vector<BenchCategory>& categories = all_bench_categories());

// 100 / num_choices. Paired yes/no scoring has no single-answer baseline and
// is rejected, as is missing num_choices.
double random_baseline(const BenchmarkMeta& meta);

inline constexpr double kVisionGapThreshold = 5.0;

struct GapRow {
  std::string benchmark;
  double mean_enabled = 0.0;
  double mean_disabled = 0.0;
  double gap = 0.0;  // enabled - disabled, in score points after scaling
  std::optional<double> random;
  std::optional<double> disabled_minus_random;
  bool vision_insensitive = false;  // gap < 5
};

// Rows sorted by gap, largest first. The two tables must cover the same
// benchmark names.
std::vector<GapRow> vision_gap_report(const ScoreTable& enabled, const ScoreTable& disabled);
nlohmann::json to_json(const std::vector<GapRow>& rows);

struct CorrelationResult {
  std::vector<std::string> benchmarks;
  std::vector<std::vector<double>> matrix;
  std::vector<std::string> warnings;  // one per zero-variance column
};

// Pearson correlation between benchmark columns over models. Zero-variance
// columns get 0 off the diagonal and a warning; the diagonal is always 1.
CorrelationResult correlation_matrix(const ScoreTable& table);

struct PcaResult {
  std::vector<std::string> benchmarks;
  std::vector<std::array<double, 2>> coords;
  std::array<double, 2> explained{};  // fraction of total variance per axis
  std::vector<int> labels;            // 0..k-1, numbered by first appearance
  double inertia = 0.0;
};

// Benchmarks are points whose features are their standardized scores across
// models. Principal coordinates come from the eigen-decomposition of the
// double-centred correlation matrix; k-means (k-means++ seeding, `restarts`
// runs, best inertia kept) clusters the 2D coordinates.
PcaResult pca_cluster(const ScoreTable& table, int k = 4, std::uint64_t seed = 0, int restarts = 0);

struct KMeansResult {
  std::vector<int> labels;
  double inertia = 0.0;
};
KMeansResult kmeans(const std::vector<std::array<double, 2>>& points, int k, std::uint64_t seed, int restarts);

// Post-hoc naming: cluster id -> name, with per-benchmark overrides taking
// precedence. Unnamed clusters read "cluster-<id>".
struct ClusterNames {
  std::map<int, std::string> names;
  std::map<std::string, std::string> overrides;

  static ClusterNames from_json(const nlohmann::json& j);
  std::string name_for(const std::string& benchmark, int label) const;
};

// Coordinates, labels, names and explained variance for external plotting.
nlohmann::json plot_data(const PcaResult& r, const ClusterNames& names = {});

}  // namespace forge::eval
