#include "forge/eval/analytics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "forge/error.hpp"

namespace forge::eval {

CategoryScores category_scores(const ScoreTable& table, const std::vector<BenchCategory>& categories) {
  table.validate();
  CategoryScores out{table.models, categories, {}};
  std::vector<std::vector<std::size_t>> members(categories.size());
  for (std::size_t c = 0; c < categories.size(); ++c) {
    for (std::size_t b = 0; b < table.benchmarks.size(); ++b)
      if (table.benchmarks[b].category == categories[c]) members[c].push_back(b);
    if (members[c].empty()) throw InvalidArgument("category " + to_string(categories[c]) + " has no benchmarks");
  }
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    std::vector<double> row;
    for (const auto& idx : members) {
      double s = 0.0;
      for (auto b : idx) s += table.scaled(m, b);
      row.push_back(s / double(idx.size()));
    }
    out.values.push_back(std::move(row));
  }
  return out;
}

double random_baseline(const BenchmarkMeta& meta) {
  if (meta.paired_scoring) {
    throw InvalidArgument(meta.name + ": paired yes/no scoring has no single-answer random baseline");
  }
  if (!meta.num_choices) throw InvalidArgument(meta.name + ": num_choices is required for a random baseline");
  if (*meta.num_choices < 1) throw InvalidArgument(meta.name + ": num_choices must be positive");
  return 100.0 / double(*meta.num_choices);
}

namespace {

std::vector<double> column_means(const ScoreTable& t) {
  if (t.models.empty()) throw InvalidArgument("score table has no models");
  std::vector<double> mean(t.benchmarks.size(), 0.0);
  for (std::size_t m = 0; m < t.models.size(); ++m)
    for (std::size_t b = 0; b < mean.size(); ++b) mean[b] += t.scaled(m, b);
  for (auto& v : mean) v /= double(t.models.size());
  return mean;
}

}  // namespace

std::vector<GapRow> vision_gap_report(const ScoreTable& enabled, const ScoreTable& disabled) {
  enabled.validate();
  disabled.validate();
  std::set<std::string> a, b;
  for (const auto& m : enabled.benchmarks) a.insert(m.name);
  for (const auto& m : disabled.benchmarks) b.insert(m.name);
  if (a != b) throw ValidationError("vision_gap_report: enabled and disabled tables cover different benchmarks");
  const auto me = column_means(enabled), md = column_means(disabled);
  std::vector<GapRow> rows;
  for (std::size_t i = 0; i < enabled.benchmarks.size(); ++i) {
    const auto& meta = enabled.benchmarks[i];
    GapRow r{meta.name, me[i], md[disabled.index_of(meta.name)], 0.0, std::nullopt, std::nullopt, false};
    r.gap = r.mean_enabled - r.mean_disabled;
    r.vision_insensitive = r.gap < kVisionGapThreshold;
    if (meta.num_choices && !meta.paired_scoring) {
      r.random = random_baseline(meta);
      r.disabled_minus_random = r.mean_disabled - *r.random;
    }
    rows.push_back(std::move(r));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const GapRow& x, const GapRow& y) { return x.gap > y.gap; });
  return rows;
}

nlohmann::json to_json(const std::vector<GapRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"benchmark", r.benchmark},
                     {"mean_enabled", r.mean_enabled},
                     {"mean_disabled", r.mean_disabled},
                     {"gap", r.gap},
                     {"vision_insensitive", r.vision_insensitive}};
    j["random"] = r.random ? nlohmann::json(*r.random) : nlohmann::json(nullptr);
    j["disabled_minus_random"] = r.disabled_minus_random ? nlohmann::json(*r.disabled_minus_random) : nlohmann::json(nullptr);
    out.push_back(std::move(j));
  }
  return out;
}

CorrelationResult correlation_matrix(const ScoreTable& table) {
  table.validate();
  const std::size_t M = table.models.size(), B = table.benchmarks.size();
  if (M < 2) throw InvalidArgument("correlation_matrix: need at least 2 models");
  CorrelationResult out;
  std::vector<std::vector<double>> centered(B, std::vector<double>(M));
  std::vector<double> norm(B, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    out.benchmarks.push_back(table.benchmarks[b].name);
    double mean = 0.0;
    for (std::size_t m = 0; m < M; ++m) mean += table.scores[m][b];
    mean /= double(M);
    for (std::size_t m = 0; m < M; ++m) {
      centered[b][m] = table.scores[m][b] - mean;
      norm[b] += centered[b][m] * centered[b][m];
    }
    norm[b] = std::sqrt(norm[b]);
    if (norm[b] == 0.0) out.warnings.push_back(table.benchmarks[b].name + " has zero variance; its correlations are set to 0");
  }
  out.matrix.assign(B, std::vector<double>(B, 0.0));
  for (std::size_t i = 0; i < B; ++i) {
    out.matrix[i][i] = 1.0;
    for (std::size_t j = i + 1; j < B; ++j) {
      double r = 0.0;
      if (norm[i] > 0.0 && norm[j] > 0.0) {
        double dot = 0.0;
        for (std::size_t m = 0; m < M; ++m) dot += centered[i][m] * centered[j][m];
        r = std::clamp(dot / (norm[i] * norm[j]), -1.0, 1.0);
      }
      out.matrix[i][j] = out.matrix[j][i] = r;
    }
  }
  return out;
}

namespace {

double sq_dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
}

KMeansResult lloyd(const std::vector<std::array<double, 2>>& pts, int k, std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  std::vector<std::array<double, 2>> centers;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.push_back(pts[pick(rng)]);
  std::vector<double> d2(n);
  while (int(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) d2[i] = std::min(d2[i], sq_dist(pts[i], c));
      total += d2[i];
    }
    if (total == 0.0) {
      centers.push_back(pts[pick(rng)]);
      continue;
    }
    std::discrete_distribution<std::size_t> weighted(d2.begin(), d2.end());
    centers.push_back(pts[weighted(rng)]);
  }
  std::vector<int> labels(n, -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (sq_dist(pts[i], centers[c]) < sq_dist(pts[i], centers[best])) best = c;
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::array<double, 2>> sum(k, {0.0, 0.0});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[labels[i]][0] += pts[i][0];
      sum[labels[i]][1] += pts[i][1];
      ++count[labels[i]];
    }
    for (int c = 0; c < k; ++c)
      if (count[c]) centers[c] = {sum[c][0] / double(count[c]), sum[c][1] / double(count[c])};
  }
  KMeansResult r{labels, 0.0};
  for (std::size_t i = 0; i < n; ++i) r.inertia += sq_dist(pts[i], centers[labels[i]]);
  return r;
}

// Renumber so labels appear as 0, 1, 2, ... in point order.
void canonicalize(std::vector<int>& labels) {
  std::map<int, int> remap;
  for (auto& l : labels) {
    auto [it, fresh] = remap.try_emplace(l, int(remap.size()));
    l = it->second;
  }
}

}  // namespace

KMeansResult kmeans(const std::vector<std::array<double, 2>>& points, int k, std::uint64_t seed, int restarts) {
  if (k < 1) throw InvalidArgument("kmeans: k must be positive");
  if (std::size_t(k) > points.size()) throw InvalidArgument("kmeans: k exceeds the number of points");
  std::mt19937_64 rng(seed);
  KMeansResult best{{}, std::numeric_limits<double>::infinity()};
  for (int r = 0; r < std::max(1, restarts); ++r) {
    auto run = lloyd(points, k, rng);
    if (run.inertia < best.inertia - 1e-12) best = std::move(run);
  }
  canonicalize(best.labels);
  return best;
}

PcaResult pca_cluster(const ScoreTable& table, int k, std::uint64_t seed, int restarts) {
  table.validate();
  const std::size_t M = table.models.size(), B = table.benchmarks.size();
  if (M < 3) throw InvalidArgument("pca_cluster: need at least 3 models");
  if (k < 1 || std::size_t(k) > B) {
    throw InvalidArgument("pca_cluster: k=" + std::to_string(k) + " but only " + std::to_string(B) + " benchmarks");
  }
  const auto corr = correlation_matrix(table);
  Eigen::MatrixXd R(B, B);
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < B; ++j) R(i, j) = corr.matrix[i][j];
  const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(B, B) - Eigen::MatrixXd::Constant(B, B, 1.0 / double(B));
  const Eigen::MatrixXd G = J * R * J;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (G + G.transpose()));
  if (eig.info() != Eigen::Success) throw NumericError("pca_cluster: eigen-decomposition failed");

  // Eigenvalues ascend; take the top two, clamped at zero.
  const auto& vals = eig.eigenvalues();
  double total = 0.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) total += std::max(0.0, vals(i));
  PcaResult out;
  out.benchmarks = corr.benchmarks;
  out.coords.assign(B, {0.0, 0.0});
  // Eigenvalues at rounding level are zero; their eigenvectors are arbitrary.
  const double tol = 1e-12 * std::max(1.0, vals(vals.size() - 1));
  for (int axis = 0; axis < 2 && axis < int(B); ++axis) {
    const Eigen::Index col = vals.size() - 1 - axis;
    const double lambda = vals(col) > tol ? vals(col) : 0.0;
    Eigen::VectorXd u = eig.eigenvectors().col(col);
    // Sign convention: the largest-magnitude component is positive.
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0) u = -u;
    const double mean = u.mean();
    for (std::size_t b = 0; b < B; ++b) out.coords[b][axis] = std::sqrt(lambda) * (u(Eigen::Index(b)) - mean);
    out.explained[axis] = total > 0.0 ? lambda / total : 0.0;
  }
  auto km = kmeans(out.coords, k, seed, restarts > 0 ? restarts : k);
  out.labels = std::move(km.labels);
  out.inertia = km.inertia;
  return out;
}

ClusterNames ClusterNames::from_json(const nlohmann::json& j) {
  ClusterNames n;
  try {
    if (j.contains("names"))
      for (const auto& [k, v] : j["names"].items()) n.names[std::stoi(k)] = v.get<std::string>();
    if (j.contains("overrides"))
      for (const auto& [k, v] : j["overrides"].items()) n.overrides[k] = v.get<std::string>();
  } catch (const std::exception& e) {
    throw ParseError(std::string("cluster names: ") + e.what());
  }
  return n;
}

std::string ClusterNames::name_for(const std::string& benchmark, int label) const {
  if (auto it = overrides.find(benchmark); it != overrides.end()) return it->second;
  if (auto it = names.find(label); it != names.end()) return it->second;
  return "cluster-" + std::to_string(label);
}

nlohmann::json plot_data(const PcaResult& r, const ClusterNames& names) {
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t b = 0; b < r.benchmarks.size(); ++b) {
    pts.push_back({{"benchmark", r.benchmarks[b]},
                   {"x", r.coords[b][0]},
                   {"y", r.coords[b][1]},
                   {"cluster", r.labels[b]},
                   {"name", names.name_for(r.benchmarks[b], r.labels[b])}});
  }
  return {{"explained_variance", {r.explained[0], r.explained[1]}}, {"points", pts}};
}

}  // namespace forge::eval
