#include "forge/curate/pool.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "forge/error.hpp"
#include "forge/jsonl.hpp"
#include "forge/seed.hpp"

namespace forge::curate {

using nlohmann::json;

std::string to_string(Category c) {
  switch (c) {
    case Category::general: return "General";
    case Category::ocr: return "OCR";
    case Category::counting: return "Counting";
    case Category::code: return "Code";
    case Category::math: return "Math";
    case Category::science: return "Science";
    case Category::language: return "Language";
  }
  return "?";
}

const std::vector<Category>& all_categories() {
  static const std::vector<Category> all{Category::general, Category::ocr,     Category::counting, Category::code,
                                         Category::math,    Category::science, Category::language};
  return all;
}

Category category_from_string(const std::string& s) {
  auto lower = [](std::string v) {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return v;
  };
  for (auto c : all_categories()) {
    if (lower(to_string(c)) == lower(s)) return c;
  }
  throw ParseError("unknown category '" + s + "'");
}

std::map<std::string, std::size_t> DataPool::source_counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& r : records) ++out[r.source];
  return out;
}

std::map<Category, std::size_t> DataPool::category_counts() const {
  std::map<Category, std::size_t> out;
  for (const auto& r : records) ++out[r.category];
  return out;
}

json to_json(const Record& r) {
  json j = {{"id", r.id},
            {"source", r.source},
            {"category", to_string(r.category)},
            {"instruction", r.instruction},
            {"response", r.response}};
  if (r.image) j["image"] = *r.image;
  return j;
}

Record record_from_json(const json& j) {
  try {
    Record r;
    r.id = j.at("id").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.category = category_from_string(j.at("category").get<std::string>());
    r.instruction = j.value("instruction", "");
    r.response = j.value("response", "");
    if (j.contains("image") && j["image"].is_string()) r.image = j["image"].get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("pool record: ") + e.what());
  }
}

DataPool load_pool(const std::filesystem::path& path) {
  DataPool pool;
  for (const auto& j : read_jsonl(path)) pool.records.push_back(record_from_json(j));
  return pool;
}

void save_pool(const std::filesystem::path& path, const DataPool& pool) {
  std::vector<json> rows;
  for (const auto& r : pool.records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

std::vector<CurvePoint> cumulative_curve(const DataPool& pool) {
  if (pool.records.empty()) throw InvalidArgument("cumulative_curve: empty pool");
  auto counts = pool.source_counts();
  std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<CurvePoint> out;
  std::size_t acc = 0;
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    acc += sorted[r].second;
    out.push_back({r + 1, acc, sorted[r].first});
  }
  return out;
}

std::size_t suggest_threshold(std::span<const CurvePoint> curve) {
  if (curve.empty()) throw InvalidArgument("suggest_threshold: empty curve");
  if (curve.size() < 3) return curve.back().cumulative - (curve.size() > 1 ? curve[curve.size() - 2].cumulative : 0);
  const double x0 = double(curve.front().rank), x1 = double(curve.back().rank);
  const double y0 = double(curve.front().cumulative), y1 = double(curve.back().cumulative);
  std::size_t best = 0;
  double best_gap = -1.0;
  for (std::size_t n = 0; n < curve.size(); ++n) {
    const double x = (double(curve[n].rank) - x0) / (x1 - x0);
    const double y = y1 > y0 ? (double(curve[n].cumulative) - y0) / (y1 - y0) : 0.0;
    // The curve is convex (counts ascend), so the knee sits farthest below
    // the chord.
    const double gap = x - y;
    if (gap > best_gap) {
      best_gap = gap;
      best = n;
    }
  }
  const std::size_t prev = best == 0 ? 0 : curve[best - 1].cumulative;
  return curve[best].cumulative - prev;
}

namespace {

// Indices of `count` positions drawn uniformly from [0, n), ascending.
std::vector<std::size_t> sample_positions(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(count, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

DataPool apply_threshold(const DataPool& pool, std::size_t t, std::uint64_t seed) {
  if (t == 0) throw InvalidArgument("apply_threshold: t must be positive");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < pool.records.size(); ++i) members[pool.records[i].source].push_back(i);
  std::vector<std::size_t> keep;
  for (const auto& [source, idx] : members) {
    if (idx.size() <= t) {
      keep.insert(keep.end(), idx.begin(), idx.end());
      continue;
    }
    std::mt19937_64 rng(mix_seed(seed, source));
    for (auto p : sample_positions(idx.size(), t, rng)) keep.push_back(idx[p]);
  }
  std::sort(keep.begin(), keep.end());
  DataPool out;
  out.records.reserve(keep.size());
  for (auto i : keep) out.records.push_back(pool.records[i]);
  return out;
}

void CuratorConfig::validate() const {
  if (threshold == 0) throw InvalidArgument("curator config: t must be positive");
  if (target_size == 0) throw InvalidArgument("curator config: target size must be positive");
  if (ratios.empty()) throw InvalidArgument("curator config: no ratios given");
  double sum = 0.0;
  for (const auto& [c, r] : ratios) {
    if (!(r >= 0.0)) throw InvalidArgument("curator config: ratio for " + to_string(c) + " is negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("curator config: ratios sum to " + std::to_string(sum));
}

CuratorConfig curator_config_from_json(const json& j) {
  CuratorConfig c;
  try {
    c.threshold = j.value("threshold", c.threshold);
    c.target_size = j.value("target_size", c.target_size);
    c.seed = j.value("seed", c.seed);
    for (const auto& [k, v] : j.at("ratios").items()) c.ratios[category_from_string(k)] = v.get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("curator config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const CuratorConfig& c) {
  json ratios = json::object();
  for (const auto& [k, v] : c.ratios) ratios[to_string(k)] = v;
  return {{"threshold", c.threshold}, {"target_size", c.target_size}, {"seed", c.seed}, {"ratios", ratios}};
}

namespace {

// Splits `total` across `weights` by rounding, then fixes the sum by largest
// remainder (ties to the earlier key).
std::map<Category, std::size_t> apportion(const std::map<Category, double>& weights, std::size_t total) {
  double wsum = 0.0;
  for (const auto& [c, w] : weights) wsum += w;
  std::map<Category, std::size_t> out;
  if (wsum <= 0.0) return out;
  std::vector<std::pair<Category, double>> rem;
  long long assigned = 0;
  for (const auto& [c, w] : weights) {
    const double exact = w / wsum * double(total);
    const auto r = static_cast<long long>(std::llround(exact));
    out[c] = static_cast<std::size_t>(r);
    assigned += r;
    rem.push_back({c, exact - double(r)});
  }
  long long diff = static_cast<long long>(total) - assigned;
  if (diff > 0) {
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t n = 0; diff > 0; n = (n + 1) % rem.size(), --diff) ++out[rem[n].first];
  } else if (diff < 0) {
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    for (std::size_t n = 0; diff < 0; n = (n + 1) % rem.size()) {
      if (out[rem[n].first] > 0) {
        --out[rem[n].first];
        ++diff;
      }
    }
  }
  return out;
}

}  // namespace

MixResult mix_by_ratio(const DataPool& pool, const CuratorConfig& cfg) {
  cfg.validate();
  const std::size_t N = cfg.target_size;
  if (N > pool.size()) {
    throw InvalidArgument("mix_by_ratio: target " + std::to_string(N) + " exceeds pool of " +
                          std::to_string(pool.size()));
  }
  std::map<Category, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < pool.records.size(); ++i) members[pool.records[i].category].push_back(i);

  std::map<Category, double> active;
  for (const auto& [c, r] : cfg.ratios) {
    if (r <= 0.0) continue;
    if (members[c].empty()) throw InvalidArgument("mix_by_ratio: no records for category " + to_string(c));
    active[c] = r;
  }

  MixResult res;
  res.targets = apportion(active, N);
  auto taken = res.targets;
  std::size_t deficit = 0;
  for (auto& [c, n] : taken) {
    const std::size_t have = members[c].size();
    if (n > have) {
      res.shortfall[c] = n - have;
      deficit += n - have;
      n = have;
    }
  }
  while (deficit > 0) {
    std::map<Category, double> open;
    for (const auto& [c, r] : active)
      if (taken[c] < members[c].size()) open[c] = r;
    if (open.empty()) throw InvalidArgument("mix_by_ratio: categories with positive ratio cannot supply N records");
    auto extra = apportion(open, deficit);
    deficit = 0;
    for (auto& [c, e] : extra) {
      const std::size_t room = members[c].size() - taken[c];
      const std::size_t add = std::min(room, e);
      taken[c] += add;
      deficit += e - add;
    }
  }
  res.taken = taken;

  std::vector<std::size_t> keep;
  for (const auto& [c, n] : taken) {
    std::mt19937_64 rng(mix_seed(cfg.seed, to_string(c)));
    const auto& idx = members[c];
    for (auto p : sample_positions(idx.size(), n, rng)) keep.push_back(idx[p]);
  }
  std::sort(keep.begin(), keep.end());
  for (auto i : keep) res.pool.records.push_back(pool.records[i]);
  return res;
}

std::string MixResult::report() const {
  std::ostringstream out;
  out << "category\ttarget\ttaken\tshortfall\n";
  for (const auto& [c, t] : targets) {
    auto tk = taken.find(c);
    auto sf = shortfall.find(c);
    out << to_string(c) << '\t' << t << '\t' << (tk == taken.end() ? 0 : tk->second) << '\t'
        << (sf == shortfall.end() ? 0 : sf->second) << '\n';
  }
  out << "shortfall:";
  if (shortfall.empty()) out << " none";
  for (const auto& [c, n] : shortfall) out << ' ' << to_string(c) << ':' << n;
  out << '\n';
  return out.str();
}

}  // namespace forge::curate
