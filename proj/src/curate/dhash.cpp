#include "forge/curate/dhash.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>
#include <bit>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "forge/error.hpp"

namespace forge::curate {

std::uint64_t dhash(const GrayImage& img) {
  if (img.width == 0 || img.height == 0) throw InvalidArgument("dhash: empty image");
  const GrayImage small = (img.width == 9 && img.height == 8) ? img : resize_bilinear(img, 9, 8);
  std::uint64_t h = 0;
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c)
      if (small.at(r, c) < small.at(r, c + 1)) h |= std::uint64_t{1} << (63 - (r * 8 + c));
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int hamming(std::uint64_t a, std::uint64_t b) noexcept { return std::popcount(a ^ b); }

HashSet hash_directory(const std::filesystem::path& dir, std::vector<std::string>* skipped, std::size_t workers) {
  if (!std::filesystem::is_directory(dir)) throw NotFound("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<std::optional<std::uint64_t>> hashes(files.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < files.size();) {
      try {
        hashes[i] = dhash(load_image(files[i]));
      } catch (const ParseError&) {
      }
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(1, files.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  HashSet out{dir.filename().string(), {}};
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (hashes[i]) {
      out.hashes.push_back(*hashes[i]);
    } else if (skipped) {
      skipped->push_back(files[i].string());
    }
  }
  return out;
}

double LeakageRow::pct(std::size_t train) const {
  return test_size == 0 ? 0.0 : static_cast<double>(matches.at(train)) / static_cast<double>(test_size);
}

std::string group_thousands(std::size_t n) {
  auto s = std::to_string(n);
  for (int at = static_cast<int>(s.size()) - 3; at > 0; at -= 3) s.insert(static_cast<std::size_t>(at), ",");
  return s;
}

std::string format_leak_cell(std::size_t matches, std::size_t total) {
  char buf[32];
  std::snprintf(buf, sizeof buf, " (%.2f%%)", total == 0 ? 0.0 : 100.0 * double(matches) / double(total));
  return group_thousands(matches) + buf;
}

std::string LeakageReport::table() const {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head{"test set", "images"};
  for (const auto& t : train_sets) head.push_back(t);
  cells.push_back(head);
  auto row_cells = [&](const LeakageRow& r) {
    std::vector<std::string> c{r.test_set, group_thousands(r.test_size)};
    for (std::size_t t = 0; t < train_sets.size(); ++t) c.push_back(format_leak_cell(r.matches[t], r.test_size));
    return c;
  };
  for (const auto& r : rows) cells.push_back(row_cells(r));
  cells.push_back(row_cells(totals));
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& c : cells)
    for (std::size_t i = 0; i < c.size(); ++i) width[i] = std::max(width[i], c[i].size());
  std::ostringstream out;
  for (const auto& c : cells) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) out << "  ";
      if (i == 0) {
        out << c[i] << std::string(width[i] - c[i].size(), ' ');
      } else {
        out << std::string(width[i] - c[i].size(), ' ') << c[i];
      }
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json LeakageReport::to_json() const {
  auto row_json = [&](const LeakageRow& r) {
    nlohmann::json m = nlohmann::json::object();
    for (std::size_t t = 0; t < train_sets.size(); ++t) m[train_sets[t]] = {{"matches", r.matches[t]}, {"pct", r.pct(t)}};
    return nlohmann::json{{"test_set", r.test_set}, {"test_size", r.test_size}, {"train", m}};
  };
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& r : rows) rj.push_back(row_json(r));
  return {{"train_sets", train_sets}, {"rows", rj}, {"totals", row_json(totals)}};
}

LeakageReport leakage_scan(std::span<const HashSet> train, std::span<const HashSet> tests, int max_hamming) {
  if (max_hamming < 0) throw InvalidArgument("leakage_scan: negative Hamming radius");
  LeakageReport rep;
  std::vector<std::unordered_set<std::uint64_t>> exact;
  for (const auto& t : train) {
    rep.train_sets.push_back(t.name);
    exact.emplace_back(t.hashes.begin(), t.hashes.end());
  }
  rep.totals = {"Total", 0, std::vector<std::size_t>(train.size(), 0)};
  for (const auto& test : tests) {
    LeakageRow row{test.name, test.hashes.size(), std::vector<std::size_t>(train.size(), 0)};
    for (std::size_t t = 0; t < train.size(); ++t) {
      for (auto h : test.hashes) {
        bool hit = exact[t].contains(h);
        if (!hit && max_hamming > 0) {
          hit = std::any_of(train[t].hashes.begin(), train[t].hashes.end(),
                            [&](std::uint64_t x) { return hamming(x, h) <= max_hamming; });
        }
        row.matches[t] += hit;
      }
      rep.totals.matches[t] += row.matches[t];
    }
    rep.totals.test_size += row.test_size;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace forge::curate
