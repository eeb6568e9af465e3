#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "forge/error.hpp"
#include "forge/eval/analytics.hpp"
#include "forge/eval/grading.hpp"
#include "forge/eval/table.hpp"
#include "forge/jsonl.hpp"

using namespace forge;
using namespace forge::eval;

namespace {

const std::filesystem::path kFixtures = FORGE_FIXTURE_DIR;
const std::filesystem::path kConfig = FORGE_CONFIG_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ScoreTable make_table(const std::vector<std::vector<double>>& scores,
                      std::vector<BenchCategory> cats = {}) {
  ScoreTable t;
  for (std::size_t m = 0; m < scores.size(); ++m) t.models.push_back("model" + std::to_string(m));
  const std::size_t B = scores.empty() ? 0 : scores[0].size();
  for (std::size_t b = 0; b < B; ++b) {
    BenchmarkMeta meta;
    meta.name = "bench" + std::to_string(b);
    meta.category = cats.empty() ? BenchCategory::general : cats[b];
    t.benchmarks.push_back(meta);
  }
  t.scores = scores;
  return t;
}

std::vector<std::vector<double>> random_scores(std::mt19937_64& rng, std::size_t M, std::size_t B) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<std::vector<double>> s(M, std::vector<double>(B));
  for (auto& row : s)
    for (auto& v : row) v = u(rng);
  return s;
}

// Textbook single-pass formula: (n Sxy - Sx Sy) / sqrt((n Sxx - Sx^2)(n Syy - Sy^2)).
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

std::vector<double> column(const ScoreTable& t, std::size_t b) {
  std::vector<double> c;
  for (const auto& row : t.scores) c.push_back(row[b]);
  return c;
}

// Same partition, ignoring label names.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------- fuzzy matching

TEST_CASE("fuzzy matching reproduces the grader few-shot verdicts") {
  const std::vector<std::tuple<std::string, std::string, bool>> shots{
      {"25", "29", false}, {"Yes", "Yes", true}, {"80", "80", true},
      {"Ireland", "Italy", false}, {"UK", "UK", true}, {"2019", "2011", false}};
  for (const auto& [pred, gt, want] : shots) {
    CAPTURE(pred);
    CAPTURE(gt);
    CHECK(fuzzy_match(pred, gt).correct == want);
  }
}

TEST_CASE("fuzzy matching: choices, normalization, numbers") {
  auto v = fuzzy_match("the Apple", "(a) Apple");
  CHECK(v.correct);
  CHECK(v.rule_fired == "exact");
  CHECK(fuzzy_match("Apple", "(a) Apple").correct);
  CHECK(fuzzy_match("(A)", "(a) Apple").correct);
  CHECK(fuzzy_match("A", "(a) Apple").rule_fired == "choice-letter");
  CHECK(fuzzy_match("B.", "(a) Apple").correct == false);
  CHECK(fuzzy_match("b", "B").correct);
  CHECK(fuzzy_match("The answer is Paris.", "paris").rule_fired == "token-substring");
  CHECK_FALSE(fuzzy_match("Parisian", "Paris").correct);
  CHECK(fuzzy_match("YES", "yes").correct);
  CHECK_FALSE(fuzzy_match("no", "yes").correct);
  CHECK_FALSE(fuzzy_match("", "yes").correct);

  // Boundary: relative error exactly 0.05 passes, just above fails.
  CHECK(fuzzy_match("10.5", "10").correct);
  CHECK(fuzzy_match("10.5", "10").rule_fired == "numeric");
  CHECK_FALSE(fuzzy_match("10.51", "10").correct);
  CHECK(fuzzy_match("9.5", "10").correct);
  CHECK(fuzzy_match("1,000", "1000").correct);
  CHECK(fuzzy_match("12%", "12").correct);
  CHECK(fuzzy_match("3.0", "3").correct);
  CHECK_FALSE(fuzzy_match("26", "25").correct);

  // Reflexive and case-insensitive on arbitrary strings.
  std::mt19937_64 rng(4);
  const std::string alphabet = "abcXYZ 019.,()-";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (int n = 0; n < 1 + int(rng() % 12); ++n) s += alphabet[rng() % alphabet.size()];
    std::string up = s;
    for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (normalize_answer(s).text.empty() && !normalize_answer(s).letter) continue;
    CAPTURE(s);
    CHECK(fuzzy_match(s, s).correct);
    CHECK(fuzzy_match(up, s).correct);
  }
}

// ---------------------------------------------------------------- LLM grader

TEST_CASE("grader prompt matches the stored template byte for byte") {
  const auto fixture = slurp(kFixtures / "grader_prompt_template.txt");
  CHECK(grader_template() == fixture);
  const auto prompt = grader_prompt("42", "41");
  std::string expected = fixture;
  expected.replace(expected.find("{answer}"), 8, "42");
  expected.replace(expected.find("{gt_answer}"), 11, "41");
  CHECK(prompt == expected);
  CHECK(grader_prompt("{gt_answer}", "x").find("answer: {gt_answer}\ngt_answer: x\n") != std::string::npos);
}

TEST_CASE("grade_llm parsing and retry") {
  clients::ScriptedChatClient yes([](const auto&) { return std::string("CORRECT"); });
  CHECK(grade_llm("a", "a", yes).correct);
  CHECK(yes.calls() == 1);

  clients::ScriptedChatClient lenient([](const auto&) { return std::string("incorrect."); });
  auto v = grade_llm("a", "b", lenient);
  CHECK_FALSE(v.correct);
  CHECK(v.rule_fired == "llm-grader");

  int n = 0;
  clients::ScriptedChatClient second([&](const auto&) { return std::string(n++ == 0 ? "Hmm, maybe" : "Evaluation: CORRECT"); });
  CHECK(grade_llm("a", "a", second).correct);
  CHECK(second.calls() == 2);

  clients::ScriptedChatClient garbage([](const auto&) { return std::string("I think it is right"); });
  try {
    grade_llm("a", "a", garbage);
    FAIL("expected ClientError");
  } catch (const ClientError& e) {
    CHECK(e.payload() == "I think it is right");
  }
  CHECK(garbage.calls() == 2);

  CHECK_FALSE(parse_grader_reply("CORRECT or INCORRECT"));
  CHECK(parse_grader_reply(" Correct!\n") == true);

  clients::ScriptedChatClient seen([](const std::vector<clients::ChatMessage>& m) {
    return m.back().content == grader_prompt("p", "g") ? std::string("CORRECT") : std::string("INCORRECT");
  });
  CHECK(grade_llm("p", "g", seen).correct);
}

TEST_CASE("batch grading keeps order across workers") {
  std::vector<GradeItem> items;
  for (int i = 0; i < 200; ++i)
    items.push_back({"q" + std::to_string(i), std::to_string(i % 7), std::to_string(i % 5), i % 2 ? "odd" : "even"});
  auto serial = grade_all(items, fuzzy_match, 1);
  auto parallel = grade_all(items, fuzzy_match, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].id == items[i].id);
    CHECK(parallel[i].id == items[i].id);
    CHECK(serial[i].verdict.correct == parallel[i].verdict.correct);
  }
  auto acc = accuracy_by_benchmark(serial);
  REQUIRE(acc.size() == 2);
  std::size_t total = 0;
  for (const auto& a : acc) total += a.total;
  CHECK(total == 200);

  auto item = grade_item_from_json({{"id", "x"}, {"prediction", 3}, {"answer", "3"}});
  CHECK(item.prediction == "3");
  CHECK(to_json(GradedResult{"x", "b", {true, "exact"}})["verdict"] == "CORRECT");
}

// ---------------------------------------------------------------- tables

TEST_CASE("score table CSV loading") {
  auto t = load_score_table(kFixtures / "eval" / "scores.csv", kFixtures / "eval" / "meta.csv");
  REQUIRE(t.models == std::vector<std::string>{"m1", "m2"});
  REQUIRE(t.benchmarks.size() == 4);
  CHECK(t.benchmarks[1].name == "Bench, quoted");
  CHECK(t.benchmarks[0].scale_divisor == 20.0);
  CHECK(t.benchmarks[0].paired_scoring);
  CHECK(t.benchmarks[1].num_choices == 4);
  CHECK(t.scores[1][1] == 55.5);
  CHECK(t.scaled(0, 0) == 75.0);

  auto cfg_meta = load_benchmark_meta(kConfig / "benchmark_meta.csv");
  CHECK(cfg_meta.size() == 16);

  CHECK(parse_csv("a,\"b \"\"q\"\"\",c\n\n1,2,3").size() == 2);
  CHECK(parse_csv("a,\"b \"\"q\"\"\",c")[0][1] == "b \"q\"");
  CHECK_THROWS_AS(parse_csv("a,\"open"), ParseError);
  CHECK(csv_escape("x,y") == "\"x,y\"");
  CHECK(bench_category_from_string("Chart & OCR") == BenchCategory::ocr_chart);
  CHECK_THROWS_AS(bench_category_from_string("Audio"), InvalidArgument);

  auto bad = make_table({{1.0, NAN}});
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

// ---------------------------------------------------------------- analytics

TEST_CASE("category scores") {
  auto t = make_table({{1500, 80, 60}, {1000, 40, 20}},
                      {BenchCategory::general, BenchCategory::general, BenchCategory::knowledge});
  t.benchmarks[0].scale_divisor = 20;
  auto cs = category_scores(t, {BenchCategory::general, BenchCategory::knowledge});
  CHECK(cs.values[0][0] == doctest::Approx(77.5));  // (75 + 80) / 2
  CHECK(cs.values[0][1] == 60.0);
  CHECK(cs.values[1][0] == doctest::Approx(45.0));

  auto single = make_table({{1500}});
  single.benchmarks[0].scale_divisor = 20;
  CHECK(category_scores(single, {BenchCategory::general}).values[0][0] == 75.0);
  CHECK_THROWS_AS(category_scores(single), InvalidArgument);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t M = 1 + rng() % 6, B = 4 + rng() % 10;
    std::vector<BenchCategory> cats;
    for (std::size_t b = 0; b < B; ++b) cats.push_back(all_bench_categories()[b < 4 ? b : rng() % 4]);
    auto tt = make_table(random_scores(rng, M, B), cats);
    for (auto& b : tt.benchmarks) b.scale_divisor = 1 + double(rng() % 20);
    auto got = category_scores(tt);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t c = 0; c < 4; ++c) {
        double sum = 0;
        int n = 0;
        for (std::size_t b = 0; b < B; ++b) {
          if (cats[b] == all_bench_categories()[c]) {
            sum += tt.scores[m][b] / tt.benchmarks[b].scale_divisor;
            ++n;
          }
        }
        CHECK(std::abs(got.values[m][c] - sum / n) < 1e-12);
      }
    }
    // Reversing benchmark order within the table changes nothing.
    auto rev = tt;
    std::reverse(rev.benchmarks.begin(), rev.benchmarks.end());
    for (auto& row : rev.scores) std::reverse(row.begin(), row.end());
    auto got_rev = category_scores(rev);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(got_rev.values[m][c] - got.values[m][c]) < 1e-12);
  }
}

TEST_CASE("random baselines") {
  BenchmarkMeta m{"x", BenchCategory::general, 1, 4, 0, false};
  CHECK(random_baseline(m) == 25.0);
  m.num_choices = 2;
  CHECK(random_baseline(m) == 50.0);
  m.paired_scoring = true;
  CHECK_THROWS_AS(random_baseline(m), InvalidArgument);
  m.paired_scoring = false;
  m.num_choices.reset();
  CHECK_THROWS_AS(random_baseline(m), InvalidArgument);
}

TEST_CASE("vision gap report") {
  auto same = make_table({{50, 60, 70}, {40, 50, 60}});
  for (const auto& r : vision_gap_report(same, same)) {
    CHECK(r.gap == 0.0);
    CHECK(r.vision_insensitive);
  }

  auto on = make_table({{80, 60, 50}, {80, 60, 50}});
  auto off = make_table({{40, 55, 45}, {40, 55, 46}});
  on.benchmarks[0].num_choices = off.benchmarks[0].num_choices = 4;
  auto rows = vision_gap_report(on, off);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].benchmark == "bench0");
  CHECK(rows[0].gap == 40.0);
  CHECK_FALSE(rows[0].vision_insensitive);
  CHECK(rows[0].random == 25.0);
  CHECK(rows[0].disabled_minus_random == 15.0);
  // Exactly 5 points is not flagged; 4.5 is.
  CHECK(rows[1].benchmark == "bench1");
  CHECK(rows[1].gap == 5.0);
  CHECK_FALSE(rows[1].vision_insensitive);
  CHECK(rows[2].gap == 4.5);
  CHECK(rows[2].vision_insensitive);
  CHECK_FALSE(rows[2].random);
  CHECK(to_json(rows)[2]["random"].is_null());

  auto fewer = make_table({{1, 2}});
  CHECK_THROWS_AS(vision_gap_report(on, fewer), ValidationError);
}

TEST_CASE("correlation matrix") {
  auto dup = make_table({{1, 1, -1, 5}, {2, 2, -2, 5}, {4, 4, -4, 5}});
  auto c = correlation_matrix(dup);
  CHECK(c.matrix[0][1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.matrix[0][2] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(c.matrix[0][3] == 0.0);
  CHECK(c.matrix[3][3] == 1.0);
  REQUIRE(c.warnings.size() == 1);
  CHECK(c.warnings[0].find("bench3") != std::string::npos);

  CHECK_THROWS_AS(correlation_matrix(make_table({{1, 2}})), InvalidArgument);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = make_table(random_scores(rng, 10, 5));
    auto got = correlation_matrix(t);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        const double want = i == j ? 1.0 : pearson_oracle(column(t, i), column(t, j));
        CHECK(std::abs(got.matrix[i][j] - want) < 1e-10);
        CHECK(got.matrix[i][j] == got.matrix[j][i]);
        CHECK(std::abs(got.matrix[i][j]) <= 1.0);
      }
    }
  }
}

TEST_CASE("pca clustering") {
  SUBCASE("two planted groups over 20 models") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> f1(20), f2(20);
    for (auto& v : f1) v = 50 + 15 * noise(rng);
    for (auto& v : f2) v = 50 + 15 * noise(rng);
    std::vector<std::vector<double>> s(20, std::vector<double>(10));
    for (std::size_t m = 0; m < 20; ++m)
      for (std::size_t b = 0; b < 10; ++b) s[m][b] = (b % 2 ? f2[m] : f1[m]) * (1 + 0.1 * double(b)) + double(b);
    auto t = make_table(s);
    auto r = pca_cluster(t, 2, 7);
    for (std::size_t b = 0; b < 10; ++b) CHECK(r.labels[b] == r.labels[b % 2]);
    CHECK(r.labels[0] != r.labels[1]);
    CHECK(r.explained[0] + r.explained[1] == doctest::Approx(1.0));
    double mx = 0, my = 0;
    for (const auto& p : r.coords) {
      mx += p[0];
      my += p[1];
    }
    CHECK(std::abs(mx / 10) < 1e-10);
    CHECK(std::abs(my / 10) < 1e-10);

    // Column permutation only permutes labels.
    std::vector<std::size_t> perm{3, 7, 0, 9, 1, 4, 8, 2, 6, 5};
    auto tp = t;
    for (std::size_t b = 0; b < 10; ++b) tp.benchmarks[b] = t.benchmarks[perm[b]];
    for (std::size_t m = 0; m < 20; ++m)
      for (std::size_t b = 0; b < 10; ++b) tp.scores[m][b] = t.scores[m][perm[b]];
    auto rp = pca_cluster(tp, 2, 7);
    std::vector<int> back(10);
    for (std::size_t b = 0; b < 10; ++b) back[perm[b]] = rp.labels[b];
    CHECK(same_partition(back, r.labels));

    auto again = pca_cluster(t, 2, 7);
    CHECK(again.labels == r.labels);
    CHECK(again.coords == r.coords);
  }
  SUBCASE("four noisy planted groups") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::vector<double>> factor(4, std::vector<double>(20));
    for (auto& f : factor)
      for (auto& v : f) v = noise(rng);
    std::vector<std::vector<double>> s(20, std::vector<double>(16));
    for (std::size_t m = 0; m < 20; ++m)
      for (std::size_t b = 0; b < 16; ++b) s[m][b] = 50 + 10 * factor[b % 4][m] + 0.5 * noise(rng);
    auto r = pca_cluster(make_table(s), 4, 1, 10);
    // Two axes cannot separate four independent factors, so only the cluster count is checked.
    std::map<int, std::map<int, int>> tally;
    for (std::size_t b = 0; b < 16; ++b) ++tally[r.labels[b]][int(b % 4)];
    CHECK(tally.size() == 4);
  }
  SUBCASE("rank one table") {
    std::vector<std::vector<double>> s(6, std::vector<double>(5));
    const std::vector<double> w{1, -2, 3, -0.5, 2};
    for (std::size_t m = 0; m < 6; ++m)
      for (std::size_t b = 0; b < 5; ++b) s[m][b] = double(m + 1) * w[b];
    auto r = pca_cluster(make_table(s), 2, 0);
    CHECK(r.explained[0] == doctest::Approx(1.0));
    CHECK(r.explained[1] == doctest::Approx(0.0));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(pca_cluster(make_table({{1, 2, 3}, {2, 3, 1}, {3, 1, 2}}), 4), InvalidArgument);
    CHECK_THROWS_AS(pca_cluster(make_table({{1, 2, 3}, {2, 3, 1}}), 2), InvalidArgument);
  }
}

TEST_CASE("cluster naming and plot data") {
  auto names = ClusterNames::from_json(read_json_file(kConfig / "cluster_names.json"));
  names.names[0] = "General";
  CHECK(names.name_for("MMMU", 0) == "Knowledge");
  CHECK(names.name_for("GQA", 0) == "General");
  CHECK(names.name_for("GQA", 3) == "cluster-3");

  PcaResult r{{"MMMU", "GQA"}, {{{1.0, 2.0}}, {{-1.0, -2.0}}}, {0.9, 0.1}, {0, 1}, 0.0};
  auto j = plot_data(r, names);
  CHECK(j["points"][0]["name"] == "Knowledge");
  CHECK(j["points"][1]["name"] == "cluster-1");
  CHECK(j["explained_variance"][0] == 0.9);
}
