#include <chrono>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "forge/clients.hpp"
#include "forge/connector/baselines.hpp"
#include "forge/curate/dhash.hpp"
#include "forge/curate/engine.hpp"
#include "forge/curate/format_prompts.hpp"
#include "forge/curate/pool.hpp"
#include "forge/cvbench/generate.hpp"
#include "forge/cvbench/score.hpp"
#include "forge/eval/analytics.hpp"
#include "forge/eval/grading.hpp"
#include "forge/jsonl.hpp"
#include "forge/numcore/ops.hpp"
#include "forge/review/server.hpp"
#include "forge/sva/bench.hpp"

using namespace forge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Writes to `path`, or stdout when it is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw InvalidArgument("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

num::Tensor uniform(std::mt19937_64& rng, num::Shape shape) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(num::shape_volume(shape));
  for (auto& x : v) x = dist(rng);
  return num::Tensor(std::move(shape), std::move(v));
}

// ---- sva ----

int sva_bench(const std::string& config, bool no_grad) {
  auto settings = sva::BenchSettings::from_json(read_json_file(config), fs::path(config).parent_path());
  if (no_grad) settings.grad_check = false;
  const auto report = sva::run_bench(settings);
  for (const auto& rec : report.to_json()) std::cout << rec.dump() << '\n';
  std::cerr << report.attention_table;
  return report.pass() ? 0 : 1;
}

// ---- connector ----

int connector_compare(const std::string& config) {
  const auto j = read_json_file(config);
  const auto cfg = sva::config_from_json(j.at("sva"));
  cfg.validate();
  const auto native = j.value("native_tokens", std::vector<std::size_t>(cfg.encoders(), cfg.tokens_per_group()));
  const auto dims = j.value("encoder_dims", std::vector<std::size_t>(cfg.encoders(), cfg.channels));
  const auto target = j.value("target_tokens", cfg.tokens_per_group());
  const auto latents = j.value("resampler_latents", cfg.output_tokens());
  const auto repeats = std::max<std::size_t>(1, j.value("repeats", std::size_t{3}));
  if (native.size() != cfg.encoders() || dims.size() != cfg.encoders())
    throw InvalidArgument("native_tokens and encoder_dims need one entry per encoder");
  std::mt19937_64 rng(j.value("seed", std::uint64_t{0}));

  std::vector<num::Tensor> raw_tokens, raw_grids, channel_maps;
  std::size_t dim_sum = 0;
  for (std::size_t k = 0; k < native.size(); ++k) {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(native[k]))));
    if (side * side != native[k]) throw InvalidArgument("native token count " + std::to_string(native[k]) + " is not square");
    raw_tokens.push_back(uniform(rng, {native[k], dims[k]}));
    raw_grids.push_back(num::Tensor({side, side, dims[k]}, std::vector<double>(raw_tokens.back().data().begin(), raw_tokens.back().data().end())));
    channel_maps.push_back(uniform(rng, {dims[k], cfg.channels}));
    dim_sum += dims[k];
  }

  struct Row {
    std::string name;
    std::size_t tokens, keys_per_query;
    double ms;
  };
  std::vector<Row> rows;
  auto time_it = [&](auto&& fn) {
    double best = 1e300;
    for (std::size_t r = 0; r < repeats; ++r) {
      auto t0 = std::chrono::steady_clock::now();
      fn();
      best = std::min(best, elapsed_ms(t0));
    }
    return best;
  };

  num::Tensor out;
  const auto projection = uniform(rng, {dim_sum, cfg.channels});
  double ms = time_it([&] { out = connector::concat_ensemble(raw_tokens, target, projection).projected; });
  rows.push_back({"concat_ensemble", out.dim(0), 0, ms});

  std::vector<num::Tensor> mapped;
  std::size_t total_tokens = 0;
  for (std::size_t k = 0; k < raw_tokens.size(); ++k) {
    mapped.push_back(num::matmul(raw_tokens[k], channel_maps[k]));
    total_tokens += native[k];
  }
  const auto lat = uniform(rng, {latents, cfg.channels});
  const auto rparams = connector::ResamplerParams::random(cfg.channels, rng());
  ms = time_it([&] { out = connector::resampler(lat, mapped, rparams); });
  rows.push_back({"resampler", out.dim(0), total_tokens, ms});

  std::vector<sva::EncoderFeatureMap> feats;
  for (std::size_t k = 0; k < raw_grids.size(); ++k)
    feats.push_back(sva::adapt_encoder_output(raw_grids[k], cfg, k, channel_maps[k]));
  const auto sparams = sva::SvaParams::initialize(cfg, rng());
  ms = time_it([&] { out = sva::sva_forward(feats, sparams, cfg); });
  rows.push_back({"sva", out.dim(0), cfg.keys_per_query(), ms});

  std::cout << std::left << std::setw(18) << "connector" << std::setw(10) << "tokens" << std::setw(14)
            << "keys/query" << "ms (best of " << repeats << ")\n";
  for (const auto& r : rows)
    std::cout << std::setw(18) << r.name << std::setw(10) << r.tokens << std::setw(14)
              << (r.keys_per_query ? std::to_string(r.keys_per_query) : "-") << std::fixed << std::setprecision(3)
              << r.ms << '\n';
  return 0;
}

// ---- cvbench ----

int cvbench_gen(const std::string& scenes, double offset_3d, std::uint64_t seed, const std::string& out,
                const std::string& templates, const std::vector<std::string>& vocabulary) {
  const auto loaded = cvbench::load_scenes(scenes);
  cvbench::GenOptions opts;
  opts.depth_offset = opts.distance_offset = offset_3d;
  opts.count_vocabulary = vocabulary;
  if (!templates.empty()) opts.templates = cvbench::PromptTemplates::load(templates);
  const auto items = cvbench::generate(loaded, opts, seed);
  Output o(out);
  for (const auto& q : items) o.stream() << cvbench::to_json(q).dump() << '\n';
  std::cerr << items.size() << " items from " << loaded.size() << " scenes\n"
            << review::composition_table(cvbench::summarize(std::span<const cvbench::QuestionItem>(items)));
  return 0;
}

int cvbench_score(const std::string& graded) {
  const auto items = cvbench::load_graded(graded);
  const auto s = cvbench::score_cvbench(items);
  std::cout << json{{"acc_coco", s.acc_coco}, {"acc_ade", s.acc_ade}, {"acc_2d", s.acc_2d},
                    {"acc_3d", s.acc_3d},     {"overall", s.overall}, {"n_coco", s.n_coco},
                    {"n_ade", s.n_ade},       {"n_3d", s.n_3d}}
                   .dump(2)
            << '\n';
  std::cerr << review::composition_table(cvbench::summarize(std::span<const cvbench::GradedItem>(items)));
  return 0;
}

// ---- curate ----

int curate_balance(const std::string& pool_path, std::size_t t, std::uint64_t seed, const std::string& out,
                   bool suggest) {
  const auto pool = curate::load_pool(pool_path);
  const auto curve = curate::cumulative_curve(pool);
  std::cerr << "rank\tcumulative\tsource\n";
  for (const auto& p : curve) std::cerr << p.rank << '\t' << p.cumulative << '\t' << p.source << '\n';
  if (suggest) std::cerr << "suggested threshold: " << curate::suggest_threshold(curve) << '\n';
  const auto kept = curate::apply_threshold(pool, t, seed);
  std::cerr << "kept " << kept.size() << " of " << pool.size() << " records at t=" << t << '\n';
  if (!out.empty()) curate::save_pool(out, kept);
  return 0;
}

int curate_mix(const std::string& pool_path, const std::string& ratios, std::size_t n, const std::string& out,
               const std::string& prompts) {
  auto cfg = curate::curator_config_from_json(read_json_file(ratios));
  if (n) cfg.target_size = n;
  cfg.validate();
  const auto res = curate::mix_by_ratio(curate::load_pool(pool_path), cfg);
  std::cerr << res.report();
  if (!out.empty()) {
    auto mixed = res.pool;
    if (!prompts.empty()) {
      const auto registry = curate::PromptRegistry::load(prompts);
      for (auto& r : mixed.records) r = curate::attach_format_prompt(r, registry);
    }
    curate::save_pool(out, mixed);
  }
  return 0;
}

int curate_leak(const std::vector<std::string>& train, const std::vector<std::string>& tests, int hamming_bits,
                bool as_json, std::size_t workers) {
  std::vector<curate::HashSet> tr, te;
  std::vector<std::string> skipped;
  for (const auto& d : train) tr.push_back(curate::hash_directory(d, &skipped, workers));
  for (const auto& d : tests) te.push_back(curate::hash_directory(d, &skipped, workers));
  for (const auto& s : skipped) std::cerr << "skipped " << s << '\n';
  const auto report = curate::leakage_scan(tr, te, hamming_bits);
  if (as_json)
    std::cout << report.to_json().dump(2) << '\n';
  else
    std::cout << report.table();
  return 0;
}

int curate_engine(const std::string& field, bool mock, const std::string& journal, const std::string& out,
                  const std::string& search_table, const std::string& replay, curate::EngineOptions opts) {
  curate::EngineJournal j(journal);
  curate::EngineRun run;
  if (mock) {
    auto m = curate::make_mock_engine_clients();
    run = curate::run_engine(field, {m->topic_llm, m->search, m->fetcher, m->qa_llm}, j, opts);
  } else {
    if (search_table.empty())
      throw InvalidArgument("live runs need --search-table (topic -> urls); no search backend is bundled");
    std::map<std::string, std::vector<std::string>> table = read_json_file(search_table);
    clients::MapSearchClient search(std::move(table));
    clients::HttpChatClient live(clients::HttpChatSettings::from_env());
    std::unique_ptr<clients::ReplayChatClient> cached;
    clients::ChatClient* chat = &live;
    if (!replay.empty()) {
      cached = std::make_unique<clients::ReplayChatClient>(replay, &live);
      chat = cached.get();
    }
    clients::HttpPageFetcher fetcher;
    run = curate::run_engine(field, {*chat, search, fetcher, *chat}, j, opts);
  }
  Output o(out);
  for (const auto& item : run.items) o.stream() << curate::to_json(item).dump() << '\n';
  std::cerr << "topics " << run.topics << ", urls " << run.urls << ", pages " << run.pages << ", tuples "
            << run.tuples << ", items " << run.items.size() << ", fetch failures " << run.fetch_failures << '\n';
  for (const auto& [reason, n] : run.rejected) std::cerr << "rejected " << reason << ": " << n << '\n';
  std::cerr << "journal entries appended: " << j.appended() << '\n';
  return 0;
}

// ---- eval ----

int eval_grade(const std::string& items_path, bool llm, std::size_t workers, const std::string& out) {
  std::vector<eval::GradeItem> items;
  for (const auto& j : read_jsonl(fs::path(items_path))) items.push_back(eval::grade_item_from_json(j));
  std::unique_ptr<clients::HttpChatClient> client;
  eval::Grader grader = eval::fuzzy_match;
  if (llm) {
    client = std::make_unique<clients::HttpChatClient>(clients::HttpChatSettings::from_env());
    grader = [&](const std::string& p, const std::string& g) { return eval::grade_llm(p, g, *client); };
  }
  const auto results = eval::grade_all(items, grader, workers);
  Output o(out);
  for (const auto& r : results) o.stream() << eval::to_json(r).dump() << '\n';
  std::cerr << "benchmark\tcorrect\ttotal\taccuracy\n";
  for (const auto& row : eval::accuracy_by_benchmark(results))
    std::cerr << row.benchmark << '\t' << row.correct << '\t' << row.total << '\t' << std::fixed
              << std::setprecision(2) << row.accuracy() << '\n';
  return 0;
}

int eval_cluster(const std::string& scores, const std::string& meta, int k, std::uint64_t seed,
                 const std::string& names_path, const std::string& plot, const std::string& corr_out) {
  const auto table = eval::load_score_table(scores, meta);
  const auto names = names_path.empty() ? eval::ClusterNames{} : eval::ClusterNames::from_json(read_json_file(names_path));
  const auto res = eval::pca_cluster(table, k, seed);
  std::cout << std::left << std::setw(16) << "benchmark" << std::setw(10) << "cluster" << std::setw(18) << "name"
            << "pc1\tpc2\n";
  for (std::size_t b = 0; b < res.benchmarks.size(); ++b)
    std::cout << std::setw(16) << res.benchmarks[b] << std::setw(10) << res.labels[b] << std::setw(18)
              << names.name_for(res.benchmarks[b], res.labels[b]) << std::fixed << std::setprecision(4)
              << res.coords[b][0] << '\t' << res.coords[b][1] << '\n';
  std::cout << "explained variance: " << res.explained[0] << ", " << res.explained[1] << '\n';
  if (!plot.empty()) Output(plot).stream() << eval::plot_data(res, names).dump(2) << '\n';
  if (!corr_out.empty()) {
    const auto c = eval::correlation_matrix(table);
    for (const auto& w : c.warnings) std::cerr << "warning: " << w << '\n';
    Output o(corr_out);
    o.stream() << "benchmark";
    for (const auto& b : c.benchmarks) o.stream() << ',' << eval::csv_escape(b);
    o.stream() << '\n' << std::setprecision(12);
    for (std::size_t i = 0; i < c.benchmarks.size(); ++i) {
      o.stream() << eval::csv_escape(c.benchmarks[i]);
      for (double v : c.matrix[i]) o.stream() << ',' << v;
      o.stream() << '\n';
    }
  }
  return 0;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

int eval_gaps(const std::string& enabled, const std::string& disabled, const std::string& meta, bool as_json) {
  const auto rows =
      eval::vision_gap_report(eval::load_score_table(enabled, meta), eval::load_score_table(disabled, meta));
  if (as_json) {
    std::cout << eval::to_json(rows).dump(2) << '\n';
    return 0;
  }
  std::cout << std::left << std::setw(16) << "benchmark" << std::setw(10) << "enabled" << std::setw(10) << "disabled"
            << std::setw(8) << "gap" << std::setw(12) << "dis-random" << "flag\n";
  for (const auto& r : rows)
    std::cout << std::setw(16) << r.benchmark << std::fixed << std::setprecision(2) << std::setw(10) << r.mean_enabled
              << std::setw(10) << r.mean_disabled << std::setw(8) << r.gap << std::setw(12)
              << (r.disabled_minus_random ? fixed2(*r.disabled_minus_random) : "-")
              << (r.vision_insensitive ? "vision-insensitive" : "") << '\n';
  return 0;
}

// ---- review ----

review::ReviewServer* g_server = nullptr;

int review_serve(const std::string& items, const std::string& journal, const std::string& host, int port,
                 const std::string& static_dir) {
  auto store = review::ReviewStore::open(items, journal);
  review::ReviewServer server(store, static_dir);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  const auto s = store.stats();
  std::cerr << "serving " << s.total << " items (" << s.by_status.at(cvbench::Status::pending) << " pending, "
            << s.journal_records << " journal records) on http://" << host << ":" << port << '\n';
  server.serve(host, port);
  g_server = nullptr;
  return 0;
}

int review_export(const std::string& items, const std::string& journal, bool allow_pending, const std::string& out) {
  const auto store = review::ReviewStore::open(items, journal);
  const auto ex = store.export_benchmark(allow_pending);
  Output o(out);
  for (const auto& r : ex.records) o.stream() << r.dump() << '\n';
  if (ex.pending_skipped) std::cerr << ex.pending_skipped << " pending items skipped\n";
  std::cerr << review::composition_table(ex.composition);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: connector, benchmark, curation, evaluation and review tooling"};
  app.require_subcommand(1);
  int rc = 0;

  // sva
  auto* sva_cmd = app.add_subcommand("sva", "spatial vision aggregator")->require_subcommand(1);
  std::string sva_config;
  bool no_grad = false;
  auto* bench = sva_cmd->add_subcommand("bench", "forward check, gradient check and attention-mass report");
  bench->add_option("--config", sva_config, "bench config (JSON)")->required()->check(CLI::ExistingFile);
  bench->add_flag("--no-grad", no_grad, "skip the gradient check");
  bench->callback([&] { rc = sva_bench(sva_config, no_grad); });

  // connector
  auto* conn = app.add_subcommand("connector", "connector baselines")->require_subcommand(1);
  std::string conn_config;
  auto* compare = conn->add_subcommand("compare", "token counts and timing for SVA against the baselines");
  compare->add_option("--config", conn_config, "compare config (JSON)")->required()->check(CLI::ExistingFile);
  compare->callback([&] { rc = connector_compare(conn_config); });

  // cvbench
  auto* cvb = app.add_subcommand("cvbench", "vision-centric benchmark generation and scoring")->require_subcommand(1);
  std::string scenes, gen_out, templates, graded;
  double offset = 0.3;
  std::uint64_t gen_seed = 0;
  std::vector<std::string> vocabulary;
  auto* gen = cvb->add_subcommand("gen", "generate items from annotated scenes");
  gen->add_option("--scenes", scenes, "scene records (JSONL)")->required()->check(CLI::ExistingFile);
  gen->add_option("--offset-3d", offset, "depth and distance margin in meters")->capture_default_str();
  gen->add_option("--seed", gen_seed, "generation seed")->capture_default_str();
  gen->add_option("--out", gen_out, "item file (JSONL); stdout when omitted");
  gen->add_option("--templates", templates, "prompt template file (JSON)")->check(CLI::ExistingFile);
  gen->add_option("--vocabulary", vocabulary, "extra categories for absent-object count questions");
  gen->callback([&] { rc = cvbench_gen(scenes, offset, gen_seed, gen_out, templates, vocabulary); });
  auto* score = cvb->add_subcommand("score", "combine graded responses into the benchmark score");
  score->add_option("--graded", graded, "graded records (JSONL)")->required()->check(CLI::ExistingFile);
  score->callback([&] { rc = cvbench_score(graded); });

  // curate
  auto* cur = app.add_subcommand("curate", "instruction data curation")->require_subcommand(1);
  std::string pool, ratios, cur_out, prompts, field = "Physics", journal = "engine_journal.jsonl", search_table,
                                             replay;
  std::size_t t = 250000, n = 0, workers = 0;
  std::uint64_t cur_seed = 0;
  bool suggest = false, as_json = false, mock = false;
  int hamming_bits = 0;
  std::vector<std::string> train_dirs, test_dirs;
  curate::EngineOptions eopts;

  auto* balance = cur->add_subcommand("balance", "cap every source at a threshold");
  balance->add_option("--pool", pool, "pool records (JSONL)")->required()->check(CLI::ExistingFile);
  balance->add_option("--t", t, "per-source cap")->capture_default_str();
  balance->add_option("--seed", cur_seed, "sampling seed")->capture_default_str();
  balance->add_option("--out", cur_out, "balanced pool (JSONL)");
  balance->add_flag("--suggest", suggest, "print the knee of the cumulative curve");
  balance->callback([&] { rc = curate_balance(pool, t, cur_seed, cur_out, suggest); });

  auto* mix = cur->add_subcommand("mix", "sample categories to target ratios");
  mix->add_option("--pool", pool, "pool records (JSONL)")->required()->check(CLI::ExistingFile);
  mix->add_option("--ratios", ratios, "curator config with ratios (JSON)")->required()->check(CLI::ExistingFile);
  mix->add_option("--n", n, "target size; overrides the config");
  mix->add_option("--out", cur_out, "mixed pool (JSONL)");
  mix->add_option("--prompts", prompts, "append response-format prompts from this registry")->check(CLI::ExistingFile);
  mix->callback([&] { rc = curate_mix(pool, ratios, n, cur_out, prompts); });

  auto* leak = cur->add_subcommand("leak", "perceptual-hash overlap between train and test images");
  leak->add_option("--train", train_dirs, "train image directories")->required()->check(CLI::ExistingDirectory);
  leak->add_option("--tests", test_dirs, "test image directories")->required()->check(CLI::ExistingDirectory);
  leak->add_option("--hamming", hamming_bits, "match within this many bits")->capture_default_str();
  leak->add_option("--workers", workers, "hashing threads (0 = all cores)");
  leak->add_flag("--json", as_json, "machine-readable report");
  leak->callback([&] { rc = curate_leak(train_dirs, test_dirs, hamming_bits, as_json, workers); });

  auto* engine = cur->add_subcommand("engine", "targeted data engine for one field");
  engine->add_option("--field", field, "field of knowledge")->capture_default_str();
  engine->add_flag("--mock", mock, "offline clients; no credentials needed");
  engine->add_option("--journal", journal, "resumable stage journal (JSONL)")->capture_default_str();
  engine->add_option("--out", cur_out, "generated items (JSONL); stdout when omitted");
  engine->add_option("--search-table", search_table, "topic -> url list (JSON) for live runs");
  engine->add_option("--replay", replay, "chat response cache (JSONL) for live runs");
  engine->add_option("--urls-per-topic", eopts.urls_per_topic)->capture_default_str();
  engine->add_option("--max-subfields", eopts.max_subfields, "0 = all");
  engine->add_option("--max-topics", eopts.max_topics_per_subfield, "per subfield; 0 = all");
  engine->add_option("--workers", eopts.workers, "Q&A generation threads")->capture_default_str();
  engine->callback([&] { rc = curate_engine(field, mock, journal, cur_out, search_table, replay, eopts); });

  // eval
  auto* ev = app.add_subcommand("eval", "grading and benchmark analytics")->require_subcommand(1);
  std::string items_path, ev_out, scores, meta = FORGE_DEFAULT_META, names_path, plot, corr_out, enabled, disabled;
  bool llm = false;
  std::size_t grade_workers = 4;
  int k = 4;
  std::uint64_t ev_seed = 0;
  auto* grade = ev->add_subcommand("grade", "grade predictions against ground truth");
  grade->add_option("--items", items_path, "records with id, prediction, answer, benchmark (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  grade->add_flag("--llm", llm, "use the chat-model referee instead of fuzzy matching");
  grade->add_option("--workers", grade_workers)->capture_default_str();
  grade->add_option("--out", ev_out, "graded records (JSONL); stdout when omitted");
  grade->callback([&] { rc = eval_grade(items_path, llm, grade_workers, ev_out); });

  auto* cluster = ev->add_subcommand("cluster", "principal coordinates and k-means over benchmarks");
  cluster->add_option("--scores", scores, "score table (CSV)")->required()->check(CLI::ExistingFile);
  cluster->add_option("--meta", meta, "benchmark metadata (CSV)")->capture_default_str();
  cluster->add_option("--k", k, "clusters")->capture_default_str();
  cluster->add_option("--seed", ev_seed)->capture_default_str();
  cluster->add_option("--names", names_path, "cluster names (JSON)")->check(CLI::ExistingFile);
  cluster->add_option("--plot", plot, "write plot data (JSON)");
  cluster->add_option("--correlation", corr_out, "write the correlation matrix (CSV)");
  cluster->callback([&] { rc = eval_cluster(scores, meta, k, ev_seed, names_path, plot, corr_out); });

  auto* gaps = ev->add_subcommand("gaps", "vision-enabled versus vision-disabled score gaps");
  gaps->add_option("--enabled", enabled, "scores with images (CSV)")->required()->check(CLI::ExistingFile);
  gaps->add_option("--disabled", disabled, "scores without images (CSV)")->required()->check(CLI::ExistingFile);
  gaps->add_option("--meta", meta, "benchmark metadata (CSV)")->capture_default_str();
  gaps->add_flag("--json", as_json, "machine-readable report");
  gaps->callback([&] { rc = eval_gaps(enabled, disabled, meta, as_json); });

  // review
  auto* rev = app.add_subcommand("review", "human review of generated items")->require_subcommand(1);
  std::string rev_items, rev_journal, host = "127.0.0.1", static_dir, rev_out;
  int port = 8787;
  bool allow_pending = false;
  auto* serve = rev->add_subcommand("serve", "HTTP review service");
  serve->add_option("--items", rev_items, "generated items (JSONL)")->required()->check(CLI::ExistingFile);
  serve->add_option("--journal", rev_journal, "decision journal (JSONL, append-only)")->required();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--static", static_dir, "serve a frontend bundle from this directory")
      ->check(CLI::ExistingDirectory);
  serve->callback([&] { rc = review_serve(rev_items, rev_journal, host, port, static_dir); });
  auto* exp = rev->add_subcommand("export", "write the finalized benchmark");
  exp->add_option("--items", rev_items, "generated items (JSONL)")->required()->check(CLI::ExistingFile);
  exp->add_option("--journal", rev_journal, "decision journal (JSONL)")->required();
  exp->add_flag("--allow-pending", allow_pending, "export even when items are still pending");
  exp->add_option("--out", rev_out, "finalized items (JSONL); stdout when omitted");
  exp->callback([&] { rc = review_export(rev_items, rev_journal, allow_pending, rev_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ClientError& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (!e.payload().empty()) std::cerr << "payload: " << e.payload().substr(0, 2000) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return rc;
}
