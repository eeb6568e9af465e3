#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forge/clients.hpp"
#include "json.hpp"

namespace forge::curate {

// ---- Stage 1: topics ----

struct Subfield {
  std::string name;
  std::vector<std::string> topics;
};
using TopicListing = std::vector<Subfield>;  // in response order

std::string topic_prompt(const std::string& field);

// Accepts a bare JSON object or one wrapped in prose: a leading field-name
// line, "..." elision lines and trailing commas are tolerated. Topics are
// deduplicated per subfield keeping first occurrence. Anything that is not
// an object of string arrays throws ClientError carrying the raw text.
TopicListing parse_topic_listing(const std::string& raw);
TopicListing engine_topics(const std::string& field, clients::ChatClient& client);
std::map<std::string, TopicListing> engine_topics(std::span<const std::string> fields, clients::ChatClient& client);

// ---- Stage 2: search ----

struct RetryPolicy {
  std::size_t attempts = 3;
  std::size_t backoff_ms = 0;  // doubled after each failure
};

// https-only, deduplicated in order, then truncated to k.
std::vector<std::string> filter_urls(std::span<const std::string> urls, std::size_t k);
std::vector<std::string> engine_search(const std::string& topic, clients::SearchClient& client, std::size_t k = 10,
                                       RetryPolicy retry = {});

// ---- Stage 3: parsing ----

struct PageImage {
  std::string url;
  std::string caption;  // source bytes between the caption tags, inner tags removed
};

struct PageBlock {
  std::string section;
  std::string text;  // paragraph text of the section, whitespace collapsed
  std::vector<PageImage> images;
};

struct ParsedPage {
  std::string title;
  std::vector<PageBlock> blocks;  // sections without figures are dropped
};

// Lenient scanner over <h1..h4>, <p>, <figure>/<figcaption>, <img> and
// MediaWiki thumb divs. Never throws.
ParsedPage engine_parse(const std::string& html);

// ---- Stage 4: Q&A generation ----

struct EngineTuple {
  std::string field, subfield, topic;
  std::string source_url, title, section, text;
  PageImage image;
};

std::vector<EngineTuple> tuples_from_page(const ParsedPage& page, const std::string& field,
                                          const std::string& subfield, const std::string& topic,
                                          const std::string& url);

struct EngineItem {
  std::string id;        // "<hex>.png", stable in (image url, caption)
  std::string image_id;  // file stem of the image url
  std::string image_url;
  std::string text;
  std::string caption;
  std::string section;
  std::string question;
  std::string answer;
  std::string field, subfield, topic, source_url, title;
};

nlohmann::json to_json(const EngineItem& item);
// Tolerates missing metadata so published sample records load.
EngineItem engine_item_from_json(const nlohmann::json& j);

inline constexpr std::size_t kMinContextWords = 50;
std::size_t word_count(const std::string& text);

std::vector<clients::ChatMessage> qa_prompt(const EngineTuple& t);

struct QaOutcome {
  std::optional<EngineItem> item;
  std::string reason;  // "short-context" | "refusal" | "malformed-response" when item is empty
};

QaOutcome engine_generate_qa(const EngineTuple& tuple, clients::ChatClient& client);

// ---- journal and pipeline ----

// Append-only JSONL of {stage, key, value}. Replayed on open; a later entry
// for the same (stage, key) wins. append() is the only writer.
class EngineJournal {
 public:
  explicit EngineJournal(std::filesystem::path path);
  std::optional<nlohmann::json> find(const std::string& stage, const std::string& key) const;
  void append(const std::string& stage, const std::string& key, const nlohmann::json& value);
  std::size_t appended() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, nlohmann::json> entries_;
  std::size_t appended_ = 0;
};

struct EngineOptions {
  std::size_t urls_per_topic = 10;
  std::size_t max_subfields = 0;          // 0 = all
  std::size_t max_topics_per_subfield = 0;  // 0 = all
  std::size_t workers = 1;                // Stage 4 concurrency
  RetryPolicy retry;
};

struct EngineRun {
  std::vector<EngineItem> items;
  std::map<std::string, std::size_t> rejected;  // reason -> count
  std::size_t topics = 0, urls = 0, pages = 0, tuples = 0;
  std::size_t fetch_failures = 0;
};

struct EngineClients {
  clients::ChatClient& topic_llm;
  clients::SearchClient& search;
  clients::PageFetcher& fetcher;
  clients::ChatClient& qa_llm;
};

// Every stage result is looked up in the journal before any client call, so
// a rerun over a completed journal makes no calls and appends nothing.
EngineRun run_engine(const std::string& field, EngineClients clients, EngineJournal& journal,
                     const EngineOptions& options = {});

// Offline stand-ins used by `forge curate engine --mock`: topics follow a
// fixed physics listing, search yields encyclopedia urls, pages carry one
// captioned figure, and Q&A answers are templated from the caption.
struct MockEngineClients {
  clients::ScriptedChatClient topic_llm;
  clients::MapSearchClient search;
  clients::MapPageFetcher fetcher;
  clients::ScriptedChatClient qa_llm;
};
std::unique_ptr<MockEngineClients> make_mock_engine_clients();
const std::string& mock_physics_listing();

}  // namespace forge::curate
