#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "forge/cvbench/score.hpp"
#include "forge/error.hpp"
#include "json.hpp"

namespace forge::review {

using cvbench::QuestionItem;
using cvbench::Status;

// Same idempotency key presented with a different request body.
class IdempotencyConflict : public Error {
 public:
  using Error::Error;
};

// Fields a "modified" decision may replace. At least one must be set.
struct Edit {
  std::optional<std::string> prompt;
  std::optional<std::vector<std::string>> choices;
  std::optional<std::size_t> answer_index;
  std::optional<std::string> answer;  // free-text answer overriding the choice

  bool empty() const noexcept { return !prompt && !choices && !answer_index && !answer; }
  // Names of the fields that are set, in declaration order.
  std::vector<std::string> fields() const;
  bool operator==(const Edit&) const = default;
};

nlohmann::json to_json(const Edit& e);
Edit edit_from_json(const nlohmann::json& j);

struct DecisionRecord {
  std::string item_id;
  Status decision = Status::accepted;
  std::optional<Edit> edit;  // present iff decision == modified
  std::string reviewer;
  std::string timestamp;  // ISO-8601 UTC; filled by the store when empty
  std::optional<std::string> idempotency_key;

  // Shape rules only; item existence is checked by the store.
  void validate() const;
};

nlohmann::json to_json(const DecisionRecord& r);
DecisionRecord decision_from_json(const nlohmann::json& j);

// Effective state of one item after replaying every decision for it.
struct ItemState {
  Status status = Status::pending;
  std::optional<Edit> edit;
  std::string reviewer;
  std::string timestamp;
  std::size_t decisions = 0;
};

// The item as a reviewer sees it: source item with the latest edit applied.
QuestionItem apply(const QuestionItem& item, const ItemState& state);

struct ItemPage {
  std::vector<QuestionItem> items;
  std::size_t page = 1, size = 0;
  std::size_t total = 0;  // items matching the filter
  std::size_t pages = 0;
};

struct Ack {
  std::string item_id;
  ItemState state;
  std::size_t seq = 0;  // journal sequence number of the record
  bool duplicate = false;  // replay of an earlier idempotent request
};

struct Stats {
  std::size_t total = 0;
  std::map<Status, std::size_t> by_status;
  std::size_t journal_records = 0;
};

nlohmann::json to_json(const Stats& s);

struct Export {
  std::vector<QuestionItem> items;
  std::vector<nlohmann::json> records;  // items plus review metadata, as written
  cvbench::Composition composition;
  std::size_t pending_skipped = 0;
};

// Per-task breakdown: type, task, sources, sample count; zero rows kept.
std::string composition_table(const cvbench::Composition& c);
std::string display_name(cvbench::Task t);

// Source items are immutable; every decision is appended to a line-delimited
// journal before it becomes visible. Opening an existing journal replays it,
// latest record per item winning. Readers take a snapshot pointer and never
// block on the appender.
class ReviewStore {
 public:
  ReviewStore(std::vector<QuestionItem> items, std::filesystem::path journal);
  static ReviewStore open(const std::filesystem::path& items, const std::filesystem::path& journal);

  ReviewStore(const ReviewStore&) = delete;
  ReviewStore& operator=(const ReviewStore&) = delete;
  ReviewStore(ReviewStore&&) noexcept;
  ~ReviewStore();

  // page is 1-based. size == 0 or page == 0 throws InvalidArgument; a page
  // past the end is empty.
  ItemPage list_items(std::optional<Status> filter, std::size_t page, std::size_t size) const;
  std::optional<QuestionItem> item(const std::string& id) const;
  ItemState state(const std::string& id) const;
  std::map<std::string, Status> statuses() const;

  Ack submit(DecisionRecord record);

  // Throws ValidationError naming the pending count unless allow_pending.
  Export export_benchmark(bool allow_pending = false) const;
  Stats stats() const;

  std::size_t journal_records() const;
  const std::filesystem::path& journal_path() const noexcept;

 private:
  struct Snapshot;
  struct Writer;
  std::shared_ptr<const Snapshot> snapshot() const;

  std::shared_ptr<const std::vector<QuestionItem>> items_;  // sorted by id
  std::map<std::string, std::size_t> index_;
  std::shared_ptr<const Snapshot> snap_;
  std::unique_ptr<Writer> writer_;
};

std::string utc_timestamp();

}  // namespace forge::review
