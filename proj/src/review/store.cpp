#include "forge/review/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "forge/jsonl.hpp"

namespace forge::review {

using nlohmann::json;
using cvbench::Task;

std::vector<std::string> Edit::fields() const {
  std::vector<std::string> out;
  if (prompt) out.push_back("prompt");
  if (choices) out.push_back("choices");
  if (answer_index) out.push_back("answer_index");
  if (answer) out.push_back("answer");
  return out;
}

json to_json(const Edit& e) {
  json j = json::object();
  if (e.prompt) j["prompt"] = *e.prompt;
  if (e.choices) j["choices"] = *e.choices;
  if (e.answer_index) j["answer_index"] = *e.answer_index;
  if (e.answer) j["answer"] = *e.answer;
  return j;
}

Edit edit_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("edit must be an object");
  Edit e;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "prompt") e.prompt = v.get<std::string>();
      else if (k == "choices") e.choices = v.get<std::vector<std::string>>();
      else if (k == "answer_index") e.answer_index = v.get<std::size_t>();
      else if (k == "answer") e.answer = v.get<std::string>();
      else throw ValidationError("unknown edit field '" + k + "'");
    }
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("edit: ") + ex.what());
  }
  return e;
}

void DecisionRecord::validate() const {
  if (item_id.empty()) throw ValidationError("decision without item_id");
  if (decision == Status::pending) throw ValidationError("decision must be accepted, modified or rejected");
  if (decision == Status::modified && (!edit || edit->empty()))
    throw ValidationError("modified decision for " + item_id + " carries no edit");
  if (decision != Status::modified && edit)
    throw ValidationError(cvbench::to_string(decision) + " decision for " + item_id + " must not carry an edit");
}

json to_json(const DecisionRecord& r) {
  json j = {{"item_id", r.item_id},
            {"decision", cvbench::to_string(r.decision)},
            {"reviewer", r.reviewer},
            {"timestamp", r.timestamp}};
  if (r.edit) j["edit"] = to_json(*r.edit);
  if (r.idempotency_key) j["idempotency_key"] = *r.idempotency_key;
  return j;
}

DecisionRecord decision_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("decision must be an object");
  DecisionRecord r;
  try {
    r.item_id = j.value("item_id", "");
    r.decision = cvbench::status_from_string(j.at("decision").get<std::string>());
    if (j.contains("edit") && !j["edit"].is_null()) r.edit = edit_from_json(j["edit"]);
    r.reviewer = j.value("reviewer", "");
    r.timestamp = j.value("timestamp", "");
    if (j.contains("idempotency_key") && !j["idempotency_key"].is_null())
      r.idempotency_key = j["idempotency_key"].get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("decision: ") + e.what());
  } catch (const ParseError& e) {
    throw ValidationError(e.what());
  }
  return r;
}

QuestionItem apply(const QuestionItem& item, const ItemState& state) {
  QuestionItem q = item;
  q.status = state.status;
  if (state.status == Status::modified && state.edit) {
    const auto& e = *state.edit;
    if (e.prompt) q.prompt = *e.prompt;
    if (e.choices) q.choices = *e.choices;
    if (e.answer_index) q.answer_index = *e.answer_index;
    if (e.answer) q.edited_answer = *e.answer;
  }
  return q;
}

json to_json(const Stats& s) {
  json by = json::object();
  for (auto st : {Status::pending, Status::accepted, Status::modified, Status::rejected}) {
    auto it = s.by_status.find(st);
    by[cvbench::to_string(st)] = it == s.by_status.end() ? 0 : it->second;
  }
  return {{"total", s.total}, {"by_status", by}, {"journal_records", s.journal_records}};
}

std::string display_name(Task t) {
  switch (t) {
    case Task::spatial_relationship: return "Spatial Relationship";
    case Task::object_count: return "Object Count";
    case Task::depth_order: return "Depth Order";
    case Task::relative_distance: return "Relative Distance";
  }
  return "?";
}

std::string composition_table(const cvbench::Composition& c) {
  std::ostringstream out;
  out << std::left << std::setw(6) << "Type" << std::setw(22) << "Task" << std::setw(16) << "Sources"
      << "# Samples\n";
  for (auto t : {Task::spatial_relationship, Task::object_count, Task::depth_order, Task::relative_distance}) {
    auto it = c.by_task.find(t);
    out << std::setw(6) << (cvbench::is_3d(t) ? "3D" : "2D") << std::setw(22) << display_name(t) << std::setw(16)
        << (cvbench::is_3d(t) ? "Omni3D" : "ADE20K, COCO") << (it == c.by_task.end() ? 0 : it->second) << '\n';
  }
  out << std::setw(6) << "" << std::setw(22) << "Total" << std::setw(16) << "" << c.total << '\n';
  return out.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

// ---- store ----

struct ReviewStore::Snapshot {
  std::vector<ItemState> states;  // parallel to items_
  std::size_t records = 0;
};

struct ReviewStore::Writer {
  std::mutex mu;
  std::filesystem::path path;
  std::ofstream out;
  std::map<std::string, std::pair<DecisionRecord, Ack>> by_key;
};

namespace {

bool same_request(const DecisionRecord& a, const DecisionRecord& b) {
  return a.item_id == b.item_id && a.decision == b.decision && a.edit == b.edit;
}

}  // namespace

ReviewStore::ReviewStore(std::vector<QuestionItem> items, std::filesystem::path journal)
    : writer_(std::make_unique<Writer>()) {
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!index_.emplace(items[i].id, i).second) throw ValidationError("duplicate item id " + items[i].id);
  }
  auto snap = std::make_shared<Snapshot>();
  snap->states.resize(items.size());
  // Source files may carry statuses from an earlier export; the journal is
  // the only authority here.
  for (auto& q : items) q.status = Status::pending;
  items_ = std::make_shared<const std::vector<QuestionItem>>(std::move(items));

  writer_->path = std::move(journal);
  if (std::filesystem::exists(writer_->path)) {
    std::ifstream in(writer_->path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto where = writer_->path.string() + ":" + std::to_string(lineno) + ": ";
      DecisionRecord r;
      try {
        r = decision_from_json(json::parse(line));
        r.validate();
      } catch (const json::exception& e) {
        throw ParseError(where + e.what());
      } catch (const ValidationError& e) {
        throw ParseError(where + e.what());
      }
      auto it = index_.find(r.item_id);
      if (it == index_.end()) throw ParseError(where + "unknown item " + r.item_id);
      auto& st = snap->states[it->second];
      st = {r.decision, r.edit, r.reviewer, r.timestamp, st.decisions + 1};
      ++snap->records;
      if (r.idempotency_key) {
        Ack ack{r.item_id, st, snap->records, false};
        writer_->by_key[*r.idempotency_key] = {r, ack};
      }
    }
  }
  writer_->out.open(writer_->path, std::ios::app);
  if (!writer_->out) throw InvalidArgument("cannot open journal " + writer_->path.string() + " for append");
  snap_ = std::move(snap);
}

ReviewStore::ReviewStore(ReviewStore&&) noexcept = default;
ReviewStore::~ReviewStore() = default;

ReviewStore ReviewStore::open(const std::filesystem::path& items, const std::filesystem::path& journal) {
  return ReviewStore(cvbench::load_items(items), journal);
}

std::shared_ptr<const ReviewStore::Snapshot> ReviewStore::snapshot() const {
  return std::atomic_load(&snap_);
}

ItemPage ReviewStore::list_items(std::optional<Status> filter, std::size_t page, std::size_t size) const {
  if (page == 0) throw InvalidArgument("page is 1-based");
  if (size == 0) throw InvalidArgument("page size must be positive");
  const auto snap = snapshot();
  const auto& items = *items_;
  ItemPage out;
  out.page = page;
  out.size = size;
  const std::size_t first = (page - 1) * size;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& st = snap->states[i];
    if (filter && st.status != *filter) continue;
    if (out.total >= first && out.items.size() < size) out.items.push_back(apply(items[i], st));
    ++out.total;
  }
  out.pages = (out.total + size - 1) / size;
  return out;
}

std::optional<QuestionItem> ReviewStore::item(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return apply((*items_)[it->second], snapshot()->states[it->second]);
}

ItemState ReviewStore::state(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFound("no item " + id);
  return snapshot()->states[it->second];
}

std::map<std::string, Status> ReviewStore::statuses() const {
  const auto snap = snapshot();
  std::map<std::string, Status> out;
  for (const auto& [id, i] : index_) out.emplace(id, snap->states[i].status);
  return out;
}

Ack ReviewStore::submit(DecisionRecord record) {
  record.validate();
  auto it = index_.find(record.item_id);
  if (it == index_.end()) throw NotFound("no item " + record.item_id);
  const auto idx = it->second;

  std::lock_guard lock(writer_->mu);
  if (record.idempotency_key) {
    auto k = writer_->by_key.find(*record.idempotency_key);
    if (k != writer_->by_key.end()) {
      if (!same_request(k->second.first, record))
        throw IdempotencyConflict("idempotency key " + *record.idempotency_key + " was used for a different decision");
      Ack ack = k->second.second;
      ack.duplicate = true;
      return ack;
    }
  }
  if (record.edit) {
    ItemState probe{record.decision, record.edit, {}, {}, 0};
    try {
      apply((*items_)[idx], probe).validate();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("edit rejected: ") + e.what());
    }
  }
  if (record.timestamp.empty()) record.timestamp = utc_timestamp();

  writer_->out << to_json(record).dump() << '\n';
  writer_->out.flush();
  if (!writer_->out) throw Error("journal write failed: " + writer_->path.string());

  auto next = std::make_shared<Snapshot>(*snapshot());
  auto& st = next->states[idx];
  st = {record.decision, record.edit, record.reviewer, record.timestamp, st.decisions + 1};
  ++next->records;
  Ack ack{record.item_id, st, next->records, false};
  if (record.idempotency_key) writer_->by_key[*record.idempotency_key] = {record, ack};
  std::atomic_store(&snap_, std::shared_ptr<const Snapshot>(std::move(next)));
  return ack;
}

Export ReviewStore::export_benchmark(bool allow_pending) const {
  const auto snap = snapshot();
  const auto& items = *items_;
  Export out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& st = snap->states[i];
    if (st.status == Status::pending) {
      ++out.pending_skipped;
      continue;
    }
    if (st.status == Status::rejected) continue;
    auto q = apply(items[i], st);
    json rec = cvbench::to_json(q);
    json edited = json::array();
    if (st.status == Status::modified && st.edit) edited = st.edit->fields();
    rec["review"] = {{"reviewer", st.reviewer}, {"timestamp", st.timestamp}, {"edited", edited}};
    out.records.push_back(std::move(rec));
    out.items.push_back(std::move(q));
  }
  if (out.pending_skipped > 0 && !allow_pending)
    throw ValidationError(std::to_string(out.pending_skipped) + " items still pending; finish review or allow pending");
  out.composition = cvbench::summarize(std::span<const QuestionItem>(out.items));
  return out;
}

Stats ReviewStore::stats() const {
  const auto snap = snapshot();
  Stats s;
  s.total = items_->size();
  for (auto st : {Status::pending, Status::accepted, Status::modified, Status::rejected}) s.by_status[st] = 0;
  for (const auto& st : snap->states) ++s.by_status[st.status];
  s.journal_records = snap->records;
  return s;
}

std::size_t ReviewStore::journal_records() const { return snapshot()->records; }

const std::filesystem::path& ReviewStore::journal_path() const noexcept { return writer_->path; }

}  // namespace forge::review
