#include "forge/review/server.hpp"

#include <charconv>

#include "httplib.h"

namespace forge::review {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, {{"error", message}});
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const auto v = req.get_param_value(name);
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw InvalidArgument(std::string(name) + " must be a non-negative integer");
  return out;
}

json ack_json(const Ack& a) {
  json j = {{"item_id", a.item_id},
            {"status", cvbench::to_string(a.state.status)},
            {"reviewer", a.state.reviewer},
            {"timestamp", a.state.timestamp},
            {"seq", a.seq},
            {"duplicate", a.duplicate}};
  if (a.state.edit) j["edit"] = to_json(*a.state.edit);
  return j;
}

json composition_json(const cvbench::Composition& c) {
  json by_task = json::object();
  for (auto t : {cvbench::Task::spatial_relationship, cvbench::Task::object_count, cvbench::Task::depth_order,
                 cvbench::Task::relative_distance}) {
    auto it = c.by_task.find(t);
    by_task[cvbench::to_string(t)] = it == c.by_task.end() ? 0 : it->second;
  }
  return {{"by_task", by_task}, {"count_2d", c.count_2d}, {"count_3d", c.count_3d}, {"total", c.total}};
}

}  // namespace

ReviewServer::ReviewServer(ReviewStore& store, std::filesystem::path static_dir)
    : store_(store), http_(std::make_unique<httplib::Server>()) {
  routes();
  if (!static_dir.empty() && !http_->set_mount_point("/", static_dir.string()))
    throw NotFound("static directory " + static_dir.string() + " does not exist");
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::routes() {
  auto& s = *http_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, X-Reviewer, Idempotency-Key");
    res.status = 204;
  });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const IdempotencyConflict& e) {
      fail(res, 409, e.what());
    } catch (const NotFound& e) {
      fail(res, 404, e.what());
    } catch (const InvalidArgument& e) {
      fail(res, 400, e.what());
    } catch (const ValidationError& e) {
      fail(res, 422, e.what());
    } catch (const std::exception& e) {
      fail(res, 500, e.what());
    }
  });

  s.Get("/items", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<Status> filter;
    if (req.has_param("status") && !req.get_param_value("status").empty()) {
      try {
        filter = cvbench::status_from_string(req.get_param_value("status"));
      } catch (const ParseError& e) {
        throw InvalidArgument(e.what());
      }
    }
    const auto page = store_.list_items(filter, size_param(req, "page", 1), size_param(req, "size", 50));
    json items = json::array();
    for (const auto& q : page.items) items.push_back(cvbench::to_json(q));
    reply(res, 200,
          {{"page", page.page}, {"size", page.size}, {"total", page.total}, {"pages", page.pages}, {"items", items}});
  });

  s.Get(R"(/items/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.matches[1].str();
    auto q = store_.item(id);
    if (!q) throw NotFound("no item " + id);
    reply(res, 200, cvbench::to_json(*q));
  });

  s.Post(R"(/items/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto reviewer = req.get_header_value("X-Reviewer");
    if (reviewer.empty()) return fail(res, 401, "X-Reviewer header required");
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("body is not JSON: ") + e.what());
    }
    auto record = decision_from_json(body);
    const auto id = req.matches[1].str();
    if (!record.item_id.empty() && record.item_id != id)
      throw ValidationError("body item_id " + record.item_id + " does not match path " + id);
    record.item_id = id;
    record.reviewer = reviewer;
    record.timestamp.clear();
    if (req.has_header("Idempotency-Key")) record.idempotency_key = req.get_header_value("Idempotency-Key");
    const auto ack = store_.submit(std::move(record));
    reply(res, ack.duplicate ? 200 : 201, ack_json(ack));
  });

  s.Get("/export", [this](const httplib::Request& req, httplib::Response& res) {
    const bool allow = req.has_param("allow_pending") && req.get_param_value("allow_pending") != "0" &&
                       req.get_param_value("allow_pending") != "false";
    Export ex;
    try {
      ex = store_.export_benchmark(allow);
    } catch (const ValidationError& e) {
      return fail(res, 409, e.what());
    }
    reply(res, 200,
          {{"items", ex.records},
           {"pending_skipped", ex.pending_skipped},
           {"composition", composition_json(ex.composition)},
           {"summary", composition_table(ex.composition)}});
  });

  s.Get("/stats", [this](const httplib::Request&, httplib::Response& res) { reply(res, 200, to_json(store_.stats())); });
}

int ReviewServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw InvalidArgument("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return bound;
}

void ReviewServer::serve(const std::string& host, int port) {
  if (!http_->bind_to_port(host, port)) throw InvalidArgument("cannot bind " + host + ":" + std::to_string(port));
  http_->listen_after_bind();
}

void ReviewServer::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace forge::review
