#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "forge/review/store.hpp"

namespace httplib {
class Server;
}

namespace forge::review {

// JSON over HTTP. Routes:
//   GET  /items?status=pending&page=1&size=50
//   GET  /items/{id}
//   POST /items/{id}/decision   headers X-Reviewer (required), Idempotency-Key
//   GET  /export?allow_pending=1
//   GET  /stats
// Errors are {"error": message} with 400 (bad params), 401 (no reviewer),
// 404 (unknown item), 409 (pending export, key reuse) or 422 (bad decision).
// A repeated Idempotency-Key with the same body answers 200 with the
// original acknowledgement and "duplicate": true; a first submission is 201.
class ReviewServer {
 public:
  explicit ReviewServer(ReviewStore& store, std::filesystem::path static_dir = {});
  ~ReviewServer();

  // Binds (port 0 picks a free one) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Binds and serves on the calling thread until stop().
  void serve(const std::string& host, int port);
  void stop();

 private:
  void routes();

  ReviewStore& store_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
};

}  // namespace forge::review
