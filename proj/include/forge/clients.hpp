#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace forge::clients {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

// Narrow seams around every external service. Implementations must be safe
// to call from several worker threads at once.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Returns the assistant text. Transport or protocol failures throw ClientError.
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

class SearchClient {
 public:
  virtual ~SearchClient() = default;
  virtual std::vector<std::string> search(const std::string& query, std::size_t k) = 0;
};

class PageFetcher {
 public:
  virtual ~PageFetcher() = default;
  virtual std::string fetch(const std::string& url) = 0;
};

// Concatenated message text; the key used by scripted and replay clients.
std::string transcript(const std::vector<ChatMessage>& messages);

// Answers from a callback and counts calls.
class ScriptedChatClient final : public ChatClient {
 public:
  using Script = std::function<std::string(const std::vector<ChatMessage>&)>;
  explicit ScriptedChatClient(Script script) : script_(std::move(script)) {}
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::size_t calls() const noexcept { return calls_; }

 private:
  Script script_;
  std::atomic<std::size_t> calls_{0};
};

// Fixed query -> urls table; unknown queries return nothing. The first
// `failures` calls throw ClientError to exercise retry paths.
class MapSearchClient final : public SearchClient {
 public:
  explicit MapSearchClient(std::map<std::string, std::vector<std::string>> table, std::size_t failures = 0)
      : table_(std::move(table)), failures_(failures) {}
  std::vector<std::string> search(const std::string& query, std::size_t k) override;
  std::size_t calls() const noexcept { return calls_; }

 private:
  std::map<std::string, std::vector<std::string>> table_;
  std::size_t failures_;
  std::atomic<std::size_t> calls_{0};
};

class MapPageFetcher final : public PageFetcher {
 public:
  explicit MapPageFetcher(std::map<std::string, std::string> pages) : pages_(std::move(pages)) {}
  std::string fetch(const std::string& url) override;
  std::size_t calls() const noexcept { return calls_; }

 private:
  std::map<std::string, std::string> pages_;
  std::atomic<std::size_t> calls_{0};
};

// Record/replay: answers from a JSONL cache keyed by transcript hash. On a
// miss it forwards to `inner` and appends the answer; without an inner
// client a miss is a ClientError.
class ReplayChatClient final : public ChatClient {
 public:
  ReplayChatClient(std::filesystem::path cache, ChatClient* inner = nullptr);
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }

 private:
  std::filesystem::path cache_;
  ChatClient* inner_;
  std::mutex mu_;
  std::map<std::string, std::string> answers_;
  std::atomic<std::size_t> hits_{0}, misses_{0};
};

struct HttpChatSettings {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string api_key;
  double temperature = 0.0;
  int timeout_seconds = 60;

  // FORGE_CHAT_API_KEY (required), FORGE_CHAT_BASE_URL, FORGE_CHAT_MODEL.
  // Throws InvalidArgument when the key is unset.
  static HttpChatSettings from_env();
};

// OpenAI-compatible chat-completions endpoint.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatSettings settings) : settings_(std::move(settings)) {}
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  HttpChatSettings settings_;
};

class HttpPageFetcher final : public PageFetcher {
 public:
  std::string fetch(const std::string& url) override;
};

// Builds the request body and extracts choices[0].message.content; exposed
// for tests.
nlohmann::json chat_request_body(const HttpChatSettings& s, const std::vector<ChatMessage>& messages);
std::string parse_chat_response(const std::string& body);

}  // namespace forge::clients
