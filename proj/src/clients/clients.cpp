#include "forge/clients.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "forge/error.hpp"
#include "forge/jsonl.hpp"
#include "forge/seed.hpp"
#include "httplib.h"

namespace forge::clients {

std::string transcript(const std::vector<ChatMessage>& messages) {
  std::string out;
  for (const auto& m : messages) out += m.role + ": " + m.content + "\n";
  return out;
}

std::string ScriptedChatClient::complete(const std::vector<ChatMessage>& messages) {
  ++calls_;
  return script_(messages);
}

std::vector<std::string> MapSearchClient::search(const std::string& query, std::size_t) {
  const auto n = calls_++;
  if (n < failures_) throw ClientError("search backend unavailable (scripted failure " + std::to_string(n + 1) + ")");
  // Returned as-is, possibly more than k; callers truncate.
  auto it = table_.find(query);
  return it == table_.end() ? std::vector<std::string>{} : it->second;
}

std::string MapPageFetcher::fetch(const std::string& url) {
  ++calls_;
  auto it = pages_.find(url);
  if (it == pages_.end()) throw ClientError("no page for " + url);
  return it->second;
}

namespace {

std::string transcript_key(const std::vector<ChatMessage>& messages) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(mix_seed(0, transcript(messages))));
  return buf;
}

}  // namespace

ReplayChatClient::ReplayChatClient(std::filesystem::path cache, ChatClient* inner)
    : cache_(std::move(cache)), inner_(inner) {
  if (std::filesystem::exists(cache_)) {
    for (const auto& j : read_jsonl(cache_)) answers_[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
  }
}

std::string ReplayChatClient::complete(const std::vector<ChatMessage>& messages) {
  const auto key = transcript_key(messages);
  {
    std::lock_guard lock(mu_);
    auto it = answers_.find(key);
    if (it != answers_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++misses_;
  if (!inner_) throw ClientError("replay cache " + cache_.string() + " has no response for request " + key);
  auto response = inner_->complete(messages);
  std::lock_guard lock(mu_);
  answers_[key] = response;
  std::ofstream out(cache_, std::ios::app);
  out << nlohmann::json{{"key", key}, {"response", response}}.dump() << '\n';
  return response;
}

HttpChatSettings HttpChatSettings::from_env() {
  HttpChatSettings s;
  const char* key = std::getenv("FORGE_CHAT_API_KEY");
  if (!key || !*key) throw InvalidArgument("FORGE_CHAT_API_KEY is not set (use --mock to run without a live endpoint)");
  s.api_key = key;
  if (const char* base = std::getenv("FORGE_CHAT_BASE_URL"); base && *base) s.base_url = base;
  if (const char* model = std::getenv("FORGE_CHAT_MODEL"); model && *model) s.model = model;
  return s;
}

nlohmann::json chat_request_body(const HttpChatSettings& s, const std::vector<ChatMessage>& messages) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", s.model}, {"messages", msgs}, {"temperature", s.temperature}};
}

std::string parse_chat_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw ClientError("chat endpoint returned non-JSON", body);
  }
  if (j.contains("error")) throw ClientError("chat endpoint error: " + j["error"].dump(), body);
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ClientError("chat endpoint response lacks choices[0].message.content", body);
  }
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  httplib::Client cli(settings_.base_url);
  cli.set_read_timeout(settings_.timeout_seconds, 0);
  cli.set_bearer_token_auth(settings_.api_key);
  auto res = cli.Post(settings_.path, chat_request_body(settings_, messages).dump(), "application/json");
  if (!res) throw ClientError("chat request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw ClientError("chat endpoint HTTP " + std::to_string(res->status), res->body);
  return parse_chat_response(res->body);
}

std::string HttpPageFetcher::fetch(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("not an absolute url: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  httplib::Client cli(url.substr(0, path_start));
  cli.set_follow_location(true);
  auto res = cli.Get(path_start == std::string::npos ? "/" : url.substr(path_start));
  if (!res) throw ClientError("fetch " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw ClientError("fetch " + url + ": HTTP " + std::to_string(res->status), res->body);
  return res->body;
}

}  // namespace forge::clients
