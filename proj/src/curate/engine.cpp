#include "forge/curate/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "forge/error.hpp"
#include "forge/jsonl.hpp"
#include "forge/seed.hpp"

namespace forge::curate {

using clients::ChatMessage;

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

// ---- Stage 1 ----

std::string topic_prompt(const std::string& field) {
  return "List the main subfields of " + field +
         " and, for each subfield, about twenty distinct topics suitable for encyclopedia lookups. "
         "Reply with a single JSON object mapping each subfield name to an array of topic strings.";
}

TopicListing parse_topic_listing(const std::string& raw) {
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw ClientError("topic listing: no JSON object in response", raw);
  }
  // Drop elision lines, then trailing commas before a closer.
  std::istringstream lines(raw.substr(open, close - open + 1));
  std::string body, line;
  while (std::getline(lines, line)) {
    const auto t = trim(line);
    if (t == "..." || t == "...," || t == "\"...\"" || t == "\"...\",") continue;
    body += line + "\n";
  }
  std::string cleaned;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == ',') {
      auto j = body.find_first_not_of(" \t\r\n", i + 1);
      if (j != std::string::npos && (body[j] == '}' || body[j] == ']')) continue;
    }
    cleaned.push_back(body[i]);
  }
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(cleaned);
  } catch (const nlohmann::json::exception& e) {
    throw ClientError(std::string("topic listing: ") + e.what(), raw);
  }
  if (!j.is_object()) throw ClientError("topic listing: expected an object of subfields", raw);
  TopicListing out;
  for (const auto& [name, topics] : j.items()) {
    if (!topics.is_array()) throw ClientError("topic listing: subfield '" + name + "' is not an array", raw);
    Subfield sf{name, {}};
    std::unordered_set<std::string> seen;
    for (const auto& t : topics) {
      if (!t.is_string()) throw ClientError("topic listing: non-string topic under '" + name + "'", raw);
      auto s = trim(t.get<std::string>());
      if (!s.empty() && seen.insert(s).second) sf.topics.push_back(std::move(s));
    }
    out.push_back(std::move(sf));
  }
  return out;
}

TopicListing engine_topics(const std::string& field, clients::ChatClient& client) {
  return parse_topic_listing(client.complete({{"user", topic_prompt(field)}}));
}

std::map<std::string, TopicListing> engine_topics(std::span<const std::string> fields, clients::ChatClient& client) {
  std::map<std::string, TopicListing> out;
  for (const auto& f : fields) out[f] = engine_topics(f, client);
  return out;
}

// ---- Stage 2 ----

std::vector<std::string> filter_urls(std::span<const std::string> urls, std::size_t k) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& u : urls) {
    if (out.size() == k) break;
    if (lower(u.substr(0, 8)) != "https://") continue;
    if (seen.insert(u).second) out.push_back(u);
  }
  return out;
}

std::vector<std::string> engine_search(const std::string& topic, clients::SearchClient& client, std::size_t k,
                                       RetryPolicy retry) {
  if (retry.attempts == 0) throw InvalidArgument("engine_search: retry policy needs at least one attempt");
  auto backoff = std::chrono::milliseconds(retry.backoff_ms);
  for (std::size_t attempt = 1;; ++attempt) {
    try {
      auto urls = client.search(topic, k);
      return filter_urls(urls, k);
    } catch (const ClientError& e) {
      if (attempt >= retry.attempts) {
        throw ClientError("search for '" + topic + "' failed after " + std::to_string(attempt) + " attempts: " + e.what(),
                          e.payload());
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
}

// ---- Stage 3 ----

namespace {

struct Tag {
  std::string name;  // lower-case
  bool closing = false;
  bool self_closing = false;
  std::map<std::string, std::string> attrs;
};

Tag parse_tag(std::string_view body) {
  Tag t;
  std::size_t i = 0;
  if (i < body.size() && body[i] == '/') {
    t.closing = true;
    ++i;
  }
  const auto name_end = body.find_first_of(" \t\r\n/>", i);
  t.name = lower(std::string(body.substr(i, name_end == std::string_view::npos ? body.size() - i : name_end - i)));
  if (!body.empty() && body.back() == '/') t.self_closing = true;
  i = name_end == std::string_view::npos ? body.size() : name_end;
  while (i < body.size()) {
    while (i < body.size() && (std::isspace(static_cast<unsigned char>(body[i])) || body[i] == '/')) ++i;
    const auto key_start = i;
    while (i < body.size() && body[i] != '=' && !std::isspace(static_cast<unsigned char>(body[i])) && body[i] != '/') ++i;
    std::string key = lower(std::string(body.substr(key_start, i - key_start)));
    if (key.empty()) {
      ++i;
      continue;
    }
    std::string value;
    if (i < body.size() && body[i] == '=') {
      ++i;
      if (i < body.size() && (body[i] == '"' || body[i] == '\'')) {
        const char q = body[i++];
        const auto end = body.find(q, i);
        value = std::string(body.substr(i, end == std::string_view::npos ? body.size() - i : end - i));
        i = end == std::string_view::npos ? body.size() : end + 1;
      } else {
        const auto start = i;
        while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i]))) ++i;
        value = std::string(body.substr(start, i - start));
      }
    }
    t.attrs[key] = value;
  }
  return t;
}

bool has_class(const Tag& t, std::string_view cls) {
  auto it = t.attrs.find("class");
  if (it == t.attrs.end()) return false;
  std::istringstream in(it->second);
  std::string c;
  while (in >> c)
    if (c == cls) return true;
  return false;
}

std::string decode_entities(std::string_view s) {
  static const std::map<std::string, std::string, std::less<>> named{
      {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "}, {"#39", "'"}};
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '&') {
      const auto semi = s.find(';', i);
      if (semi != std::string_view::npos && semi - i <= 8) {
        const auto ent = s.substr(i + 1, semi - i - 1);
        if (auto it = named.find(ent); it != named.end()) {
          out += it->second;
          i = semi;
          continue;
        }
        if (ent.size() > 1 && ent[0] == '#') {
          unsigned long cp = 0;
          try {
            cp = ent[1] == 'x' || ent[1] == 'X' ? std::stoul(std::string(ent.substr(2)), nullptr, 16)
                                                : std::stoul(std::string(ent.substr(1)));
          } catch (const std::exception&) {
            cp = 0;
          }
          if (cp > 0 && cp < 0x110000) {
            if (cp < 0x80) {
              out += static_cast<char>(cp);
            } else if (cp < 0x800) {
              out += static_cast<char>(0xC0 | (cp >> 6));
              out += static_cast<char>(0x80 | (cp & 0x3F));
            } else if (cp < 0x10000) {
              out += static_cast<char>(0xE0 | (cp >> 12));
              out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
              out += static_cast<char>(0x80 | (cp & 0x3F));
            } else {
              out += static_cast<char>(0xF0 | (cp >> 18));
              out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
              out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
              out += static_cast<char>(0x80 | (cp & 0x3F));
            }
            i = semi;
            continue;
          }
        }
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out.push_back(' ');
      space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string strip_tags(std::string_view s) {
  std::string out;
  bool in_tag = false;
  for (char c : s) {
    if (c == '<') {
      in_tag = true;
    } else if (c == '>' && in_tag) {
      in_tag = false;
    } else if (!in_tag) {
      out.push_back(c);
    }
  }
  return out;
}

std::string normalize_src(const std::string& src) { return src.rfind("//", 0) == 0 ? "https:" + src : src; }

}  // namespace

ParsedPage engine_parse(const std::string& html) {
  ParsedPage page;
  std::vector<PageBlock> blocks(1);  // lead section, named after the title at the end
  std::string heading_text, para_text, title_text;
  int heading_level = 0;
  bool in_para = false, in_title = false;
  // Figure state: container depth, images seen, caption span.
  int div_depth = 0;
  int thumb_depth = 0, caption_div_depth = 0;  // 0 = not inside one
  bool in_figure = false;
  std::vector<std::string> figure_imgs;
  constexpr auto kNone = std::string::npos;
  std::size_t caption_start = kNone;
  std::string caption;

  auto flush_figure = [&] {
    for (const auto& u : figure_imgs) blocks.back().images.push_back({u, caption});
    figure_imgs.clear();
    caption.clear();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      const auto next = html.find('<', i);
      const auto text = std::string_view(html).substr(i, (next == std::string::npos ? html.size() : next) - i);
      if (heading_level) heading_text += text;
      if (in_para) para_text += text;
      if (in_title) title_text += text;
      i = next == std::string::npos ? html.size() : next;
      continue;
    }
    if (html.compare(i, 4, "<!--") == 0) {
      const auto end = html.find("-->", i + 4);
      i = end == std::string::npos ? html.size() : end + 3;
      continue;
    }
    const auto end = html.find('>', i);
    if (end == std::string::npos) break;
    const auto tag_start = i;
    Tag tag = parse_tag(std::string_view(html).substr(i + 1, end - i - 1));
    i = end + 1;

    if (!tag.closing && (tag.name == "script" || tag.name == "style")) {
      const auto close = lower(html.substr(i)).find("</" + tag.name);
      i = close == std::string::npos ? html.size() : i + close;
      continue;
    }
    const bool is_heading = tag.name.size() == 2 && tag.name[0] == 'h' && tag.name[1] >= '1' && tag.name[1] <= '4';

    if (tag.name == "title") {
      in_title = !tag.closing;
    } else if (is_heading) {
      if (!tag.closing) {
        heading_level = tag.name[1] - '0';
        heading_text.clear();
      } else if (heading_level) {
        auto name = collapse_ws(decode_entities(heading_text));
        if (heading_level == 1) {
          if (page.title.empty()) page.title = name;
        } else {
          blocks.push_back({name, {}, {}});
        }
        heading_level = 0;
      }
    } else if (tag.name == "p") {
      if (!tag.closing) {
        in_para = true;
        para_text.clear();
      } else if (in_para) {
        auto t = collapse_ws(decode_entities(para_text));
        if (!t.empty()) blocks.back().text += (blocks.back().text.empty() ? "" : " ") + t;
        in_para = false;
      }
    } else if (tag.name == "figure") {
      if (!tag.closing) {
        in_figure = true;
        figure_imgs.clear();
        caption.clear();
      } else if (in_figure) {
        flush_figure();
        in_figure = false;
      }
    } else if (tag.name == "figcaption") {
      if (!tag.closing) {
        caption_start = i;
      } else if (caption_start != kNone) {
        caption = trim(strip_tags(std::string_view(html).substr(caption_start, tag_start - caption_start)));
        caption_start = kNone;
      }
    } else if (tag.name == "div") {
      if (!tag.closing && !tag.self_closing) {
        ++div_depth;
        if (thumb_depth == 0 && !in_figure && has_class(tag, "thumb")) {
          thumb_depth = div_depth;
          figure_imgs.clear();
          caption.clear();
        } else if (thumb_depth != 0 && caption_div_depth == 0 && has_class(tag, "thumbcaption")) {
          caption_div_depth = div_depth;
          caption_start = i;
        }
      } else if (tag.closing) {
        if (caption_div_depth != 0 && caption_div_depth == div_depth) {
          caption = trim(strip_tags(std::string_view(html).substr(caption_start, tag_start - caption_start)));
          caption_start = kNone;
          caption_div_depth = 0;
        }
        if (thumb_depth != 0 && thumb_depth == div_depth) {
          flush_figure();
          thumb_depth = 0;
        }
        div_depth = std::max(0, div_depth - 1);
      }
    } else if (tag.name == "img" && !tag.closing && (in_figure || thumb_depth != 0)) {
      if (auto it = tag.attrs.find("src"); it != tag.attrs.end() && !it->second.empty()) {
        figure_imgs.push_back(normalize_src(it->second));
      }
    }
  }

  if (page.title.empty()) page.title = collapse_ws(decode_entities(title_text));
  if (blocks.front().section.empty()) blocks.front().section = page.title;
  for (auto& b : blocks)
    if (!b.images.empty()) page.blocks.push_back(std::move(b));
  return page;
}

// ---- Stage 4 ----

std::vector<EngineTuple> tuples_from_page(const ParsedPage& page, const std::string& field,
                                          const std::string& subfield, const std::string& topic,
                                          const std::string& url) {
  std::string origin;
  if (auto p = url.find("://"); p != std::string::npos) origin = url.substr(0, url.find('/', p + 3));
  std::vector<EngineTuple> out;
  for (const auto& b : page.blocks) {
    for (const auto& img : b.images) {
      PageImage resolved = img;
      if (!resolved.url.empty() && resolved.url[0] == '/') resolved.url = origin + resolved.url;
      out.push_back({field, subfield, topic, url, page.title, b.section, b.text, resolved});
    }
  }
  return out;
}

nlohmann::json to_json(const EngineItem& item) {
  nlohmann::ordered_json j{{"id", item.id},           {"image_id", item.image_id}, {"image_url", item.image_url},
                           {"text", item.text},       {"caption", item.caption},   {"section", item.section},
                           {"Question", item.question}, {"Answer", item.answer}};
  j["metadata"] = {{"field", item.field},
                   {"subfield", item.subfield},
                   {"topic", item.topic},
                   {"source_url", item.source_url},
                   {"title", item.title}};
  return nlohmann::json::parse(j.dump());
}

EngineItem engine_item_from_json(const nlohmann::json& j) {
  try {
    EngineItem it;
    it.id = j.at("id").get<std::string>();
    it.image_id = j.value("image_id", "");
    it.image_url = j.value("image_url", "");
    it.text = j.value("text", "");
    it.caption = j.at("caption").get<std::string>();
    it.section = j.value("section", "");
    it.question = j.at("Question").get<std::string>();
    it.answer = j.at("Answer").get<std::string>();
    if (j.contains("metadata")) {
      const auto& m = j["metadata"];
      it.field = m.value("field", "");
      it.subfield = m.value("subfield", "");
      it.topic = m.value("topic", "");
      it.source_url = m.value("source_url", "");
      it.title = m.value("title", "");
    }
    return it;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("engine item: ") + e.what());
  }
}

std::size_t word_count(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  std::string w;
  while (in >> w) ++n;
  return n;
}

std::vector<ChatMessage> qa_prompt(const EngineTuple& t) {
  std::string user = "Field: " + t.field + "\nSubfield: " + t.subfield + "\nTopic: " + t.topic +
                     "\nPage: " + t.title + "\nSection: " + t.section + "\nImage caption: " + t.image.caption +
                     "\nContext: " + t.text +
                     "\n\nWrite one question a student could answer by looking at the image together with the "
                     "caption and context, and a complete answer grounded only in that material. "
                     "Reply with JSON: {\"Question\": \"...\", \"Answer\": \"...\"}";
  return {{"system", "You write visual question-answer pairs for science images."}, {"user", user}};
}

namespace {

std::string image_stem(const std::string& url) {
  auto path = url.substr(0, url.find_first_of("?#"));
  auto name = path.substr(path.rfind('/') + 1);
  return name.substr(0, name.find('.'));
}

bool looks_like_refusal(const std::string& text) {
  const auto t = lower(text);
  for (const char* marker : {"i'm sorry", "i am sorry", "i cannot", "i can't", "i'm unable", "i am unable"}) {
    if (t.find(marker) != std::string::npos) return true;
  }
  return false;
}

std::optional<std::pair<std::string, std::string>> parse_qa(const std::string& raw) {
  const auto open = raw.find('{'), close = raw.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(raw.substr(open, close - open + 1));
    std::string q, a;
    for (const auto& [k, v] : j.items()) {
      if (!v.is_string()) continue;
      if (lower(k) == "question") q = trim(v.get<std::string>());
      if (lower(k) == "answer") a = trim(v.get<std::string>());
    }
    if (q.empty() || a.empty()) return std::nullopt;
    return std::make_pair(q, a);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

}  // namespace

QaOutcome engine_generate_qa(const EngineTuple& t, clients::ChatClient& client) {
  if (word_count(t.text) < kMinContextWords) return {std::nullopt, "short-context"};
  const auto raw = client.complete(qa_prompt(t));
  auto qa = parse_qa(raw);
  if (!qa) return {std::nullopt, looks_like_refusal(raw) ? "refusal" : "malformed-response"};
  char id[24];
  std::snprintf(id, sizeof id, "%016llx",
                static_cast<unsigned long long>(mix_seed(0, t.image.url + "\n" + t.image.caption)));
  EngineItem item{std::string(id) + ".png", image_stem(t.image.url), t.image.url, t.text, t.image.caption,
                  t.section, qa->first, qa->second, t.field, t.subfield, t.topic, t.source_url, t.title};
  return {std::move(item), {}};
}

// ---- journal ----

EngineJournal::EngineJournal(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  for (const auto& j : read_jsonl(path_)) {
    entries_[{j.at("stage").get<std::string>(), j.at("key").get<std::string>()}] = j.at("value");
  }
}

std::optional<nlohmann::json> EngineJournal::find(const std::string& stage, const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({stage, key});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EngineJournal::append(const std::string& stage, const std::string& key, const nlohmann::json& value) {
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error("cannot append to journal " + path_.string());
  out << nlohmann::json{{"stage", stage}, {"key", key}, {"value", value}}.dump() << '\n';
  out.flush();
  entries_[{stage, key}] = value;
  ++appended_;
}

std::size_t EngineJournal::appended() const {
  std::lock_guard lock(mu_);
  return appended_;
}

namespace {

nlohmann::json listing_to_json(const TopicListing& l) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : l) out.push_back({{"subfield", s.name}, {"topics", s.topics}});
  return out;
}

TopicListing listing_from_json(const nlohmann::json& j) {
  TopicListing out;
  for (const auto& s : j) out.push_back({s.at("subfield").get<std::string>(), s.at("topics").get<std::vector<std::string>>()});
  return out;
}

nlohmann::json page_to_json(const ParsedPage& p) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : p.blocks) {
    nlohmann::json imgs = nlohmann::json::array();
    for (const auto& im : b.images) imgs.push_back({{"url", im.url}, {"caption", im.caption}});
    blocks.push_back({{"section", b.section}, {"text", b.text}, {"images", imgs}});
  }
  return {{"title", p.title}, {"blocks", blocks}};
}

ParsedPage page_from_json(const nlohmann::json& j) {
  ParsedPage p{j.at("title").get<std::string>(), {}};
  for (const auto& b : j.at("blocks")) {
    PageBlock block{b.at("section").get<std::string>(), b.at("text").get<std::string>(), {}};
    for (const auto& im : b.at("images")) block.images.push_back({im.at("url"), im.at("caption")});
    p.blocks.push_back(std::move(block));
  }
  return p;
}

template <class T>
std::vector<T> head(const std::vector<T>& v, std::size_t limit) {
  return limit == 0 || v.size() <= limit ? v : std::vector<T>(v.begin(), v.begin() + static_cast<long>(limit));
}

}  // namespace

EngineRun run_engine(const std::string& field, EngineClients c, EngineJournal& journal, const EngineOptions& opt) {
  EngineRun run;
  TopicListing listing;
  if (auto cached = journal.find("topics", field)) {
    listing = listing_from_json(*cached);
  } else {
    listing = engine_topics(field, c.topic_llm);
    journal.append("topics", field, listing_to_json(listing));
  }

  std::vector<std::pair<std::string, EngineTuple>> tuples;  // (journal key, tuple)
  for (const auto& sf : head(listing, opt.max_subfields)) {
    for (const auto& topic : head(sf.topics, opt.max_topics_per_subfield)) {
      ++run.topics;
      std::vector<std::string> urls;
      if (auto cached = journal.find("search", topic)) {
        urls = cached->get<std::vector<std::string>>();
      } else {
        try {
          urls = engine_search(topic, c.search, opt.urls_per_topic, opt.retry);
        } catch (const ClientError&) {
          ++run.rejected["search-failed"];
          continue;
        }
        journal.append("search", topic, urls);
      }
      for (const auto& url : urls) {
        ++run.urls;
        ParsedPage page;
        if (auto cached = journal.find("parse", url)) {
          page = page_from_json(*cached);
        } else {
          try {
            page = engine_parse(c.fetcher.fetch(url));
          } catch (const ClientError&) {
            ++run.fetch_failures;
            continue;
          }
          journal.append("parse", url, page_to_json(page));
        }
        ++run.pages;
        for (auto& t : tuples_from_page(page, field, sf.name, topic, url)) {
          auto key = topic + "\n" + url + "\n" + t.image.url;
          tuples.emplace_back(std::move(key), std::move(t));
        }
      }
    }
  }
  run.tuples = tuples.size();

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < tuples.size(); ++i)
    if (!journal.find("qa", tuples[i].first)) pending.push_back(i);

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t n; (n = next++) < pending.size();) {
      const auto& [key, tuple] = tuples[pending[n]];
      try {
        auto outcome = engine_generate_qa(tuple, c.qa_llm);
        journal.append("qa", key,
                       outcome.item ? nlohmann::json{{"item", to_json(*outcome.item)}}
                                    : nlohmann::json{{"rejected", outcome.reason}});
      } catch (const ClientError&) {
        // Not journaled, so the next run retries it.
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto workers = std::max<std::size_t>(1, std::min(opt.workers, pending.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (const auto& [key, tuple] : tuples) {
    auto entry = journal.find("qa", key);
    if (!entry) {
      ++run.rejected["client-error"];
    } else if (entry->contains("item")) {
      run.items.push_back(engine_item_from_json((*entry)["item"]));
    } else {
      ++run.rejected[(*entry)["rejected"].get<std::string>()];
    }
  }
  return run;
}

// ---- offline mock ----

const std::string& mock_physics_listing() {
  static const std::string listing = R"(Physics
{
    "Classical Mechanics": [
        "Newton's Laws of Motion", "Conservation of Energy", "Conservation of Momentum", "Harmonic Motion",
        "Rotational Dynamics", "Gravitation and Orbits", "Fluid Dynamics", "Elasticity and Plasticity",
        "Friction", "Waves and Sound", "Velocity and Acceleration", "Angular Momentum",
        "Statics and Equilibrium", "Kinematics of Particles", "Dynamics of Systems of Particles", "Collisions",
        "Centripetal Force and Acceleration", "Lagrangian and Hamiltonian Mechanics", "Chaos Theory",
        "Equations of Motion"
    ],
    "Electromagnetism": [
        "Coulomb's Law", "Electric Field and Electric Potential", "Gauss's Law", "Capacitance and Dielectrics",
        "Current and Resistance", "Direct Current Circuits", "Magnetic Fields and Magnetic Forces",
        "Ampere's Law", "Faraday's Law of Induction", "Inductance", "Alternating Current Circuits",
        "Electromagnetic Waves", "Maxwell's Equations", "Electromagnetic Radiation", "Optics and Light",
        "Quantum Electrodynamics", "Special Theory of Relativity Implication", "Magnetostatics",
        "Electrostatics", "Bioelectromagnetism"
    ],
    ...
})";
  return listing;
}

namespace {

std::string slug(const std::string& topic) {
  std::string s;
  for (char ch : topic) s.push_back(ch == ' ' ? '_' : ch == '\'' ? '-' : ch);
  return s;
}

std::string mock_page(const std::string& topic, std::size_t n) {
  const auto s = slug(topic);
  // Every fourth page is a stub whose context falls below the word floor.
  std::string body = n % 4 == 3 ? "A stub paragraph about " + topic + "."
                                 : "This article surveys " + topic +
                                       " as it is usually taught in an introductory physics course. The figure below "
                                       "shows a typical laboratory arrangement together with the quantities one "
                                       "measures, the directions in which they act, and the way the measured values "
                                       "change when the setup is varied step by step. Readers are encouraged to "
                                       "compare the labelled arrows with the equations given later in the text.";
  return "<html><head><title>" + topic + "</title></head><body><h1>" + topic + "</h1>" + "<h2>Overview " +
         std::to_string(n) + "</h2><p>" + body + "</p><figure><img src=\"//upload.example.org/" + s + "_" +
         std::to_string(n) + ".svg.png\"><figcaption>Diagram " + std::to_string(n) + " illustrating " + topic +
         ".</figcaption></figure></body></html>";
}

std::string mock_answer(const std::vector<ChatMessage>& messages) {
  const auto& user = messages.back().content;
  auto grab = [&](const std::string& label) {
    auto at = user.find(label);
    if (at == std::string::npos) return std::string();
    at += label.size();
    return user.substr(at, user.find('\n', at) - at);
  };
  nlohmann::json qa{{"Question", "What does the diagram about " + grab("Topic: ") + " show?"},
                    {"Answer", "It shows " + grab("Image caption: ")}};
  return qa.dump();
}

}  // namespace

std::unique_ptr<MockEngineClients> make_mock_engine_clients() {
  const auto listing = parse_topic_listing(mock_physics_listing());
  std::map<std::string, std::vector<std::string>> search;
  std::map<std::string, std::string> pages;
  for (const auto& sf : listing) {
    for (const auto& topic : sf.topics) {
      auto& urls = search[topic];
      for (std::size_t n = 0; n < 10; ++n) {
        auto url = "https://en.wikipedia.org/wiki/" + slug(topic) + (n ? "_(" + std::to_string(n) + ")" : "");
        pages[url] = mock_page(topic, n);
        urls.push_back(url);
      }
    }
  }
  return std::unique_ptr<MockEngineClients>(new MockEngineClients{
      clients::ScriptedChatClient([](const auto&) { return mock_physics_listing(); }),
      clients::MapSearchClient(std::move(search)), clients::MapPageFetcher(std::move(pages)),
      clients::ScriptedChatClient(mock_answer)});
}

}  // namespace forge::curate
