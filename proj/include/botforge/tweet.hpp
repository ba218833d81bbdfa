#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "botforge/error.hpp"

namespace botforge {

enum class TweetKind { original, retweet, quote, reply };

inline const char* to_string(TweetKind k) {
  switch (k) {
    case TweetKind::original: return "original";
    case TweetKind::retweet: return "retweet";
    case TweetKind::quote: return "quote";
    case TweetKind::reply: return "reply";
  }
  return "original";
}

inline TweetKind tweet_kind_from_string(const std::string& s) {
  if (s == "original") return TweetKind::original;
  if (s == "retweet") return TweetKind::retweet;
  if (s == "quote") return TweetKind::quote;
  if (s == "reply") return TweetKind::reply;
  throw ValidationError("unknown tweet kind '" + s + "'");
}

struct Tweet {
  std::uint64_t id = 0;
  std::string author_id;
  TweetKind kind = TweetKind::original;
  std::string text;
  // A reply without a target tweet is a direct mention of an agent that had
  // nothing to respond to yet.
  std::optional<std::uint64_t> target_tweet_id;
  std::optional<std::string> target_agent_id;
  int run_index = 0;
  int slot_index = 0;
  std::vector<std::string> mentions;
  std::vector<std::string> hashtags;
  std::vector<std::string> urls;

  bool is_interaction() const { return kind != TweetKind::original; }

  friend bool operator==(const Tweet&, const Tweet&) = default;
};

inline nlohmann::ordered_json to_json(const Tweet& t) {
  nlohmann::ordered_json j;
  j["id"] = t.id;
  j["author_id"] = t.author_id;
  j["kind"] = to_string(t.kind);
  j["text"] = t.text;
  j["target_tweet_id"] = t.target_tweet_id ? nlohmann::ordered_json(*t.target_tweet_id) : nlohmann::ordered_json(nullptr);
  j["target_agent_id"] = t.target_agent_id ? nlohmann::ordered_json(*t.target_agent_id) : nlohmann::ordered_json(nullptr);
  j["run_index"] = t.run_index;
  j["slot_index"] = t.slot_index;
  j["mentions"] = t.mentions;
  j["hashtags"] = t.hashtags;
  j["urls"] = t.urls;
  return j;
}

inline Tweet tweet_from_json(const nlohmann::json& j) {
  try {
    Tweet t;
    t.id = j.at("id").get<std::uint64_t>();
    t.author_id = j.at("author_id").get<std::string>();
    t.kind = tweet_kind_from_string(j.at("kind").get<std::string>());
    t.text = j.at("text").get<std::string>();
    if (j.contains("target_tweet_id") && !j.at("target_tweet_id").is_null())
      t.target_tweet_id = j.at("target_tweet_id").get<std::uint64_t>();
    if (j.contains("target_agent_id") && !j.at("target_agent_id").is_null())
      t.target_agent_id = j.at("target_agent_id").get<std::string>();
    t.run_index = j.at("run_index").get<int>();
    t.slot_index = j.at("slot_index").get<int>();
    t.mentions = j.value("mentions", std::vector<std::string>{});
    t.hashtags = j.value("hashtags", std::vector<std::string>{});
    t.urls = j.value("urls", std::vector<std::string>{});
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed tweet record: ") + e.what());
  }
}

/// One JSON object per line, in the given order.
inline std::string tweets_to_jsonl(const std::vector<Tweet>& tweets) {
  std::string out;
  for (const auto& t : tweets) {
    out += to_json(t).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<Tweet> tweets_from_jsonl(const std::string& text) {
  std::vector<Tweet> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(tweet_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("tweets.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace botforge
