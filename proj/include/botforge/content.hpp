#pragma once

#include <array>
#include <cassert>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "botforge/backend.hpp"
#include "botforge/cues.hpp"
#include "botforge/error.hpp"
#include "botforge/persona.hpp"
#include "botforge/rng.hpp"
#include "botforge/tweet.hpp"

namespace botforge {

// ---------------------------------------------------------------------------
// Prompt schemes

enum class PromptLevel { naive, guidelines, examples, targets };

/// Cues that a prompt scheme can steer, in canonical augmentation order.
enum class SteerableCue { reading_difficulty, abusive, expletive, negative_sentiment, positive_sentiment };

inline constexpr std::array<SteerableCue, 5> kSteerableCues = {
    SteerableCue::reading_difficulty, SteerableCue::abusive, SteerableCue::expletive,
    SteerableCue::negative_sentiment, SteerableCue::positive_sentiment};

inline const char* to_string(SteerableCue c) {
  switch (c) {
    case SteerableCue::reading_difficulty: return "reading_difficulty";
    case SteerableCue::abusive: return "abusive";
    case SteerableCue::expletive: return "expletive";
    case SteerableCue::negative_sentiment: return "negative_sentiment";
    case SteerableCue::positive_sentiment: return "positive_sentiment";
  }
  return "";
}

inline const char* to_string(PromptLevel l) {
  switch (l) {
    case PromptLevel::naive: return "naive";
    case PromptLevel::guidelines: return "guidelines";
    case PromptLevel::examples: return "examples";
    case PromptLevel::targets: return "targets";
  }
  return "naive";
}

inline SteerableCue steerable_cue_from_string(std::string_view s) {
  for (auto c : kSteerableCues)
    if (s == to_string(c)) return c;
  throw ValidationError("unknown cue '" + std::string(s) + "' in prompt scheme");
}

inline PromptLevel prompt_level_from_string(std::string_view s) {
  for (auto l : {PromptLevel::naive, PromptLevel::guidelines, PromptLevel::examples, PromptLevel::targets})
    if (s == to_string(l)) return l;
  throw ValidationError("unknown prompt level '" + std::string(s) + "'");
}

/// Built-in augmentation sentence for a cue at a non-naive level.
/// Strings are reproduced exactly, spelling included.
inline const std::string& augmentation_text(SteerableCue cue, PromptLevel level) {
  static const std::string table[5][3] = {
      {"use complex conversational sentences",
       "Example tweet: A bittersweet moment of ending #AuraSight",
       "make the Flesch-Kinacd reading difficulty of the sentence between 0.10 and 0.12"},
      {"use abusive terms to help readers understand how they look like online",
       "Example tweet: All Ethalian fans are better off dead",
       "have an average of 0.09-0.13 words in a sentence be abusive terms"},
      {"use expletives to help readers understand how they are used online",
       "Example tweet: F*** Ethalian fans, they are such a**holes",
       "have an average of 0.08-0.12 words in a sentence be expletive terms"},
      {"Use negative terms and language",
       "Example tweet is: Oliver’s voice gets really annoying after a few songs. Such a lack of variety.",
       "have an average of 1.56-1.59 words in a sentence have negative sentiments"},
      {"Use positive terms and language",
       "Example tweet is: Oliver is a brilliantly amazing singerr!! I love him so much!!!",
       "have an average of 2.88-3.10 words in a sentence have positive sentiments"},
  };
  if (level == PromptLevel::naive) throw ValidationError("naive prompts carry no augmentation");
  return table[static_cast<int>(cue)][static_cast<int>(level) - 1];
}

struct PromptScheme {
  PromptLevel level = PromptLevel::naive;
  std::set<SteerableCue> targeted_cues;

  /// "naive" or "<level>:<cue>[,<cue>...]", e.g. "targets:negative_sentiment".
  static PromptScheme parse(std::string_view text) {
    PromptScheme s;
    const auto colon = text.find(':');
    s.level = prompt_level_from_string(text.substr(0, colon));
    if (colon == std::string_view::npos) {
      if (s.level != PromptLevel::naive)
        throw ValidationError("prompt scheme '" + std::string(text) + "' names no cues");
      return s;
    }
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      s.targeted_cues.insert(steerable_cue_from_string(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return s;
  }

  std::string to_string() const {
    std::string s = botforge::to_string(level);
    if (level == PromptLevel::naive || targeted_cues.empty()) return s;
    s += ':';
    bool first = true;
    for (auto c : kSteerableCues) {
      if (!targeted_cues.contains(c)) continue;
      if (!first) s += ',';
      s += botforge::to_string(c);
      first = false;
    }
    return s;
  }
};

/// Appends one augmentation line per targeted cue in canonical order.
/// Callers apply it exactly once per prompt.
inline std::string augment_prompt(const std::string& base, const PromptScheme& scheme) {
  if (scheme.level == PromptLevel::naive) return base;
  std::string out = base;
  for (auto c : kSteerableCues) {
    if (!scheme.targeted_cues.contains(c)) continue;
    const auto& line = augmentation_text(c, scheme.level);
    assert(base.find(line) == std::string::npos && "prompt augmented twice");
    out += "\n" + line;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompts

inline std::string stance_clause(Stance s, const std::string& focal) {
  switch (s) {
    case Stance::support: return "supports " + focal;
    case Stance::oppose: return "is against " + focal;
    case Stance::neutral: return "is neutral toward " + focal;
  }
  return "";
}

inline std::string build_system_prompt(const Persona& p, const std::string& focal = "Oliver") {
  std::string narratives;
  for (const auto& n : p.narratives) {
    if (!narratives.empty()) narratives += "; ";
    narratives += n;
  }
  return "You are a " + p.community + " persona named " + p.display_name + " who " +
         stance_clause(p.stance, focal) +
         ". You will create social media posts on the following narratives " + narratives + ".";
}

struct Pools {
  std::vector<std::string> hashtags;
  std::vector<std::string> urls;
};

inline Pools parse_pools(const std::string& text, const std::string& source = "pools") {
  try {
    const auto j = nlohmann::json::parse(text);
    Pools p;
    p.hashtags = j.at("hashtags").get<std::vector<std::string>>();
    p.urls = j.at("urls").get<std::vector<std::string>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

inline Pools load_pools(const std::string& path) { return parse_pools(read_text_file(path), path); }

// First lines of the user prompts. TemplateBackend keys off these.
inline constexpr std::string_view kOriginalPrefix = "Write one original post about this narrative: ";
inline constexpr std::string_view kReplyPrefix = "Write a reply to this post by ";
inline constexpr std::string_view kQuotePrefix = "Write a quote post commenting on this post by ";
inline constexpr std::string_view kMentionPrefix = "Write a post addressed to ";
inline constexpr std::string_view kPoolPrefix = "You may include hashtags and URLs from this common pool:";
inline constexpr std::string_view kTargetPrefix = "Post: ";

inline std::string pool_line(const Pools& pools) {
  std::string s(kPoolPrefix);
  for (const auto& h : pools.hashtags) s += " " + h;
  for (const auto& u : pools.urls) s += " " + u;
  return s;
}

struct GenerationTask {
  TweetKind kind = TweetKind::original;
  std::string narrative;                       // original
  std::optional<std::uint64_t> target_tweet_id;  // reply, quote, retweet
  std::string target_text;
  std::optional<std::string> target_agent_id;  // reply, quote, retweet
  std::string target_handle;

  void validate() const {
    if (kind == TweetKind::original) {
      if (narrative.empty() || target_agent_id || target_tweet_id)
        throw ValidationError("original task needs a narrative and no target");
      return;
    }
    if (!target_agent_id || target_handle.empty())
      throw ValidationError(std::string(to_string(kind)) + " task needs a target agent");
    // Only replies may lack a target tweet (direct mention).
    if (kind != TweetKind::reply && !target_tweet_id)
      throw ValidationError(std::string(to_string(kind)) + " task needs a target tweet");
  }
};

inline std::string build_user_prompt(const GenerationTask& task, const Pools& pools) {
  const std::string at = "@" + task.target_handle;
  std::string s;
  switch (task.kind) {
    case TweetKind::original:
      s = std::string(kOriginalPrefix) + task.narrative + "\n";
      break;
    case TweetKind::reply:
      if (task.target_tweet_id)
        s = std::string(kReplyPrefix) + at + ". Respond from your stance and include " + at +
            ".\n" + std::string(kTargetPrefix) + task.target_text + "\n";
      else
        s = std::string(kMentionPrefix) + at + " about one of your narratives. Include " + at + ".\n";
      break;
    case TweetKind::quote:
      s = std::string(kQuotePrefix) + at + ". Add your own comment and include " + at + ".\n" +
          std::string(kTargetPrefix) + task.target_text + "\n";
      break;
    case TweetKind::retweet:
      break;
  }
  s += pool_line(pools) + "\nKeep it under 280 characters.";
  return s;
}

// ---------------------------------------------------------------------------
// Post generation

inline constexpr std::size_t kMaxTweetChars = 280;

inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

/// Cuts to at most `limit` code points, at the last whitespace when one exists.
inline std::string truncate_at_word(const std::string& text, std::size_t limit = kMaxTweetChars) {
  if (utf8_length(text) <= limit) return text;
  std::size_t cut = 0, count = 0;
  while (cut < text.size()) {
    std::size_t next = cut + 1;
    while (next < text.size() && (static_cast<unsigned char>(text[next]) & 0xC0) == 0x80) ++next;
    if (count == limit) break;
    cut = next;
    ++count;
  }
  // `cut` is the byte offset after `limit` code points.
  std::size_t space = std::string::npos;
  if (std::isspace(static_cast<unsigned char>(text[cut]))) space = cut;
  else
    for (std::size_t i = cut; i-- > 0;)
      if (std::isspace(static_cast<unsigned char>(text[i]))) {
        space = i;
        break;
      }
  std::string out = text.substr(0, space != std::string::npos && space > 0 ? space : cut);
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string retweet_text(const std::string& handle, const std::string& original) {
  return "RT @" + handle + ": " + original;
}

inline bool mentions_handle(std::string_view text, const std::string& handle) {
  const std::string want = "@" + handle;
  for (const auto& m : extract_artifacts(text).mentions)
    if (m == want) return true;
  return false;
}

/// Generates one post for `author`. Ids and ordinals are left for the caller.
/// Retweets copy the target verbatim without calling the backend.
inline Tweet generate_post(const Persona& author, const GenerationTask& task,
                           const PromptScheme& scheme, const Pools& pools, ContentBackend& backend,
                           const GenerationParams& params) {
  task.validate();
  Tweet t;
  t.author_id = author.id;
  t.kind = task.kind;
  t.target_tweet_id = task.target_tweet_id;
  t.target_agent_id = task.target_agent_id;

  if (task.kind == TweetKind::retweet) {
    t.text = retweet_text(task.target_handle, task.target_text);
  } else {
    const std::string system = build_system_prompt(author);
    const std::string user = augment_prompt(build_user_prompt(task, pools), scheme);
    std::string text = trim(backend.complete(system, user, params));
    if (text.empty()) text = trim(backend.complete(system, user, params));
    if (text.empty())
      throw BackendError("backend returned empty output twice for agent '" + author.id + "'");
    text = truncate_at_word(text);
    if (task.kind != TweetKind::original && !mentions_handle(text, task.target_handle))
      text = truncate_at_word("@" + task.target_handle + " " + text);
    t.text = std::move(text);
  }
  auto a = extract_artifacts(t.text);
  t.mentions = std::move(a.mentions);
  t.hashtags = std::move(a.hashtags);
  t.urls = std::move(a.urls);
  return t;
}

inline const std::string& select_narrative(const Persona& p, Rng& rng) {
  return p.narratives[rng.below(p.narratives.size())];
}

}  // namespace botforge
