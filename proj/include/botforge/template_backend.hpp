#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "botforge/backend.hpp"
#include "botforge/content.hpp"
#include "botforge/persona.hpp"
#include "botforge/rng.hpp"

namespace botforge {

enum class TemplateTone {
  neutral,   // ignores prompt augmentations
  steerable  // adds a cue-bearing clause for each augmentation it recognizes
};

/// Offline stand-in for an LLM: a pure function of (system text, user text,
/// seed). Fills canned sentence templates from the persona's narratives and
/// the hashtag/URL pool named in the prompt, and answers persona-expansion
/// requests with variants of the few-shot examples.
class TemplateBackend final : public ContentBackend {
public:
  explicit TemplateBackend(std::uint64_t seed, TemplateTone tone = TemplateTone::steerable)
      : seed_(seed), tone_(tone) {}

  std::string name() const override { return "template"; }

  std::string complete(const std::string& system_text, const std::string& user_text,
                       const GenerationParams&) override {
    Rng rng(splitmix64(seed_ ^ fnv1a64(user_text, fnv1a64(system_text))));
    if (user_text.starts_with("Generate exactly ")) return expand(user_text, rng);

    const auto narratives = narratives_from_system(system_text);
    const auto pool = pool_from_user(user_text);
    const std::string first_line = user_text.substr(0, user_text.find('\n'));

    std::string body;
    if (first_line.starts_with(kOriginalPrefix)) {
      body = fill(pick(rng, kOriginalTemplates), first_line.substr(kOriginalPrefix.size()), "", pool, rng);
    } else {
      const std::string handle = handle_after(first_line);
      const std::string narrative = narratives.empty() ? "the contest" : pick(rng, narratives);
      if (first_line.starts_with(kQuotePrefix))
        body = fill(pick(rng, kQuoteTemplates), narrative, handle, pool, rng);
      else
        body = fill(pick(rng, kReplyTemplates), narrative, handle, pool, rng);
    }
    if (tone_ == TemplateTone::steerable) body += steering_clauses(user_text);
    return body;
  }

private:
  static constexpr std::array<std::string_view, 6> kOriginalTemplates = {
      "{n} {h}",
      "Update on the contest: {n} {h} {u}",
      "Sharing this again. {n} {h}",
      "{n} Read more: {u}",
      "My view on this year: {n} {h}",
      "Notes from the AuraSight week. {n} {h} {u}",
  };
  static constexpr std::array<std::string_view, 4> kReplyTemplates = {
      "{@} Noted. {n}",
      "{@} We keep coming back to this. {n} {h}",
      "{@} Have you seen this? {n} {u}",
      "{@} Here is the other side. {n}",
  };
  static constexpr std::array<std::string_view, 3> kQuoteTemplates = {
      "{n} {@} {h}",
      "Adding context for {@}: {n}",
      "This thread from {@} matters. {n} {u}",
  };

  template <typename C>
  static auto pick(Rng& rng, const C& options) -> std::string {
    return std::string(options[rng.below(options.size())]);
  }

  static std::string fill(std::string tpl, const std::string& narrative, const std::string& handle,
                          const Pools& pool, Rng& rng) {
    auto replace = [&](std::string_view key, const std::string& value) {
      for (auto pos = tpl.find(key); pos != std::string::npos; pos = tpl.find(key, pos + value.size()))
        tpl.replace(pos, key.size(), value);
    };
    replace("{@}", "@" + handle);
    replace("{n}", narrative);
    replace("{h}", pool.hashtags.empty() ? std::string() : pick(rng, pool.hashtags));
    replace("{u}", pool.urls.empty() ? std::string() : pick(rng, pool.urls));
    std::string out;
    for (char c : tpl)
      if (c != ' ' || (!out.empty() && out.back() != ' ')) out += c;
    return trim(out);
  }

  static std::vector<std::string> narratives_from_system(const std::string& system) {
    static constexpr std::string_view kMarker = "following narratives ";
    std::vector<std::string> out;
    auto pos = system.find(kMarker);
    if (pos == std::string::npos) return out;
    std::string list = system.substr(pos + kMarker.size());
    if (!list.empty() && list.back() == '.') list.pop_back();
    std::size_t start = 0;
    while (start <= list.size()) {
      auto end = list.find("; ", start);
      out.push_back(list.substr(start, end == std::string::npos ? std::string::npos : end - start));
      if (end == std::string::npos) break;
      start = end + 2;
    }
    return out;
  }

  static Pools pool_from_user(const std::string& user) {
    Pools p;
    auto pos = user.find(kPoolPrefix);
    if (pos == std::string::npos) return p;
    auto end = user.find('\n', pos);
    std::string line = user.substr(pos + kPoolPrefix.size(), end == std::string::npos ? std::string::npos : end - pos - kPoolPrefix.size());
    for (auto tok : detail::split_ws(line)) {
      if (is_url_token(tok)) p.urls.emplace_back(tok);
      else if (is_hashtag_token(tok)) p.hashtags.emplace_back(tok);
    }
    return p;
  }

  static std::string handle_after(const std::string& line) {
    auto at = line.find('@');
    if (at == std::string::npos) return "someone";
    auto end = at + 1;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end])) && line[end] != '.') ++end;
    return line.substr(at + 1, end - at - 1);
  }

  // One clause per recognized augmentation, canonical order.
  static std::string steering_clauses(const std::string& user) {
    static const std::array<std::string, 5> clauses = {
        " Considering the organizational complexities, the international committee's deliberations "
        "remain extraordinarily complicated.",
        " Those trolls are pathetic idiots.",
        " What the hell, damn it.",
        " This is awful, disappointing and sad.",
        " Great news, wonderful and amazing, love it.",
    };
    std::string out;
    for (std::size_t i = 0; i < kSteerableCues.size(); ++i) {
      for (auto level : {PromptLevel::guidelines, PromptLevel::examples, PromptLevel::targets}) {
        if (user.find("\n" + augmentation_text(kSteerableCues[i], level)) != std::string::npos) {
          out += clauses[i];
          break;
        }
      }
    }
    return out;
  }

  static std::string expand(const std::string& user, Rng& rng) {
    static const std::regex count_re(R"(^Generate exactly (\d+) new persona records)");
    static const std::regex prefix_re("id prefix \"([^\"]*)\"");
    std::smatch m;
    std::size_t count = 0;
    if (std::regex_search(user, m, count_re)) count = std::stoul(m[1]);
    std::string prefix = "gen-";
    if (std::regex_search(user, m, prefix_re)) prefix = m[1];

    const auto open = user.find("```json\n");
    const auto close = user.find("\n```", open == std::string::npos ? 0 : open + 8);
    nlohmann::json shots = nlohmann::json::array();
    if (open != std::string::npos && close != std::string::npos)
      shots = nlohmann::json::parse(user.substr(open + 8, close - open - 8), nullptr, false);
    if (!shots.is_array() || shots.empty())
      return "I could not find any example personas to work from.";

    static constexpr std::array<std::string_view, 12> kSyllables = {
        "ka", "lo", "mi", "ra", "ten", "vo", "sel", "dra", "ni", "pa", "zu", "rek"};
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < count; ++i) {
      const auto& base = shots[rng.below(shots.size())];
      std::string handle;
      for (int s = 0; s < 3; ++s) handle += kSyllables[rng.below(kSyllables.size())];
      handle += "_" + std::to_string(rng.below(1000));
      nlohmann::ordered_json p;
      p["id"] = prefix + std::to_string(i);
      p["display_name"] = handle;
      p["community"] = base.at("community");
      p["narratives"] = base.at("narratives");
      p["stance"] = base.at("stance");
      p["posts_per_run"] = base.at("posts_per_run");
      p["retweets_per_run"] = base.at("retweets_per_run");
      p["replies_per_run"] = base.at("replies_per_run");
      p["quotes_per_run"] = base.contains("quotes_per_run") ? base.at("quotes_per_run")
                                                            : nlohmann::json::array({0, 2});
      p["is_leader"] = false;
      out.push_back(std::move(p));
    }
    return "```json\n" + out.dump(2) + "\n```";
  }

  std::uint64_t seed_;
  TemplateTone tone_;
};

}  // namespace botforge
