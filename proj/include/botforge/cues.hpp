#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "botforge/error.hpp"
#include "botforge/netgraph.hpp"
#include "botforge/persona.hpp"
#include "botforge/tweet.hpp"

namespace botforge {

// ---------------------------------------------------------------------------
// Tokens

namespace detail {

inline bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

inline std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string lower(std::string_view s) {
  std::string o(s);
  for (auto& c : o) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return o;
}

}  // namespace detail

inline bool is_url_token(std::string_view t) {
  return t.starts_with("http://") || t.starts_with("https://");
}

inline bool is_mention_token(std::string_view t) {
  return t.size() >= 2 && t[0] == '@' && detail::is_word_char(t[1]);
}

inline bool is_hashtag_token(std::string_view t) {
  return t.size() >= 2 && t[0] == '#' && detail::is_word_char(t[1]);
}

/// Strips surrounding ASCII punctuation, keeping a leading '@' or '#'.
inline std::string_view strip_token(std::string_view raw) {
  std::size_t b = 0, e = raw.size();
  while (b < e && detail::is_ascii_punct(raw[b]) && raw[b] != '@' && raw[b] != '#') ++b;
  while (e > b && detail::is_ascii_punct(raw[e - 1])) --e;
  return raw.substr(b, e - b);
}

/// Whitespace tokenization. URL tokens are kept whole.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto raw : detail::split_ws(text)) {
    if (is_url_token(raw)) {
      out.emplace_back(raw);
      continue;
    }
    auto t = strip_token(raw);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

struct Artifacts {
  std::vector<std::string> mentions;
  std::vector<std::string> hashtags;
  std::vector<std::string> urls;
};

inline Artifacts extract_artifacts(std::string_view text) {
  Artifacts a;
  for (auto& t : tokenize(text)) {
    if (is_url_token(t)) a.urls.push_back(t);
    else if (is_mention_token(t)) a.mentions.push_back(t);
    else if (is_hashtag_token(t)) a.hashtags.push_back(t);
  }
  return a;
}

struct MetadataCounts {
  std::size_t mentions = 0;
  std::size_t urls = 0;
  std::size_t hashtags = 0;

  friend bool operator==(const MetadataCounts&, const MetadataCounts&) = default;
};

inline MetadataCounts metadata_cues(std::string_view text) {
  const auto a = extract_artifacts(text);
  return {a.mentions.size(), a.urls.size(), a.hashtags.size()};
}

inline MetadataCounts metadata_cues(const Tweet& t) { return metadata_cues(t.text); }

/// Lowercased tokens that carry words: no mentions, hashtags or URLs.
inline std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) {
    if (is_url_token(t) || t[0] == '@' || t[0] == '#') continue;
    out.push_back(detail::lower(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lexicons

enum class LexiconCategory {
  first_person,
  second_person,
  third_person,
  abusive,
  expletive,
  positive,
  negative
};

inline constexpr std::array<LexiconCategory, 7> kLexiconCategories = {
    LexiconCategory::first_person, LexiconCategory::second_person, LexiconCategory::third_person,
    LexiconCategory::abusive,      LexiconCategory::expletive,     LexiconCategory::positive,
    LexiconCategory::negative};

inline const char* to_string(LexiconCategory c) {
  switch (c) {
    case LexiconCategory::first_person: return "first_person";
    case LexiconCategory::second_person: return "second_person";
    case LexiconCategory::third_person: return "third_person";
    case LexiconCategory::abusive: return "abusive";
    case LexiconCategory::expletive: return "expletive";
    case LexiconCategory::positive: return "positive";
    case LexiconCategory::negative: return "negative";
  }
  return "";
}

/// Case-insensitive term list. Terms are 1-3 space-separated tokens.
class Lexicon {
public:
  Lexicon() = default;

  Lexicon(LexiconCategory category, const std::vector<std::string>& terms) : category_(category) {
    for (const auto& t : terms) add(t);
  }

  LexiconCategory category() const { return category_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  std::size_t max_tokens() const { return max_tokens_; }
  bool contains(const std::string& normalized) const { return terms_.contains(normalized); }

  void add(std::string_view term) {
    const auto parts = detail::split_ws(term);
    if (parts.empty()) return;
    if (parts.size() > 3)
      throw ValidationError("lexicon term '" + std::string(term) + "' has more than 3 tokens");
    std::string norm;
    for (auto p : parts) {
      if (!norm.empty()) norm += ' ';
      norm += detail::lower(p);
    }
    terms_.insert(norm);
    max_tokens_ = std::max(max_tokens_, parts.size());
  }

  /// One term per line; blank lines and lines starting with '#' are skipped.
  static Lexicon parse(LexiconCategory category, const std::string& text) {
    Lexicon lex;
    lex.category_ = category;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      lex.add(line);
    }
    return lex;
  }

private:
  LexiconCategory category_ = LexiconCategory::first_person;
  std::unordered_set<std::string> terms_;
  std::size_t max_tokens_ = 1;
};

/// Longest-match-first, non-overlapping count of lexicon terms among word tokens.
inline std::size_t count_lexicon_terms(const std::vector<std::string>& words, const Lexicon& lex) {
  std::size_t count = 0;
  std::size_t i = 0;
  const std::size_t longest = std::min<std::size_t>(lex.max_tokens(), 3);
  while (i < words.size()) {
    std::size_t matched = 0;
    for (std::size_t n = std::min(longest, words.size() - i); n >= 1; --n) {
      std::string gram = words[i];
      for (std::size_t k = 1; k < n; ++k) gram += ' ' + words[i + k];
      if (lex.contains(gram)) {
        matched = n;
        break;
      }
    }
    if (matched) {
      ++count;
      i += matched;
    } else {
      ++i;
    }
  }
  return count;
}

inline std::size_t count_lexicon_terms(std::string_view text, const Lexicon& lex) {
  return count_lexicon_terms(word_tokens(text), lex);
}

struct LexiconSet {
  std::map<LexiconCategory, Lexicon> by_category;

  const Lexicon& at(LexiconCategory c) const {
    auto it = by_category.find(c);
    if (it == by_category.end())
      throw ValidationError(std::string("lexicon category '") + to_string(c) + "' not loaded");
    return it->second;
  }
};

/// Loads `<category>.txt` for all seven categories from `dir`.
inline LexiconSet load_lexicons(const std::string& dir) {
  LexiconSet set;
  for (auto c : kLexiconCategories) {
    const auto path = (std::filesystem::path(dir) / (std::string(to_string(c)) + ".txt")).string();
    if (!std::filesystem::exists(path))
      throw IoError(std::string("missing lexicon for category '") + to_string(c) + "' (" + path + ")");
    auto lex = Lexicon::parse(c, read_text_file(path));
    if (lex.empty())
      throw ValidationError(std::string("lexicon for category '") + to_string(c) + "' is empty");
    set.by_category.emplace(c, std::move(lex));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Readability

/// Vowel groups (aeiouy) with a silent trailing 'e' dropped when the word
/// already has another group. Minimum 1.
inline int count_syllables(std::string_view word) {
  std::string w;
  for (char c : word)
    if (std::isalpha(static_cast<unsigned char>(c)))
      w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto vowel = [](char c) { return std::string_view("aeiouy").find(c) != std::string_view::npos; };
  int groups = 0;
  bool in_group = false;
  for (char c : w) {
    const bool v = vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  if (groups >= 2 && w.size() >= 2 && w.back() == 'e' && !vowel(w[w.size() - 2])) --groups;
  return std::max(groups, 1);
}

struct ReadabilityCounts {
  int words = 0;
  int sentences = 0;
  int syllables = 0;
};

/// Word, sentence and syllable counts over non-mention/hashtag/URL tokens.
/// A sentence ends at a token whose trailing punctuation holds '.', '!' or '?'.
inline ReadabilityCounts readability_counts(std::string_view text) {
  ReadabilityCounts r;
  bool open = false;
  for (auto raw : detail::split_ws(text)) {
    if (is_url_token(raw)) continue;
    auto tok = strip_token(raw);
    if (!tok.empty() && tok[0] != '@' && tok[0] != '#') {
      ++r.words;
      r.syllables += count_syllables(tok);
      open = true;
    }
    std::size_t tail = raw.size();
    while (tail > 0 && detail::is_ascii_punct(raw[tail - 1])) --tail;
    if (raw.substr(tail).find_first_of(".!?") != std::string_view::npos && open) {
      ++r.sentences;
      open = false;
    }
  }
  if (open) ++r.sentences;
  r.sentences = std::max(r.sentences, 1);
  return r;
}

inline double flesch_kincaid_grade(const ReadabilityCounts& r) {
  return 0.39 * (static_cast<double>(r.words) / r.sentences) +
         11.8 * (static_cast<double>(r.syllables) / r.words) - 15.59;
}

/// Flesch-Kincaid grade / 100, clamped to [0, 1]. Empty text scores 0.
inline double reading_difficulty(std::string_view text) {
  const auto r = readability_counts(text);
  if (r.words == 0) return 0.0;
  return std::clamp(flesch_kincaid_grade(r) / 100.0, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Cue vectors

enum class Cue {
  first_person_pronouns,
  second_person_pronouns,
  third_person_pronouns,
  reading_difficulty,
  abusive_terms,
  expletives,
  negative_sentiment,
  positive_sentiment,
  mentions,
  urls,
  hashtags,
  total_degree,
  in_degree,
  out_degree
};

inline constexpr std::size_t kCueCount = 14;

inline constexpr std::array<Cue, kCueCount> kAllCues = {
    Cue::first_person_pronouns, Cue::second_person_pronouns, Cue::third_person_pronouns,
    Cue::reading_difficulty,    Cue::abusive_terms,          Cue::expletives,
    Cue::negative_sentiment,    Cue::positive_sentiment,     Cue::mentions,
    Cue::urls,                  Cue::hashtags,               Cue::total_degree,
    Cue::in_degree,             Cue::out_degree};

inline const char* cue_name(Cue c) {
  static constexpr const char* names[kCueCount] = {
      "first_person_pronouns", "second_person_pronouns", "third_person_pronouns",
      "reading_difficulty",    "abusive_terms",          "expletives",
      "negative_sentiment",    "positive_sentiment",     "mentions",
      "urls",                  "hashtags",               "total_degree",
      "in_degree",             "out_degree"};
  return names[static_cast<std::size_t>(c)];
}

inline const char* cue_label(Cue c) {
  static constexpr const char* labels[kCueCount] = {
      "1st Person Pronouns", "2nd Person Pronouns", "3rd Person Pronouns",
      "Reading Difficulty",  "Abusive Terms",       "Expletives",
      "Negative Sentiment",  "Positive Sentiment",  "Mentions",
      "URLs",                "Hashtags",            "Total Degree",
      "In Degree",           "Out Degree"};
  return labels[static_cast<std::size_t>(c)];
}

inline std::optional<Cue> cue_from_name(std::string_view name) {
  for (auto c : kAllCues)
    if (name == cue_name(c)) return c;
  return std::nullopt;
}

inline bool is_network_cue(Cue c) {
  return c == Cue::total_degree || c == Cue::in_degree || c == Cue::out_degree;
}

struct CueVector {
  std::array<double, kCueCount> values{};

  double& operator[](Cue c) { return values[static_cast<std::size_t>(c)]; }
  double operator[](Cue c) const { return values[static_cast<std::size_t>(c)]; }

  friend bool operator==(const CueVector&, const CueVector&) = default;
};

/// Text and metadata cues of a single post. Network cues are left at 0.
inline CueVector post_cues(std::string_view text, const LexiconSet& lex) {
  CueVector v;
  const auto words = word_tokens(text);
  v[Cue::first_person_pronouns] = static_cast<double>(count_lexicon_terms(words, lex.at(LexiconCategory::first_person)));
  v[Cue::second_person_pronouns] = static_cast<double>(count_lexicon_terms(words, lex.at(LexiconCategory::second_person)));
  v[Cue::third_person_pronouns] = static_cast<double>(count_lexicon_terms(words, lex.at(LexiconCategory::third_person)));
  v[Cue::reading_difficulty] = reading_difficulty(text);
  v[Cue::abusive_terms] = static_cast<double>(count_lexicon_terms(words, lex.at(LexiconCategory::abusive)));
  v[Cue::expletives] = static_cast<double>(count_lexicon_terms(words, lex.at(LexiconCategory::expletive)));
  v[Cue::negative_sentiment] = static_cast<double>(count_lexicon_terms(words, lex.at(LexiconCategory::negative)));
  v[Cue::positive_sentiment] = static_cast<double>(count_lexicon_terms(words, lex.at(LexiconCategory::positive)));
  const auto m = metadata_cues(text);
  v[Cue::mentions] = static_cast<double>(m.mentions);
  v[Cue::urls] = static_cast<double>(m.urls);
  v[Cue::hashtags] = static_cast<double>(m.hashtags);
  return v;
}

enum class Aggregation {
  per_agent,  // post -> agent mean -> corpus mean
  per_post    // corpus mean pooled over all posts
};

struct CueAggregate {
  std::map<std::string, CueVector> per_agent;  // agents with at least one post
  std::vector<CueVector> per_post;              // in tweet order, network cues 0
  CueVector corpus;
  Aggregation mode = Aggregation::per_agent;
};

/// Averages post cues per agent, then over agents (or pooled per post).
/// Network cues come from the all-communication graph: each agent's own
/// centralities per agent, the population means for the corpus.
inline CueAggregate aggregate_cues(const std::vector<Tweet>& tweets, const CommGraph& graph,
                                   const Population& pop, const LexiconSet& lex,
                                   Aggregation mode = Aggregation::per_agent) {
  if (tweets.empty()) throw ValidationError("cannot aggregate cues of an empty corpus");
  const auto centrality = node_centralities(graph);
  const auto metrics = graph_metrics(graph);

  CueAggregate agg;
  agg.mode = mode;
  std::map<std::string, std::size_t> posts;
  for (const auto& t : tweets) {
    auto idx = pop.index_of(t.author_id);
    if (!idx) throw ValidationError("tweet " + std::to_string(t.id) + ": unknown author '" + t.author_id + "'");
    auto v = post_cues(t.text, lex);
    agg.per_post.push_back(v);
    auto& acc = agg.per_agent[t.author_id];
    for (std::size_t k = 0; k < kCueCount; ++k) acc.values[k] += v.values[k];
    ++posts[t.author_id];
  }
  for (auto& [id, v] : agg.per_agent) {
    const double n = static_cast<double>(posts[id]);
    for (std::size_t k = 0; k < kCueCount; ++k) v.values[k] /= n;
    const auto& c = centrality[*pop.index_of(id)];
    v[Cue::total_degree] = c.total;
    v[Cue::in_degree] = c.in;
    v[Cue::out_degree] = c.out;
  }

  if (mode == Aggregation::per_agent) {
    for (const auto& [id, v] : agg.per_agent)
      for (std::size_t k = 0; k < kCueCount; ++k) agg.corpus.values[k] += v.values[k];
    for (auto& x : agg.corpus.values) x /= static_cast<double>(agg.per_agent.size());
  } else {
    for (const auto& v : agg.per_post)
      for (std::size_t k = 0; k < kCueCount; ++k) agg.corpus.values[k] += v.values[k];
    for (auto& x : agg.corpus.values) x /= static_cast<double>(agg.per_post.size());
  }
  agg.corpus[Cue::total_degree] = metrics.avg_total_degree_centrality;
  agg.corpus[Cue::in_degree] = metrics.avg_in_degree_centrality;
  agg.corpus[Cue::out_degree] = metrics.avg_out_degree_centrality;
  return agg;
}

// ---------------------------------------------------------------------------
// Cue report

struct CueSummary {
  Cue cue;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 when n < 2
  std::size_t n = 0;
};

inline CueSummary summarize_sample(Cue cue, const std::vector<double>& xs) {
  CueSummary s{cue, 0.0, 0.0, xs.size()};
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

/// The comparison sample behind each cue: per-agent means, or per-post
/// values for text cues in pooled mode. Network cues are always per agent.
inline std::vector<double> cue_sample(const CueAggregate& agg, Cue c) {
  std::vector<double> xs;
  if (agg.mode == Aggregation::per_post && !is_network_cue(c)) {
    for (const auto& v : agg.per_post) xs.push_back(v[c]);
  } else {
    for (const auto& [id, v] : agg.per_agent) xs.push_back(v[c]);
  }
  return xs;
}

inline std::vector<CueSummary> cue_report(const CueAggregate& agg) {
  std::vector<CueSummary> rows;
  for (auto c : kAllCues) rows.push_back(summarize_sample(c, cue_sample(agg, c)));
  return rows;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string cue_report_csv(const std::vector<CueSummary>& rows) {
  std::string s = "cue,per_agent_mean,per_agent_std,n_agents\n";
  for (const auto& r : rows)
    s += std::string(cue_name(r.cue)) + "," + format_number(r.mean) + "," + format_number(r.std) +
         "," + std::to_string(r.n) + "\n";
  return s;
}

inline std::vector<CueSummary> parse_cue_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "cue,per_agent_mean,per_agent_std,n_agents")
    throw ValidationError("cue report: unexpected header");
  std::vector<CueSummary> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    const std::string where = "cue report line " + std::to_string(line_no);
    if (f.size() != 4) throw ValidationError(where + ": expected 4 fields");
    auto cue = cue_from_name(f[0]);
    if (!cue) throw ValidationError(where + ": unknown cue '" + f[0] + "'");
    try {
      rows.push_back({*cue, std::stod(f[1]), std::stod(f[2]), static_cast<std::size_t>(std::stoull(f[3]))});
    } catch (const std::logic_error&) {
      throw ValidationError(where + ": bad number");
    }
  }
  return rows;
}

}  // namespace botforge
