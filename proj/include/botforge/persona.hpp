#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "botforge/backend.hpp"
#include "botforge/error.hpp"
#include "botforge/rng.hpp"

namespace botforge {

enum class Stance { support, oppose, neutral };
enum class Origin { manual, generated };

inline const char* to_string(Stance s) {
  switch (s) {
    case Stance::support: return "support";
    case Stance::oppose: return "oppose";
    case Stance::neutral: return "neutral";
  }
  return "neutral";
}

inline const char* to_string(Origin o) { return o == Origin::manual ? "manual" : "generated"; }

/// Closed integer range [lo, hi].
struct CountRange {
  int lo = 0;
  int hi = 0;

  bool valid() const { return 0 <= lo && lo <= hi; }
  bool contains(int v) const { return lo <= v && v <= hi; }
  friend bool operator==(const CountRange&, const CountRange&) = default;
};

struct Persona {
  std::string id;
  std::string display_name;
  std::string community;
  std::vector<std::string> narratives;
  Stance stance = Stance::neutral;
  CountRange posts_per_run{3, 10};
  CountRange retweets_per_run{2, 5};
  CountRange replies_per_run{1, 5};
  CountRange quotes_per_run{0, 2};
  bool is_leader = false;
  Origin origin = Origin::manual;

  /// Name used after '@' in mentions; whitespace becomes '_'.
  std::string handle() const {
    std::string h = display_name;
    std::replace_if(h.begin(), h.end(), [](unsigned char c) { return std::isspace(c) != 0; }, '_');
    return h;
  }

  friend bool operator==(const Persona&, const Persona&) = default;
};

/// Agents plus community and leader indexes. Indexes are positions in personas().
class Population {
public:
  Population() = default;

  explicit Population(std::vector<Persona> personas) : personas_(std::move(personas)) {
    for (std::size_t i = 0; i < personas_.size(); ++i) {
      const auto& p = personas_[i];
      by_id_.emplace(p.id, i);
      communities_[p.community].push_back(i);
      if (p.is_leader) leaders_.emplace(p.community, i);  // first leader wins
    }
  }

  const std::vector<Persona>& personas() const { return personas_; }
  std::size_t size() const { return personas_.size(); }
  bool empty() const { return personas_.empty(); }
  const Persona& operator[](std::size_t i) const { return personas_[i]; }

  std::optional<std::size_t> index_of(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, std::vector<std::size_t>>& communities() const {
    return communities_;
  }

  std::optional<std::size_t> leader_of(const std::string& community) const {
    auto it = leaders_.find(community);
    if (it == leaders_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Population& a, const Population& b) {
    return a.personas_ == b.personas_;
  }

private:
  std::vector<Persona> personas_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> communities_;
  std::map<std::string, std::size_t> leaders_;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  enum class Kind { empty_population, duplicate_id, duplicate_leader, invalid_field };
  Kind kind;
  std::string path;
  std::string message;
};

inline std::vector<Violation> validate_persona(const Persona& p, const std::string& path) {
  std::vector<Violation> out;
  auto bad = [&](const std::string& field, const std::string& msg) {
    out.push_back({Violation::Kind::invalid_field, path + "." + field, msg});
  };
  if (p.id.empty()) bad("id", "must be non-empty");
  if (p.community.empty()) bad("community", "must be non-empty");
  if (p.narratives.empty()) bad("narratives", "must be non-empty");
  for (std::size_t i = 0; i < p.narratives.size(); ++i)
    if (p.narratives[i].empty()) bad("narratives[" + std::to_string(i) + "]", "must be non-empty");
  const std::pair<const char*, CountRange> ranges[] = {{"posts_per_run", p.posts_per_run},
                                                       {"retweets_per_run", p.retweets_per_run},
                                                       {"replies_per_run", p.replies_per_run},
                                                       {"quotes_per_run", p.quotes_per_run}};
  for (const auto& [name, r] : ranges)
    if (!r.valid())
      bad(name, "range must satisfy 0 <= lo <= hi, got [" + std::to_string(r.lo) + "," +
                    std::to_string(r.hi) + "]");
  return out;
}

/// Lists every violation; an empty report means the population is valid.
inline std::vector<Violation> validate_population(const Population& pop) {
  std::vector<Violation> out;
  if (pop.empty()) {
    out.push_back({Violation::Kind::empty_population, "", "population must be non-empty"});
    return out;
  }
  std::set<std::string> ids;
  std::map<std::string, std::string> leader_by_community;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto& p = pop[i];
    const std::string path = "[" + std::to_string(i) + "]";
    auto field = validate_persona(p, path);
    out.insert(out.end(), field.begin(), field.end());
    if (!ids.insert(p.id).second)
      out.push_back({Violation::Kind::duplicate_id, path + ".id", "duplicate id '" + p.id + "'"});
    if (p.is_leader) {
      auto [it, fresh] = leader_by_community.emplace(p.community, p.id);
      if (!fresh)
        out.push_back({Violation::Kind::duplicate_leader, path + ".is_leader",
                       "duplicate leader in community '" + p.community + "' ('" + it->second +
                           "' and '" + p.id + "')"});
    }
  }
  return out;
}

inline std::string summarize(const std::vector<Violation>& violations) {
  std::string s;
  for (const auto& v : violations) {
    if (!s.empty()) s += "; ";
    s += v.path.empty() ? v.message : v.path + ": " + v.message;
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON document

namespace detail {

inline const std::set<std::string>& persona_keys() {
  static const std::set<std::string> keys = {
      "id",           "display_name",     "community",       "narratives",
      "stance",       "posts_per_run",    "retweets_per_run", "replies_per_run",
      "quotes_per_run", "is_leader",      "origin"};
  return keys;
}

[[noreturn]] inline void schema_error(const std::string& path, const std::string& msg,
                                      const nlohmann::json& value) {
  throw ValidationError("schema violation at " + path + ": " + msg + " (got " + value.dump() + ")");
}

inline std::string required_string(const nlohmann::json& obj, const char* key,
                                   const std::string& path) {
  if (!obj.contains(key)) schema_error(path + "." + key, "missing required key", nullptr);
  const auto& v = obj.at(key);
  if (!v.is_string()) schema_error(path + "." + key, "expected string", v);
  return v.get<std::string>();
}

inline CountRange range_field(const nlohmann::json& obj, const char* key, const std::string& path,
                              std::optional<CountRange> fallback) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    schema_error(path + "." + key, "missing required key", nullptr);
  }
  const auto& v = obj.at(key);
  const std::string where = path + "." + key;
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    schema_error(where, "expected [lo, hi] integer pair", v);
  CountRange r{v[0].get<int>(), v[1].get<int>()};
  if (!r.valid()) schema_error(where, "range must satisfy 0 <= lo <= hi", v);
  return r;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const Persona& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["display_name"] = p.display_name;
  j["community"] = p.community;
  j["narratives"] = p.narratives;
  j["stance"] = to_string(p.stance);
  j["posts_per_run"] = {p.posts_per_run.lo, p.posts_per_run.hi};
  j["retweets_per_run"] = {p.retweets_per_run.lo, p.retweets_per_run.hi};
  j["replies_per_run"] = {p.replies_per_run.lo, p.replies_per_run.hi};
  j["quotes_per_run"] = {p.quotes_per_run.lo, p.quotes_per_run.hi};
  j["is_leader"] = p.is_leader;
  if (p.origin == Origin::generated) j["origin"] = "generated";
  return j;
}

/// Parses one persona object. `path` prefixes error locations.
inline Persona persona_from_json(const nlohmann::json& obj, const std::string& path) {
  if (!obj.is_object()) detail::schema_error(path, "expected object", obj);
  for (const auto& [key, value] : obj.items())
    if (!detail::persona_keys().contains(key))
      detail::schema_error(path + "." + key, "unknown key", value);

  Persona p;
  p.id = detail::required_string(obj, "id", path);
  if (p.id.empty()) detail::schema_error(path + ".id", "must be non-empty", obj.at("id"));
  p.display_name = detail::required_string(obj, "display_name", path);
  p.community = detail::required_string(obj, "community", path);
  if (p.community.empty())
    detail::schema_error(path + ".community", "must be non-empty", obj.at("community"));

  if (!obj.contains("narratives"))
    detail::schema_error(path + ".narratives", "missing required key", nullptr);
  const auto& narr = obj.at("narratives");
  if (!narr.is_array() || narr.empty())
    detail::schema_error(path + ".narratives", "expected non-empty array of strings", narr);
  for (std::size_t i = 0; i < narr.size(); ++i) {
    if (!narr[i].is_string() || narr[i].get<std::string>().empty())
      detail::schema_error(path + ".narratives[" + std::to_string(i) + "]",
                           "expected non-empty string", narr[i]);
    p.narratives.push_back(narr[i].get<std::string>());
  }

  const std::string stance = detail::required_string(obj, "stance", path);
  if (stance == "support") p.stance = Stance::support;
  else if (stance == "oppose") p.stance = Stance::oppose;
  else if (stance == "neutral") p.stance = Stance::neutral;
  else detail::schema_error(path + ".stance", "expected support|oppose|neutral", obj.at("stance"));

  p.posts_per_run = detail::range_field(obj, "posts_per_run", path, std::nullopt);
  p.retweets_per_run = detail::range_field(obj, "retweets_per_run", path, std::nullopt);
  p.replies_per_run = detail::range_field(obj, "replies_per_run", path, std::nullopt);
  p.quotes_per_run = detail::range_field(obj, "quotes_per_run", path, CountRange{0, 2});

  if (obj.contains("is_leader")) {
    if (!obj.at("is_leader").is_boolean())
      detail::schema_error(path + ".is_leader", "expected boolean", obj.at("is_leader"));
    p.is_leader = obj.at("is_leader").get<bool>();
  }
  if (obj.contains("origin")) {
    const auto& o = obj.at("origin");
    if (o == "manual") p.origin = Origin::manual;
    else if (o == "generated") p.origin = Origin::generated;
    else detail::schema_error(path + ".origin", "expected manual|generated", o);
  }
  return p;
}

inline std::string serialize_population(const Population& pop) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : pop.personas()) arr.push_back(to_json(p));
  return arr.dump(2) + "\n";
}

/// Parses and validates a persona document held in memory.
inline Population parse_population(const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(source + ": malformed JSON: " + e.what());
  }
  if (!doc.is_array()) detail::schema_error(source, "top level must be an array", nullptr);
  std::vector<Persona> personas;
  personas.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i)
    personas.push_back(persona_from_json(doc[i], "[" + std::to_string(i) + "]"));
  Population pop(std::move(personas));
  if (auto v = validate_population(pop); !v.empty())
    throw ValidationError(source + ": " + summarize(v));
  return pop;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

/// Loads a persona document, honoring an optional per-record `origin` key.
inline Population load_population(const std::string& path) {
  return parse_population(read_text_file(path), path);
}

/// Loads the hand-built seed personas; every record is marked manual.
inline Population load_seed_personas(const std::string& path) {
  Population loaded = load_population(path);
  std::vector<Persona> personas = loaded.personas();
  for (auto& p : personas) p.origin = Origin::manual;
  return Population(std::move(personas));
}

inline void save_population(const Population& pop, const std::string& path) {
  write_text_file(path, serialize_population(pop));
}

// ---------------------------------------------------------------------------
// Generative expansion

struct ExpansionOptions {
  std::uint64_t seed = 0;
  std::size_t batch_size = 10;
  std::size_t few_shot = 5;
  std::size_t max_rejections = 50;  // dropped records tolerated before failing
  GenerationParams params;
};

inline constexpr const char* kExpansionSystemPrompt =
    "You design social media personas for an agent-based simulation of an online community.";

/// User prompt for one expansion batch. The first line is machine-readable.
inline std::string expansion_prompt(std::size_t count, const std::string& id_prefix,
                                    const std::vector<Persona>& examples) {
  nlohmann::ordered_json shots = nlohmann::ordered_json::array();
  for (const auto& p : examples) shots.push_back(to_json(p));
  std::string s;
  s += "Generate exactly " + std::to_string(count) + " new persona records.\n";
  s += "Use the id prefix \"" + id_prefix + "\" followed by a sequence number for every id.\n";
  s += "Respond with only a JSON array of objects with exactly these keys: id, display_name, "
       "community, narratives, stance, posts_per_run, retweets_per_run, replies_per_run, "
       "quotes_per_run, is_leader.\n";
  s += "stance is one of support, oppose, neutral. Ranges are [lo, hi] integer pairs. "
       "is_leader must be false. Reuse the communities of the examples and write narratives in "
       "the same style.\n";
  s += "Examples:\n```json\n" + shots.dump(2) + "\n```\n";
  return s;
}

/// Extracts the JSON array of persona records from backend output.
/// Tolerates code fences and surrounding prose.
inline nlohmann::json parse_persona_records(const std::string& raw) {
  const auto open = raw.find('[');
  const auto close = raw.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw BackendParseError("backend output contains no JSON array of persona records", raw);
  try {
    auto doc = nlohmann::json::parse(raw.substr(open, close - open + 1));
    if (!doc.is_array()) throw BackendParseError("backend output is not a JSON array", raw);
    return doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendParseError(std::string("unparseable persona records: ") + e.what(), raw);
  }
}

/// Grows `seed` to exactly `target_count` personas using the backend.
/// Seed personas are kept verbatim and first; generated ones follow in batch order.
inline Population expand_personas(const Population& seed, std::size_t target_count,
                                  ContentBackend& backend, const ExpansionOptions& opt = {}) {
  if (seed.empty()) throw ValidationError("population must be non-empty");
  if (target_count < seed.size())
    throw ValidationError("target below seed size (" + std::to_string(target_count) + " < " +
                          std::to_string(seed.size()) + ")");
  if (target_count == seed.size()) return seed;

  std::vector<Persona> out = seed.personas();
  std::set<std::string> ids;
  std::set<std::string> led;
  for (const auto& p : out) {
    ids.insert(p.id);
    if (p.is_leader) led.insert(p.community);
  }

  std::size_t rejected = 0;
  std::vector<std::string> reasons;
  for (std::size_t batch = 0; out.size() < target_count; ++batch) {
    const std::size_t need = std::min(opt.batch_size, target_count - out.size());
    Rng rng = Rng::derive(opt.seed, "expand", batch);

    // Partial Fisher-Yates over seed indices for the few-shot sample.
    std::vector<std::size_t> idx(seed.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const std::size_t k = std::min(opt.few_shot, idx.size());
    std::vector<Persona> shots;
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      shots.push_back(seed[idx[i]]);
    }

    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "gen-%04zu-", batch);
    const std::string raw =
        backend.complete(kExpansionSystemPrompt, expansion_prompt(need, prefix, shots), opt.params);
    const auto records = parse_persona_records(raw);

    std::size_t accepted = 0;
    for (std::size_t i = 0; i < records.size() && accepted < need; ++i) {
      const std::string path = "batch " + std::to_string(batch) + "[" + std::to_string(i) + "]";
      try {
        Persona p = persona_from_json(records[i], path);
        p.origin = Origin::generated;
        if (ids.contains(p.id)) throw ValidationError(path + ".id: duplicate id '" + p.id + "'");
        if (p.is_leader && led.contains(p.community))
          throw ValidationError(path + ".is_leader: duplicate leader in community '" +
                                p.community + "'");
        if (auto v = validate_persona(p, path); !v.empty()) throw ValidationError(summarize(v));
        ids.insert(p.id);
        if (p.is_leader) led.insert(p.community);
        out.push_back(std::move(p));
        ++accepted;
      } catch (const ValidationError& e) {
        reasons.emplace_back(e.what());
      }
    }
    rejected += need - accepted;
    if (rejected > opt.max_rejections) {
      std::string msg = "persona expansion failed: " + std::to_string(rejected) +
                        " generated records dropped (cap " + std::to_string(opt.max_rejections) +
                        ")";
      for (std::size_t i = 0; i < std::min<std::size_t>(reasons.size(), 5); ++i)
        msg += "\n  " + reasons[i];
      throw BackendError(msg);
    }
  }
  return Population(std::move(out));
}

}  // namespace botforge
