#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "botforge/error.hpp"
#include "botforge/persona.hpp"
#include "botforge/rng.hpp"
#include "botforge/tweet.hpp"

namespace botforge {

// ---------------------------------------------------------------------------
// Partner selection

/// Probability of choosing a partner by preferential attachment, the
/// community leader, or uniformly at random.
struct MixingPolicy {
  double p_pa = 1.0;
  double p_leader = 0.0;
  double p_random = 0.0;

  void validate() const {
    for (double p : {p_pa, p_leader, p_random})
      if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("mixing probabilities must lie in [0,1]");
    if (std::abs(p_pa + p_leader + p_random - 1.0) > 1e-9)
      throw ValidationError("mixing probabilities must sum to 1 (got " +
                            std::to_string(p_pa + p_leader + p_random) + ")");
  }

  /// Parses "pa,leader,random", e.g. "0.6,0.3,0.1".
  static MixingPolicy parse(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        parts.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      } catch (const std::logic_error&) {
        throw ValidationError("mixing: '" + item + "' is not a number");
      }
    }
    if (parts.size() != 3) throw ValidationError("mixing needs three comma-separated values");
    MixingPolicy m{parts[0], parts[1], parts[2]};
    m.validate();
    return m;
  }
};

inline constexpr MixingPolicy kPurePa{1.0, 0.0, 0.0};
inline constexpr MixingPolicy kPaWithLeader{0.7, 0.3, 0.0};
inline constexpr MixingPolicy kPaLeaderRandom{0.6, 0.3, 0.1};

/// How the community and narrative clauses combine when deciding who an
/// agent may preferentially attach to.
enum class EligibilityRule { community_or_narrative, community_and_narrative };

/// Interaction counters per agent, updated as edges are committed.
class DegreeState {
public:
  DegreeState() = default;
  explicit DegreeState(std::size_t n) : in_(n, 0), out_(n, 0) {}

  std::size_t size() const { return in_.size(); }
  std::uint64_t in(std::size_t i) const { return in_[i]; }
  std::uint64_t out(std::size_t i) const { return out_[i]; }
  std::uint64_t total(std::size_t i) const { return in_[i] + out_[i]; }
  std::uint64_t interactions() const { return committed_; }

  void commit(std::size_t source, std::size_t target, std::uint64_t count = 1) {
    out_[source] += count;
    in_[target] += count;
    committed_ += count;
  }

  std::vector<std::uint64_t> totals() const {
    std::vector<std::uint64_t> t(size());
    for (std::size_t i = 0; i < size(); ++i) t[i] = total(i);
    return t;
  }

private:
  std::vector<std::uint64_t> in_;
  std::vector<std::uint64_t> out_;
  std::uint64_t committed_ = 0;
};

inline bool shares_narrative(const Persona& a, const Persona& b) {
  for (const auto& n : a.narratives)
    if (std::find(b.narratives.begin(), b.narratives.end(), n) != b.narratives.end()) return true;
  return false;
}

/// Agents `agent` may attach to, ascending by index. Never contains `agent`.
inline std::vector<std::size_t> eligible_candidates(
    std::size_t agent, const Population& pop,
    EligibilityRule rule = EligibilityRule::community_or_narrative) {
  std::vector<std::size_t> out;
  const Persona& me = pop[agent];
  for (std::size_t j = 0; j < pop.size(); ++j) {
    if (j == agent) continue;
    const bool same_community = pop[j].community == me.community;
    const bool same_narrative = shares_narrative(me, pop[j]);
    const bool ok = rule == EligibilityRule::community_or_narrative
                        ? (same_community || same_narrative)
                        : (same_community && same_narrative);
    if (ok) out.push_back(j);
  }
  return out;
}

/// Samples a candidate with probability proportional to total degree + 1.
inline std::size_t pa_select(std::span<const std::size_t> candidates, const DegreeState& degrees,
                             Rng& rng) {
  if (candidates.empty()) throw ValidationError("pa_select: empty candidate set");
  std::uint64_t total = 0;
  for (auto c : candidates) total += degrees.total(c) + 1;
  std::uint64_t ticket = rng.below(total);
  for (auto c : candidates) {
    const std::uint64_t w = degrees.total(c) + 1;
    if (ticket < w) return c;
    ticket -= w;
  }
  return candidates.back();  // unreachable
}

enum class PartnerMode { pa, leader, random };

inline const char* to_string(PartnerMode m) {
  switch (m) {
    case PartnerMode::pa: return "pa";
    case PartnerMode::leader: return "leader";
    case PartnerMode::random: return "random";
  }
  return "pa";
}

struct PartnerChoice {
  std::size_t agent;
  PartnerMode mode;       // mode actually used
  PartnerMode requested;  // mode drawn from the policy
};

inline PartnerMode draw_mode(const MixingPolicy& policy, Rng& rng) {
  const double u = rng.uniform01();
  if (u < policy.p_pa) return PartnerMode::pa;
  if (u < policy.p_pa + policy.p_leader) return PartnerMode::leader;
  return PartnerMode::random;
}

/// Picks an interaction partner. Fallback chain: leader -> pa -> random.
/// `candidates` must be eligible_candidates(agent, pop). Requires pop.size() >= 2.
inline PartnerChoice select_partner(std::size_t agent, const Population& pop,
                                    const MixingPolicy& policy, const DegreeState& degrees,
                                    Rng& rng, std::span<const std::size_t> candidates) {
  if (pop.size() < 2) throw ValidationError("select_partner needs at least 2 agents");
  const PartnerMode requested = draw_mode(policy, rng);
  PartnerMode mode = requested;
  if (mode == PartnerMode::leader) {
    auto leader = pop.leader_of(pop[agent].community);
    if (leader && *leader != agent) return {*leader, PartnerMode::leader, requested};
    mode = PartnerMode::pa;
  }
  if (mode == PartnerMode::pa) {
    if (!candidates.empty()) return {pa_select(candidates, degrees, rng), PartnerMode::pa, requested};
    mode = PartnerMode::random;
  }
  std::size_t pick = rng.below(pop.size() - 1);
  if (pick >= agent) ++pick;
  return {pick, PartnerMode::random, requested};
}

inline PartnerChoice select_partner(std::size_t agent, const Population& pop,
                                    const MixingPolicy& policy, const DegreeState& degrees,
                                    Rng& rng,
                                    EligibilityRule rule = EligibilityRule::community_or_narrative) {
  const auto candidates = eligible_candidates(agent, pop, rule);
  return select_partner(agent, pop, policy, degrees, rng, candidates);
}

struct InteractionCounts {
  int posts = 0;
  int retweets = 0;
  int replies = 0;
  int quotes = 0;
};

/// Uniform inclusive draws within the persona's bounds, in field order.
inline InteractionCounts draw_interaction_counts(const Persona& p, Rng& rng) {
  auto draw = [&](const CountRange& r) { return static_cast<int>(rng.between(r.lo, r.hi)); };
  InteractionCounts c;
  c.posts = draw(p.posts_per_run);
  c.retweets = draw(p.retweets_per_run);
  c.replies = draw(p.replies_per_run);
  c.quotes = draw(p.quotes_per_run);
  return c;
}

// ---------------------------------------------------------------------------
// All-communication graph

struct EdgeStats {
  std::uint64_t weight = 0;
  std::uint64_t retweets = 0;
  std::uint64_t quotes = 0;
  std::uint64_t replies = 0;

  friend bool operator==(const EdgeStats&, const EdgeStats&) = default;
};

/// Directed weighted graph over all agents; isolates are kept as nodes.
struct CommGraph {
  std::vector<std::string> node_ids;
  std::vector<std::string> communities;
  std::map<std::pair<std::size_t, std::size_t>, EdgeStats> edges;

  std::size_t node_count() const { return node_ids.size(); }

  void add(std::size_t source, std::size_t target, TweetKind kind, std::uint64_t count = 1) {
    if (source == target) throw ValidationError("self-loop on '" + node_ids[source] + "'");
    auto& e = edges[{source, target}];
    e.weight += count;
    switch (kind) {
      case TweetKind::retweet: e.retweets += count; break;
      case TweetKind::quote: e.quotes += count; break;
      case TweetKind::reply: e.replies += count; break;
      case TweetKind::original: break;
    }
  }
};

inline CommGraph empty_graph(const Population& pop) {
  CommGraph g;
  for (const auto& p : pop.personas()) {
    g.node_ids.push_back(p.id);
    g.communities.push_back(p.community);
  }
  return g;
}

/// Aggregates every retweet, quote and reply into author -> target edges.
inline CommGraph build_comm_graph(const std::vector<Tweet>& tweets, const Population& pop) {
  CommGraph g = empty_graph(pop);
  for (const auto& t : tweets) {
    auto author = pop.index_of(t.author_id);
    if (!author) throw ValidationError("tweet " + std::to_string(t.id) + ": unknown author '" + t.author_id + "'");
    if (!t.is_interaction()) continue;
    if (!t.target_agent_id)
      throw ValidationError("tweet " + std::to_string(t.id) + ": interaction without target agent");
    auto target = pop.index_of(*t.target_agent_id);
    if (!target)
      throw ValidationError("tweet " + std::to_string(t.id) + ": unknown target '" + *t.target_agent_id + "'");
    g.add(*author, *target, t.kind);
  }
  return g;
}

struct NodeCentrality {
  double in = 0.0;
  double out = 0.0;
  double total = 0.0;
};

struct GraphMetrics {
  double density = 0.0;
  double avg_total_degree_centrality = 0.0;
  double avg_in_degree_centrality = 0.0;
  double avg_out_degree_centrality = 0.0;
  // Interaction weight over possible directed edges. Not bounded by 1.
  double weighted_density = 0.0;
};

/// Degree centralities over distinct neighbors, normalized by n - 1.
inline std::vector<NodeCentrality> node_centralities(const CommGraph& g) {
  const std::size_t n = g.node_count();
  if (n < 2) throw ValidationError("graph metrics need at least 2 nodes");
  std::vector<std::uint64_t> in(n, 0), out(n, 0);
  for (const auto& [key, e] : g.edges) {
    ++out[key.first];
    ++in[key.second];
  }
  const double norm = static_cast<double>(n - 1);
  std::vector<NodeCentrality> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i].in = static_cast<double>(in[i]) / norm;
    c[i].out = static_cast<double>(out[i]) / norm;
    c[i].total = static_cast<double>(in[i] + out[i]) / (2.0 * norm);
  }
  return c;
}

inline GraphMetrics graph_metrics(const CommGraph& g) {
  const auto c = node_centralities(g);
  const double n = static_cast<double>(g.node_count());
  GraphMetrics m;
  m.density = static_cast<double>(g.edges.size()) / (n * (n - 1.0));
  std::uint64_t weight = 0;
  for (const auto& [key, e] : g.edges) weight += e.weight;
  m.weighted_density = static_cast<double>(weight) / (n * (n - 1.0));
  for (const auto& x : c) {
    m.avg_in_degree_centrality += x.in;
    m.avg_out_degree_centrality += x.out;
    m.avg_total_degree_centrality += x.total;
  }
  m.avg_in_degree_centrality /= n;
  m.avg_out_degree_centrality /= n;
  m.avg_total_degree_centrality /= n;
  return m;
}

/// graph_metrics, or all zeros for graphs with fewer than 2 nodes.
inline GraphMetrics graph_metrics_or_empty(const CommGraph& g) {
  return g.node_count() < 2 ? GraphMetrics{} : graph_metrics(g);
}

/// Per-agent interaction counts implied by a graph's edge weights.
inline DegreeState degrees_from_graph(const CommGraph& g) {
  DegreeState d(g.node_count());
  for (const auto& [key, e] : g.edges) d.commit(key.first, key.second, e.weight);
  return d;
}

// ---------------------------------------------------------------------------
// Export

inline std::string graph_to_csv(const CommGraph& g) {
  std::string s = "source,target,weight,retweets,quotes,replies\n";
  for (const auto& [key, e] : g.edges) {
    s += g.node_ids[key.first] + "," + g.node_ids[key.second] + "," + std::to_string(e.weight) +
         "," + std::to_string(e.retweets) + "," + std::to_string(e.quotes) + "," +
         std::to_string(e.replies) + "\n";
  }
  return s;
}

/// Reads an edge list written by graph_to_csv onto the nodes of `pop`.
inline CommGraph graph_from_csv(const std::string& csv, const Population& pop) {
  CommGraph g = empty_graph(pop);
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "source,target,weight,retweets,quotes,replies")
    throw ValidationError("graph.csv: unexpected header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw ValidationError("graph.csv line " + std::to_string(line_no) + ": expected 6 fields");
    auto s = pop.index_of(f[0]);
    auto t = pop.index_of(f[1]);
    if (!s || !t) throw ValidationError("graph.csv line " + std::to_string(line_no) + ": unknown agent");
    EdgeStats e;
    try {
      e = {std::stoull(f[2]), std::stoull(f[3]), std::stoull(f[4]), std::stoull(f[5])};
    } catch (const std::logic_error&) {
      throw ValidationError("graph.csv line " + std::to_string(line_no) + ": bad number");
    }
    g.edges[{*s, *t}] = e;
  }
  return g;
}

namespace detail {
inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      case '\'': o += "&apos;"; break;
      default: o += c;
    }
  }
  return o;
}
}  // namespace detail

inline std::string graph_to_graphml(const CommGraph& g) {
  std::string s =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      "  <key id=\"community\" for=\"node\" attr.name=\"community\" attr.type=\"string\"/>\n"
      "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n"
      "  <graph id=\"all_communication\" edgedefault=\"directed\">\n";
  for (std::size_t i = 0; i < g.node_count(); ++i)
    s += "    <node id=\"" + detail::xml_escape(g.node_ids[i]) + "\"><data key=\"community\">" +
         detail::xml_escape(g.communities[i]) + "</data></node>\n";
  for (const auto& [key, e] : g.edges)
    s += "    <edge source=\"" + detail::xml_escape(g.node_ids[key.first]) + "\" target=\"" +
         detail::xml_escape(g.node_ids[key.second]) + "\"><data key=\"weight\">" +
         std::to_string(e.weight) + "</data></edge>\n";
  s += "  </graph>\n</graphml>\n";
  return s;
}

/// Gini coefficient of non-negative values; 0 for empty or all-zero input.
template <typename T>
double gini(std::span<const T> values) {
  if (values.empty()) return 0.0;
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  if (sum <= 0.0) return 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) weighted += static_cast<double>(i + 1) * x[i];
  const double n = static_cast<double>(x.size());
  return 2.0 * weighted / (n * sum) - (n + 1.0) / n;
}

}  // namespace botforge
