#include <gtest/gtest.h>

#include <map>

#include "botforge/backends.hpp"
#include "botforge/output.hpp"
#include "botforge/simcore.hpp"
#include "test_support.hpp"

using namespace botforge;
using testing_support::make_persona;

namespace {

const Population& seed_pop() {
  static const Population pop = load_seed_personas(testing_support::data_path("personas/aurasight_seed.json"));
  return pop;
}
const Pools& pools() {
  static const Pools p = load_pools(testing_support::data_path("pools.json"));
  return p;
}

ScenarioConfig config(std::uint64_t seed = 42, MixingPolicy mixing = kPurePa) {
  ScenarioConfig c;
  c.seed = seed;
  c.mixing = mixing;
  return c;
}

SimulationResult simulate(const ScenarioConfig& cfg, const Population& pop = seed_pop()) {
  auto backend = make_backend(cfg);
  return run_simulation(cfg, pop, pools(), *backend);
}

// Fails on the n-th call.
class FailingBackend final : public ContentBackend {
public:
  FailingBackend(std::size_t fail_at, std::uint64_t seed) : fail_at_(fail_at), inner_(seed) {}
  std::string name() const override { return "failing"; }
  std::string complete(const std::string& s, const std::string& u, const GenerationParams& p) override {
    if (calls_++ == fail_at_) throw BackendError("injected failure");
    return inner_.complete(s, u, p);
  }

private:
  std::size_t fail_at_;
  std::size_t calls_ = 0;
  TemplateBackend inner_;
};

}  // namespace

TEST(Simulation, DeterministicAcrossCallsAndConcurrency) {
  auto a = simulate(config(7, kPaLeaderRandom));
  auto b = simulate(config(7, kPaLeaderRandom));
  EXPECT_EQ(tweets_to_jsonl(a.tweets), tweets_to_jsonl(b.tweets));
  EXPECT_EQ(graph_to_csv(a.graph), graph_to_csv(b.graph));
  auto cfg = config(7, kPaLeaderRandom);
  cfg.max_in_flight = 4;
  auto c = simulate(cfg);
  EXPECT_EQ(tweets_to_jsonl(a.tweets), tweets_to_jsonl(c.tweets));
  EXPECT_EQ(a.log, c.log);
  auto d = simulate(config(8, kPaLeaderRandom));
  EXPECT_NE(tweets_to_jsonl(a.tweets), tweets_to_jsonl(d.tweets));
}

TEST(Simulation, BoundsArtifactsAndIdOrder) {
  auto r = simulate(config(11, kPaWithLeader));
  const auto& pop = seed_pop();
  std::map<std::string, std::map<TweetKind, int>> per_agent;
  std::map<std::uint64_t, const Tweet*> by_id;
  for (std::size_t i = 0; i < r.tweets.size(); ++i) {
    const auto& t = r.tweets[i];
    EXPECT_EQ(t.id, i);
    by_id[t.id] = &t;
    ++per_agent[t.author_id][t.kind];
  }
  for (const auto& p : pop.personas()) {
    auto& k = per_agent[p.id];
    EXPECT_TRUE(p.posts_per_run.contains(k[TweetKind::original])) << p.id;
    EXPECT_TRUE(p.retweets_per_run.contains(k[TweetKind::retweet])) << p.id;
    EXPECT_TRUE(p.quotes_per_run.contains(k[TweetKind::quote])) << p.id;
    EXPECT_TRUE(p.replies_per_run.contains(k[TweetKind::reply])) << p.id;
  }
  for (const auto& t : r.tweets) {
    EXPECT_LE(utf8_length(t.text), kMaxTweetChars + (t.kind == TweetKind::retweet ? 300 : 0));
    if (t.kind == TweetKind::original) continue;
    ASSERT_TRUE(t.target_agent_id);
    EXPECT_NE(*t.target_agent_id, t.author_id);
    const auto& target_persona = pop[*pop.index_of(*t.target_agent_id)];
    ASSERT_TRUE(t.target_tweet_id) << t.id;
    const Tweet& target = *by_id.at(*t.target_tweet_id);
    EXPECT_EQ(target.author_id, *t.target_agent_id);
    if (t.kind == TweetKind::retweet) EXPECT_EQ(t.text, "RT @" + target_persona.handle() + ": " + target.text);
    else EXPECT_TRUE(mentions_handle(t.text, target_persona.handle())) << t.text;
  }
}

TEST(Simulation, ConservationAndMetricRanges) {
  auto r = simulate(config(3));
  std::uint64_t interactions = 0, weights = 0;
  for (const auto& t : r.tweets) interactions += t.is_interaction();
  for (const auto& [k, e] : r.graph.edges) {
    weights += e.weight;
    EXPECT_GE(e.weight, 1u);
    EXPECT_EQ(e.weight, e.retweets + e.quotes + e.replies);
  }
  EXPECT_EQ(weights, interactions);
  auto d = degrees_from_graph(r.graph);
  std::uint64_t in = 0, out = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    in += d.in(i);
    out += d.out(i);
  }
  EXPECT_EQ(in, interactions);
  EXPECT_EQ(out, interactions);
  EXPECT_EQ(r.graph.node_count(), seed_pop().size());
  for (double v : {r.metrics.density, r.metrics.avg_in_degree_centrality, r.metrics.avg_total_degree_centrality})
    EXPECT_TRUE(v >= 0.0 && v <= 1.0);
}

TEST(Simulation, ExtendEqualsLongerRun) {
  auto two = config(5, kPaLeaderRandom);
  two.runs = 2;
  auto full = simulate(two);

  testing_support::TempDir dir("extend");
  auto one = config(5, kPaLeaderRandom);
  auto first = simulate(one);
  write_run_dir(dir.str(), one, seed_pop(), first.tweets, first.log);
  auto stored = load_run_dir(dir.str());
  auto backend = make_backend(one);
  auto extended = resume_or_extend(stored, one, pools(), *backend);
  EXPECT_EQ(tweets_to_jsonl(extended.tweets), tweets_to_jsonl(full.tweets));
  EXPECT_EQ(graph_to_csv(extended.graph), graph_to_csv(full.graph));
  EXPECT_EQ(runs_in(extended.tweets), 2);
}

TEST(Simulation, CorruptedOutputRefused) {
  testing_support::TempDir dir("corrupt");
  auto cfg = config(2);
  auto r = simulate(cfg);
  write_run_dir(dir.str(), cfg, seed_pop(), r.tweets, r.log);
  EXPECT_NO_THROW(load_run_dir(dir.str()));
  auto text = read_text_file(dir / "tweets.jsonl");
  text[text.size() / 2] = text[text.size() / 2] == 'a' ? 'b' : 'a';
  write_text_file(dir / "tweets.jsonl", text);
  try {
    load_run_dir(dir.str());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("manifest hash mismatch for tweets.jsonl"), std::string::npos);
  }
}

TEST(Simulation, IncompleteRunCannotBeExtended) {
  testing_support::TempDir dir("aborted");
  auto cfg = config(2);
  auto r = simulate(cfg);
  write_run_dir(dir.str(), cfg, seed_pop(), r.tweets, r.log, "aborted");
  auto stored = load_run_dir(dir.str());
  auto backend = make_backend(cfg);
  EXPECT_THROW(resume_or_extend(stored, cfg, pools(), *backend), ValidationError);
}

TEST(Simulation, SingleAgentSkipsInteractions) {
  Population pop({make_persona("solo", "C", {"n"}, true)});
  auto r = simulate(config(1), pop);
  ASSERT_FALSE(r.tweets.empty());
  for (const auto& t : r.tweets) EXPECT_EQ(t.kind, TweetKind::original);
  ASSERT_FALSE(r.log.empty());
  EXPECT_NE(r.log[0].find("skipped: no other agent to interact with"), std::string::npos);
  EXPECT_TRUE(r.graph.edges.empty());
}

TEST(Simulation, SilentPartnerBecomesDirectMention) {
  auto talker = make_persona("a", "C", {"n"});
  talker.posts_per_run = {1, 1};
  talker.retweets_per_run = {1, 1};
  talker.replies_per_run = {0, 0};
  talker.quotes_per_run = {1, 1};
  auto silent = make_persona("b", "C", {"n"});
  silent.posts_per_run = {0, 0};
  silent.retweets_per_run = {0, 0};
  silent.replies_per_run = {0, 0};
  silent.quotes_per_run = {0, 0};
  Population pop({talker, silent});
  auto r = simulate(config(1), pop);
  int mentions = 0;
  for (const auto& t : r.tweets) {
    if (t.kind == TweetKind::original) continue;
    EXPECT_EQ(t.kind, TweetKind::reply);
    EXPECT_FALSE(t.target_tweet_id);
    EXPECT_EQ(t.target_agent_id, "b");
    EXPECT_TRUE(mentions_handle(t.text, silent.handle()));
    ++mentions;
  }
  EXPECT_EQ(mentions, 2);
  int logged = 0;
  for (const auto& l : r.log) logged += l.find("fallback direct-mention (partner b has no tweets)") != std::string::npos;
  EXPECT_EQ(logged, 2);
}

TEST(Simulation, LeaderFallbackIsLogged) {
  Population pop({make_persona("L", "C", {"n"}, true), make_persona("a", "C", {"n"}), make_persona("b", "D", {"n"})});
  auto r = simulate(config(4, MixingPolicy{0.0, 1.0, 0.0}), pop);
  bool leader_self = false, no_leader = false;
  for (const auto& l : r.log) {
    leader_self |= l.find("agent=L") != std::string::npos && l.find("fallback leader->pa (agent is the leader)") != std::string::npos;
    no_leader |= l.find("agent=b") != std::string::npos && l.find("fallback leader->pa (community has no leader)") != std::string::npos;
  }
  EXPECT_TRUE(leader_self);
  EXPECT_TRUE(no_leader);
}

TEST(Simulation, FailureAbortsWithCommittedPrefix) {
  auto cfg = config(9);
  FailingBackend backend(25, template_seed(cfg.seed));
  try {
    run_simulation(cfg, seed_pop(), pools(), backend);
    FAIL();
  } catch (const SimulationAborted& e) {
    EXPECT_EQ(e.kind(), ErrorKind::backend);
    EXPECT_NE(std::string(e.what()).find("injected failure"), std::string::npos);
    const auto& c = e.committed();
    ASSERT_FALSE(c.empty());
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i].id, i);
    auto full = simulate(cfg);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(to_json(c[i]), to_json(full.tweets[i]));
    EXPECT_LT(c.size(), full.tweets.size());
  }
}

TEST(Simulation, InvalidInputsRejected) {
  Population dup({make_persona("a", "C", {"n"}), make_persona("a", "C", {"n"})});
  EXPECT_THROW(simulate(config(1), dup), ValidationError);
  auto cfg = config(1);
  cfg.runs = 0;
  EXPECT_THROW(simulate(cfg), ValidationError);
  cfg = config(1, MixingPolicy{0.5, 0.5, 0.5});
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  ScenarioConfig c;
  c.seed = 99;
  c.mixing = kPaLeaderRandom;
  c.scheme = PromptScheme::parse("examples:abusive");
  c.template_tone = TemplateTone::neutral;
  c.eligibility = EligibilityRule::community_and_narrative;
  auto back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  EXPECT_THROW(config_from_json(nlohmann::json{{"sede", 1}}), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"mixing", "0.5,0.5,0.5"}}), ValidationError);
  EXPECT_EQ(config_from_json(nlohmann::json{{"mixing", "0.7,0.3,0"}}).mixing.p_leader, 0.3);
  EXPECT_EQ(to_json(c).dump().find("api_key"), std::string::npos);
}
