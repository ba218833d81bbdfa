#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <future>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "botforge/backend.hpp"
#include "botforge/content.hpp"
#include "botforge/error.hpp"
#include "botforge/netgraph.hpp"
#include "botforge/persona.hpp"
#include "botforge/rng.hpp"
#include "botforge/template_backend.hpp"
#include "botforge/tweet.hpp"

namespace botforge {

struct ScenarioConfig {
  std::uint64_t seed = 42;
  MixingPolicy mixing = kPurePa;
  EligibilityRule eligibility = EligibilityRule::community_or_narrative;
  PromptScheme scheme;
  std::string backend = "template";  // "template" or "llm-http"
  TemplateTone template_tone = TemplateTone::steerable;
  GenerationParams params;
  std::string base_url = "https://api.openai.com/v1";
  int max_retries = 3;
  int max_in_flight = 1;
  int runs = 1;
  std::string population_path;
  std::string pools_path;
  std::string output_dir;

  void validate() const {
    mixing.validate();
    if (params.temperature < 0.0) throw ValidationError("temperature must be >= 0");
    if (runs < 1) throw ValidationError("runs must be >= 1");
    if (max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
    if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
    if (backend != "template" && backend != "llm-http")
      throw ValidationError("unknown backend '" + backend + "' (template|llm-http)");
  }
};

inline nlohmann::ordered_json to_json(const ScenarioConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["mixing"] = {c.mixing.p_pa, c.mixing.p_leader, c.mixing.p_random};
  j["eligibility"] = c.eligibility == EligibilityRule::community_or_narrative ? "or" : "and";
  j["scheme"] = c.scheme.to_string();
  j["backend"] = c.backend;
  j["template_tone"] = c.template_tone == TemplateTone::neutral ? "neutral" : "steerable";
  j["model_name"] = c.params.model_name;
  j["temperature"] = c.params.temperature;
  j["max_tokens"] = c.params.max_tokens;
  j["base_url"] = c.base_url;
  j["max_retries"] = c.max_retries;
  j["max_in_flight"] = c.max_in_flight;
  j["runs"] = c.runs;
  j["population"] = c.population_path;
  j["pools"] = c.pools_path;
  j["output_dir"] = c.output_dir;
  return j;
}

/// Overlays keys present in `j` onto `base`. Unknown keys are rejected.
inline ScenarioConfig config_from_json(const nlohmann::json& j, ScenarioConfig base = {}) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") base.seed = v.get<std::uint64_t>();
      else if (key == "mixing") {
        if (v.is_string()) base.mixing = MixingPolicy::parse(v.get<std::string>());
        else {
          auto p = v.get<std::vector<double>>();
          if (p.size() != 3) throw ValidationError("config.mixing needs 3 values");
          base.mixing = {p[0], p[1], p[2]};
        }
      } else if (key == "eligibility") {
        const auto s = v.get<std::string>();
        if (s == "or") base.eligibility = EligibilityRule::community_or_narrative;
        else if (s == "and") base.eligibility = EligibilityRule::community_and_narrative;
        else throw ValidationError("config.eligibility must be 'or' or 'and'");
      } else if (key == "scheme") base.scheme = PromptScheme::parse(v.get<std::string>());
      else if (key == "backend") base.backend = v.get<std::string>();
      else if (key == "template_tone") {
        const auto s = v.get<std::string>();
        if (s == "neutral") base.template_tone = TemplateTone::neutral;
        else if (s == "steerable") base.template_tone = TemplateTone::steerable;
        else throw ValidationError("config.template_tone must be 'neutral' or 'steerable'");
      } else if (key == "model_name") base.params.model_name = v.get<std::string>();
      else if (key == "temperature") base.params.temperature = v.get<double>();
      else if (key == "max_tokens") base.params.max_tokens = v.get<int>();
      else if (key == "base_url") base.base_url = v.get<std::string>();
      else if (key == "max_retries") base.max_retries = v.get<int>();
      else if (key == "max_in_flight") base.max_in_flight = v.get<int>();
      else if (key == "runs") base.runs = v.get<int>();
      else if (key == "population") base.population_path = v.get<std::string>();
      else if (key == "pools") base.pools_path = v.get<std::string>();
      else if (key == "output_dir") base.output_dir = v.get<std::string>();
      else throw ValidationError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  base.validate();
  return base;
}

/// Everything a run needs to continue from: the corpus so far and the
/// interaction counters driving preferential attachment.
struct SimulationState {
  std::vector<Tweet> tweets;  // id order
  DegreeState degrees;
  int next_run = 0;
};

struct SimulationResult {
  std::vector<Tweet> tweets;
  CommGraph graph;
  GraphMetrics metrics;
  std::vector<std::string> log;
};

/// Raised when generation fails mid-run. Carries the committed prefix.
class SimulationAborted : public Error {
public:
  SimulationAborted(ErrorKind kind, const std::string& what, std::vector<Tweet> committed,
                    std::vector<std::string> log)
      : Error(kind, what), committed_(std::move(committed)), log_(std::move(log)) {}

  const std::vector<Tweet>& committed() const { return committed_; }
  const std::vector<std::string>& log() const { return log_; }

private:
  std::vector<Tweet> committed_;
  std::vector<std::string> log_;
};

namespace detail {

struct PlannedTweet {
  std::size_t agent;
  int slot;
  GenerationTask task;
  // Index of the target within this run's plan, when the target is new.
  std::optional<std::size_t> target_plan_index;
  // Index of the target within earlier runs' tweets.
  std::optional<std::size_t> target_prior_index;
  std::uint64_t id = 0;
};

// Where an agent's most recent tweet lives.
struct LatestRef {
  bool in_plan = false;
  std::size_t index = 0;
};

}  // namespace detail

/// Runs `cfg.runs` simulation rounds on top of `state`.
///
/// Per round: every agent (ascending id) draws its counts; original posts
/// are planned for all agents first, then each agent's retweet, quote and
/// reply slots pick a partner and target that partner's most recent tweet.
/// Tweets get ids in (run, agent, slot) order and are generated in plan
/// order, optionally concurrently, since every target precedes its
/// dependents in the plan.
inline SimulationResult run_simulation(const ScenarioConfig& cfg, const Population& pop,
                                       const Pools& pools, ContentBackend& backend,
                                       SimulationState state = {}) {
  cfg.validate();
  if (auto v = validate_population(pop); !v.empty())
    throw ValidationError("invalid population: " + summarize(v));
  if (state.degrees.size() == 0) state.degrees = DegreeState(pop.size());
  if (state.degrees.size() != pop.size())
    throw ValidationError("degree state does not match population size");

  std::vector<std::string> log;
  std::mutex log_mutex;
  auto note = [&](std::string line) {
    std::lock_guard lock(log_mutex);
    log.push_back(std::move(line));
  };

  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pop[a].id < pop[b].id; });
  std::vector<std::size_t> rank(pop.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

  std::vector<std::vector<std::size_t>> candidates(pop.size());
  for (std::size_t a = 0; a < pop.size(); ++a) candidates[a] = eligible_candidates(a, pop, cfg.eligibility);

  std::vector<std::optional<detail::LatestRef>> latest(pop.size());
  std::uint64_t next_id = 0;
  for (std::size_t i = 0; i < state.tweets.size(); ++i) {
    const auto& t = state.tweets[i];
    auto a = pop.index_of(t.author_id);
    if (!a) throw ValidationError("tweet " + std::to_string(t.id) + ": unknown author '" + t.author_id + "'");
    latest[*a] = detail::LatestRef{false, i};
    next_id = std::max(next_id, t.id + 1);
  }

  for (int round = 0; round < cfg.runs; ++round) {
    const int run = state.next_run + round;
    Rng counts_rng = Rng::derive(cfg.seed, "counts", static_cast<std::uint64_t>(run));
    Rng narrative_rng = Rng::derive(cfg.seed, "narrative", static_cast<std::uint64_t>(run));
    Rng partner_rng = Rng::derive(cfg.seed, "partner", static_cast<std::uint64_t>(run));

    std::vector<InteractionCounts> counts(pop.size());
    for (auto a : order) counts[a] = draw_interaction_counts(pop[a], counts_rng);

    std::vector<detail::PlannedTweet> plan;
    for (auto a : order) {
      for (int s = 0; s < counts[a].posts; ++s) {
        GenerationTask task;
        task.kind = TweetKind::original;
        task.narrative = select_narrative(pop[a], narrative_rng);
        plan.push_back({a, s, std::move(task), std::nullopt, std::nullopt});
        latest[a] = detail::LatestRef{true, plan.size() - 1};
      }
    }

    for (auto a : order) {
      int slot = counts[a].posts;
      std::vector<TweetKind> kinds;
      kinds.insert(kinds.end(), counts[a].retweets, TweetKind::retweet);
      kinds.insert(kinds.end(), counts[a].quotes, TweetKind::quote);
      kinds.insert(kinds.end(), counts[a].replies, TweetKind::reply);
      for (auto kind : kinds) {
        const std::string where = "run=" + std::to_string(run) + " agent=" + pop[a].id +
                                  " slot=" + std::to_string(slot) + " kind=" + to_string(kind);
        if (pop.size() < 2) {
          note(where + " skipped: no other agent to interact with");
          continue;
        }
        const auto choice =
            select_partner(a, pop, cfg.mixing, state.degrees, partner_rng, candidates[a]);
        if (choice.mode != choice.requested) {
          std::string reason;
          if (choice.requested == PartnerMode::leader) {
            auto leader = pop.leader_of(pop[a].community);
            reason = !leader ? "community has no leader" : "agent is the leader";
          }
          if (choice.mode == PartnerMode::random) {
            if (!reason.empty()) reason += ", ";
            reason += "no eligible pa candidates";
          }
          note(where + " fallback " + to_string(choice.requested) + "->" + to_string(choice.mode) +
               " (" + reason + ")");
        }
        const std::size_t partner = choice.agent;

        detail::PlannedTweet item{a, slot, {}, std::nullopt, std::nullopt};
        item.task.kind = kind;
        item.task.target_agent_id = pop[partner].id;
        item.task.target_handle = pop[partner].handle();
        if (latest[partner]) {
          const auto ref = *latest[partner];
          if (ref.in_plan) {
            item.target_plan_index = ref.index;
          } else {
            item.target_prior_index = ref.index;
            item.task.target_tweet_id = state.tweets[ref.index].id;
            item.task.target_text = state.tweets[ref.index].text;
          }
        } else {
          item.task.kind = TweetKind::reply;
          note(where + " fallback direct-mention (partner " + pop[partner].id + " has no tweets)");
        }
        state.degrees.commit(a, partner);
        plan.push_back(std::move(item));
        latest[a] = detail::LatestRef{true, plan.size() - 1};
        ++slot;
      }
    }

    // Ids follow (agent rank, slot) within the run.
    std::vector<std::size_t> by_id(plan.size());
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(), [&](auto x, auto y) {
      if (rank[plan[x].agent] != rank[plan[y].agent]) return rank[plan[x].agent] < rank[plan[y].agent];
      return plan[x].slot < plan[y].slot;
    });
    for (auto i : by_id) plan[i].id = next_id++;
    for (auto& item : plan)
      if (item.target_plan_index) item.task.target_tweet_id = plan[*item.target_plan_index].id;

    // Generation.
    std::vector<Tweet> produced(plan.size());
    std::vector<std::promise<void>> done(plan.size());
    std::vector<std::shared_future<void>> ready;
    ready.reserve(plan.size());
    for (auto& p : done) ready.push_back(p.get_future().share());

    // After the first failure remaining tasks are skipped; the first error
    // is what gets reported.
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto generate = [&](std::size_t i) {
      try {
        if (failed) throw BackendError("skipped after an earlier generation failure");
        auto& item = plan[i];
        if (item.target_plan_index) {
          ready[*item.target_plan_index].get();
          item.task.target_text = produced[*item.target_plan_index].text;
        }
        Tweet t = generate_post(pop[item.agent], item.task, cfg.scheme, pools, backend, cfg.params);
        t.id = item.id;
        t.run_index = run;
        t.slot_index = item.slot;
        produced[i] = std::move(t);
        done[i].set_value();
      } catch (...) {
        {
          std::lock_guard lock(error_mutex);
          if (!failed.exchange(true)) first_error = std::current_exception();
        }
        done[i].set_exception(std::current_exception());
      }
    };

    if (cfg.max_in_flight <= 1) {
      for (std::size_t i = 0; i < plan.size(); ++i) generate(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::jthread> workers;
      const auto n = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_in_flight), plan.size());
      for (std::size_t w = 0; w < n; ++w)
        workers.emplace_back([&] {
          for (std::size_t i = next++; i < plan.size(); i = next++) generate(i);
        });
    }

    // Commit in id order up to the first failed tweet.
    std::vector<Tweet> committed;
    committed.reserve(plan.size());
    for (auto i : by_id) {
      bool ok = true;
      try {
        ready[i].get();
      } catch (...) {
        ok = false;
      }
      if (!ok) {
        auto prefix = state.tweets;
        prefix.insert(prefix.end(), committed.begin(), committed.end());
        ErrorKind kind = ErrorKind::backend;
        std::string what = "unknown error";
        try {
          std::rethrow_exception(first_error);
        } catch (const Error& e) {
          kind = e.kind();
          what = e.what();
        } catch (const std::exception& e) {
          what = e.what();
        }
        note("run=" + std::to_string(run) + " aborted before tweet " + std::to_string(plan[i].id) +
             ": " + what);
        throw SimulationAborted(kind, "simulation aborted: " + what, std::move(prefix), log);
      }
      committed.push_back(std::move(produced[i]));
    }

    // Re-point `latest` at committed positions for the next round.
    const std::size_t base = state.tweets.size();
    std::vector<std::size_t> position(plan.size());
    for (std::size_t k = 0; k < by_id.size(); ++k) position[by_id[k]] = base + k;
    for (auto& l : latest)
      if (l && l->in_plan) l = detail::LatestRef{false, position[l->index]};
    state.tweets.insert(state.tweets.end(), std::make_move_iterator(committed.begin()),
                        std::make_move_iterator(committed.end()));
  }

  SimulationResult result;
  result.tweets = std::move(state.tweets);
  result.graph = build_comm_graph(result.tweets, pop);
  result.metrics = graph_metrics_or_empty(result.graph);
  result.log = std::move(log);
  return result;
}

}  // namespace botforge
