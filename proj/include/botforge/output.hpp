#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "botforge/error.hpp"
#include "botforge/netgraph.hpp"
#include "botforge/persona.hpp"
#include "botforge/rng.hpp"
#include "botforge/simcore.hpp"
#include "botforge/tweet.hpp"

namespace botforge {

// Output directory layout of a simulation run.
inline constexpr const char* kTweetsFile = "tweets.jsonl";
inline constexpr const char* kGraphCsvFile = "graph.csv";
inline constexpr const char* kGraphmlFile = "graph.graphml";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kPopulationFile = "population.json";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kLogFile = "run.log";
inline constexpr const char* kManifestFormat = "botforge-run/1";

inline std::string content_hash(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

inline nlohmann::ordered_json metrics_to_json(const GraphMetrics& m, const CommGraph& g,
                                              std::size_t tweet_count) {
  std::uint64_t interactions = 0;
  for (const auto& [key, e] : g.edges) interactions += e.weight;
  nlohmann::ordered_json j;
  j["nodes"] = g.node_count();
  j["edges"] = g.edges.size();
  j["interactions"] = interactions;
  j["tweets"] = tweet_count;
  j["density"] = m.density;
  j["avg_total_degree_centrality"] = m.avg_total_degree_centrality;
  j["avg_in_degree_centrality"] = m.avg_in_degree_centrality;
  j["avg_out_degree_centrality"] = m.avg_out_degree_centrality;
  j["weighted_density"] = m.weighted_density;
  return j;
}

inline int runs_in(const std::vector<Tweet>& tweets) {
  int runs = 0;
  for (const auto& t : tweets) runs = std::max(runs, t.run_index + 1);
  return runs;
}

/// Writes the full output layout. `status` is "complete" or "aborted".
inline void write_run_dir(const std::string& dir, const ScenarioConfig& cfg, const Population& pop,
                          const std::vector<Tweet>& tweets, const std::vector<std::string>& log,
                          const std::string& status = "complete", int runs_completed = -1,
                          bool append_log = false) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());

  const CommGraph graph = build_comm_graph(tweets, pop);
  const GraphMetrics metrics = graph_metrics_or_empty(graph);
  const std::vector<std::pair<const char*, std::string>> files = {
      {kTweetsFile, tweets_to_jsonl(tweets)},
      {kGraphCsvFile, graph_to_csv(graph)},
      {kGraphmlFile, graph_to_graphml(graph)},
      {kMetricsFile, metrics_to_json(metrics, graph, tweets.size()).dump(2) + "\n"},
      {kPopulationFile, serialize_population(pop)},
  };
  nlohmann::ordered_json hashes;
  for (const auto& [name, content] : files) {
    write_text_file((fs::path(dir) / name).string(), content);
    hashes[name] = content_hash(content);
  }

  std::string log_text;
  const auto log_path = (fs::path(dir) / kLogFile).string();
  if (append_log && fs::exists(log_path)) log_text = read_text_file(log_path);
  for (const auto& line : log) log_text += line + "\n";
  write_text_file(log_path, log_text);

  nlohmann::ordered_json manifest;
  manifest["format"] = kManifestFormat;
  manifest["status"] = status;
  manifest["config"] = to_json(cfg);
  manifest["runs_completed"] = runs_completed >= 0 ? runs_completed : runs_in(tweets);
  manifest["tweet_count"] = tweets.size();
  manifest["hashes"] = hashes;
  write_text_file((fs::path(dir) / kManifestFile).string(), manifest.dump(2) + "\n");
}

struct RunDir {
  nlohmann::json manifest;
  ScenarioConfig config;
  Population population;
  std::vector<Tweet> tweets;
  CommGraph graph;
  int runs_completed = 0;
};

/// Loads a run directory after checking every file against the manifest hashes.
inline RunDir load_run_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto manifest_path = (fs::path(dir) / kManifestFile).string();
  if (!fs::exists(manifest_path)) throw IoError("no manifest.json in '" + dir + "'");
  RunDir rd;
  rd.manifest = nlohmann::json::parse(read_text_file(manifest_path), nullptr, false);
  if (rd.manifest.is_discarded() || !rd.manifest.is_object() ||
      rd.manifest.value("format", "") != kManifestFormat)
    throw ValidationError("'" + manifest_path + "' is not a valid run manifest");
  if (!rd.manifest.contains("hashes") || !rd.manifest["hashes"].is_object())
    throw ValidationError("manifest lacks content hashes");

  auto checked = [&](const char* name) {
    const std::string content = read_text_file((fs::path(dir) / name).string());
    const auto& hashes = rd.manifest["hashes"];
    if (!hashes.contains(name) || hashes[name] != content_hash(content))
      throw ValidationError(std::string("manifest hash mismatch for ") + name + " in '" + dir + "'");
    return content;
  };
  const std::string tweets_text = checked(kTweetsFile);
  const std::string graph_text = checked(kGraphCsvFile);
  const std::string pop_text = checked(kPopulationFile);
  checked(kGraphmlFile);
  checked(kMetricsFile);

  rd.population = parse_population(pop_text, std::string(dir) + "/" + kPopulationFile);
  rd.tweets = tweets_from_jsonl(tweets_text);
  rd.graph = graph_from_csv(graph_text, rd.population);
  const CommGraph rebuilt = build_comm_graph(rd.tweets, rd.population);
  if (rebuilt.edges != rd.graph.edges)
    throw ValidationError("graph.csv does not match the interactions in tweets.jsonl");
  if (rd.manifest.contains("config")) rd.config = config_from_json(rd.manifest["config"]);
  rd.runs_completed = rd.manifest.value("runs_completed", runs_in(rd.tweets));
  return rd;
}

/// Appends `cfg.runs` rounds to a stored run. Preferential attachment picks
/// up from the degrees recorded in the stored graph.
inline SimulationResult resume_or_extend(const RunDir& previous, const ScenarioConfig& cfg,
                                         const Pools& pools, ContentBackend& backend) {
  if (previous.manifest.value("status", "") != "complete")
    throw ValidationError("cannot extend an incomplete run");
  SimulationState state;
  state.tweets = previous.tweets;
  state.degrees = degrees_from_graph(previous.graph);
  state.next_run = previous.runs_completed;
  return run_simulation(cfg, previous.population, pools, backend, std::move(state));
}

}  // namespace botforge
