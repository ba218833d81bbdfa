#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "botforge/backends.hpp"
#include "botforge/benchmark.hpp"
#include "botforge/cues.hpp"
#include "botforge/error.hpp"
#include "botforge/output.hpp"
#include "botforge/persona.hpp"
#include "botforge/simcore.hpp"

namespace botforge::cli {

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  write_text_file(path, text);
}

// Flag values for `simulate`; unset options leave the config file value alone.
struct SimulateFlags {
  std::string config_path;
  std::optional<std::string> population, pools, backend, mixing, scheme, out_dir, tone, eligibility,
      model, base_url;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs, max_in_flight, max_retries, max_tokens;
  std::optional<double> temperature;
  std::string extend_dir;
};

inline ScenarioConfig apply_flags(ScenarioConfig cfg, const SimulateFlags& f) {
  nlohmann::json overlay = nlohmann::json::object();
  if (f.population) overlay["population"] = *f.population;
  if (f.pools) overlay["pools"] = *f.pools;
  if (f.backend) overlay["backend"] = *f.backend;
  if (f.mixing) overlay["mixing"] = *f.mixing;
  if (f.scheme) overlay["scheme"] = *f.scheme;
  if (f.out_dir) overlay["output_dir"] = *f.out_dir;
  if (f.tone) overlay["template_tone"] = *f.tone;
  if (f.eligibility) overlay["eligibility"] = *f.eligibility;
  if (f.model) overlay["model_name"] = *f.model;
  if (f.base_url) overlay["base_url"] = *f.base_url;
  if (f.seed) overlay["seed"] = *f.seed;
  if (f.runs) overlay["runs"] = *f.runs;
  if (f.max_in_flight) overlay["max_in_flight"] = *f.max_in_flight;
  if (f.max_retries) overlay["max_retries"] = *f.max_retries;
  if (f.max_tokens) overlay["max_tokens"] = *f.max_tokens;
  if (f.temperature) overlay["temperature"] = *f.temperature;
  return config_from_json(overlay, std::move(cfg));
}

inline ScenarioConfig load_config_file(const std::string& path) {
  const auto text = read_text_file(path);
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError("config '" + path + "' is not valid JSON");
  return config_from_json(j);
}

inline int cmd_simulate(const SimulateFlags& f, std::ostream& out, std::ostream& err) {
  auto on_retry = [&err](const std::string& msg) { err << "llm-http: " << msg << "\n"; };

  if (!f.extend_dir.empty()) {
    const RunDir previous = load_run_dir(f.extend_dir);
    ScenarioConfig base = previous.config;
    base.runs = 1;
    ScenarioConfig cfg = apply_flags(base, f);
    if (f.population) throw ValidationError("--population cannot be changed when extending a run");
    const std::string dir = cfg.output_dir.empty() || !f.out_dir ? f.extend_dir : cfg.output_dir;
    cfg.output_dir = dir;
    if (dir != f.extend_dir) {
      std::filesystem::create_directories(dir);
      const auto log_src = std::filesystem::path(f.extend_dir) / kLogFile;
      if (std::filesystem::exists(log_src))
        write_text_file((std::filesystem::path(dir) / kLogFile).string(), read_text_file(log_src.string()));
    }
    const Pools pools = cfg.pools_path.empty() ? Pools{} : load_pools(cfg.pools_path);
    auto backend = make_backend(cfg, on_retry);
    ScenarioConfig echoed = cfg;
    try {
      auto result = resume_or_extend(previous, cfg, pools, *backend);
      echoed.runs = previous.runs_completed + cfg.runs;
      write_run_dir(dir, echoed, previous.population, result.tweets, result.log, "complete",
                    echoed.runs, true);
      out << "extended " << dir << ": " << result.tweets.size() << " tweets, " << echoed.runs
          << " runs\n";
      return 0;
    } catch (const SimulationAborted& e) {
      echoed.runs = previous.runs_completed + cfg.runs;
      write_run_dir(dir, echoed, previous.population, e.committed(), e.log(), "aborted",
                    runs_in(e.committed()), true);
      throw;
    }
  }

  ScenarioConfig cfg = f.config_path.empty() ? ScenarioConfig{} : load_config_file(f.config_path);
  cfg = apply_flags(cfg, f);
  if (cfg.population_path.empty()) throw ValidationError("--population (or config.population) is required");
  if (cfg.output_dir.empty()) throw ValidationError("--out-dir (or config.output_dir) is required");
  const Population pop = load_population(cfg.population_path);
  const Pools pools = cfg.pools_path.empty() ? Pools{} : load_pools(cfg.pools_path);
  auto backend = make_backend(cfg, on_retry);
  try {
    auto result = run_simulation(cfg, pop, pools, *backend);
    write_run_dir(cfg.output_dir, cfg, pop, result.tweets, result.log);
    out << "wrote " << cfg.output_dir << ": " << result.tweets.size() << " tweets, "
        << result.graph.edges.size() << " edges, density " << format_number(result.metrics.density)
        << "\n";
    return 0;
  } catch (const SimulationAborted& e) {
    write_run_dir(cfg.output_dir, cfg, pop, e.committed(), e.log(), "aborted", runs_in(e.committed()));
    throw;
  }
}

struct ExpandFlags {
  std::string seed_file, out, backend = "template", base_url = "https://api.openai.com/v1", model;
  std::size_t target = 0;
  std::uint64_t seed = 42;
  std::size_t batch_size = 10;
  int max_retries = 3;
};

inline int cmd_personas_expand(const ExpandFlags& f, std::ostream& out, std::ostream& err) {
  const Population seed = load_seed_personas(f.seed_file);
  ScenarioConfig cfg;
  cfg.seed = f.seed;
  cfg.backend = f.backend;
  cfg.base_url = f.base_url;
  cfg.max_retries = f.max_retries;
  if (!f.model.empty()) cfg.params.model_name = f.model;
  cfg.validate();
  auto backend = make_backend(cfg, [&err](const std::string& m) { err << "llm-http: " << m << "\n"; });
  ExpansionOptions opt;
  opt.seed = f.seed;
  opt.batch_size = f.batch_size;
  opt.params = cfg.params;
  const Population pop = expand_personas(seed, f.target, *backend, opt);
  save_population(pop, f.out);
  out << "wrote " << f.out << ": " << pop.size() << " personas (" << pop.size() - seed.size()
      << " generated)\n";
  return 0;
}

inline int cmd_analyze(const std::string& corpus_dir, const std::string& lexicon_dir,
                       const std::string& out_path, bool per_post, std::ostream& out) {
  const RunDir run = load_run_dir(corpus_dir);
  const LexiconSet lex = load_lexicons(lexicon_dir);
  const auto agg = aggregate_cues(run.tweets, run.graph, run.population, lex,
                                  per_post ? Aggregation::per_post : Aggregation::per_agent);
  write_output(out_path, cue_report_csv(cue_report(agg)), out);
  return 0;
}

inline int cmd_compare(const std::string& cues_path, const std::string& out_path,
                       const std::string& format, std::ostream& out) {
  ReportFormat fmt;
  if (format == "markdown") fmt = ReportFormat::markdown;
  else if (format == "csv") fmt = ReportFormat::csv;
  else throw ValidationError("--format must be markdown or csv");
  const auto rows = compare(parse_cue_report_csv(read_text_file(cues_path)));
  write_output(out_path, render_report(rows, fmt), out);
  return 0;
}

inline int cmd_export(const std::string& run_dir, const std::string& format, const std::string& out_path,
                      std::ostream& out) {
  const RunDir run = load_run_dir(run_dir);
  if (format == "graphml") write_output(out_path, graph_to_graphml(run.graph), out);
  else if (format == "csv") write_output(out_path, graph_to_csv(run.graph), out);
  else throw ValidationError("--format must be graphml or csv");
  return 0;
}

/// Parses and runs one command. Returns the process exit code.
inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Persona-driven synthetic social network simulator", "botforge"};
  app.require_subcommand(1);

  auto* personas = app.add_subcommand("personas", "Persona file operations");
  personas->require_subcommand(1);
  ExpandFlags ef;
  auto* expand = personas->add_subcommand("expand", "Grow a seed persona file to a target size");
  expand->add_option("--seed-file", ef.seed_file, "Seed persona JSON")->required();
  expand->add_option("--target", ef.target, "Total persona count wanted")->required();
  expand->add_option("--backend", ef.backend, "template | llm-http")->capture_default_str();
  expand->add_option("--out", ef.out, "Output persona JSON")->required();
  expand->add_option("--seed", ef.seed, "Random seed")->capture_default_str();
  expand->add_option("--batch-size", ef.batch_size, "Personas requested per backend call")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  expand->add_option("--base-url", ef.base_url, "Chat-completion base URL (llm-http)")->capture_default_str();
  expand->add_option("--model", ef.model, "Model name (llm-http)");
  expand->add_option("--max-retries", ef.max_retries, "Retries per request (llm-http)")->capture_default_str();

  SimulateFlags sf;
  auto* simulate = app.add_subcommand("simulate", "Run the simulation and write an output directory");
  simulate->add_option("--config", sf.config_path, "Scenario config JSON");
  simulate->add_option("--population", sf.population, "Persona JSON");
  simulate->add_option("--pools", sf.pools, "Hashtag/URL pool JSON");
  simulate->add_option("--backend", sf.backend, "template | llm-http");
  simulate->add_option("--mixing", sf.mixing, "p_pa,p_leader,p_random");
  simulate->add_option("--scheme", sf.scheme, "naive | LEVEL:cue[,cue...]");
  simulate->add_option("--seed", sf.seed, "Root random seed");
  simulate->add_option("--out-dir", sf.out_dir, "Output directory");
  simulate->add_option("--runs", sf.runs, "Simulation rounds");
  simulate->add_option("--template-tone", sf.tone, "neutral | steerable (template backend)");
  simulate->add_option("--eligibility", sf.eligibility, "or | and (community/narrative rule)");
  simulate->add_option("--max-in-flight", sf.max_in_flight, "Concurrent generation requests");
  simulate->add_option("--max-retries", sf.max_retries, "Retries per request (llm-http)");
  simulate->add_option("--model", sf.model, "Model name");
  simulate->add_option("--temperature", sf.temperature, "Sampling temperature");
  simulate->add_option("--max-tokens", sf.max_tokens, "Completion token cap");
  simulate->add_option("--base-url", sf.base_url, "Chat-completion base URL (llm-http)");
  simulate->add_option("--extend", sf.extend_dir, "Append rounds to an existing output directory");

  std::string corpus_dir, lexicon_dir = "data/lexicons", analyze_out = "-";
  bool per_post = false;
  auto* analyze = app.add_subcommand("analyze", "Extract cues from a simulation output directory");
  analyze->add_option("--corpus-dir", corpus_dir, "Simulation output directory")->required();
  analyze->add_option("--lexicon-dir", lexicon_dir, "Directory of lexicon files")->capture_default_str();
  analyze->add_option("--out", analyze_out, "Cue report CSV ('-' for stdout)")->capture_default_str();
  analyze->add_flag("--per-post", per_post, "Pool posts instead of averaging per agent");

  std::string cues_path, compare_out = "-", compare_format = "markdown";
  auto* cmp = app.add_subcommand("compare", "Test cue means against the wild baselines");
  cmp->add_option("--cues", cues_path, "Cue report CSV from analyze")->required();
  cmp->add_option("--out", compare_out, "Report path ('-' for stdout)")->capture_default_str();
  cmp->add_option("--format", compare_format, "markdown | csv")->capture_default_str();

  std::string export_dir, export_format = "graphml", export_out = "-";
  auto* exp = app.add_subcommand("export", "Re-emit the communication graph of an output directory");
  exp->add_option("--run-dir", export_dir, "Simulation output directory")->required();
  exp->add_option("--format", export_format, "graphml | csv")->capture_default_str();
  exp->add_option("--out", export_out, "Output path ('-' for stdout)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, out, err);
    return static_cast<int>(ErrorKind::validation);
  }

  try {
    if (expand->parsed()) return cmd_personas_expand(ef, out, err);
    if (simulate->parsed()) return cmd_simulate(sf, out, err);
    if (analyze->parsed()) return cmd_analyze(corpus_dir, lexicon_dir, analyze_out, per_post, out);
    if (cmp->parsed()) return cmd_compare(cues_path, compare_out, compare_format, out);
    if (exp->parsed()) return cmd_export(export_dir, export_format, export_out, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::validation);
  }
  return static_cast<int>(ErrorKind::validation);
}

}  // namespace botforge::cli
