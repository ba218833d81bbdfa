#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <thread>

#include "botforge/cli.hpp"
#include "test_support.hpp"

using namespace botforge;
using testing_support::data_path;
using testing_support::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

// Runs the built executable; captures stdout and stderr.
Outcome run_cli(const std::string& args, const TempDir& scratch) {
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string(BOTFORGE_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
  const int rc = std::system(cmd.c_str());
  return {WEXITSTATUS(rc), read_text_file(out), read_text_file(err)};
}

std::string seed_file() { return data_path("personas/aurasight_seed.json"); }
std::string pools_file() { return data_path("pools.json"); }

std::string simulate_args(const std::string& out_dir, const std::string& extra = "") {
  return "simulate --population " + seed_file() + " --pools " + pools_file() + " --backend template --seed 42 --out-dir " +
         out_dir + " " + extra;
}

}  // namespace

TEST(Cli, HelpListsFlagsAndExitsZero) {
  TempDir t("cli");
  auto r = run_cli("simulate --help", t);
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--config", "--population", "--backend", "--mixing", "--scheme", "--seed", "--out-dir", "--extend"})
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  EXPECT_EQ(run_cli("frobnicate", t).code, 1);
}

TEST(Cli, PersonasExpand) {
  TempDir t("cli");
  auto r = run_cli("personas expand --seed-file " + seed_file() + " --target 200 --backend template --out " + (t / "pop.json"), t);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_population(t / "pop.json").size(), 200u);

  r = run_cli("personas expand --seed-file " + seed_file() + " --target 100 --backend template --out " + (t / "x.json"), t);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("target below seed size"), std::string::npos);

  r = run_cli("personas expand --seed-file /no/such/seed.json --target 200 --out " + (t / "x.json"), t);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/no/such/seed.json"), std::string::npos);
}

TEST(Cli, SimulateIsDeterministicAndWritesLayout) {
  TempDir t("cli");
  ASSERT_EQ(run_cli(simulate_args(t / "a", "--mixing 1.0,0,0"), t).code, 0);
  ASSERT_EQ(run_cli(simulate_args(t / "b", "--mixing 1.0,0,0"), t).code, 0);
  for (const char* f : {"tweets.jsonl", "graph.csv", "graph.graphml", "metrics.json", "population.json", "manifest.json", "run.log"})
    EXPECT_TRUE(std::filesystem::exists(t / (std::string("a/") + f))) << f;
  EXPECT_EQ(read_text_file(t / "a/tweets.jsonl"), read_text_file(t / "b/tweets.jsonl"));
  EXPECT_EQ(read_text_file(t / "a/graph.csv"), read_text_file(t / "b/graph.csv"));
  auto manifest = nlohmann::json::parse(read_text_file(t / "a/manifest.json"));
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(manifest["config"]["mixing"], nlohmann::json::parse("[1.0,0.0,0.0]"));
  EXPECT_EQ(manifest["config"]["seed"], 42);
}

TEST(Cli, SimulateValidationErrors) {
  TempDir t("cli");
  EXPECT_EQ(run_cli(simulate_args(t / "x", "--mixing 0.5,0.5,0.5"), t).code, 1);
  EXPECT_EQ(run_cli(simulate_args(t / "x", "--scheme targets:sarcasm"), t).code, 1);
  EXPECT_EQ(run_cli("simulate --population /no/file.json --out-dir " + (t / "x"), t).code, 2);
}

TEST(Cli, SchemeSteersTemplateOutput) {
  TempDir t("cli");
  ASSERT_EQ(run_cli(simulate_args(t / "n"), t).code, 0);
  ASSERT_EQ(run_cli(simulate_args(t / "s", "--scheme targets:negative_sentiment"), t).code, 0);
  EXPECT_EQ(read_text_file(t / "n/tweets.jsonl").find("disappointing"), std::string::npos);
  EXPECT_NE(read_text_file(t / "s/tweets.jsonl").find("disappointing"), std::string::npos);
  auto manifest = nlohmann::json::parse(read_text_file(t / "s/manifest.json"));
  EXPECT_EQ(manifest["config"]["scheme"], "targets:negative_sentiment");
}

TEST(Cli, ConfigFileWithFlagOverride) {
  TempDir t("cli");
  nlohmann::json cfg{{"seed", 7}, {"mixing", "0.6,0.3,0.1"}, {"population", seed_file()}, {"pools", pools_file()},
                     {"output_dir", t / "from_config"}};
  write_text_file(t / "cfg.json", cfg.dump());
  ASSERT_EQ(run_cli("simulate --config " + (t / "cfg.json") + " --seed 8", t).code, 0);
  auto manifest = nlohmann::json::parse(read_text_file(t / "from_config/manifest.json"));
  EXPECT_EQ(manifest["config"]["seed"], 8);
  EXPECT_EQ(manifest["config"]["mixing"][2], 0.1);
  write_text_file(t / "bad.json", R"({"sede": 1})");
  EXPECT_EQ(run_cli("simulate --config " + (t / "bad.json"), t).code, 1);
}

TEST(Cli, ExtendMatchesTwoRuns) {
  TempDir t("cli");
  ASSERT_EQ(run_cli(simulate_args(t / "two", "--runs 2 --mixing 0.6,0.3,0.1"), t).code, 0);
  ASSERT_EQ(run_cli(simulate_args(t / "one", "--mixing 0.6,0.3,0.1"), t).code, 0);
  auto r = run_cli("simulate --extend " + (t / "one"), t);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text_file(t / "one/tweets.jsonl"), read_text_file(t / "two/tweets.jsonl"));
  EXPECT_EQ(read_text_file(t / "one/graph.csv"), read_text_file(t / "two/graph.csv"));
  EXPECT_EQ(read_text_file(t / "one/run.log"), read_text_file(t / "two/run.log"));
  auto manifest = nlohmann::json::parse(read_text_file(t / "one/manifest.json"));
  EXPECT_EQ(manifest["runs_completed"], 2);

  auto text = read_text_file(t / "two/graph.csv");
  write_text_file(t / "two/graph.csv", text + "\n");
  r = run_cli("simulate --extend " + (t / "two"), t);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("hash mismatch"), std::string::npos);
}

TEST(Cli, AnalyzeCompareExport) {
  TempDir t("cli");
  ASSERT_EQ(run_cli(simulate_args(t / "run", "--template-tone neutral"), t).code, 0);
  auto r = run_cli("analyze --corpus-dir " + (t / "run") + " --lexicon-dir " + data_path("lexicons") + " --out " + (t / "cues.csv"), t);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cues = read_text_file(t / "cues.csv");
  EXPECT_EQ(std::count(cues.begin(), cues.end(), '\n'), 15);
  EXPECT_TRUE(cues.starts_with("cue,per_agent_mean,per_agent_std,n_agents\n"));

  ASSERT_EQ(run_cli("analyze --per-post --corpus-dir " + (t / "run") + " --lexicon-dir " + data_path("lexicons") + " --out " +
                    (t / "pooled.csv"),
                t)
                .code,
            0);
  EXPECT_NE(read_text_file(t / "pooled.csv"), cues);

  r = run_cli("compare --cues " + (t / "cues.csv"), t);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| Expletives | 0.12 | 0*# | 0.08 |"), std::string::npos) << r.out;
  r = run_cli("compare --format csv --cues " + (t / "cues.csv") + " --out " + (t / "report.csv"), t);
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(read_text_file(t / "report.csv").starts_with("cue,mean,std,n,t_bot,p_bot,sig_bot,t_human,p_human,sig_human\n"));

  write_text_file(t / "bad.csv", "cue,per_agent_mean,per_agent_std,n_agents\nsarcasm,1,0.5,10\n");
  EXPECT_EQ(run_cli("compare --cues " + (t / "bad.csv"), t).code, 1);

  r = run_cli("export --run-dir " + (t / "run") + " --format graphml --out " + (t / "g.graphml"), t);
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_text_file(t / "g.graphml"), read_text_file(t / "run/graph.graphml"));
  r = run_cli("export --run-dir " + (t / "run") + " --format csv", t);
  EXPECT_EQ(r.out, read_text_file(t / "run/graph.csv"));
}

TEST(Cli, AnalyzeMissingLexiconNamesCategory) {
  TempDir t("cli");
  ASSERT_EQ(run_cli(simulate_args(t / "run"), t).code, 0);
  std::filesystem::create_directories(t / "lex");
  for (const auto& e : std::filesystem::directory_iterator(data_path("lexicons")))
    if (e.path().filename() != "expletive.txt") std::filesystem::copy(e.path(), t / ("lex/" + e.path().filename().string()));
  auto r = run_cli("analyze --corpus-dir " + (t / "run") + " --lexicon-dir " + (t / "lex"), t);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("expletive"), std::string::npos);
}

TEST(Cli, LlmHttpBackendEndToEndAndFailureWritesPartialRun) {
  std::atomic<int> calls{0};
  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls > 40) {
      res.status = 400;
      res.set_content("quota", "text/plain");
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"Mock post #AuraSight"}}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  TempDir t("cli");
  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  std::vector<std::string> args{"botforge", "simulate", "--population", seed_file(), "--pools", pools_file(),
                                "--backend", "llm-http", "--base-url", url, "--out-dir", t / "run", "--max-retries", "0"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  server.stop();
  th.join();
  EXPECT_EQ(code, 3) << err.str();
  auto manifest = nlohmann::json::parse(read_text_file(t / "run/manifest.json"));
  EXPECT_EQ(manifest["status"], "aborted");
  const auto tweets = tweets_from_jsonl(read_text_file(t / "run/tweets.jsonl"));
  ASSERT_FALSE(tweets.empty());
  for (std::size_t i = 0; i < tweets.size(); ++i) EXPECT_EQ(tweets[i].id, i);
  EXPECT_NE(read_text_file(t / "run/run.log").find("aborted before tweet"), std::string::npos);
}
