#include <gtest/gtest.h>

#include <set>

#include "botforge/persona.hpp"
#include "botforge/template_backend.hpp"
#include "test_support.hpp"

using namespace botforge;
using testing_support::make_persona;

namespace {

const char* kRecord = R"({
  "id": "a1", "display_name": "ethal voice", "community": "Ethal fan",
  "narratives": ["Ethal has no Ethalian-born representative this year #SpeakForEthal"],
  "stance": "oppose", "posts_per_run": [3, 10], "retweets_per_run": [2, 5],
  "replies_per_run": [1, 5], "is_leader": true
})";

ExpansionOptions opts(std::uint64_t seed, std::size_t batch = 10, std::size_t cap = 50) {
  ExpansionOptions o;
  o.seed = seed;
  o.batch_size = batch;
  o.max_rejections = cap;
  return o;
}

Population seed_population() { return load_seed_personas(testing_support::data_path("personas/aurasight_seed.json")); }

}  // namespace

TEST(PersonaJson, ParsesRecordAndDefaultsQuotes) {
  auto p = persona_from_json(nlohmann::json::parse(kRecord), "[0]");
  EXPECT_EQ(p.id, "a1");
  EXPECT_EQ(p.stance, Stance::oppose);
  EXPECT_EQ(p.posts_per_run, (CountRange{3, 10}));
  EXPECT_EQ(p.quotes_per_run, (CountRange{0, 2}));
  EXPECT_TRUE(p.is_leader);
  EXPECT_EQ(p.handle(), "ethal_voice");
}

TEST(PersonaJson, UnknownKeyNamesPath) {
  auto j = nlohmann::json::parse(kRecord);
  j["mood"] = "grumpy";
  try {
    persona_from_json(j, "[4]");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("[4].mood"), std::string::npos);
  }
}

TEST(PersonaJson, RejectsBadRangesAndStance) {
  auto j = nlohmann::json::parse(kRecord);
  j["posts_per_run"] = {10, 3};
  EXPECT_THROW(persona_from_json(j, "[0]"), ValidationError);
  j = nlohmann::json::parse(kRecord);
  j["replies_per_run"] = {-1, 2};
  EXPECT_THROW(persona_from_json(j, "[0]"), ValidationError);
  j = nlohmann::json::parse(kRecord);
  j["stance"] = "maybe";
  EXPECT_THROW(persona_from_json(j, "[0]"), ValidationError);
  j = nlohmann::json::parse(kRecord);
  j["narratives"] = nlohmann::json::array();
  EXPECT_THROW(persona_from_json(j, "[0]"), ValidationError);
  j = nlohmann::json::parse(kRecord);
  j.erase("community");
  EXPECT_THROW(persona_from_json(j, "[0]"), ValidationError);
}

TEST(PersonaJson, RoundTrip) {
  auto a = make_persona("x1", "C", {"n1", "n2"}, true);
  a.stance = Stance::support;
  a.quotes_per_run = {1, 1};
  auto b = make_persona("x2", "C", {"n2"});
  b.origin = Origin::generated;
  Population pop({a, b});
  EXPECT_EQ(parse_population(serialize_population(pop), "mem"), pop);
  EXPECT_EQ(parse_population(serialize_population(pop), "mem")[1].origin, Origin::generated);
}

TEST(PersonaValidation, EmptyPopulation) {
  auto v = validate_population(Population{});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::empty_population);
}

TEST(PersonaValidation, DuplicateIdAndLeader) {
  Population pop({make_persona("a", "C", {"n"}, true), make_persona("a", "C", {"n"}, true)});
  auto v = validate_population(pop);
  std::set<Violation::Kind> kinds;
  for (auto& x : v) kinds.insert(x.kind);
  EXPECT_TRUE(kinds.contains(Violation::Kind::duplicate_id));
  EXPECT_TRUE(kinds.contains(Violation::Kind::duplicate_leader));
}

TEST(PersonaValidation, CommunityWithoutLeaderIsValid) {
  Population pop({make_persona("a", "C", {"n"}), make_persona("b", "D", {"m"})});
  EXPECT_TRUE(validate_population(pop).empty());
  EXPECT_FALSE(pop.leader_of("C"));
}

TEST(SeedPersonas, ShippedFileHas169AgentsWithOneLeaderPerCommunity) {
  auto pop = seed_population();
  EXPECT_EQ(pop.size(), 169u);
  EXPECT_TRUE(validate_population(pop).empty());
  EXPECT_EQ(pop.communities().size(), 8u);
  for (const auto& [community, members] : pop.communities()) {
    int leaders = 0;
    for (auto i : members) leaders += pop[i].is_leader;
    EXPECT_EQ(leaders, 1) << community;
  }
  for (const auto& p : pop.personas()) {
    EXPECT_EQ(p.origin, Origin::manual);
    EXPECT_EQ(p.posts_per_run, (CountRange{3, 10}));
  }
}

TEST(SeedPersonas, MissingFileNamesPath) {
  try {
    load_seed_personas("/nonexistent/seed.json");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/seed.json"), std::string::npos);
  }
}

TEST(SeedPersonas, InvalidDocumentReportsPath) {
  testing_support::TempDir dir("persona");
  write_text_file(dir / "bad.json", R"([{"id": "a"}])");
  try {
    load_seed_personas(dir / "bad.json");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("schema violation at"), std::string::npos);
  }
}

TEST(Expansion, GrowsSeedTo200) {
  auto seed = seed_population();
  TemplateBackend backend(7);
  auto pop = expand_personas(seed, 200, backend, opts(7));
  ASSERT_EQ(pop.size(), 200u);
  EXPECT_TRUE(validate_population(pop).empty());
  for (std::size_t i = 0; i < seed.size(); ++i) EXPECT_EQ(pop[i], seed[i]);
  std::size_t generated = 0;
  for (const auto& p : pop.personas()) generated += p.origin == Origin::generated;
  EXPECT_EQ(generated, 31u);
  for (std::size_t i = seed.size(); i < pop.size(); ++i) EXPECT_FALSE(pop[i].is_leader);
}

TEST(Expansion, DeterministicForSeed) {
  auto seed = seed_population();
  TemplateBackend b1(3), b2(3);
  EXPECT_EQ(expand_personas(seed, 190, b1, opts(3)), expand_personas(seed, 190, b2, opts(3)));
}

TEST(Expansion, TargetEqualToSeedIsIdentity) {
  auto seed = seed_population();
  testing_support::ScriptedBackend backend({"[]"});
  EXPECT_EQ(expand_personas(seed, seed.size(), backend), seed);
  EXPECT_EQ(backend.calls, 0u);
}

TEST(Expansion, TargetBelowSeedFails) {
  auto seed = seed_population();
  testing_support::ScriptedBackend backend({"[]"});
  try {
    expand_personas(seed, 100, backend);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("target below seed size"), std::string::npos);
  }
}

TEST(Expansion, ProseOutputIsParseErrorWithRawText) {
  Population seed({make_persona("a", "C", {"n"}, true)});
  testing_support::ScriptedBackend backend({"Sure! Here are some great personas for you."});
  try {
    expand_personas(seed, 3, backend);
    FAIL();
  } catch (const BackendParseError& e) {
    EXPECT_EQ(e.raw(), "Sure! Here are some great personas for you.");
  }
}

TEST(Expansion, DropsInvalidAndDuplicateRecordsThenRefills) {
  Population seed({make_persona("a", "C", {"n"}, true)});
  const std::string first = R"([
    {"id": "a", "display_name": "dup", "community": "C", "narratives": ["n"], "stance": "neutral",
     "posts_per_run": [3,10], "retweets_per_run": [2,5], "replies_per_run": [1,5]},
    {"id": "g1", "display_name": "second leader", "community": "C", "narratives": ["n"], "stance": "neutral",
     "posts_per_run": [3,10], "retweets_per_run": [2,5], "replies_per_run": [1,5], "is_leader": true},
    {"id": "g2", "display_name": "ok", "community": "C", "narratives": ["n"], "stance": "neutral",
     "posts_per_run": [3,10], "retweets_per_run": [2,5], "replies_per_run": [1,5]}])";
  const std::string second = R"([
    {"id": "g3", "display_name": "ok3", "community": "C", "narratives": ["n"], "stance": "support",
     "posts_per_run": [3,10], "retweets_per_run": [2,5], "replies_per_run": [1,5]},
    {"id": "g4", "display_name": "ok4", "community": "C", "narratives": ["n"], "stance": "support",
     "posts_per_run": [3,10], "retweets_per_run": [2,5], "replies_per_run": [1,5]}])";
  testing_support::ScriptedBackend backend({first, second});
  auto pop = expand_personas(seed, 4, backend, opts(1, 3));
  ASSERT_EQ(pop.size(), 4u);
  EXPECT_EQ(pop[1].id, "g2");
  EXPECT_EQ(pop[2].id, "g3");
  EXPECT_EQ(pop[3].id, "g4");
  EXPECT_EQ(backend.calls, 2u);
}

TEST(Expansion, RejectionCapRaisesBackendError) {
  Population seed({make_persona("a", "C", {"n"}, true)});
  testing_support::ScriptedBackend backend({"[]"});
  EXPECT_THROW(expand_personas(seed, 20, backend, opts(0, 10, 5)), BackendError);
}

TEST(Expansion, PromptCarriesCountPrefixAndExamples) {
  auto shots = std::vector<Persona>{make_persona("a", "C", {"n"}, true)};
  auto s = expansion_prompt(4, "gen-0002-", shots);
  EXPECT_TRUE(s.starts_with("Generate exactly 4 new persona records.\n"));
  EXPECT_NE(s.find("\"gen-0002-\""), std::string::npos);
  EXPECT_NE(s.find("```json"), std::string::npos);
}
