#include <gtest/gtest.h>

#include <fstream>
#include <map>

#include "derived_values.hpp"
#include "fixtures.hpp"
#include "stepforge/core/validate.hpp"
#include "stepforge/error.hpp"
#include "stepforge/gateway/scripted_backend.hpp"
#include "stepforge/plan/action_cursor.hpp"
#include "stepforge/plan/planner.hpp"
#include "stepforge/profile/forge.hpp"
#include "stepforge/prompts.hpp"
#include "stepforge/synth/synthesizer.hpp"

using namespace stepforge;
using gateway::CallSpec;
using gateway::ChatRequest;
using gateway::ChatResponse;

namespace {

const CallSpec kSpec{"fake", {}, 0.7, 1.0, {}};

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::StageFailed;
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

json turn(int n, const std::string& role, const std::string& action, const std::string& utt = "Words here.") {
  return json{{"turn_num", n}, {"role", role}, {"action_reasoning", role == "counselor" ? "because" : "n/a"},
              {"action", action}, {"utterance", utt}};
}

json stage_json(const std::vector<std::string>& actions) {
  json out = json::array();
  for (const auto& t : fixtures::turns_for(actions)) out.push_back(t);
  return out;
}

json plan_json(std::vector<std::string> keys, const std::string& strategy = "Decatastrophizing") {
  return json{{"plan", "We will use " + strategy + " to examine the feared outcome."},
              {"reason_for_these_order", "concrete first, then test"},
              {"action_order", keys}};
}

}  // namespace

// ---- seeds ----------------------------------------------------------------

TEST(Seeds, ThreeValidRows) {
  fixtures::TempDir dir("seeds");
  write(dir / "s.jsonl",
        "{\"persona\":\"a teacher\",\"negative_thought\":\"I am useless.\"}\n"
        "{\"id\":\"x2\",\"persona\":\"a cook\",\"negative_thought\":\"Nobody likes my food.\"}\n\n"
        "{\"persona\":\"a runner\",\"negative_thought\":\"I will never improve.\"}\n");
  auto in = profile::ingest_seeds(dir / "s.jsonl");
  EXPECT_EQ(in.seeds.size(), 3u);
  EXPECT_TRUE(in.rejects.empty());
  EXPECT_EQ(in.seeds[1].seed_id, "x2");
}

TEST(Seeds, MissingThoughtRejectedWithRow) {
  fixtures::TempDir dir("seeds");
  write(dir / "s.jsonl",
        "{\"persona\":\"a teacher\",\"negative_thought\":\"I am useless.\"}\n"
        "{\"persona\":\"a cook\"}\n");
  auto in = profile::ingest_seeds(dir / "s.jsonl");
  EXPECT_EQ(in.seeds.size(), 1u);
  ASSERT_EQ(in.rejects.size(), 1u);
  EXPECT_EQ(in.rejects[0].row, 2u);
}

TEST(Seeds, EmptyFileAndCsv) {
  fixtures::TempDir dir("seeds");
  write(dir / "empty.jsonl", "");
  EXPECT_EQ(code_of([&] { profile::ingest_seeds(dir / "empty.jsonl"); }), ErrorCode::EmptyCorpus);
  EXPECT_EQ(code_of([&] { profile::ingest_seeds(dir / "missing.jsonl"); }), ErrorCode::UnreadableFile);

  write(dir / "s.csv", "id,persona,negative_thought\nc1,\"a nurse, tired\",\"I fail \"\"everyone\"\"\"\nc2,a pilot,\n");
  auto in = profile::ingest_seeds(dir / "s.csv");
  ASSERT_EQ(in.seeds.size(), 1u);
  EXPECT_EQ(in.seeds[0].persona, "a nurse, tired");
  EXPECT_EQ(in.seeds[0].negative_thought, "I fail \"everyone\"");
  EXPECT_EQ(in.rejects.size(), 1u);
}

// ---- decomposition ----------------------------------------------------------

TEST(Decompose, PartyExample) {
  json reply = {{"surface_level_problem", "Feeling discouraged because people do not attend my parties."},
                {"triggering_situation", "Hosting a party that few friends attended."},
                {"automatic_thoughts", "No one wants to spend time with me.; People must think I'm boring or unimportant."},
                {"basic_information", {{"name", "Alex"}, {"age", 29}}}};
  auto gw = fixtures::gateway_with(fixtures::constant("Sure:\n" + reply.dump()));
  auto d = profile::decompose(*gw, kSpec, {"seed-1", "a host", "No one really cares about me."});
  EXPECT_EQ(d.surface_level_problem, "Feeling discouraged because people do not attend my parties.");
  EXPECT_EQ(d.automatic_thoughts,
            (std::vector<std::string>{"No one wants to spend time with me.", "People must think I'm boring or unimportant."}));
  EXPECT_EQ(d.basic_information.at("age"), "29");
}

TEST(Decompose, UnknownFieldsKept) {
  json reply = {{"surface_level_problem", "unknown"}, {"triggering_situation", ""}, {"automatic_thoughts", "unknown"}};
  auto d = profile::parse_decomposition(reply);
  EXPECT_EQ(d.surface_level_problem, "unknown");
  EXPECT_EQ(d.triggering_situation, "unknown");
  auto p = profile::build_profile({"seed-1", "a host", "No one cares."}, d, AttitudeStyle(Style::Avoidant));
  EXPECT_TRUE(profile_violations(p).empty());
}

TEST(Decompose, ProseTwiceFails) {
  auto backend = fixtures::constant("I would rather talk about it.");
  auto gw = fixtures::gateway_with(backend);
  EXPECT_EQ(code_of([&] { profile::decompose(*gw, kSpec, {"seed-1", "a host", "No one cares."}); }),
            ErrorCode::DecompositionFailed);
  EXPECT_EQ(backend->calls, 2);
}

// ---- attitude ---------------------------------------------------------------

TEST(Attitude, RoundRobinCounts) {
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 9999ull}) {
    for (std::size_t n : {8u, 16u, 10u}) {
      std::map<Style, int> count;
      for (auto a : profile::assign_attitude(seed, n)) ++count[a.style];
      std::vector<int> sizes;
      for (auto s : kAllStyles) sizes.push_back(count[s]);
      std::sort(sizes.rbegin(), sizes.rend());
      if (n == 8) EXPECT_EQ(sizes, std::vector<int>(8, 1));
      if (n == 16) EXPECT_EQ(sizes, std::vector<int>(8, 2));
      if (n == 10) EXPECT_EQ(sizes, std::vector<int>(oracle::kRoundRobin10.begin(), oracle::kRoundRobin10.end()));
    }
  }
}

TEST(Attitude, PrefixProperty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto longer = profile::assign_attitude(seed, 37);
    for (std::size_t n = 0; n <= 37; n += 5) {
      auto shorter = profile::assign_attitude(seed, n);
      EXPECT_TRUE(std::equal(shorter.begin(), shorter.end(), longer.begin()));
    }
  }
}

TEST(Forge, ProfilesKeepSeedOrderAndReportFailures) {
  auto backend = std::make_shared<fixtures::FnBackend>([](const ChatRequest& r) {
    bool bad = r.messages.front().content.find("BROKEN") != std::string::npos;
    json ok = {{"surface_level_problem", "p"}, {"triggering_situation", "t"}, {"automatic_thoughts", "a; b"}};
    return ChatResponse{{bad ? "nope" : ok.dump()}, std::nullopt, false};
  });
  auto gw = fixtures::gateway_with(backend);
  std::vector<profile::SeedRecord> seeds;
  for (int i = 0; i < 9; ++i)
    seeds.push_back({"s" + std::to_string(i), i == 4 ? "BROKEN" : "persona " + std::to_string(i), "thought"});
  auto r = profile::forge_profiles(*gw, kSpec, seeds, 3, 4);
  ASSERT_EQ(r.profiles.size(), 8u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].seed_id, "s4");
  auto styles = profile::assign_attitude(3, 9);
  EXPECT_EQ(r.profiles[4].attitude, styles[5]);  // attitude follows seed position
  for (const auto& p : r.profiles) EXPECT_TRUE(profile_violations(p).empty());
}

// ---- planner ----------------------------------------------------------------

TEST(Planner, DiagnosticPlanIsConstant) {
  auto a = plan::diagnostic_plan();
  EXPECT_EQ(a, plan::diagnostic_plan());
  EXPECT_EQ(a.actions.keys.size(), 4u);
  EXPECT_TRUE(plan::sequence_violations(a.actions).empty());
}

TEST(Planner, BikingExample) {
  auto strategies = plan::default_strategies();
  json reply = plan_json({"restate catastrophic biking thoughts", "estimate the real odds", "picture coping if it happens",
                          "list past safe rides", "plan a short ride", "End session"});
  auto gw = fixtures::gateway_with(fixtures::constant(reply.dump()));
  std::vector<DialogueTurn> diag = fixtures::turns_for({"understanding surface level"});
  diag[0].utterance = "You mentioned the crash on your bike last spring.";
  auto p = plan::generate_intervention_plan(*gw, kSpec, diag, strategies);
  ASSERT_TRUE(p.strategy);
  EXPECT_EQ(p.strategy->name, StrategyName::Decatastrophizing);
  EXPECT_EQ(p.actions.keys.back(), "End session");
  EXPECT_TRUE(plan::sequence_violations(p.actions).empty());
}

TEST(Planner, TooManyOrTooShortKeysRejected) {
  auto strategies = plan::default_strategies();
  std::vector<std::string> nine;
  for (int i = 0; i < 9; ++i) nine.push_back("step number " + std::to_string(i) + " here");
  auto gw = fixtures::gateway_with(fixtures::constant(plan_json(nine).dump()));
  auto diag = fixtures::turns_for({"understanding surface level"});
  EXPECT_EQ(code_of([&] { plan::generate_intervention_plan(*gw, kSpec, diag, strategies); }),
            ErrorCode::ActionConstraintViolated);

  auto keys = fixtures::body_keys();
  keys.resize(5);
  keys[1] = "reframe";
  auto gw2 = fixtures::gateway_with(fixtures::constant(plan_json(keys).dump()));
  EXPECT_EQ(code_of([&] { plan::generate_intervention_plan(*gw2, kSpec, diag, strategies); }),
            ErrorCode::ActionConstraintViolated);
}

TEST(Planner, StrategyExtraction) {
  EXPECT_EQ(plan::extract_strategy("First a pie chart technique, later some reality testing."), StrategyName::PieChart);
  EXPECT_EQ(plan::extract_strategy("Use REALITY TESTING."), StrategyName::RealityTesting);
  EXPECT_EQ(plan::extract_strategy("We will just talk."), StrategyName::Unknown);
}

// ---- synthesizer --------------------------------------------------------------

TEST(Synth, SixteenUtterancesHitTurnCap) {
  std::vector<std::string> actions(8, "understanding surface level");
  json turns = stage_json(actions);
  turns.push_back(turn(16, "client", "n/a"));
  auto gw = fixtures::gateway_with(fixtures::constant(turns.dump()));
  try {
    synth::synthesize_stage(*gw, kSpec, fixtures::profile(), plan::diagnostic_plan(), std::nullopt);
    FAIL();
  } catch (const synth::StructuralError& e) {
    EXPECT_EQ(e.code(), ErrorCode::StructuralViolation);
    auto codes = violation_codes(e.report());
    EXPECT_NE(std::find(codes.begin(), codes.end(), violation::kTurnCap), codes.end());
  }
}

TEST(Synth, ClientWithActionRejected) {
  json turns = stage_json({"understanding surface level", "understanding trigger situation"});
  turns[1]["action"] = "understanding trigger situation";
  auto gw = fixtures::gateway_with(fixtures::constant(turns.dump()));
  try {
    synth::synthesize_stage(*gw, kSpec, fixtures::profile(), plan::diagnostic_plan(), std::nullopt);
    FAIL();
  } catch (const synth::StructuralError& e) {
    EXPECT_EQ(violation_codes(e.report()), std::vector<std::string>{violation::kClientActionNotNa});
  }
}

TEST(Synth, ParseTurnsDefaultsClientFields) {
  json list = json::array({turn(1, "counselor", "understanding surface level"),
                           json{{"turn_num", 2}, {"role", "client"}, {"utterance", "Fine."}}});
  auto t = synth::parse_turns(list);
  EXPECT_EQ(t[1].action, "n/a");
  EXPECT_EQ(t[1].action_reasoning, "n/a");
  EXPECT_THROW(synth::parse_turns(json::object()), gateway::ParseRejected);
}

TEST(Synth, PlannerFailureKeepsDiagnosticInPartial) {
  auto diag = plan::diagnostic_plan().actions.keys;
  std::string intervention_prompt;
  auto backend = std::make_shared<fixtures::FnBackend>([&](const ChatRequest& r) {
    std::string text;
    if (r.request_tag == prompts::tag::kDiagnosticStage) text = stage_json(diag).dump();
    else text = "I would prefer not to plan.";
    return ChatResponse{{text}, std::nullopt, false};
  });
  auto gw = fixtures::gateway_with(backend);
  synth::SynthesisSpecs specs{kSpec, kSpec, {}, {}};
  try {
    synth::synthesize_session(*gw, specs, fixtures::profile(), plan::default_strategies());
    FAIL();
  } catch (const synth::SessionAborted& e) {
    EXPECT_EQ(e.stage(), "intervention");
    EXPECT_EQ(e.code(), ErrorCode::PlanParseFailed);
    EXPECT_EQ(e.partial().diagnostic.turns.size(), 7u);
    EXPECT_FALSE(e.partial().intervention);
  }
}

TEST(Synth, InterventionPromptEmbedsAcceptedDiagnostic) {
  auto diag_keys = plan::diagnostic_plan().actions.keys;
  auto body = fixtures::body_keys();
  body.resize(5);
  body.emplace_back("End session");
  std::string seen;
  auto backend = std::make_shared<fixtures::FnBackend>([&](const ChatRequest& r) {
    std::string text;
    if (r.request_tag == prompts::tag::kDiagnosticStage) text = stage_json(diag_keys).dump();
    else if (r.request_tag == prompts::tag::kPlanner) text = plan_json(body).dump();
    else {
      seen = r.messages.front().content;
      text = stage_json(body).dump();
    }
    return ChatResponse{{text}, std::nullopt, false};
  });
  auto gw = fixtures::gateway_with(backend);
  synth::SynthesisSpecs specs{kSpec, kSpec, {}, {}};
  auto rec = synth::synthesize_session(*gw, specs, fixtures::profile(), plan::default_strategies());
  EXPECT_EQ(rec.status, SessionStatus::Draft);
  ASSERT_TRUE(rec.intervention);
  EXPECT_EQ(rec.provenance.notes.at("diagnostic_digest"), synth::turns_digest(rec.diagnostic.turns));
  EXPECT_NE(seen.find(prompts::format_history(rec.diagnostic.turns)), std::string::npos);
  EXPECT_TRUE(validate_session(rec).empty());
}

TEST(Synth, ScriptedSessionsAreStructurallyValid) {
  auto gw = fixtures::gateway_with(std::make_shared<gateway::ScriptedBackend>(gateway::ScriptedOptions{5}));
  synth::SynthesisSpecs specs{kSpec, kSpec, {}, {}};
  int monotone = 0;
  for (int i = 0; i < 12; ++i) {
    auto p = fixtures::profile("p" + std::to_string(i));
    SessionRecord rec;
    try {
      rec = synth::synthesize_session(*gw, specs, p, plan::default_strategies());
    } catch (const synth::SessionAborted&) {
      continue;
    }
    auto report = validate_session(rec);
    std::erase_if(report, [](const Violation& v) {
      return v.code == violation::kSkip || v.code == violation::kRegress || v.code == violation::kUnknownAction ||
             v.code == violation::kIncompleteSequence;
    });
    EXPECT_TRUE(report.empty()) << json(report).dump();
    bool ok = plan::check_monotone(rec.diagnostic.turns, rec.diagnostic.plan.actions).ok &&
              plan::check_monotone(rec.intervention->turns, rec.intervention->plan.actions).ok;
    EXPECT_EQ(ok, validate_session(rec).empty());
    monotone += ok;
  }
  EXPECT_GT(monotone, 6);
}
