#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "stepforge/core/sample_format.hpp"
#include "stepforge/core/validate.hpp"
#include "stepforge/error.hpp"

using namespace stepforge;
using fixtures::turns_for;

namespace {

std::string random_text(std::mt19937& rng, int max_words = 6) {
  static const char* words[] = {"calm", "worry", "  Tight ", "chest", "\"quoted\"", "line\nbreak", "üñí", "ok", "n/a"};
  std::uniform_int_distribution<int> len(1, max_words), pick(0, 8);
  std::string out;
  for (int i = len(rng); i > 0; --i) out += std::string(words[pick(rng)]) + (i > 1 ? " " : "");
  return out;
}

SessionRecord random_session(std::mt19937& rng) {
  std::uniform_int_distribution<int> coin(0, 1), len(1, 6);
  SessionRecord s;
  s.session_id = "s-" + std::to_string(rng() % 1000);
  s.profile_id = random_text(rng, 2);
  s.diagnostic.plan = plan::diagnostic_plan();
  for (int i = len(rng); i > 0; --i) {
    DialogueTurn t;
    t.turn_num = static_cast<int>(s.diagnostic.turns.size()) + 1;
    t.role = coin(rng) ? Role::Counselor : Role::Client;
    t.action = random_text(rng, 3);
    t.action_reasoning = random_text(rng);
    t.utterance = random_text(rng);
    s.diagnostic.turns.push_back(t);
  }
  if (coin(rng)) {
    StageRecord inter;
    inter.plan = fixtures::intervention_plan(5 + rng() % 3);
    if (coin(rng)) inter.plan.strategy.reset();
    inter.turns = turns_for({random_text(rng, 2)});
    s.intervention = inter;
  }
  s.provenance.backends["dialogue"] = random_text(rng, 1);
  s.provenance.sampling["temperature"] = 0.25 * (rng() % 5);
  if (coin(rng)) s.provenance.timestamps["synth"] = "2026-01-01T00:00:00Z";
  s.provenance.notes["n"] = random_text(rng);
  s.status = static_cast<SessionStatus>(rng() % 3);
  return s;
}

}  // namespace

TEST(Canonicalize, Examples) {
  EXPECT_EQ(canonicalize_action_key("  Restate   Fear of Sharing "), "restate fear of sharing");
  EXPECT_EQ(canonicalize_action_key("End session"), "end session");
  try {
    canonicalize_action_key("");
    FAIL() << "empty key accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidKey);
  }
  EXPECT_THROW(canonicalize_action_key(" \t\n "), Error);
}

TEST(Canonicalize, IdempotentOnRandomKeys) {
  std::mt19937 rng(99);
  const std::string alphabet = "aB z\tQ\n  xY-";
  for (int i = 0; i < 2000; ++i) {
    std::string k;
    for (int n = rng() % 20; n > 0; --n) k.push_back(alphabet[rng() % alphabet.size()]);
    std::string once;
    try {
      once = canonicalize_action_key(k);
    } catch (const Error&) {
      continue;
    }
    EXPECT_EQ(canonicalize_action_key(once), once) << "key: [" << k << "]";
  }
}

TEST(RoundTrip, SessionsSurviveJson) {
  std::mt19937 rng(7);
  for (int i = 0; i < 300; ++i) {
    auto s = random_session(rng);
    auto back = json::parse(json(s).dump()).get<SessionRecord>();
    ASSERT_EQ(back, s) << json(s).dump();
  }
}

TEST(RoundTrip, ProfilesScoresPairs) {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto p = fixtures::profile("p" + std::to_string(i));
    p.attitude = AttitudeStyle(kAllStyles[rng() % kAllStyles.size()]);
    p.automatic_thoughts.push_back(random_text(rng));
    EXPECT_EQ(json(p).get<ClientProfile>(), p);

    RubricScore r{"ctrs8", {{"Feedback", double(rng() % 7)}, {"Strategy", 2.5}}, {{"Feedback", "x"}, {"Strategy", "y"}},
                  {0, 6}};
    EXPECT_EQ(json(r).get<RubricScore>(), r);

    PreferencePair pair{"pair-" + std::to_string(i), rng() % 2 ? PairTask::Plan : PairTask::Utterance,
                        random_text(rng), "a", "b", 4.5, 3.0, "s"};
    EXPECT_EQ(json(pair).get<PreferencePair>(), pair);
  }
}

TEST(Model, EngagementOfStyles) {
  EXPECT_EQ(AttitudeStyle(Style::OpenToCounseling).engagement_type(), Engagement::Engaged);
  for (auto s : kAllStyles) EXPECT_EQ(parse_style(to_string(s)), s);
  EXPECT_THROW(parse_style("Cheerful"), Error);
}

TEST(Model, ProfileAndPairInvariants) {
  EXPECT_TRUE(profile_violations(fixtures::profile()).empty());
  auto p = fixtures::profile();
  p.automatic_thoughts.clear();
  EXPECT_FALSE(profile_violations(p).empty());

  PreferencePair same{"x", PairTask::Utterance, "c", "t", "t", 5, 1, "s"};
  EXPECT_FALSE(pair_violations(same).empty());
  PreferencePair inverted{"x", PairTask::Utterance, "c", "a", "b", 1, 5, "s"};
  EXPECT_FALSE(pair_violations(inverted).empty());

  RubricScore r{"ctrs8", {{"Feedback", 7}}, {{"Feedback", "r"}}, {0, 6}};
  EXPECT_FALSE(rubric_violations(r).empty());
}

TEST(Validation, WellFormedSessionHasEmptyReport) {
  auto s = fixtures::clean_session();
  EXPECT_TRUE(validate_session(s).empty());
  auto d = plan::diagnostic_plan().actions.keys;
  s.diagnostic.turns = turns_for({d[0], d[0], d[1], d[2], d[3]});
  s.intervention.reset();
  EXPECT_TRUE(validate_session(s).empty());
}

TEST(Validation, ClientFollowingClientIsAlternation) {
  auto s = fixtures::clean_session();
  auto& t = s.diagnostic.turns;
  t.insert(t.begin() + 2, DialogueTurn{3, Role::Client, "n/a", "n/a", "And another thing."});
  for (std::size_t i = 0; i < t.size(); ++i) t[i].turn_num = static_cast<int>(i) + 1;
  // the third turn is now a client turn after a client turn
  ASSERT_EQ(t[1].role, Role::Client);
  EXPECT_EQ(violation_codes(validate_session(s)), std::vector<std::string>{violation::kAlternation});
}

TEST(Validation, ClientActionMustBeNa) {
  auto s = fixtures::clean_session();
  s.diagnostic.turns[1].action = "ask about fears";
  EXPECT_EQ(violation_codes(validate_session(s)), std::vector<std::string>{violation::kClientActionNotNa});
}

TEST(Validation, IsPure) {
  std::mt19937 rng(3);
  for (int i = 0; i < 100; ++i) {
    auto s = random_session(rng);
    auto a = validate_session(s);
    auto b = validate_session(s);
    EXPECT_EQ(a, b);
  }
}

TEST(SampleFormat, TurnTargetRoundTrip) {
  DialogueTurn t{3, Role::Counselor, "probe the fear", "restate the worrying thought", "What do you fear most?"};
  auto back = samples::parse_turn_target(samples::turn_target(t));
  EXPECT_EQ(back.action, t.action);
  EXPECT_EQ(back.utterance, t.utterance);
  EXPECT_EQ(back.action_reasoning, t.action_reasoning);
  EXPECT_THROW(samples::parse_turn_target(R"({"action":"a","utterance":"b"})"), Error);
  EXPECT_THROW(samples::parse_turn_target(R"({"action_reasoning":"","action":"a","utterance":"b","x":1})"), Error);
  EXPECT_THROW(samples::parse_turn_target("not json"), Error);
}

TEST(SampleFormat, PlanTargetRoundTrip) {
  auto p = fixtures::intervention_plan(6);
  auto back = samples::parse_plan_target(samples::plan_target(p));
  EXPECT_EQ(back.actions.keys, p.actions.keys);
  EXPECT_EQ(back.plan_text, p.plan_text);
  auto bad = p;
  bad.actions.keys.erase(bad.actions.keys.begin());
  bad.actions.keys.erase(bad.actions.keys.begin());  // 4 keys left
  EXPECT_THROW(samples::parse_plan_target(samples::plan_target(bad)), Error);
}
