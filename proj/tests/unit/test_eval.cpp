#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "brute_force.hpp"
#include "derived_values.hpp"
#include "fixtures.hpp"
#include "stepforge/error.hpp"
#include "stepforge/eval/metrics.hpp"
#include "stepforge/eval/report.hpp"
#include "stepforge/rubrics.hpp"
#include "stepforge/util/hash.hpp"

using namespace stepforge;
using namespace stepforge::eval;
using gateway::ChatRequest;
using gateway::ChatResponse;

namespace {

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

const gateway::CallSpec kJudge{"fake", {}, 0.0, 1.0, {}};

/// One utterance per tag.
TagMap spread(const std::vector<Tag>& tags) {
  TagMap m;
  int i = 1;
  for (auto t : tags) m[i++] = {t};
  return m;
}

std::map<std::string, double> srs_items(const std::vector<double>& v) {
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < rubrics::kSrs.size(); ++i) m[std::string(rubrics::kSrs[i].key)] = v[i];
  return m;
}

}  // namespace

TEST(Tags, ParsingAndAliases) {
  auto m = parse_tag_map(json::parse(R"({"counselor_1":["Q_Evid"],"counselor_2":[]})"), 2);
  EXPECT_EQ(m.at(1), std::vector<Tag>{Tag::Q_Evid});
  EXPECT_TRUE(m.at(2).empty());
  EXPECT_EQ(parse_tag("Q_Solv"), Tag::Q_Identify);
  EXPECT_EQ(parse_tag("Q_thought"), Tag::Q_Identify);
  EXPECT_EQ(code_of([] { parse_tag("Q_Banana"); }), ErrorCode::UnknownTag);
  EXPECT_THROW(parse_tag_map(json::parse(R"({"counselor_3":[]})"), 2), gateway::ParseRejected);
  EXPECT_EQ(tag_map_from_json(to_json(m)), m);
}

TEST(Tags, UnknownLabelFromJudge) {
  auto gw = fixtures::gateway_with(fixtures::constant(R"({"counselor_1":["Q_Banana"]})"));
  auto turns = fixtures::turns_for({"a b c"});
  EXPECT_EQ(code_of([&] { tag_turns(*gw, kJudge, turns); }), ErrorCode::UnknownTag);
}

TEST(Entropy, UniformSingleAndMixed) {
  const double want[] = {oracle::kUniformEntropy2, oracle::kUniformEntropy4, oracle::kUniformEntropy8,
                         oracle::kUniformEntropy16};
  int slot = 0;
  for (std::size_t k : {2u, 4u, 8u, 16u}) {
    std::vector<Tag> tags(kAllTags.begin(), kAllTags.begin() + static_cast<long>(k));
    EXPECT_NEAR(session_entropy(spread(tags)), want[slot], 1e-9);
    EXPECT_NEAR(want[slot], std::log(static_cast<double>(k)), 1e-12);
    ++slot;
  }
  EXPECT_EQ(session_entropy(spread({Tag::R_Emo, Tag::R_Emo, Tag::R_Emo})), 0.0);
  EXPECT_NEAR(session_entropy(spread({Tag::Q_Evid, Tag::Q_Evid, Tag::R_Emo, Tag::Q_Alt})), oracle::kEntropy211, 1e-12);
  std::vector<double> counts = {2, 1, 1};
  EXPECT_NEAR(entropy(counts), 1.0397, 1e-4);
}

TEST(Entropy, DiversityBoundsOnRandomSessions) {
  std::mt19937 rng(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<TagMap> sessions(1 + rng() % 4);
    bool multi = false;
    for (auto& s : sessions) {
      std::set<Tag> kinds;
      for (int u = 1, n = static_cast<int>(rng() % 12); u <= n; ++u) {
        std::vector<Tag> tags;
        for (int t = rng() % 3; t > 0; --t) tags.push_back(kAllTags[rng() % kTagCount]);
        std::sort(tags.begin(), tags.end());
        tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
        kinds.insert(tags.begin(), tags.end());
        s[u] = tags;
      }
      multi = multi || kinds.size() > 1;
    }
    double d = strategy_diversity(sessions);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, std::log(16.0) + 1e-12);
    EXPECT_EQ(d > 0.0, multi);
  }
}

TEST(Distribution, PercentagesAndScaleInvariance) {
  auto one = spread({Tag::Q_Identify, Tag::Q_Identify, Tag::Q_Identify, Tag::Q_Evid});
  std::vector<TagMap> sessions = {one};
  auto d = tag_distribution(sessions);
  EXPECT_DOUBLE_EQ(d.question.at("Q_Identify"), 75.0);
  EXPECT_DOUBLE_EQ(d.question.at("Q_Evid"), 25.0);
  EXPECT_TRUE(d.reflection.empty());

  std::mt19937 rng(12);
  for (int i = 0; i < 50; ++i) {
    std::vector<Tag> tags;
    for (int n = 1 + rng() % 10; n > 0; --n) tags.push_back(kAllTags[rng() % kTagCount]);
    std::vector<TagMap> base = {spread(tags)};
    std::vector<TagMap> tripled = {spread(tags), spread(tags), spread(tags)};
    auto a = tag_distribution(base);
    auto b = tag_distribution(tripled);
    ASSERT_EQ(a.question.size(), b.question.size());
    for (const auto& [k, v] : a.question) EXPECT_NEAR(v, b.question.at(k), 1e-9);
    for (const auto& [k, v] : a.reflection) EXPECT_NEAR(v, b.reflection.at(k), 1e-9);
  }
  auto top = top_k({{"b", 10}, {"a", 10}, {"c", 30}}, 2);
  EXPECT_EQ(top[0].first, "c");
  EXPECT_EQ(top[1].first, "a");
}

TEST(Srs, Examples) {
  auto r = srs_means(srs_items(std::vector<double>(14, 3)));
  EXPECT_EQ(r.helpful_mean, 3.0);
  EXPECT_EQ(r.hindering_mean, 3.0);

  auto items = srs_items(std::vector<double>(14, 5));
  items["TherapeuticStuckness"] = 1;
  items["InterventionDiscomfort"] = 2;
  items["EmotionalDeterioration"] = 2;
  items["GuidanceDeficit"] = 1;
  EXPECT_DOUBLE_EQ(srs_means(items).hindering_mean, oracle::kHinderingExample);
  EXPECT_DOUBLE_EQ(srs_means(items).helpful_mean, 5.0);
}

TEST(Srs, DefaultHinderingSetIsTheFourReverseItems) {
  SrsConfig cfg;
  std::vector<std::string> marked;
  for (const auto& item : rubrics::kSrs)
    if (std::string_view(item.description).find("Higher score indicates") != std::string_view::npos)
      marked.emplace_back(item.key);
  auto set = cfg.hindering_set;
  std::sort(set.begin(), set.end());
  std::sort(marked.begin(), marked.end());
  EXPECT_EQ(set, marked);
  EXPECT_EQ(set.size(), 4u);
}

TEST(Srs, RandomVectorsMatchDirectMeans) {
  std::mt19937 rng(14);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> v(14);
    for (auto& x : v) x = 1 + static_cast<double>(rng() % 5);
    auto items = srs_items(v);
    auto r = srs_means(items);
    auto [help, hinder] = oracle::direct_srs(items, SrsConfig{}.hindering_set);
    EXPECT_NEAR(r.helpful_mean, help, 1e-12);
    EXPECT_NEAR(r.hindering_mean, hinder, 1e-12);
    EXPECT_GE(r.helpful_mean, 1.0);
    EXPECT_LE(r.hindering_mean, 5.0);
  }
}

TEST(Srs, ParseAndConfig) {
  json out;
  for (int k = 1; k <= 14; ++k) out["Metric_" + std::to_string(k)] = {{"score", 4}, {"reason", "r"}};
  auto r = parse_srs(out);
  EXPECT_EQ(r.items.size(), 14u);
  out.erase("Metric_9");
  EXPECT_THROW(parse_srs(out), gateway::ParseRejected);

  SrsConfig bad;
  bad.hindering_set = {"Nope"};
  EXPECT_EQ(code_of([&] { check_config(bad); }), ErrorCode::ConfigError);
}

TEST(Ctrs7, AllFivesAndMissingKey) {
  json out;
  for (const auto& item : rubrics::kCtrs7) {
    out[std::string(item.key)] = 5;
    out[std::string(item.key) + "_score_reason"] = "ok";
  }
  auto gw = fixtures::gateway_with(fixtures::constant(out.dump()));
  auto turns = fixtures::turns_for({"a b c"});
  auto s = score_ctrs7(*gw, kJudge, turns);
  EXPECT_EQ(s.mean(), 5.0);
  out.erase("AutomaticThoughtCoverage");
  auto gw2 = fixtures::gateway_with(fixtures::constant(out.dump()));
  EXPECT_EQ(code_of([&] { score_ctrs7(*gw2, kJudge, turns); }), ErrorCode::JudgeParseFailed);
}

TEST(Targets, ParsingAndOverlap) {
  EXPECT_EQ(parse_target(json{{"therapeutic_targets", "fear of judgment while swimming"}}).text,
            "fear of judgment while swimming");
  EXPECT_THROW(parse_target(json{{"therapeutic_targets", "  "}}), gateway::ParseRejected);
  auto t = parse_target(json{{"therapeutic_targets", "They hate me. Also other things."}});
  EXPECT_EQ(t.text, "They hate me.");
  EXPECT_TRUE(t.flagged);

  auto p = fixtures::profile();
  EXPECT_TRUE(target_overlaps("i am a BAD FRIEND.", p));
  EXPECT_FALSE(target_overlaps("fear of swimming", p));

  auto gw = fixtures::gateway_with(fixtures::constant(R"({"therapeutic_targets": ""})"));
  auto turns = fixtures::turns_for({"a b c"});
  EXPECT_EQ(code_of([&] { extract_target(*gw, kJudge, turns); }), ErrorCode::JudgeParseFailed);
}

TEST(HeadToHead, DebiasAndWinRates) {
  EXPECT_EQ(debias(Preference::A, Preference::B), Preference::A);   // a wins both orders
  EXPECT_EQ(debias(Preference::A, Preference::A), Preference::Tie); // first position wins both
  EXPECT_EQ(debias(Preference::Tie, Preference::A), Preference::Tie);
  std::vector<Preference> v = {Preference::A, Preference::A, Preference::B, Preference::Tie};
  auto w = win_rates(v);
  EXPECT_DOUBLE_EQ(w.a, 50.0);
  EXPECT_DOUBLE_EQ(w.b, 25.0);
  EXPECT_DOUBLE_EQ(w.tie, 25.0);
}

TEST(HeadToHead, SwapExchangesLabels) {
  auto criteria = default_criteria();
  ASSERT_EQ(criteria.size(), 7u);
  // judge verdicts are a hash of the prompt, so any order bias is arbitrary
  auto judge = std::make_shared<fixtures::FnBackend>([&](const ChatRequest& r) {
    auto h = util::sha256_hex(r.messages.front().content);
    json out;
    const char* labels[] = {"A", "B", "Tie"};
    for (std::size_t i = 0; i < criteria.size(); ++i) out[criteria[i]] = labels[h[i] % 3];
    return ChatResponse{{out.dump()}, std::nullopt, false};
  });
  auto gw = fixtures::gateway_with(judge);
  for (int i = 0; i < 20; ++i) {
    auto a = fixtures::turns_for({"first key here", "second " + std::to_string(i)});
    auto b = fixtures::turns_for({"other key " + std::to_string(i * 7)});
    auto ab = head_to_head(*gw, kJudge, a, b, criteria);
    auto ba = head_to_head(*gw, kJudge, b, a, criteria);
    for (const auto& c : criteria) {
      auto x = ab.at(c), y = ba.at(c);
      auto swapped = x == Preference::A ? Preference::B : x == Preference::B ? Preference::A : Preference::Tie;
      EXPECT_EQ(y, swapped);
    }
  }
}

TEST(Report, RowsPerBackendAndEmpty) {
  EXPECT_EQ(render_report(json::object()), "no data\n");
  std::vector<SessionEval> evals;
  for (const char* backend : {"alpha", "beta"}) {
    SessionEval e;
    e.backend = backend;
    RubricScore r{"ctrs7", {}, {}, {0, 6}};
    for (const auto& item : rubrics::kCtrs7) r.item_scores[std::string(item.key)] = 4;
    e.ctrs7 = r;
    e.tags = spread({Tag::Q_Evid, Tag::R_Emo});
    evals.push_back(e);
  }
  auto report = aggregate(evals, {});
  EXPECT_EQ(report["backends"].size(), 2u);
  auto text = render_report(report);
  EXPECT_NE(text.find("alpha"), std::string::npos);
  EXPECT_NE(text.find("beta"), std::string::npos);
  EXPECT_NE(text.find("Diversity"), std::string::npos);
  EXPECT_NE(text.find("AutomaticThoughtCoverage"), std::string::npos);
  EXPECT_NEAR(report["backends"]["alpha"]["diversity"].get<double>(), std::log(2.0), 1e-12);
}

TEST(Report, MetricList) {
  auto o = parse_metrics("ctrs,diversity");
  EXPECT_TRUE(o.ctrs);
  EXPECT_TRUE(o.tags);
  EXPECT_FALSE(o.srs);
  EXPECT_EQ(code_of([] { parse_metrics("ctrs,vibes"); }), ErrorCode::ConfigError);
}
