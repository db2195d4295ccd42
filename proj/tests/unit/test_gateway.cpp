#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "fixtures.hpp"
#include "stepforge/error.hpp"
#include "stepforge/gateway/chat.hpp"
#include "stepforge/gateway/json_extract.hpp"
#include "stepforge/gateway/replay_store.hpp"
#include "stepforge/gateway/structured_call.hpp"

using namespace stepforge;
using namespace stepforge::gateway;

namespace {

std::string slurp(const std::string& rel) {
  std::ifstream in(std::string(STEPFORGE_TEST_DIR) + "/" + rel, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ChatRequest golden_request() {
  ChatRequest r;
  r.backend_id = "openai";
  r.model = "gpt-4o-mini";
  r.messages = {{MessageRole::System, "You are a CBT counselor."},
                {MessageRole::User, "Client: I keep \"failing\".\nReply in JSON."},
                {MessageRole::Assistant, "{\"utterance\":\"Tell me more.\"}"}};
  r.temperature = 0.7;
  r.top_p = 0.9;
  r.n = 3;
  r.max_output_tokens = 512;
  r.request_tag = "sim.counselor";
  return r;
}

ChatRequest simple(const std::string& text = "hi", int n = 1) {
  ChatRequest r;
  r.backend_id = "b";
  r.model = "m";
  r.messages = {{MessageRole::User, text}};
  r.n = n;
  return r;
}

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

}  // namespace

TEST(Wire, RequestBodyMatchesGoldenBytes) {
  EXPECT_EQ(wire_body(golden_request()), slurp("golden/chat_request.json"));
}

TEST(Wire, MaxTokensOmittedWhenUnset) {
  auto r = golden_request();
  r.max_output_tokens.reset();
  EXPECT_EQ(wire_body(r).find("max_tokens"), std::string::npos);
}

TEST(Wire, CannedResponseParsesInChoiceOrder) {
  auto resp = parse_wire_response(slurp("golden/chat_response.json"));
  EXPECT_EQ(resp.completions, (std::vector<std::string>{"{\"utterance\": \"first\"}", "second", "third"}));
  ASSERT_TRUE(resp.usage);
  EXPECT_EQ(resp.usage->prompt_tokens, 57);
  EXPECT_EQ(resp.usage->completion_tokens, 21);
  EXPECT_EQ(code_of([] { parse_wire_response("{}"); }), ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([] { parse_wire_response(R"({"choices":[{"message":{}}]})"); }), ErrorCode::MalformedResponse);
}

TEST(Wire, OpenAiBackendPostsGoldenBody) {
  httplib::Server srv;
  std::string seen_body, seen_auth, seen_path;
  srv.Post(R"(/.*)", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    seen_path = req.path;
    seen_auth = req.get_header_value("Authorization");
    res.set_content(slurp("golden/chat_response.json"), "application/json");
  });
  int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  OpenAiBackend backend({"http://127.0.0.1:" + std::to_string(port) + "/proxy", "sk-test", std::chrono::seconds(5)});
  auto resp = backend.complete(golden_request());
  srv.stop();
  t.join();

  EXPECT_EQ(seen_path, "/proxy/v1/chat/completions");
  EXPECT_EQ(seen_auth, "Bearer sk-test");
  EXPECT_EQ(seen_body, slurp("golden/chat_request.json"));
  EXPECT_EQ(resp.completions.size(), 3u);
}

TEST(Wire, HttpErrorsMapToStatusErrors) {
  httplib::Server srv;
  srv.Post(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("busy", "text/plain");
  });
  int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  OpenAiBackend backend({"http://127.0.0.1:" + std::to_string(port), "", std::chrono::seconds(5)});
  try {
    backend.complete(golden_request());
    ADD_FAILURE();
  } catch (const HttpStatusError& e) {
    EXPECT_EQ(e.status(), 503);
    EXPECT_TRUE(e.retryable());
  }
  srv.stop();
  t.join();
}

TEST(ApiKeys, VariableName) {
  EXPECT_EQ(api_key_variable("open-ai.eu"), "STEPFORGE_API_KEY_OPEN_AI_EU");
}

TEST(Gateway, ReplayServesRecordedEntry) {
  auto store = std::make_shared<ReplayStore>();
  store->put_if_absent(replay_digest(simple()), {"ok"});
  Gateway gw(ReplayMode::Replay, store);
  gw.register_backend("b", nullptr, {"m"});
  auto a = gw.complete(simple());
  auto b = gw.complete(simple());
  EXPECT_EQ(a.completions, std::vector<std::string>{"ok"});
  EXPECT_TRUE(a.cache_hit);
  EXPECT_EQ(a.completions, b.completions);
  EXPECT_EQ(code_of([&] { gw.complete(simple("other")); }), ErrorCode::ReplayMiss);
}

TEST(Gateway, UnknownBackendIsUnavailable) {
  Gateway gw;
  auto r = simple();
  r.backend_id = "x";
  EXPECT_EQ(code_of([&] { gw.complete(r); }), ErrorCode::BackendUnavailable);
}

TEST(Gateway, DigestIgnoresTagButNotSampling) {
  auto a = simple();
  auto b = a;
  b.request_tag = "something";
  EXPECT_EQ(replay_digest(a), replay_digest(b));
  b.temperature = 0.5;
  EXPECT_NE(replay_digest(a), replay_digest(b));
  EXPECT_NE(replay_digest(a, 0), replay_digest(a, 1));
}

TEST(Gateway, RecordWritesOnceAndReplaysFromFile) {
  fixtures::TempDir dir("rec");
  auto backend = fixtures::sequence({"first", "second"});
  {
    auto store = std::make_shared<ReplayStore>(dir / "cache.jsonl");
    Gateway gw(ReplayMode::Record, store);
    gw.register_backend("b", backend, {"m"});
    EXPECT_EQ(gw.complete(simple()).completions.front(), "first");
    EXPECT_EQ(gw.complete(simple()).completions.front(), "first");  // cached
    EXPECT_EQ(backend->calls, 1);
    EXPECT_EQ(store->size(), 1u);
  }
  auto store = std::make_shared<ReplayStore>(dir / "cache.jsonl");
  EXPECT_EQ(store->size(), 1u);
  Gateway replay(ReplayMode::Replay, store);
  replay.register_backend("b", nullptr, {"m"});
  EXPECT_EQ(replay.complete(simple()).completions.front(), "first");
}

TEST(Gateway, ConcurrentRecordKeepsOneEntryPerKey) {
  auto store = std::make_shared<ReplayStore>();
  std::atomic<int> k{0};
  auto backend = std::make_shared<fixtures::FnBackend>([&](const ChatRequest&) {
    return ChatResponse{{"v" + std::to_string(k++)}, std::nullopt, false};
  });
  Gateway gw(ReplayMode::Record, store);
  gw.register_backend("b", backend, {"m", 8});
  std::vector<std::string> seen(16);
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < 16; ++i) pool.emplace_back([&, i] { seen[i] = gw.complete(simple()).completions.front(); });
  }
  EXPECT_EQ(store->size(), 1u);
  for (const auto& s : seen) EXPECT_EQ(s, seen.front());
}

TEST(Gateway, OffModeLeavesStoreEmpty) {
  auto store = std::make_shared<ReplayStore>();
  Gateway gw(ReplayMode::Off, store);
  gw.register_backend("b", fixtures::constant("x"), {"m"});
  gw.complete(simple());
  EXPECT_EQ(store->size(), 0u);
}

TEST(Gateway, RetriesTransportErrorsWithBackoff) {
  int calls = 0;
  auto backend = std::make_shared<fixtures::FnBackend>([&](const ChatRequest&) -> ChatResponse {
    if (++calls < 3) throw TransportError("reset");
    return {{"fine"}, std::nullopt, false};
  });
  Gateway gw;
  std::vector<long> delays;
  gw.set_sleeper([&](std::chrono::milliseconds d) { delays.push_back(static_cast<long>(d.count())); });
  gw.register_backend("b", backend, {"m"});
  EXPECT_EQ(gw.complete(simple()).completions.front(), "fine");
  EXPECT_EQ(delays, (std::vector<long>{1000, 2000}));
}

TEST(Gateway, GivesUpAfterThreeAttemptsAndNeverRetries4xx) {
  int calls = 0;
  auto flaky = std::make_shared<fixtures::FnBackend>([&](const ChatRequest&) -> ChatResponse {
    ++calls;
    throw HttpStatusError(502, "bad gateway");
  });
  auto gw = fixtures::gateway_with(flaky, "b");
  EXPECT_EQ(code_of([&] { gw->complete(simple()); }), ErrorCode::BackendUnavailable);
  EXPECT_EQ(calls, 3);

  calls = 0;
  auto denied = std::make_shared<fixtures::FnBackend>([&](const ChatRequest&) -> ChatResponse {
    ++calls;
    throw HttpStatusError(401, "no");
  });
  auto gw2 = fixtures::gateway_with(denied, "b");
  EXPECT_EQ(code_of([&] { gw2->complete(simple()); }), ErrorCode::BackendUnavailable);
  EXPECT_EQ(calls, 1);
}

TEST(Gateway, EmulatesNWithSingleCallsAndReplaysThem) {
  auto store = std::make_shared<ReplayStore>();
  int calls = 0;
  auto backend = std::make_shared<fixtures::FnBackend>(
      [&](const ChatRequest& r) {
        EXPECT_EQ(r.n, 1);
        return ChatResponse{{"c" + std::to_string(calls++)}, std::nullopt, false};
      },
      false);
  Gateway gw(ReplayMode::Record, store);
  gw.register_backend("b", backend, {"m"});
  auto out = gw.complete(simple("x", 3));
  EXPECT_EQ(out.completions, (std::vector<std::string>{"c0", "c1", "c2"}));
  EXPECT_EQ(store->size(), 3u);

  Gateway replay(ReplayMode::Replay, store);
  replay.register_backend("b", nullptr, {"m"});
  EXPECT_EQ(replay.complete(simple("x", 3)).completions, out.completions);
}

TEST(Gateway, WrongCompletionCountIsMalformed) {
  auto gw = fixtures::gateway_with(std::make_shared<fixtures::FnBackend>([](const ChatRequest&) {
                                     return ChatResponse{{"only one"}, std::nullopt, false};
                                   }),
                                   "b");
  EXPECT_EQ(code_of([&] { gw->complete(simple("x", 2)); }), ErrorCode::MalformedResponse);
}

TEST(RateLimiter, SleepsWhenBucketEmpty) {
  std::vector<std::chrono::nanoseconds> sleeps;
  RateLimiter limiter(10.0, 1.0, [&](std::chrono::nanoseconds d) { sleeps.push_back(d); });
  limiter.acquire();
  limiter.acquire();
  ASSERT_FALSE(sleeps.empty());
  EXPECT_GT(sleeps.back().count(), 0);
}

TEST(ExtractJson, Examples) {
  EXPECT_EQ(extract_json("```json\n{\"a\":1}\n```", JsonShape::Object), json({{"a", 1}}));
  EXPECT_EQ(extract_json("Here you go: [1,2]", JsonShape::List), json({1, 2}));
  EXPECT_EQ(code_of([] { extract_json("no json here", JsonShape::Object); }), ErrorCode::NoJsonFound);
  EXPECT_EQ(code_of([] { extract_json("[1, 2]", JsonShape::Object); }), ErrorCode::ShapeMismatch);
}

TEST(ExtractJson, RepairPass) {
  EXPECT_EQ(extract_json("{'a': 'b',}", JsonShape::Object), json({{"a", "b"}}));
  EXPECT_EQ(extract_json("sure:\n[1, 2, 3,]\nthanks", JsonShape::List), json({1, 2, 3}));
  EXPECT_FALSE(parse_with_repair("{oops"));
}

TEST(ExtractJson, FindsEncodedValueInsideProse) {
  std::mt19937 rng(5);
  const std::vector<std::string> prose = {"", "Sure! ", "Here is the JSON:\n", "```json\n", "text with no braces "};
  const std::vector<std::string> tail = {"", "\n```", " Hope that helps.", "\n\nLet me know."};
  for (int i = 0; i < 300; ++i) {
    json v = json::object();
    for (int k = rng() % 5; k >= 0; --k) {
      switch (rng() % 4) {
        case 0: v["k" + std::to_string(k)] = static_cast<int>(rng() % 100); break;
        case 1: v["k" + std::to_string(k)] = "s}{][\"" + std::to_string(rng() % 9); break;
        case 2: v["k" + std::to_string(k)] = json::array({1, "two", nullptr}); break;
        default: v["k" + std::to_string(k)] = json{{"nested", {{"x", true}}}}; break;
      }
    }
    const bool as_list = rng() % 2;
    json value = as_list ? json::array({v, 3}) : v;
    std::string text = prose[rng() % prose.size()] + value.dump(rng() % 2 ? 2 : -1) + tail[rng() % tail.size()];
    EXPECT_EQ(extract_json(text, as_list ? JsonShape::List : JsonShape::Object), value) << text;
  }
}

TEST(StructuredCall, RegeneratesOnceWithCorrection) {
  std::vector<std::size_t> message_counts;
  auto backend = std::make_shared<fixtures::FnBackend>([&](const ChatRequest& r) {
    message_counts.push_back(r.messages.size());
    std::string text = r.messages.size() == 1 ? "not json" : "{\"ok\": true}";
    return ChatResponse{{text}, std::nullopt, false};
  });
  auto gw = fixtures::gateway_with(backend);
  CallSpec spec{"fake", {}, 0.0, 1.0, {}};
  bool ok = call_structured(*gw, spec.request("p", "t"), JsonShape::Object,
                            [](const json& j) { return j.at("ok").get<bool>(); }, ErrorCode::JudgeParseFailed);
  EXPECT_TRUE(ok);
  EXPECT_EQ(message_counts, (std::vector<std::size_t>{1, 3}));
}

TEST(StructuredCall, FailsWithStageCodeAfterSecondMiss) {
  auto gw = fixtures::gateway_with(fixtures::constant("nothing useful"));
  CallSpec spec{"fake", {}, 0.0, 1.0, {}};
  EXPECT_EQ(code_of([&] {
              call_structured(*gw, spec.request("p", "t"), JsonShape::Object, [](const json& j) { return j; },
                              ErrorCode::DecompositionFailed);
            }),
            ErrorCode::DecompositionFailed);
}
