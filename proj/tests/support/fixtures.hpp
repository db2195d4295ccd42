#pragma once
// Shared builders for the test binaries.

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "stepforge/core/model.hpp"
#include "stepforge/gateway/backend.hpp"
#include "stepforge/gateway/gateway.hpp"
#include "stepforge/plan/planner.hpp"

namespace fixtures {

using namespace stepforge;

/// Backend driven by a callback; counts calls.
class FnBackend : public gateway::Backend {
 public:
  using Fn = std::function<gateway::ChatResponse(const gateway::ChatRequest&)>;
  explicit FnBackend(Fn fn, bool n_ok = true) : fn_(std::move(fn)), n_ok_(n_ok) {}
  gateway::ChatResponse complete(const gateway::ChatRequest& r) override {
    ++calls;
    return fn_(r);
  }
  bool supports_n() const override { return n_ok_; }
  std::atomic<int> calls{0};

 private:
  Fn fn_;
  bool n_ok_;
};

/// Always answers with the same text, n times.
inline std::shared_ptr<FnBackend> constant(std::string text) {
  return std::make_shared<FnBackend>([text](const gateway::ChatRequest& r) {
    gateway::ChatResponse out;
    out.completions.assign(static_cast<std::size_t>(r.n), text);
    return out;
  });
}

/// Answers with texts[i] on the i-th call (the last one repeats).
inline std::shared_ptr<FnBackend> sequence(std::vector<std::string> texts) {
  auto i = std::make_shared<std::atomic<std::size_t>>(0);
  return std::make_shared<FnBackend>([texts, i](const gateway::ChatRequest& r) {
    std::size_t k = std::min((*i)++, texts.size() - 1);
    gateway::ChatResponse out;
    out.completions.assign(static_cast<std::size_t>(r.n), texts[k]);
    return out;
  });
}

inline std::shared_ptr<gateway::Gateway> gateway_with(std::shared_ptr<gateway::Backend> backend,
                                                      const std::string& id = "fake") {
  auto gw = std::make_shared<gateway::Gateway>();
  gw->set_sleeper([](std::chrono::milliseconds) {});
  gw->register_backend(id, std::move(backend), {"fake-model"});
  return gw;
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("stepforge-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& rel) const { return path / rel; }
};

inline const std::vector<std::string>& body_keys() {
  static const std::vector<std::string> keys = {
      "restate the worrying thought", "weigh evidence for it",  "weigh evidence against it",
      "build a balanced view",        "test the new view",      "plan a small experiment",
      "review what was learned",
  };
  return keys;
}

/// Intervention plan with the first `n` body keys plus the terminal key.
inline StagePlan intervention_plan(std::size_t n = 5) {
  StagePlan p;
  p.stage = Stage::Intervention;
  p.strategy = CbtStrategy{StrategyName::Decatastrophizing, "walk through the worst case"};
  p.plan_text = "Use Decatastrophizing to soften the worst-case reading.";
  p.reason_text = "Start from the thought, then test it.";
  p.actions.stage = Stage::Intervention;
  p.actions.keys.assign(body_keys().begin(), body_keys().begin() + static_cast<long>(n));
  p.actions.keys.emplace_back(kEndSession);
  return p;
}

/// C, Cl, C, ..., C with the given counselor actions. Numbering from 1.
inline std::vector<DialogueTurn> turns_for(const std::vector<std::string>& actions) {
  std::vector<DialogueTurn> out;
  int n = 1;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    out.push_back({n++, Role::Counselor, "next step is " + actions[i], actions[i],
                   "Counselor line " + std::to_string(i + 1) + "."});
    if (i + 1 < actions.size())
      out.push_back({n++, Role::Client, std::string(kNullMarker), std::string(kNullMarker),
                     "Client line " + std::to_string(i + 1) + "."});
  }
  return out;
}

/// Walks every key once.
inline std::vector<std::string> full_walk(const ActionSequence& seq) { return seq.keys; }

inline ClientProfile profile(const std::string& id = "p-1") {
  ClientProfile p;
  p.profile_id = id;
  p.name = "Dana Reyes";
  p.basic_information = {{"age", "34"}, {"occupation", "nurse"}};
  p.attitude = AttitudeStyle(Style::Guarded);
  p.negative_thought = "I always let people down.";
  p.surface_level_problem = "Avoiding calls from friends after missing a birthday.";
  p.triggering_situation = "A friend's birthday dinner she forgot.";
  p.automatic_thoughts = {"They must be angry with me.", "I am a bad friend."};
  return p;
}

/// Retained session with diagnostic and intervention walks.
inline SessionRecord session(const std::string& id, const std::vector<std::string>& diag_actions,
                             const std::vector<std::string>& inter_actions, std::size_t body = 5) {
  SessionRecord s;
  s.session_id = id;
  s.profile_id = "p-" + id;
  s.diagnostic.plan = plan::diagnostic_plan();
  s.diagnostic.turns = turns_for(diag_actions);
  StageRecord inter;
  inter.plan = intervention_plan(body);
  inter.turns = turns_for(inter_actions);
  s.intervention = std::move(inter);
  s.status = SessionStatus::Retained;
  return s;
}

/// Session whose walks cover every key once.
inline SessionRecord clean_session(const std::string& id = "s-1", std::size_t body = 5) {
  auto d = plan::diagnostic_plan().actions.keys;
  auto i = intervention_plan(body).actions.keys;
  return session(id, d, i, body);
}

}  // namespace fixtures
