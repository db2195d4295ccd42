#include "stepforge/sim/simulation.hpp"

#include <algorithm>
#include <numeric>

#include "stepforge/core/sample_format.hpp"
#include "stepforge/plan/planner.hpp"
#include "stepforge/prompts.hpp"
#include "stepforge/quality/gate.hpp"
#include "stepforge/rubrics.hpp"
#include "stepforge/util/hash.hpp"
#include "stepforge/util/parallel.hpp"

namespace stepforge::sim {

namespace {

constexpr const char* kFollowOrder =
    "None of those replies used an allowed action. Use the current action or the next action candidate exactly.";

constexpr std::string_view kReasonSuffix[] = {"_reason"};

gateway::CallSpec counselor_spec(const SimulationConfig& cfg) {
  return {cfg.counselor_backend, "", cfg.temperature, cfg.top_p, std::nullopt};
}

gateway::CallSpec planner_spec(const SimulationConfig& cfg) {
  return {cfg.planner_backend.empty() ? cfg.counselor_backend : cfg.planner_backend, "", cfg.temperature, cfg.top_p,
          std::nullopt};
}

std::string previous_action(const plan::ActionCursor& c) {
  return c.history.empty() ? std::string(samples::kNoAction) : c.history.back().action;
}

std::string next_candidate(const plan::ActionCursor& c) {
  if (c.history.empty()) return c.current_key();
  return c.next_key().value_or(std::string(samples::kNoAction));
}

std::string evaluator_text(const Candidate& c) { return "[" + c.action + "] " + c.utterance; }

std::string pair_id(const std::string& session, const std::string& where, std::size_t chosen, std::size_t rejected) {
  return util::short_id("pair", session + "\n" + where + "\n" + std::to_string(chosen) + ":" + std::to_string(rejected));
}

struct PlanCandidate {
  std::size_t index = 0;
  std::optional<StagePlan> plan;  // set when every constraint holds
  std::string text;
};

}  // namespace

std::string_view to_string(PairScheme scheme) noexcept {
  return scheme == PairScheme::RankMatched ? "rank_matched" : "cross";
}

std::string_view to_string(Mode mode) noexcept { return mode == Mode::Mine ? "mine" : "evaluate"; }

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::TerminalAction: return "TerminalAction";
    case Termination::ClientExit: return "ClientExit";
    case Termination::TurnCap: return "TurnCap";
  }
  return "";
}

PairScheme parse_pair_scheme(std::string_view text) {
  if (text == "rank_matched") return PairScheme::RankMatched;
  if (text == "cross") return PairScheme::Cross;
  throw Error(ErrorCode::ConfigError, "unknown pair scheme: " + std::string(text));
}

Mode parse_mode(std::string_view text) {
  if (text == "mine") return Mode::Mine;
  if (text == "evaluate") return Mode::Evaluate;
  throw Error(ErrorCode::ConfigError, "unknown simulation mode: " + std::string(text));
}

void check_config(const SimulationConfig& cfg, Mode mode) {
  if (mode == Mode::Mine && cfg.n_candidates < 2) throw Error(ErrorCode::ConfigError, "n_candidates must be >= 2");
  if (cfg.n_candidates < 1) throw Error(ErrorCode::ConfigError, "n_candidates must be >= 1");
  if (cfg.max_turns < 1) throw Error(ErrorCode::ConfigError, "max_turns must be >= 1");
  if (cfg.counselor_backend.empty() || cfg.client_backend.empty())
    throw Error(ErrorCode::ConfigError, "counselor and client backends are required");
  if (mode == Mode::Mine && cfg.evaluator_backend.empty())
    throw Error(ErrorCode::ConfigError, "mining needs an evaluator backend");
}

// ---------------------------------------------------------------------------

ClientReply client_step(const gateway::Gateway& gw, const SimulationConfig& cfg, const ClientProfile& profile,
                        std::span<const DialogueTurn> history, const std::string& extra) {
  gateway::CallSpec spec{cfg.client_backend, "", cfg.client_temperature, 1.0, std::nullopt};
  return gateway::call_structured(
      gw, spec.request(prompts::client(profile, history, extra), prompts::tag::kClient), gateway::JsonShape::Object,
      [&](const json& v) {
        if (!v.is_object() || !v.contains("utterance") || !v["utterance"].is_string())
          throw gateway::ParseRejected("client reply lacks an utterance");
        ClientReply r;
        r.utterance = v["utterance"].get<std::string>();
        if (v.contains("thoughts") && v["thoughts"].is_string()) r.thoughts = v["thoughts"].get<std::string>();
        if (r.utterance.find_first_not_of(" \t\r\n") == std::string::npos)
          throw gateway::ParseRejected("client utterance is empty");
        r.is_exit = canonicalize_action_key(r.utterance) == canonicalize_action_key(cfg.exit_token);
        return r;
      },
      ErrorCode::ClientParseFailed);
}

std::string Candidate::text() const { return samples::turn_target(reasoning, action, utterance); }

std::optional<Candidate> parse_candidate(const std::string& completion, std::size_t index,
                                         const plan::ActionCursor& cursor) {
  json v;
  try {
    v = gateway::extract_json(completion, gateway::JsonShape::Object);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (!v.contains("action") || !v["action"].is_string() || !v.contains("utterance") || !v["utterance"].is_string())
    return std::nullopt;
  Candidate c;
  c.index = index;
  c.action = v["action"].get<std::string>();
  c.utterance = v["utterance"].get<std::string>();
  if (v.contains("action_reasoning") && v["action_reasoning"].is_string())
    c.reasoning = v["action_reasoning"].get<std::string>();
  if (c.utterance.find_first_not_of(" \t\r\n") == std::string::npos || !plan::match_form(c.action)) return std::nullopt;
  auto r = plan::step(cursor, c.action);
  c.verdict = r.verdict;
  c.violation = r.violation;
  return c;
}

std::vector<Candidate> counselor_candidates(const gateway::Gateway& gw, const SimulationConfig& cfg,
                                            const ClientProfile& profile, const StagePlan& stage_plan,
                                            const plan::ActionCursor& cursor, std::span<const DialogueTurn> history,
                                            int counselor_turn, int n, std::size_t min_parsed) {
  prompts::CounselorContext ctx;
  ctx.profile = &profile;
  ctx.plan = &stage_plan;
  ctx.current_action = cursor.history.empty() ? std::string(samples::kNoAction) : cursor.current_key();
  ctx.next_action = next_candidate(cursor);
  ctx.turn_num = counselor_turn;
  ctx.max_turns = cfg.max_turns;

  auto request = counselor_spec(cfg).request(prompts::counselor(history, ctx), prompts::tag::kCounselor, n);
  auto response = gw.complete(request);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < response.completions.size(); ++i)
    if (auto c = parse_candidate(response.completions[i], i, cursor)) out.push_back(std::move(*c));
  if (out.size() < min_parsed)
    throw Error(ErrorCode::CandidateFailure, std::to_string(out.size()) + " of " +
                                                 std::to_string(response.completions.size()) +
                                                 " counselor candidates parsed");
  return out;
}

// ---------------------------------------------------------------------------

std::vector<ScoredCandidate> parse_scores(const json& value, PairTask task, std::size_t expected) {
  if (!value.is_array()) throw gateway::ParseRejected("evaluator output is not a list");
  if (value.size() != expected)
    throw gateway::ParseRejected("evaluator returned " + std::to_string(value.size()) + " entries for " +
                                 std::to_string(expected) + " candidates");
  const auto items = task == PairTask::Utterance ? std::span<const rubrics::Item>(rubrics::kUtterance)
                                                 : std::span<const rubrics::Item>(rubrics::kPlan);
  const std::string id = task == PairTask::Utterance ? "utterance" : "plan";
  std::vector<ScoredCandidate> out;
  for (const auto& entry : value) {
    ScoredCandidate s;
    s.rubric = quality::parse_rubric(entry, items, id, {1, 5}, kReasonSuffix);
    double sum = 0.0;
    for (const auto& item : items) sum += s.rubric.item_scores.at(std::string(item.key));
    s.mean_score = sum / static_cast<double>(items.size());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScoredCandidate> score_candidates(const gateway::Gateway& gw, const SimulationConfig& cfg, PairTask task,
                                              const ClientProfile& profile, std::span<const DialogueTurn> history,
                                              std::span<const std::string> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::EvaluatorParseFailed, "no candidates to score");
  gateway::CallSpec spec{cfg.evaluator_backend, "", cfg.evaluator_temperature, 1.0, std::nullopt};
  std::string prompt = task == PairTask::Utterance ? prompts::evaluate_utterances(profile, history, candidates)
                                                   : prompts::evaluate_plans(history, candidates);
  const char* tag = task == PairTask::Utterance ? prompts::tag::kEvalUtterance : prompts::tag::kEvalPlan;
  return gateway::call_structured(
      gw, spec.request(std::move(prompt), tag), gateway::JsonShape::List,
      [&](const json& v) { return parse_scores(v, task, candidates.size()); }, ErrorCode::EvaluatorParseFailed);
}

// ---------------------------------------------------------------------------

Selection select_and_pair(std::span<const double> scores, const std::vector<bool>& valid,
                          std::span<const std::string> texts, PairScheme scheme) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<std::size_t> best;  // valid, best first
  for (auto i : rank)
    if (valid[i]) best.push_back(i);
  std::vector<std::size_t> worst(rank.rbegin(), rank.rend());

  Selection sel;
  if (!best.empty()) sel.selected = best.front();

  auto consider = [&](std::size_t chosen, std::size_t rejected) {
    if (chosen == rejected || !(scores[chosen] > scores[rejected]) || texts[chosen] == texts[rejected]) return;
    sel.pairs.emplace_back(chosen, rejected);
  };
  if (scheme == PairScheme::RankMatched) {
    for (std::size_t k = 0; k < 2 && k < best.size() && k < worst.size(); ++k) consider(best[k], worst[k]);
  } else {
    for (std::size_t a = 0; a < 2 && a < best.size(); ++a)
      for (std::size_t b = 0; b < 2 && b < worst.size(); ++b) consider(best[a], worst[b]);
  }
  return sel;
}

Selection select_and_pair(std::span<const double> scores, PairScheme scheme) {
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < scores.size(); ++i) texts.push_back(std::to_string(i));
  return select_and_pair(scores, std::vector<bool>(scores.size(), true), texts, scheme);
}

// ---------------------------------------------------------------------------

std::string simulation_id_for(const ClientProfile& profile, const SimulationConfig& cfg, Mode mode) {
  return util::short_id("sim", profile.profile_id + "\n" + cfg.counselor_backend + "\n" + std::string(to_string(mode)));
}

namespace {

struct Loop {
  const gateway::Gateway& gw;
  const ClientProfile& profile;
  std::span<const CbtStrategy> strategies;
  const SimulationConfig& cfg;
  Mode mode;
  SimulationResult result;
  std::vector<DialogueTurn> history;  // whole session

  StageRecord& stage_record(Stage s) { return s == Stage::Diagnostic ? result.record.diagnostic : *result.record.intervention; }

  void append(Stage s, DialogueTurn t) {
    auto& rec = stage_record(s);
    t.turn_num = static_cast<int>(rec.turns.size()) + 1;
    rec.turns.push_back(t);
    history.push_back(std::move(t));
  }

  // Picks this turn's counselor reply, mining pairs in Mine mode.
  Candidate counselor_turn(const StagePlan& stage_plan, const plan::ActionCursor& cursor, int turn) {
    const bool mine = mode == Mode::Mine;
    const int n = mine ? cfg.n_candidates : 1;
    const std::size_t min_parsed = mine ? 2 : 1;

    auto candidates = counselor_candidates(gw, cfg, profile, stage_plan, cursor, history, turn, n, min_parsed);
    bool any_valid = std::any_of(candidates.begin(), candidates.end(), [](const Candidate& c) { return c.valid(); });
    if (!any_valid) {
      // One corrective request; its prompt differs, so replay stays exact.
      prompts::CounselorContext ctx{&profile, &stage_plan,
                                    cursor.history.empty() ? std::string(samples::kNoAction) : cursor.current_key(),
                                    next_candidate(cursor), turn, cfg.max_turns};
      auto request = counselor_spec(cfg).request(prompts::counselor(history, ctx), prompts::tag::kCounselor, n);
      request.messages.push_back({gateway::MessageRole::User, kFollowOrder});
      auto response = gw.complete(request);
      std::vector<Candidate> retry;
      for (std::size_t i = 0; i < response.completions.size(); ++i)
        if (auto c = parse_candidate(response.completions[i], i, cursor)) retry.push_back(std::move(*c));
      if (std::none_of(retry.begin(), retry.end(), [](const Candidate& c) { return c.valid(); }))
        throw Error(ErrorCode::CandidateFailure, "no counselor candidate follows the action order");
      if (retry.size() >= min_parsed) candidates = std::move(retry);
      else candidates.insert(candidates.end(), retry.begin(), retry.end());
      for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].index = i;
    }

    if (!mine) {
      for (const auto& c : candidates)
        if (c.valid()) return c;
    }

    std::vector<std::string> eval_texts, texts;
    std::vector<bool> valid(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      eval_texts.push_back(evaluator_text(candidates[i]));
      texts.push_back(candidates[i].text());
      valid[i] = candidates[i].valid();
    }
    auto scored = score_candidates(gw, cfg, PairTask::Utterance, profile, history, eval_texts);
    std::vector<double> scores;
    for (const auto& s : scored) scores.push_back(s.mean_score);
    auto sel = select_and_pair(scores, valid, texts, cfg.pair_scheme);

    const std::string* plan_text = cfg.include_plan_in_context ? &stage_plan.plan_text : nullptr;
    const auto context = samples::utterance_context(history, plan_text, previous_action(cursor), next_candidate(cursor));
    for (auto [c, r] : sel.pairs) {
      PreferencePair p;
      p.pair_id = pair_id(result.record.session_id, "turn" + std::to_string(turn), c, r);
      p.task = PairTask::Utterance;
      p.context = context;
      p.chosen = texts[c];
      p.rejected = texts[r];
      p.chosen_score = scores[c];
      p.rejected_score = scores[r];
      p.source_session = result.record.session_id;
      result.utterance_pairs.push_back(std::move(p));
    }
    return candidates[*sel.selected];
  }

  StagePlan intervention_plan() {
    const auto& diag = result.record.diagnostic.turns;
    if (mode == Mode::Evaluate) return plan::generate_intervention_plan(gw, planner_spec(cfg), diag, strategies);

    auto request = planner_spec(cfg).request(prompts::planner(diag, strategies), prompts::tag::kPlanner, cfg.n_candidates);
    auto response = gw.complete(request);
    std::vector<PlanCandidate> candidates;
    for (std::size_t i = 0; i < response.completions.size(); ++i) {
      json v;
      try {
        v = gateway::extract_json(response.completions[i], gateway::JsonShape::Object);
      } catch (const Error&) {
        continue;
      }
      PlanCandidate pc;
      pc.index = candidates.size();
      try {
        pc.plan = plan::parse_planner_output(v, strategies);
        pc.text = samples::plan_target(*pc.plan);
      } catch (const ActionConstraintError&) {
        pc.text = v.dump();
      } catch (const Error&) {
        continue;
      }
      candidates.push_back(std::move(pc));
    }
    const bool any_valid = std::any_of(candidates.begin(), candidates.end(), [](const auto& c) { return c.plan.has_value(); });
    if (candidates.size() < 2 || !any_valid) {
      // Not enough material to rank; fall back to a single checked plan.
      return plan::generate_intervention_plan(gw, planner_spec(cfg), diag, strategies);
    }

    std::vector<std::string> texts;
    std::vector<bool> valid(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      texts.push_back(candidates[i].text);
      valid[i] = candidates[i].plan.has_value();
    }
    auto scored = score_candidates(gw, cfg, PairTask::Plan, profile, diag, texts);
    std::vector<double> scores;
    for (const auto& s : scored) scores.push_back(s.mean_score);
    auto sel = select_and_pair(scores, valid, texts, cfg.pair_scheme);
    const auto context = samples::planner_context(diag);
    for (auto [c, r] : sel.pairs) {
      PreferencePair p;
      p.pair_id = pair_id(result.record.session_id, "plan", c, r);
      p.task = PairTask::Plan;
      p.context = context;
      p.chosen = texts[c];
      p.rejected = texts[r];
      p.chosen_score = scores[c];
      p.rejected_score = scores[r];
      p.source_session = result.record.session_id;
      result.plan_pairs.push_back(std::move(p));
    }
    return *candidates[*sel.selected].plan;
  }

  void run() {
    auto& rec = result.record;
    rec.session_id = simulation_id_for(profile, cfg, mode);
    rec.profile_id = profile.profile_id;
    rec.status = SessionStatus::Draft;
    rec.diagnostic.plan = plan::diagnostic_plan();
    rec.provenance.backends = {{"counselor", cfg.counselor_backend},
                               {"planner", cfg.planner_backend.empty() ? cfg.counselor_backend : cfg.planner_backend},
                               {"client", cfg.client_backend}};
    if (mode == Mode::Mine) rec.provenance.backends["evaluator"] = cfg.evaluator_backend;
    rec.provenance.sampling = {{"temperature", cfg.temperature},
                               {"top_p", cfg.top_p},
                               {"n_candidates", mode == Mode::Mine ? cfg.n_candidates : 1}};
    rec.provenance.notes["mode"] = std::string(to_string(mode));
    rec.provenance.notes["rng_seed"] = std::to_string(cfg.rng_seed);

    Stage stage = Stage::Diagnostic;
    plan::ActionCursor cursor(rec.diagnostic.plan.actions);
    int turn = 0;
    result.termination = Termination::TurnCap;
    while (turn < cfg.max_turns) {
      ++turn;
      const StagePlan& stage_plan = stage_record(stage).plan;
      Candidate chosen;
      try {
        chosen = counselor_turn(stage_plan, cursor, turn);
      } catch (const Error& e) {
        throw StageError(e.code(), "turn " + std::to_string(turn), e.what());
      }
      cursor = plan::step(cursor, chosen.action, turn).cursor;
      DialogueTurn t;
      t.role = Role::Counselor;
      t.action_reasoning = chosen.reasoning.empty() ? std::string(kNullMarker) : chosen.reasoning;
      t.action = chosen.action;
      t.utterance = chosen.utterance;
      append(stage, std::move(t));

      if (cursor.at_terminal()) {
        if (stage == Stage::Intervention) {
          result.termination = Termination::TerminalAction;
          break;
        }
        StageRecord next;
        try {
          next.plan = intervention_plan();
        } catch (const Error& e) {
          throw StageError(e.code(), "plan after turn " + std::to_string(turn), e.what());
        }
        rec.intervention = std::move(next);
        stage = Stage::Intervention;
        cursor = plan::ActionCursor(rec.intervention->plan.actions);
        continue;
      }

      ClientReply reply;
      try {
        reply = client_step(gw, cfg, profile, history);
      } catch (const Error& e) {
        throw StageError(e.code(), "turn " + std::to_string(turn), e.what());
      }
      if (reply.is_exit) {
        result.termination = Termination::ClientExit;
        break;
      }
      DialogueTurn c;
      c.role = Role::Client;
      c.utterance = reply.utterance;
      append(stage, std::move(c));
    }
    result.counselor_turns = turn;
    rec.provenance.notes["termination"] = std::string(to_string(result.termination));
  }
};

}  // namespace

SimulationResult run_session(const gateway::Gateway& gw, const ClientProfile& profile,
                             std::span<const CbtStrategy> strategies, const SimulationConfig& cfg, Mode mode) {
  check_config(cfg, mode);
  Loop loop{gw, profile, strategies, cfg, mode, {}, {}};
  loop.run();
  return std::move(loop.result);
}

BatchResult run_batch(const gateway::Gateway& gw, const std::vector<ClientProfile>& profiles,
                      std::span<const CbtStrategy> strategies, const SimulationConfig& cfg, Mode mode,
                      std::size_t workers) {
  check_config(cfg, mode);
  auto outcomes = util::parallel_map(profiles, workers, [&](const ClientProfile& p, std::size_t) {
    return run_session(gw, p, strategies, cfg, mode);
  });
  BatchResult out;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (outcomes[i].ok()) {
      out.sessions.push_back(std::move(*outcomes[i].value));
      continue;
    }
    try {
      std::rethrow_exception(outcomes[i].error);
    } catch (const std::exception& e) {
      out.failures.push_back({profiles[i].profile_id, e.what()});
    }
  }
  return out;
}

}  // namespace stepforge::sim
