#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepforge/core/model.hpp"
#include "stepforge/gateway/structured_call.hpp"
#include "stepforge/plan/action_cursor.hpp"

namespace stepforge::sim {

enum class PairScheme { RankMatched, Cross };
enum class Mode { Mine, Evaluate };
enum class Termination { TerminalAction, ClientExit, TurnCap };

std::string_view to_string(PairScheme scheme) noexcept;
std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(Termination t) noexcept;
PairScheme parse_pair_scheme(std::string_view text);
Mode parse_mode(std::string_view text);

struct SimulationConfig {
  int n_candidates = 10;
  double temperature = 1.0;
  double top_p = 0.9;
  int max_turns = 20;  // counselor turns
  std::string exit_token = "exit";
  std::string counselor_backend;
  std::string planner_backend;  // empty: counselor_backend
  std::string client_backend;
  std::string evaluator_backend;
  double client_temperature = 1.0;
  double evaluator_temperature = 0.0;
  std::uint64_t rng_seed = 0;  // recorded in provenance
  PairScheme pair_scheme = PairScheme::RankMatched;
  bool include_plan_in_context = true;
};

/// Throws Error(ConfigError).
void check_config(const SimulationConfig& cfg, Mode mode);

// --- client ----------------------------------------------------------------

struct ClientReply {
  std::string utterance;
  std::string thoughts;
  bool is_exit = false;
};

/// Error: ClientParseFailed (after one regeneration).
ClientReply client_step(const gateway::Gateway& gw, const SimulationConfig& cfg, const ClientProfile& profile,
                        std::span<const DialogueTurn> history, const std::string& extra = {});

// --- counselor -------------------------------------------------------------

struct Candidate {
  std::size_t index = 0;  // position in the completion batch
  std::string reasoning;
  std::string action;
  std::string utterance;
  plan::Verdict verdict = plan::Verdict::Stay;
  std::optional<plan::ViolationKind> violation;

  bool valid() const { return verdict != plan::Verdict::Violation; }
  /// Serialized turn object used as pair text.
  std::string text() const;
};

/// Parses one counselor completion; nullopt when it holds no usable turn.
std::optional<Candidate> parse_candidate(const std::string& completion, std::size_t index,
                                         const plan::ActionCursor& cursor);

/// Requests `n` counselor completions for the cursor's position. Unparseable
/// completions are dropped; invalid actions are kept and marked.
/// Error: CandidateFailure when fewer than `min_parsed` parse.
std::vector<Candidate> counselor_candidates(const gateway::Gateway& gw, const SimulationConfig& cfg,
                                            const ClientProfile& profile, const StagePlan& stage_plan,
                                            const plan::ActionCursor& cursor, std::span<const DialogueTurn> history,
                                            int counselor_turn, int n, std::size_t min_parsed);

// --- scoring ---------------------------------------------------------------

struct ScoredCandidate {
  double mean_score = 0.0;
  RubricScore rubric;
};

/// One evaluator call for the whole batch. Error: EvaluatorParseFailed.
std::vector<ScoredCandidate> score_candidates(const gateway::Gateway& gw, const SimulationConfig& cfg, PairTask task,
                                              const ClientProfile& profile, std::span<const DialogueTurn> history,
                                              std::span<const std::string> candidates);

/// Evaluator list output to per-candidate scores. Throws ParseRejected.
std::vector<ScoredCandidate> parse_scores(const json& value, PairTask task, std::size_t expected);

// --- selection -------------------------------------------------------------

struct Selection {
  std::optional<std::size_t> selected;                       // batch position
  std::vector<std::pair<std::size_t, std::size_t>> pairs;    // (chosen, rejected) positions
};

/// Argmax over valid entries, lowest position on ties. Pairs follow the
/// descending rank: rank-matched takes (best valid k, worst overall k) for
/// k = 0, 1; cross takes every combination of the two best valid and the two
/// worst overall. A pair survives only with strictly higher chosen score and
/// distinct texts.
Selection select_and_pair(std::span<const double> scores, const std::vector<bool>& valid,
                          std::span<const std::string> texts, PairScheme scheme = PairScheme::RankMatched);

/// All entries valid, texts distinct.
Selection select_and_pair(std::span<const double> scores, PairScheme scheme = PairScheme::RankMatched);

// --- sessions --------------------------------------------------------------

struct SimulationResult {
  SessionRecord record;
  Termination termination = Termination::TerminalAction;
  int counselor_turns = 0;
  std::vector<PreferencePair> utterance_pairs;
  std::vector<PreferencePair> plan_pairs;
};

std::string simulation_id_for(const ClientProfile& profile, const SimulationConfig& cfg, Mode mode);

/// Turn-by-turn session. Step errors are rethrown as StageError tagged with
/// the counselor turn.
SimulationResult run_session(const gateway::Gateway& gw, const ClientProfile& profile,
                             std::span<const CbtStrategy> strategies, const SimulationConfig& cfg, Mode mode);

struct SimulationFailure {
  std::string profile_id;
  std::string message;
};

struct BatchResult {
  std::vector<SimulationResult> sessions;  // profile order
  std::vector<SimulationFailure> failures;
};

BatchResult run_batch(const gateway::Gateway& gw, const std::vector<ClientProfile>& profiles,
                      std::span<const CbtStrategy> strategies, const SimulationConfig& cfg, Mode mode,
                      std::size_t workers);

}  // namespace stepforge::sim
