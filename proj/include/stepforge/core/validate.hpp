#pragma once

#include <span>
#include <string>
#include <vector>

#include "stepforge/core/model.hpp"

namespace stepforge {

/// Violation codes reported by validate_session and the stage checks.
namespace violation {
inline constexpr const char* kNoDiagnosticTurns = "no-diagnostic-turns";
inline constexpr const char* kAlternation = "alternation";
inline constexpr const char* kFirstNotCounselor = "first-not-counselor";
inline constexpr const char* kLastNotCounselor = "last-not-counselor";
inline constexpr const char* kTurnCap = "turn-cap";
inline constexpr const char* kTurnNumbering = "turn-numbering";
inline constexpr const char* kClientActionNotNa = "client-action-not-na";
inline constexpr const char* kClientReasoningNotNa = "client-reasoning-not-na";
inline constexpr const char* kEmptyUtterance = "empty-utterance";
inline constexpr const char* kPlanStageMismatch = "plan-stage-mismatch";
inline constexpr const char* kEmptyPlanText = "empty-plan-text";
inline constexpr const char* kInvalidActionSequence = "invalid-action-sequence";
inline constexpr const char* kSkip = "skip";
inline constexpr const char* kRegress = "regress";
inline constexpr const char* kUnknownAction = "unknown-action";
inline constexpr const char* kIncompleteSequence = "incomplete-sequence";
}  // namespace violation

struct Violation {
  std::string code;
  Stage stage = Stage::Diagnostic;
  int turn_num = 0;  // 0 when not tied to a turn
  std::string detail;

  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

/// Utterance caps per stage. The defaults mirror the generation prompts
/// (fewer than 15 and fewer than 21 utterances).
struct TurnCaps {
  int diagnostic = 14;
  int intervention = 20;
};

/// Structural checks of one stage's turns against its plan: alternation,
/// counselor at both ends, turn cap, numbering, the client n/a rule, and
/// monotone action progression.
ValidationReport validate_stage(std::span<const DialogueTurn> turns, const StagePlan& plan, Stage stage,
                                int turn_cap);

/// All record-level invariants plus action monotonicity for every stage.
/// Pure: the same inputs always give the same report.
ValidationReport validate_session(const SessionRecord& record, const TurnCaps& caps = {});

/// Distinct codes in report order.
std::vector<std::string> violation_codes(const ValidationReport& report);

void to_json(json& j, const Violation& v);

}  // namespace stepforge
