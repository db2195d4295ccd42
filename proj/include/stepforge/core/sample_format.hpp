#pragma once

// Text forms shared by mined preference pairs and exported training samples.

#include <span>
#include <string>

#include "stepforge/core/model.hpp"

namespace stepforge::samples {

inline constexpr std::string_view kNoAction = "none";

/// Context for one counselor utterance: optional stage plan text, the
/// history so far, the previous action and the next-candidate action.
std::string utterance_context(std::span<const DialogueTurn> history, const std::string* plan_text,
                              const std::string& previous_action, const std::string& next_action);

/// {"action_reasoning", "action", "utterance"} as compact JSON.
std::string turn_target(const DialogueTurn& turn);
std::string turn_target(const std::string& reasoning, const std::string& action, const std::string& utterance);

/// Strict inverse of turn_target: exactly those three string keys, action
/// and utterance non-empty. Throws Error(InvalidRecord).
DialogueTurn parse_turn_target(const std::string& text);

/// Context for the planner: the diagnostic dialogue.
std::string planner_context(std::span<const DialogueTurn> diagnostic);

/// {"plan", "reason_for_these_order", "action_order"} as compact JSON.
std::string plan_target(const StagePlan& plan);

/// Strict inverse of plan_target; the sequence must satisfy every
/// intervention constraint. Throws Error(InvalidRecord).
StagePlan parse_plan_target(const std::string& text);

}  // namespace stepforge::samples
