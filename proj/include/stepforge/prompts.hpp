#pragma once

// Prompt builders for every generative and judging call. Request tags name
// the pipeline step and travel with each ChatRequest.

#include <span>
#include <string>
#include <vector>

#include "stepforge/core/model.hpp"

namespace stepforge::prompts {

namespace tag {
inline constexpr const char* kDecompose = "profile.decompose";
inline constexpr const char* kDiagnosticStage = "synth.diagnostic";
inline constexpr const char* kInterventionStage = "synth.intervention";
inline constexpr const char* kPlanner = "plan.intervention";
inline constexpr const char* kCtrs8 = "filter.ctrs8";
inline constexpr const char* kAdherence = "filter.adherence";
inline constexpr const char* kClient = "sim.client";
inline constexpr const char* kCounselor = "sim.counselor";
inline constexpr const char* kEvalUtterance = "sim.eval_utterance";
inline constexpr const char* kEvalPlan = "sim.eval_plan";
inline constexpr const char* kCtrs7 = "eval.ctrs7";
inline constexpr const char* kSrs = "eval.srs";
inline constexpr const char* kTags = "eval.tags";
inline constexpr const char* kTarget = "eval.target";
inline constexpr const char* kHeadToHead = "eval.h2h";
}  // namespace tag

/// Line markers the prompts use for machine-readable fields.
namespace marker {
inline constexpr const char* kStageOneOrder = "Action order for Stage 1: ";
inline constexpr const char* kStageTwoOrder = "Action order for Stage 2: ";
inline constexpr const char* kCurrentAction = "Current action: ";
inline constexpr const char* kNextAction = "Next action candidate: ";
inline constexpr const char* kTurnOf = "Dialogue turn ";
inline constexpr const char* kCandidate = "Candidate ";
inline constexpr const char* kStrategyLine = "- Strategy: ";
}  // namespace marker

/// "Counselor: ...\nClient: ..." lines.
std::string format_history(std::span<const DialogueTurn> turns);
/// "1 Counselor: ...\n2 Client: ..." lines, numbered across the transcript.
std::string format_numbered(std::span<const DialogueTurn> turns);
std::string format_basic_information(const ClientProfile& profile);
std::string format_personality(const ClientProfile& profile);
std::string format_automatic_thoughts(const ClientProfile& profile);

std::string decompose(const std::string& persona, const std::string& negative_thought);
std::string diagnostic_stage(const ClientProfile& profile, const StagePlan& plan);
std::string intervention_stage(const ClientProfile& profile, const StagePlan& plan,
                               std::span<const DialogueTurn> diagnostic_history);
std::string planner(std::span<const DialogueTurn> diagnostic_history, std::span<const CbtStrategy> strategies);
std::string ctrs8(std::span<const DialogueTurn> transcript);
std::string adherence(std::span<const DialogueTurn> diagnostic, const StagePlan& plan,
                      std::span<const DialogueTurn> intervention);

std::string client(const ClientProfile& profile, std::span<const DialogueTurn> history,
                   const std::string& additional_instruction);

struct CounselorContext {
  const ClientProfile* profile = nullptr;
  const StagePlan* plan = nullptr;
  std::string current_action;  // "none" before the first counselor turn
  std::string next_action;     // "none" at the end of the sequence
  int turn_num = 1;
  int max_turns = 20;
};
std::string counselor(std::span<const DialogueTurn> history, const CounselorContext& ctx);

std::string evaluate_utterances(const ClientProfile& profile, std::span<const DialogueTurn> history,
                                std::span<const std::string> candidates);
std::string evaluate_plans(std::span<const DialogueTurn> history, std::span<const std::string> candidates);

std::string ctrs7(std::span<const DialogueTurn> transcript);
std::string srs(std::span<const DialogueTurn> transcript);
std::string target(std::span<const DialogueTurn> transcript);
std::string tagging(std::span<const DialogueTurn> transcript);
std::string head_to_head(std::span<const DialogueTurn> first, std::span<const DialogueTurn> second,
                         std::span<const std::string> criteria);

}  // namespace stepforge::prompts
