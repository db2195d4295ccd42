#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "stepforge/core/model.hpp"
#include "stepforge/gateway/structured_call.hpp"

namespace stepforge::plan {

/// The fixed four-step diagnostic plan.
StagePlan diagnostic_plan();

/// Human-readable strategy name, e.g. "Pie Chart Technique".
std::string_view display_name(StrategyName name) noexcept;

/// The twelve dialogue-compatible strategies with their descriptions.
std::vector<CbtStrategy> default_strategies();

/// Reads a JSON array of {"name", "description"}. Names may be enum labels or
/// display names. Throws Error(UnreadableFile | InvalidRecord).
std::vector<CbtStrategy> load_strategies(const std::filesystem::path& path);

/// Strategy named in free plan prose. Case-insensitive match on display
/// names and common variants; the mention that appears first in the text
/// wins. Unknown when nothing matches.
StrategyName extract_strategy(std::string_view plan_text);

/// Maps planner JSON {plan, reason_for_these_order, action_order} to an
/// intervention StagePlan. Throws ParseRejected for missing fields and
/// ActionConstraintError for key constraint breaks.
StagePlan parse_planner_output(const json& value, std::span<const CbtStrategy> strategies);

/// One planner call with a single regeneration on parse or constraint
/// failure. Errors: PlanParseFailed, ActionConstraintViolated.
StagePlan generate_intervention_plan(const gateway::Gateway& gw, const gateway::CallSpec& spec,
                                     std::span<const DialogueTurn> diagnostic_history,
                                     std::span<const CbtStrategy> strategies);

}  // namespace stepforge::plan
