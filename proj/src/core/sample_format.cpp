#include "stepforge/core/sample_format.hpp"

#include "stepforge/error.hpp"
#include "stepforge/plan/action_cursor.hpp"
#include "stepforge/plan/planner.hpp"
#include "stepforge/prompts.hpp"

namespace stepforge::samples {

std::string utterance_context(std::span<const DialogueTurn> history, const std::string* plan_text,
                              const std::string& previous_action, const std::string& next_action) {
  std::string out;
  if (plan_text) out += "Stage plan: " + *plan_text + "\n";
  out += "Dialogue history:\n" + prompts::format_history(history) + "\n";
  out += "Previous action: " + previous_action + "\n";
  out += "Next action candidate: " + next_action;
  return out;
}

std::string turn_target(const std::string& reasoning, const std::string& action, const std::string& utterance) {
  nlohmann::ordered_json j;
  j["action_reasoning"] = reasoning;
  j["action"] = action;
  j["utterance"] = utterance;
  return j.dump();
}

std::string turn_target(const DialogueTurn& turn) {
  return turn_target(turn.action_reasoning, turn.action, turn.utterance);
}

DialogueTurn parse_turn_target(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidRecord, std::string("turn target: ") + e.what());
  }
  if (!j.is_object() || j.size() != 3) throw Error(ErrorCode::InvalidRecord, "turn target must have three keys");
  DialogueTurn t;
  t.role = Role::Counselor;
  for (const char* key : {"action_reasoning", "action", "utterance"})
    if (!j.contains(key) || !j[key].is_string())
      throw Error(ErrorCode::InvalidRecord, std::string("turn target lacks '") + key + "'");
  t.action_reasoning = j["action_reasoning"].get<std::string>();
  t.action = j["action"].get<std::string>();
  t.utterance = j["utterance"].get<std::string>();
  if (!plan::match_form(t.action)) throw Error(ErrorCode::InvalidRecord, "turn target has an empty action");
  if (t.utterance.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error(ErrorCode::InvalidRecord, "turn target has an empty utterance");
  return t;
}

std::string planner_context(std::span<const DialogueTurn> diagnostic) {
  return "Stage 1 dialogue history:\n" + prompts::format_history(diagnostic);
}

std::string plan_target(const StagePlan& plan) {
  nlohmann::ordered_json j;
  j["plan"] = plan.plan_text;
  j["reason_for_these_order"] = plan.reason_text;
  j["action_order"] = plan.actions.keys;
  return j.dump();
}

StagePlan parse_plan_target(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidRecord, std::string("plan target: ") + e.what());
  }
  StagePlan plan;
  try {
    plan = plan::parse_planner_output(j, plan::default_strategies());
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidRecord, std::string("plan target: ") + e.what());
  }
  if (auto bad = plan::sequence_violations(plan.actions); !bad.empty())
    throw Error(ErrorCode::InvalidRecord, "plan target: " + bad.front());
  if (plan.actions.keys != j["action_order"].get<std::vector<std::string>>())
    throw Error(ErrorCode::InvalidRecord, "plan target: action order lacks its terminal key");
  return plan;
}

}  // namespace stepforge::samples
