#include "stepforge/core/validate.hpp"

#include <algorithm>
#include <cctype>

#include "stepforge/plan/action_cursor.hpp"

namespace stepforge {

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

const char* code_for(plan::ViolationKind kind) {
  switch (kind) {
    case plan::ViolationKind::Skip: return violation::kSkip;
    case plan::ViolationKind::Regress: return violation::kRegress;
    case plan::ViolationKind::UnknownAction: return violation::kUnknownAction;
    case plan::ViolationKind::IncompleteSequence: return violation::kIncompleteSequence;
  }
  return violation::kUnknownAction;
}

}  // namespace

ValidationReport validate_stage(std::span<const DialogueTurn> turns, const StagePlan& plan, Stage stage,
                                int turn_cap) {
  ValidationReport report;
  auto add = [&](const char* code, int turn, std::string detail = {}) {
    report.push_back({code, stage, turn, std::move(detail)});
  };

  if (plan.stage != stage || plan.actions.stage != stage) add(violation::kPlanStageMismatch, 0);
  if (blank(plan.plan_text)) add(violation::kEmptyPlanText, 0);
  for (const auto& v : plan::sequence_violations(plan.actions)) add(violation::kInvalidActionSequence, 0, v);

  if (turns.empty()) return report;
  if (turns.front().role != Role::Counselor) add(violation::kFirstNotCounselor, turns.front().turn_num);
  if (turns.back().role != Role::Counselor) add(violation::kLastNotCounselor, turns.back().turn_num);
  if (static_cast<int>(turns.size()) > turn_cap)
    add(violation::kTurnCap, 0, std::to_string(turns.size()) + " > " + std::to_string(turn_cap));

  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto& t = turns[i];
    if (t.turn_num != static_cast<int>(i) + 1)
      add(violation::kTurnNumbering, t.turn_num, "expected " + std::to_string(i + 1));
    if (i > 0 && turns[i - 1].role == t.role) add(violation::kAlternation, t.turn_num);
    if (blank(t.utterance)) add(violation::kEmptyUtterance, t.turn_num);
    if (t.role == Role::Client) {
      if (t.action != kNullMarker) add(violation::kClientActionNotNa, t.turn_num, t.action);
      if (t.action_reasoning != kNullMarker) add(violation::kClientReasoningNotNa, t.turn_num);
    }
  }

  if (!plan.actions.keys.empty()) {
    auto mono = plan::check_monotone(turns, plan.actions);
    for (const auto& v : mono.violations) add(code_for(v.kind), v.turn_num, v.action);
  }
  return report;
}

ValidationReport validate_session(const SessionRecord& record, const TurnCaps& caps) {
  ValidationReport report;
  if (record.diagnostic.turns.empty())
    report.push_back({violation::kNoDiagnosticTurns, Stage::Diagnostic, 0, {}});
  auto diag = validate_stage(record.diagnostic.turns, record.diagnostic.plan, Stage::Diagnostic, caps.diagnostic);
  report.insert(report.end(), diag.begin(), diag.end());
  if (record.intervention) {
    auto inter = validate_stage(record.intervention->turns, record.intervention->plan, Stage::Intervention,
                                caps.intervention);
    report.insert(report.end(), inter.begin(), inter.end());
  }
  return report;
}

std::vector<std::string> violation_codes(const ValidationReport& report) {
  std::vector<std::string> out;
  for (const auto& v : report)
    if (std::find(out.begin(), out.end(), v.code) == out.end()) out.push_back(v.code);
  return out;
}

void to_json(json& j, const Violation& v) {
  j = json{{"code", v.code}, {"stage", to_string(v.stage)}, {"turn_num", v.turn_num}, {"detail", v.detail}};
}

}  // namespace stepforge
