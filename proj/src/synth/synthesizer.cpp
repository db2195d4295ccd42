#include "stepforge/synth/synthesizer.hpp"

#include <algorithm>

#include "stepforge/plan/planner.hpp"
#include "stepforge/prompts.hpp"
#include "stepforge/util/hash.hpp"

namespace stepforge::synth {

namespace {

bool is_progression_code(const std::string& code) {
  return code == violation::kSkip || code == violation::kRegress || code == violation::kUnknownAction ||
         code == violation::kIncompleteSequence;
}

std::string describe(const ValidationReport& report) {
  std::string out = "structural violation:";
  for (const auto& c : violation_codes(report)) out += " " + c;
  return out;
}

std::string text_field(const json& item, const char* key, bool required) {
  if (!item.contains(key) || item[key].is_null()) {
    if (required) throw gateway::ParseRejected(std::string("turn lacks '") + key + "'");
    return std::string(kNullMarker);
  }
  if (!item[key].is_string()) throw gateway::ParseRejected(std::string("'") + key + "' is not a string");
  return item[key].get<std::string>();
}

}  // namespace

StructuralError::StructuralError(ValidationReport report)
    : Error(ErrorCode::StructuralViolation, describe(report)), report_(std::move(report)) {}

std::vector<DialogueTurn> parse_turns(const json& list) {
  if (!list.is_array()) throw gateway::ParseRejected("dialogue is not a list");
  if (list.empty()) throw gateway::ParseRejected("dialogue is empty");
  std::vector<DialogueTurn> out;
  for (const auto& item : list) {
    if (!item.is_object()) throw gateway::ParseRejected("turn is not an object");
    DialogueTurn t;
    if (!item.contains("turn_num") || !item["turn_num"].is_number_integer())
      throw gateway::ParseRejected("turn lacks an integer turn_num");
    t.turn_num = item["turn_num"].get<int>();
    try {
      t.role = parse_role(text_field(item, "role", true));
    } catch (const Error& e) {
      throw gateway::ParseRejected(e.what());
    }
    const bool counselor = t.role == Role::Counselor;
    t.action = text_field(item, "action", counselor);
    t.action_reasoning = text_field(item, "action_reasoning", false);
    t.utterance = text_field(item, "utterance", true);
    out.push_back(std::move(t));
  }
  return out;
}

ValidationReport structural_report(std::span<const DialogueTurn> turns, const StagePlan& plan, int turn_cap) {
  auto report = validate_stage(turns, plan, plan.stage, turn_cap);
  std::erase_if(report, [](const Violation& v) { return is_progression_code(v.code); });
  return report;
}

std::vector<DialogueTurn> synthesize_stage(const gateway::Gateway& gw, const gateway::CallSpec& spec,
                                           const ClientProfile& profile, const StagePlan& plan,
                                           std::optional<std::span<const DialogueTurn>> prior_history,
                                           const TurnCaps& caps) {
  std::string prompt;
  const char* tag = nullptr;
  int cap = 0;
  if (plan.stage == Stage::Diagnostic) {
    if (prior_history) throw Error(ErrorCode::InvalidRecord, "diagnostic stage takes no prior history");
    prompt = prompts::diagnostic_stage(profile, plan);
    tag = prompts::tag::kDiagnosticStage;
    cap = caps.diagnostic;
  } else {
    if (!prior_history || prior_history->empty())
      throw Error(ErrorCode::InvalidRecord, "intervention stage needs the diagnostic turns");
    prompt = prompts::intervention_stage(profile, plan, *prior_history);
    tag = prompts::tag::kInterventionStage;
    cap = caps.intervention;
  }
  return gateway::call_structured(
      gw, spec.request(std::move(prompt), tag), gateway::JsonShape::List,
      [&](const json& v) {
        auto turns = parse_turns(v);
        if (auto report = structural_report(turns, plan, cap); !report.empty()) throw StructuralError(report);
        return turns;
      },
      ErrorCode::SynthesisParseFailed);
}

std::string session_id_for(const ClientProfile& profile, const std::string& backend_id) {
  return util::short_id("sess", profile.profile_id + "\n" + backend_id);
}

std::string turns_digest(std::span<const DialogueTurn> turns) {
  json arr = json::array();
  for (const auto& t : turns) arr.push_back(t);
  return util::sha256_hex(arr.dump());
}

SessionRecord synthesize_session(const gateway::Gateway& gw, const SynthesisSpecs& specs,
                                 const ClientProfile& profile, std::span<const CbtStrategy> strategies) {
  if (auto bad = profile_violations(profile); !bad.empty())
    throw Error(ErrorCode::InvalidRecord, profile.profile_id + ": " + bad.front());

  SessionRecord record;
  record.session_id = session_id_for(profile, specs.dialogue.backend_id);
  record.profile_id = profile.profile_id;
  record.status = SessionStatus::Draft;
  auto& prov = record.provenance;
  prov.backends["dialogue"] = specs.dialogue.backend_id;
  prov.backends["planner"] = specs.planner.backend_id;
  prov.sampling["dialogue.temperature"] = specs.dialogue.temperature;
  prov.sampling["dialogue.top_p"] = specs.dialogue.top_p;
  prov.sampling["planner.temperature"] = specs.planner.temperature;
  prov.sampling["planner.top_p"] = specs.planner.top_p;
  auto stamp = [&](const char* key) {
    if (specs.clock) prov.timestamps[key] = specs.clock();
  };
  stamp("started");

  record.diagnostic.plan = plan::diagnostic_plan();
  try {
    record.diagnostic.turns = synthesize_stage(gw, specs.dialogue, profile, record.diagnostic.plan, std::nullopt, specs.caps);
  } catch (const Error& e) {
    throw SessionAborted(e.code(), "diagnostic", e.what(), record);
  }
  const auto& diag = record.diagnostic.turns;
  prov.notes["diagnostic_digest"] = turns_digest(diag);

  StageRecord intervention;
  try {
    intervention.plan = plan::generate_intervention_plan(gw, specs.planner, diag, strategies);
    if (intervention.plan.strategy && intervention.plan.strategy->name == StrategyName::Unknown)
      prov.notes["strategy"] = "unmatched";
    intervention.turns = synthesize_stage(gw, specs.dialogue, profile, intervention.plan,
                                          std::span<const DialogueTurn>(diag), specs.caps);
  } catch (const Error& e) {
    throw SessionAborted(e.code(), "intervention", e.what(), record);
  }
  record.intervention = std::move(intervention);
  stamp("finished");
  return record;
}

}  // namespace stepforge::synth
