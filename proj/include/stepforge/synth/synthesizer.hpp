#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepforge/core/model.hpp"
#include "stepforge/core/validate.hpp"
#include "stepforge/gateway/structured_call.hpp"

namespace stepforge::synth {

/// Maps a generated list of turn objects to DialogueTurns. Missing client
/// action fields default to "n/a". Throws ParseRejected.
std::vector<DialogueTurn> parse_turns(const json& list);

/// Structural checks applied at generation time: the stage report without
/// the action-progression codes (those are a filtering concern).
ValidationReport structural_report(std::span<const DialogueTurn> turns, const StagePlan& plan, int turn_cap);

/// Thrown when generated turns break a structural rule.
class StructuralError : public Error {
 public:
  explicit StructuralError(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// One stage prompt, one regeneration. Intervention needs the accepted
/// diagnostic turns. Errors: SynthesisParseFailed, StructuralViolation.
std::vector<DialogueTurn> synthesize_stage(const gateway::Gateway& gw, const gateway::CallSpec& spec,
                                           const ClientProfile& profile, const StagePlan& plan,
                                           std::optional<std::span<const DialogueTurn>> prior_history,
                                           const TurnCaps& caps = {});

struct SynthesisSpecs {
  gateway::CallSpec dialogue;
  gateway::CallSpec planner;
  TurnCaps caps;
  /// Provides provenance timestamps; the pipeline passes a logical clock
  /// under replay so records stay byte-stable.
  std::function<std::string()> clock;
};

/// Session that failed part way. `partial` holds every accepted stage.
class SessionAborted : public StageError {
 public:
  SessionAborted(ErrorCode code, std::string stage, const std::string& message, SessionRecord partial)
      : StageError(code, std::move(stage), message), partial_(std::move(partial)) {}
  const SessionRecord& partial() const noexcept { return partial_; }

 private:
  SessionRecord partial_;
};

std::string session_id_for(const ClientProfile& profile, const std::string& backend_id);

/// Hash of the canonical JSON of a turn list.
std::string turns_digest(std::span<const DialogueTurn> turns);

/// diagnostic plan -> diagnostic stage -> intervention plan -> intervention
/// stage. Returns a Draft record. Throws SessionAborted tagged with the
/// failing stage.
SessionRecord synthesize_session(const gateway::Gateway& gw, const SynthesisSpecs& specs,
                                 const ClientProfile& profile, std::span<const CbtStrategy> strategies);

}  // namespace stepforge::synth
