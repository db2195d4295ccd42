#pragma once

// Domain types shared by every pipeline stage, plus their canonical JSON form.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stepforge {

using json = nlohmann::json;

inline constexpr std::string_view kNullMarker = "n/a";
inline constexpr std::string_view kUnknown = "unknown";
inline constexpr std::string_view kEndSession = "End session";

// ---------------------------------------------------------------------------
// Attitudes

enum class Style {
  Hesitant,
  Guarded,
  Avoidant,
  Defensive,
  Skeptical,
  OverCompliant,
  Overwhelmed,
  OpenToCounseling,
};

enum class Engagement { Withdrawn, Resistant, Engaged };

inline constexpr std::array<Style, 8> kAllStyles = {
    Style::Hesitant,   Style::Guarded,       Style::Avoidant,    Style::Defensive,
    Style::Skeptical,  Style::OverCompliant, Style::Overwhelmed, Style::OpenToCounseling,
};

Engagement engagement_of(Style style) noexcept;
std::string_view to_string(Style style) noexcept;
std::string_view to_string(Engagement engagement) noexcept;
Style parse_style(std::string_view text);
Engagement parse_engagement(std::string_view text);

/// One-line behavioural description used when prompting a client persona.
std::string_view style_description(Style style) noexcept;

struct AttitudeStyle {
  Style style = Style::OpenToCounseling;

  AttitudeStyle() = default;
  explicit AttitudeStyle(Style s) : style(s) {}

  Engagement engagement_type() const noexcept { return engagement_of(style); }
  bool operator==(const AttitudeStyle&) const = default;
};

// ---------------------------------------------------------------------------
// Profiles

struct ClientProfile {
  std::string profile_id;
  std::string name;
  std::map<std::string, std::string> basic_information;
  AttitudeStyle attitude;
  std::string negative_thought;
  std::string surface_level_problem;
  std::string triggering_situation;
  std::vector<std::string> automatic_thoughts;

  bool operator==(const ClientProfile&) const = default;
};

/// Names of broken ClientProfile invariants; empty when the profile is valid.
std::vector<std::string> profile_violations(const ClientProfile& profile);

// ---------------------------------------------------------------------------
// Strategies and plans

enum class StrategyName {
  EfficiencyEvaluation,
  PieChart,
  AlternativePerspective,
  Decatastrophizing,
  ProsAndCons,
  EvidenceBasedQuestioning,
  RealityTesting,
  Continuum,
  RulesToWishes,
  BehaviorExperiment,
  ProblemSolvingTraining,
  SystematicExposure,
  Unknown,
};

std::string_view to_string(StrategyName name) noexcept;
StrategyName parse_strategy_name(std::string_view text);

struct CbtStrategy {
  StrategyName name = StrategyName::Unknown;
  std::string description;

  bool operator==(const CbtStrategy&) const = default;
};

enum class Stage { Diagnostic, Intervention };

std::string_view to_string(Stage stage) noexcept;
Stage parse_stage(std::string_view text);

struct ActionSequence {
  Stage stage = Stage::Diagnostic;
  std::vector<std::string> keys;

  bool operator==(const ActionSequence&) const = default;
};

struct StagePlan {
  Stage stage = Stage::Diagnostic;
  std::optional<CbtStrategy> strategy;
  std::string plan_text;
  std::string reason_text;
  ActionSequence actions;

  bool operator==(const StagePlan&) const = default;
};

// ---------------------------------------------------------------------------
// Dialogue

enum class Role { Counselor, Client };

std::string_view to_string(Role role) noexcept;
Role parse_role(std::string_view text);

struct DialogueTurn {
  int turn_num = 1;
  Role role = Role::Counselor;
  std::string action_reasoning{kNullMarker};
  std::string action{kNullMarker};
  std::string utterance;

  bool operator==(const DialogueTurn&) const = default;
};

struct StageRecord {
  StagePlan plan;
  std::vector<DialogueTurn> turns;

  bool operator==(const StageRecord&) const = default;
};

/// Where a record came from. Free-form but typed maps keep it diffable.
struct Provenance {
  std::map<std::string, std::string> backends;
  std::map<std::string, double> sampling;
  std::map<std::string, std::string> timestamps;
  std::map<std::string, std::string> notes;

  bool operator==(const Provenance&) const = default;
};

enum class SessionStatus { Draft, Filtered, Retained };

std::string_view to_string(SessionStatus status) noexcept;
SessionStatus parse_session_status(std::string_view text);

struct SessionRecord {
  std::string session_id;
  std::string profile_id;
  StageRecord diagnostic;
  std::optional<StageRecord> intervention;
  Provenance provenance;
  SessionStatus status = SessionStatus::Draft;

  bool operator==(const SessionRecord&) const = default;

  /// Every turn of both stages, diagnostic first.
  std::vector<DialogueTurn> all_turns() const;
};

// ---------------------------------------------------------------------------
// Scores and preferences

struct ScoreScale {
  double min = 0.0;
  double max = 0.0;

  bool operator==(const ScoreScale&) const = default;
};

struct RubricScore {
  std::string rubric_id;
  std::map<std::string, double> item_scores;
  std::map<std::string, std::string> item_reasons;
  ScoreScale scale;

  bool operator==(const RubricScore&) const = default;

  double min_item() const;
  double mean() const;
};

/// Empty when scores lie inside the scale and key sets match.
std::vector<std::string> rubric_violations(const RubricScore& score);

enum class PairTask { Utterance, Plan };

std::string_view to_string(PairTask task) noexcept;
PairTask parse_pair_task(std::string_view text);

struct PreferencePair {
  std::string pair_id;
  PairTask task = PairTask::Utterance;
  std::string context;
  std::string chosen;
  std::string rejected;
  double chosen_score = 0.0;
  double rejected_score = 0.0;
  std::string source_session;

  bool operator==(const PreferencePair&) const = default;
};

/// Empty when chosen_score >= rejected_score and chosen != rejected.
std::vector<std::string> pair_violations(const PreferencePair& pair);

// ---------------------------------------------------------------------------
// Action keys

/// Trim, collapse internal whitespace to one space, lowercase.
/// Throws Error(InvalidKey) when nothing is left.
std::string canonicalize_action_key(std::string_view key);

/// Whitespace-separated token count.
std::size_t word_count(std::string_view text);

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const AttitudeStyle& v);
void from_json(const json& j, AttitudeStyle& v);
void to_json(json& j, const ClientProfile& v);
void from_json(const json& j, ClientProfile& v);
void to_json(json& j, const CbtStrategy& v);
void from_json(const json& j, CbtStrategy& v);
void to_json(json& j, const ActionSequence& v);
void from_json(const json& j, ActionSequence& v);
void to_json(json& j, const StagePlan& v);
void from_json(const json& j, StagePlan& v);
void to_json(json& j, const DialogueTurn& v);
void from_json(const json& j, DialogueTurn& v);
void to_json(json& j, const StageRecord& v);
void from_json(const json& j, StageRecord& v);
void to_json(json& j, const Provenance& v);
void from_json(const json& j, Provenance& v);
void to_json(json& j, const SessionRecord& v);
void from_json(const json& j, SessionRecord& v);
void to_json(json& j, const RubricScore& v);
void from_json(const json& j, RubricScore& v);
void to_json(json& j, const PreferencePair& v);
void from_json(const json& j, PreferencePair& v);

}  // namespace stepforge
