#include "stepforge/core/model.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "stepforge/error.hpp"

namespace stepforge {

namespace {

struct StyleInfo {
  Style style;
  std::string_view name;
  Engagement engagement;
  std::string_view description;
};

constexpr std::array<StyleInfo, 8> kStyleTable = {{
    {Style::Hesitant, "Hesitant", Engagement::Withdrawn,
     "Hesitant: answers cautiously and briefly, pauses often, shares little unless gently invited."},
    {Style::Guarded, "Guarded", Engagement::Withdrawn,
     "Guarded: keeps personal details and feelings back and plays down how serious things are."},
    {Style::Avoidant, "Avoidant", Engagement::Withdrawn,
     "Avoidant: steers away from emotional topics, changes the subject or deflects with humor."},
    {Style::Defensive, "Defensive", Engagement::Resistant,
     "Defensive: protective of own choices, pushes back quickly on anything that sounds like criticism."},
    {Style::Skeptical, "Skeptical", Engagement::Resistant,
     "Skeptical: doubts that counseling will help and questions the counselor's approach."},
    {Style::OverCompliant, "OverCompliant", Engagement::Resistant,
     "Over-compliant: agrees readily with the counselor while keeping real feelings hidden."},
    {Style::Overwhelmed, "Overwhelmed", Engagement::Resistant,
     "Overwhelmed: emotions run so high that answers become scattered and hard to start."},
    {Style::OpenToCounseling, "OpenToCounseling", Engagement::Engaged,
     "Open to counseling: engages willingly, curious about own patterns, expresses emotions openly."},
}};

constexpr std::array<std::string_view, 13> kStrategyNames = {
    "EfficiencyEvaluation", "PieChart",        "AlternativePerspective", "Decatastrophizing",
    "ProsAndCons",          "EvidenceBasedQuestioning", "RealityTesting", "Continuum",
    "RulesToWishes",        "BehaviorExperiment", "ProblemSolvingTraining", "SystematicExposure",
    "Unknown",
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::InvalidRecord, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidRecord, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Engagement engagement_of(Style style) noexcept {
  for (const auto& info : kStyleTable)
    if (info.style == style) return info.engagement;
  return Engagement::Engaged;
}

std::string_view to_string(Style style) noexcept {
  for (const auto& info : kStyleTable)
    if (info.style == style) return info.name;
  return "OpenToCounseling";
}

std::string_view style_description(Style style) noexcept {
  for (const auto& info : kStyleTable)
    if (info.style == style) return info.description;
  return "";
}

Style parse_style(std::string_view text) {
  // Accept the display spellings too ("Over Compliant", "Open to Counseling").
  std::string squashed;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '-' && c != '_')
      squashed += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto& info : kStyleTable)
    if (lower(info.name) == squashed) return info.style;
  throw Error(ErrorCode::InvalidRecord, "unknown attitude style '" + std::string(text) + "'");
}

std::string_view to_string(Engagement engagement) noexcept {
  switch (engagement) {
    case Engagement::Withdrawn: return "Withdrawn";
    case Engagement::Resistant: return "Resistant";
    case Engagement::Engaged: return "Engaged";
  }
  return "Engaged";
}

Engagement parse_engagement(std::string_view text) {
  if (text == "Withdrawn") return Engagement::Withdrawn;
  if (text == "Resistant") return Engagement::Resistant;
  if (text == "Engaged") return Engagement::Engaged;
  throw Error(ErrorCode::InvalidRecord, "unknown engagement type '" + std::string(text) + "'");
}

std::string_view to_string(StrategyName name) noexcept {
  return kStrategyNames[static_cast<std::size_t>(name)];
}

StrategyName parse_strategy_name(std::string_view text) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i)
    if (kStrategyNames[i] == text) return static_cast<StrategyName>(i);
  throw Error(ErrorCode::InvalidRecord, "unknown strategy '" + std::string(text) + "'");
}

std::string_view to_string(Stage stage) noexcept {
  return stage == Stage::Diagnostic ? "diagnostic" : "intervention";
}

Stage parse_stage(std::string_view text) {
  auto l = lower(text);
  if (l == "diagnostic") return Stage::Diagnostic;
  if (l == "intervention") return Stage::Intervention;
  throw Error(ErrorCode::InvalidRecord, "unknown stage '" + std::string(text) + "'");
}

std::string_view to_string(Role role) noexcept {
  return role == Role::Counselor ? "counselor" : "client";
}

Role parse_role(std::string_view text) {
  auto l = lower(text);
  if (l == "counselor" || l == "counsellor" || l == "therapist") return Role::Counselor;
  if (l == "client") return Role::Client;
  throw Error(ErrorCode::InvalidRecord, "unknown role '" + std::string(text) + "'");
}

std::string_view to_string(SessionStatus status) noexcept {
  switch (status) {
    case SessionStatus::Draft: return "Draft";
    case SessionStatus::Filtered: return "Filtered";
    case SessionStatus::Retained: return "Retained";
  }
  return "Draft";
}

SessionStatus parse_session_status(std::string_view text) {
  if (text == "Draft") return SessionStatus::Draft;
  if (text == "Filtered") return SessionStatus::Filtered;
  if (text == "Retained") return SessionStatus::Retained;
  throw Error(ErrorCode::InvalidRecord, "unknown status '" + std::string(text) + "'");
}

std::string_view to_string(PairTask task) noexcept {
  return task == PairTask::Utterance ? "Utterance" : "Plan";
}

PairTask parse_pair_task(std::string_view text) {
  auto l = lower(text);
  if (l == "utterance") return PairTask::Utterance;
  if (l == "plan") return PairTask::Plan;
  throw Error(ErrorCode::InvalidRecord, "unknown pair task '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

std::vector<std::string> profile_violations(const ClientProfile& p) {
  std::vector<std::string> out;
  if (p.profile_id.empty()) out.emplace_back("profile-id-empty");
  if (blank(p.surface_level_problem)) out.emplace_back("surface-level-problem-empty");
  if (blank(p.triggering_situation)) out.emplace_back("triggering-situation-empty");
  if (p.automatic_thoughts.empty()) {
    out.emplace_back("automatic-thoughts-empty");
  } else {
    for (const auto& t : p.automatic_thoughts)
      if (blank(t)) {
        out.emplace_back("automatic-thought-blank");
        break;
      }
  }
  return out;
}

std::vector<DialogueTurn> SessionRecord::all_turns() const {
  std::vector<DialogueTurn> out = diagnostic.turns;
  if (intervention) out.insert(out.end(), intervention->turns.begin(), intervention->turns.end());
  return out;
}

double RubricScore::min_item() const {
  if (item_scores.empty()) return 0.0;
  double m = item_scores.begin()->second;
  for (const auto& [_, v] : item_scores) m = std::min(m, v);
  return m;
}

double RubricScore::mean() const {
  if (item_scores.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, v] : item_scores) sum += v;
  return sum / static_cast<double>(item_scores.size());
}

std::vector<std::string> rubric_violations(const RubricScore& s) {
  std::vector<std::string> out;
  for (const auto& [k, v] : s.item_scores) {
    if (v < s.scale.min || v > s.scale.max) out.push_back("out-of-range:" + k);
    if (!s.item_reasons.contains(k)) out.push_back("missing-reason:" + k);
  }
  for (const auto& [k, _] : s.item_reasons)
    if (!s.item_scores.contains(k)) out.push_back("orphan-reason:" + k);
  return out;
}

std::vector<std::string> pair_violations(const PreferencePair& p) {
  std::vector<std::string> out;
  if (p.chosen_score < p.rejected_score) out.emplace_back("chosen-score-below-rejected");
  if (p.chosen == p.rejected) out.emplace_back("chosen-equals-rejected");
  return out;
}

std::string canonicalize_action_key(std::string_view key) {
  std::string out;
  out.reserve(key.size());
  bool pending_space = false;
  for (char ch : key) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidKey, "action key is empty after trimming");
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char ch : text) {
    bool space = std::isspace(static_cast<unsigned char>(ch));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const AttitudeStyle& v) {
  j = json{{"style", to_string(v.style)}, {"engagement_type", to_string(v.engagement_type())}};
}

void from_json(const json& j, AttitudeStyle& v) {
  v.style = parse_style(required<std::string>(j, "style"));
  if (j.contains("engagement_type")) {
    auto declared = parse_engagement(j.at("engagement_type").get<std::string>());
    if (declared != v.engagement_type())
      throw Error(ErrorCode::InvalidRecord, "engagement_type does not match style");
  }
}

void to_json(json& j, const ClientProfile& v) {
  j = json{{"profile_id", v.profile_id},
           {"name", v.name},
           {"basic_information", v.basic_information},
           {"attitude", v.attitude},
           {"negative_thought", v.negative_thought},
           {"surface_level_problem", v.surface_level_problem},
           {"triggering_situation", v.triggering_situation},
           {"automatic_thoughts", v.automatic_thoughts}};
}

void from_json(const json& j, ClientProfile& v) {
  v.profile_id = required<std::string>(j, "profile_id");
  v.name = required<std::string>(j, "name");
  v.basic_information = required<std::map<std::string, std::string>>(j, "basic_information");
  v.attitude = required<AttitudeStyle>(j, "attitude");
  v.negative_thought = required<std::string>(j, "negative_thought");
  v.surface_level_problem = required<std::string>(j, "surface_level_problem");
  v.triggering_situation = required<std::string>(j, "triggering_situation");
  v.automatic_thoughts = required<std::vector<std::string>>(j, "automatic_thoughts");
}

void to_json(json& j, const CbtStrategy& v) {
  j = json{{"name", to_string(v.name)}, {"description", v.description}};
}

void from_json(const json& j, CbtStrategy& v) {
  v.name = parse_strategy_name(required<std::string>(j, "name"));
  v.description = required<std::string>(j, "description");
}

void to_json(json& j, const ActionSequence& v) {
  j = json{{"stage", to_string(v.stage)}, {"keys", v.keys}};
}

void from_json(const json& j, ActionSequence& v) {
  v.stage = parse_stage(required<std::string>(j, "stage"));
  v.keys = required<std::vector<std::string>>(j, "keys");
}

void to_json(json& j, const StagePlan& v) {
  j = json{{"stage", to_string(v.stage)},
           {"strategy", v.strategy ? json(*v.strategy) : json(nullptr)},
           {"plan_text", v.plan_text},
           {"reason_text", v.reason_text},
           {"actions", v.actions}};
}

void from_json(const json& j, StagePlan& v) {
  v.stage = parse_stage(required<std::string>(j, "stage"));
  if (j.contains("strategy") && !j.at("strategy").is_null())
    v.strategy = j.at("strategy").get<CbtStrategy>();
  else
    v.strategy.reset();
  v.plan_text = required<std::string>(j, "plan_text");
  v.reason_text = required<std::string>(j, "reason_text");
  v.actions = required<ActionSequence>(j, "actions");
}

void to_json(json& j, const DialogueTurn& v) {
  j = json{{"turn_num", v.turn_num},
           {"role", to_string(v.role)},
           {"action_reasoning", v.action_reasoning},
           {"action", v.action},
           {"utterance", v.utterance}};
}

void from_json(const json& j, DialogueTurn& v) {
  v.turn_num = required<int>(j, "turn_num");
  v.role = parse_role(required<std::string>(j, "role"));
  v.action_reasoning = required<std::string>(j, "action_reasoning");
  v.action = required<std::string>(j, "action");
  v.utterance = required<std::string>(j, "utterance");
}

void to_json(json& j, const StageRecord& v) { j = json{{"plan", v.plan}, {"turns", v.turns}}; }

void from_json(const json& j, StageRecord& v) {
  v.plan = required<StagePlan>(j, "plan");
  v.turns = required<std::vector<DialogueTurn>>(j, "turns");
}

void to_json(json& j, const Provenance& v) {
  j = json{{"backends", v.backends},
           {"sampling", v.sampling},
           {"timestamps", v.timestamps},
           {"notes", v.notes}};
}

void from_json(const json& j, Provenance& v) {
  v = Provenance{};
  if (!j.is_object()) return;
  if (j.contains("backends")) v.backends = j.at("backends").get<decltype(v.backends)>();
  if (j.contains("sampling")) v.sampling = j.at("sampling").get<decltype(v.sampling)>();
  if (j.contains("timestamps")) v.timestamps = j.at("timestamps").get<decltype(v.timestamps)>();
  if (j.contains("notes")) v.notes = j.at("notes").get<decltype(v.notes)>();
}

void to_json(json& j, const SessionRecord& v) {
  j = json{{"session_id", v.session_id},
           {"profile_id", v.profile_id},
           {"diagnostic", v.diagnostic},
           {"intervention", v.intervention ? json(*v.intervention) : json(nullptr)},
           {"provenance", v.provenance},
           {"status", to_string(v.status)}};
}

void from_json(const json& j, SessionRecord& v) {
  v.session_id = required<std::string>(j, "session_id");
  v.profile_id = required<std::string>(j, "profile_id");
  v.diagnostic = required<StageRecord>(j, "diagnostic");
  if (j.contains("intervention") && !j.at("intervention").is_null())
    v.intervention = j.at("intervention").get<StageRecord>();
  else
    v.intervention.reset();
  v.provenance = j.contains("provenance") ? j.at("provenance").get<Provenance>() : Provenance{};
  v.status = parse_session_status(required<std::string>(j, "status"));
}

void to_json(json& j, const RubricScore& v) {
  j = json{{"rubric_id", v.rubric_id},
           {"item_scores", v.item_scores},
           {"item_reasons", v.item_reasons},
           {"scale", json{{"min", v.scale.min}, {"max", v.scale.max}}}};
}

void from_json(const json& j, RubricScore& v) {
  v.rubric_id = required<std::string>(j, "rubric_id");
  v.item_scores = required<std::map<std::string, double>>(j, "item_scores");
  v.item_reasons = required<std::map<std::string, std::string>>(j, "item_reasons");
  auto scale = required<json>(j, "scale");
  v.scale.min = required<double>(scale, "min");
  v.scale.max = required<double>(scale, "max");
}

void to_json(json& j, const PreferencePair& v) {
  j = json{{"pair_id", v.pair_id},
           {"task", to_string(v.task)},
           {"context", v.context},
           {"chosen", v.chosen},
           {"rejected", v.rejected},
           {"chosen_score", v.chosen_score},
           {"rejected_score", v.rejected_score},
           {"source_session", v.source_session}};
}

void from_json(const json& j, PreferencePair& v) {
  v.pair_id = required<std::string>(j, "pair_id");
  v.task = parse_pair_task(required<std::string>(j, "task"));
  v.context = required<std::string>(j, "context");
  v.chosen = required<std::string>(j, "chosen");
  v.rejected = required<std::string>(j, "rejected");
  v.chosen_score = required<double>(j, "chosen_score");
  v.rejected_score = required<double>(j, "rejected_score");
  v.source_session = required<std::string>(j, "source_session");
}

}  // namespace stepforge
