#include "stepforge/plan/planner.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "stepforge/core/jsonl.hpp"
#include "stepforge/plan/action_cursor.hpp"
#include "stepforge/prompts.hpp"

namespace stepforge::plan {

namespace {

struct StrategyInfo {
  StrategyName name;
  std::string_view display;
  std::string_view description;
  std::array<std::string_view, 3> variants;  // extra spellings; empty slots unused
};

constexpr std::array<StrategyInfo, 12> kCatalog = {{
    {StrategyName::EfficiencyEvaluation, "Efficiency Evaluation",
     "Evaluates whether a thought is helpful or harmful in real-life situations.",
     {"efficiency evaluation", "efficiencyevaluation", ""}},
    {StrategyName::PieChart, "Pie Chart Technique",
     "Breaks down how different factors contribute to an event, reducing self-blame.",
     {"pie chart", "piechart", ""}},
    {StrategyName::AlternativePerspective, "Alternative Perspective",
     "Encourages considering how others might interpret the same situation.",
     {"alternative perspective", "alternativeperspective", ""}},
    {StrategyName::Decatastrophizing, "Decatastrophizing",
     "Reduces worst-case thinking by examining real likelihood and coping options.",
     {"decatastrophizing", "decatastrophising", "de-catastrophizing"}},
    {StrategyName::ProsAndCons, "Pros and Cons Analysis",
     "Weighs the benefits and drawbacks of a specific thought or belief.",
     {"pros and cons", "prosandcons", ""}},
    {StrategyName::EvidenceBasedQuestioning, "Evidence-Based Questioning",
     "Examines evidence for and against the client's thought.",
     {"evidence-based questioning", "evidence based questioning", "evidencebasedquestioning"}},
    {StrategyName::RealityTesting, "Reality Testing", "Checks how well a thought matches actual facts or experiences.",
     {"reality testing", "realitytesting", ""}},
    {StrategyName::Continuum, "Continuum Technique",
     "Shifts black-and-white thinking toward a more nuanced, scaled view.", {"continuum", "", ""}},
    {StrategyName::RulesToWishes, "Changing Rules to Wishes",
     "Replaces rigid shoulds with more flexible, realistic wishes or preferences.",
     {"rules to wishes", "rulestowishes", ""}},
    {StrategyName::BehaviorExperiment, "Behavior Experiment",
     "Tests new behaviors to challenge and modify unhelpful beliefs.",
     {"behavior experiment", "behavioral experiment", "behaviour experiment"}},
    {StrategyName::ProblemSolvingTraining, "Problem-Solving Skills Training",
     "Teaches steps to identify problems, generate solutions, and act on them.",
     {"problem-solving", "problem solving", "problemsolvingtraining"}},
    {StrategyName::SystematicExposure, "Systematic Exposure",
     "Gradually faces feared situations to reduce anxiety over time.",
     {"systematic exposure", "systematicexposure", ""}},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

StrategyName name_from_label(std::string_view label) {
  const auto l = lower(label);
  for (const auto& info : kCatalog)
    if (l == lower(info.display) || l == lower(to_string(info.name))) return info.name;
  return parse_strategy_name(label);
}

}  // namespace

StagePlan diagnostic_plan() {
  StagePlan plan;
  plan.stage = Stage::Diagnostic;
  plan.plan_text =
      "Understand the surface-level problem, triggering situations, and automatic thoughts, then end the "
      "diagnostic phase.";
  plan.actions = {Stage::Diagnostic,
                  {"understanding surface level", "understanding trigger situation",
                   "understanding automatic thoughts", "move to cognitive reframing"}};
  return plan;
}

std::string_view display_name(StrategyName name) noexcept {
  for (const auto& info : kCatalog)
    if (info.name == name) return info.display;
  return "Unknown";
}

std::vector<CbtStrategy> default_strategies() {
  std::vector<CbtStrategy> out;
  for (const auto& info : kCatalog) out.push_back({info.name, std::string(info.description)});
  return out;
}

std::vector<CbtStrategy> load_strategies(const std::filesystem::path& path) {
  const auto doc = read_json_file(path);
  if (!doc.is_array() || doc.empty()) throw Error(ErrorCode::InvalidRecord, path.string() + ": expected a non-empty array");
  std::vector<CbtStrategy> out;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("name") || !item["name"].is_string())
      throw Error(ErrorCode::InvalidRecord, path.string() + ": strategy without a name");
    CbtStrategy s;
    s.name = name_from_label(item["name"].get<std::string>());
    s.description = item.value("description", std::string());
    out.push_back(std::move(s));
  }
  return out;
}

StrategyName extract_strategy(std::string_view plan_text) {
  const auto text = lower(plan_text);
  StrategyName best = StrategyName::Unknown;
  std::size_t best_pos = std::string::npos;
  for (const auto& info : kCatalog) {
    auto consider = [&](std::string_view needle) {
      if (needle.empty()) return;
      auto pos = text.find(lower(needle));
      if (pos < best_pos) {
        best_pos = pos;
        best = info.name;
      }
    };
    consider(info.display);
    for (auto v : info.variants) consider(v);
  }
  return best;
}

StagePlan parse_planner_output(const json& value, std::span<const CbtStrategy> strategies) {
  if (!value.is_object()) throw gateway::ParseRejected("planner output is not an object");
  for (const char* key : {"plan", "action_order"})
    if (!value.contains(key)) throw gateway::ParseRejected(std::string("planner output lacks '") + key + "'");
  if (!value["plan"].is_string()) throw gateway::ParseRejected("'plan' is not a string");
  if (!value["action_order"].is_array()) throw gateway::ParseRejected("'action_order' is not a list");

  std::vector<std::string> keys;
  for (const auto& k : value["action_order"]) {
    if (!k.is_string()) throw gateway::ParseRejected("action key is not a string");
    keys.push_back(k.get<std::string>());
  }

  StagePlan plan;
  plan.stage = Stage::Intervention;
  plan.plan_text = value["plan"].get<std::string>();
  if (value.contains("reason_for_these_order") && value["reason_for_these_order"].is_string())
    plan.reason_text = value["reason_for_these_order"].get<std::string>();
  plan.actions = finalize_intervention_keys(keys);

  CbtStrategy strategy{extract_strategy(plan.plan_text), ""};
  for (const auto& s : strategies)
    if (s.name == strategy.name) strategy.description = s.description;
  plan.strategy = strategy;
  return plan;
}

StagePlan generate_intervention_plan(const gateway::Gateway& gw, const gateway::CallSpec& spec,
                                     std::span<const DialogueTurn> diagnostic_history,
                                     std::span<const CbtStrategy> strategies) {
  if (diagnostic_history.empty()) throw Error(ErrorCode::PlanParseFailed, "empty diagnostic history");
  auto request = spec.request(prompts::planner(diagnostic_history, strategies), prompts::tag::kPlanner);
  return gateway::call_structured(
      gw, std::move(request), gateway::JsonShape::Object,
      [&](const json& v) { return parse_planner_output(v, strategies); }, ErrorCode::PlanParseFailed);
}

}  // namespace stepforge::plan
