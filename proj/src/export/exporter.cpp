#include "stepforge/export/exporter.hpp"

#include <set>

#include "stepforge/core/sample_format.hpp"
#include "stepforge/error.hpp"
#include "stepforge/plan/action_cursor.hpp"

namespace stepforge::exporter {

void to_json(json& j, const SftSample& s) {
  j = json{{"prompt_context", s.prompt_context}, {"target", s.target}, {"source_session", s.source_session}};
}

void from_json(const json& j, SftSample& s) {
  s.prompt_context = j.at("prompt_context").get<std::string>();
  s.target = j.at("target").get<std::string>();
  s.source_session = j.at("source_session").get<std::string>();
}

void to_json(json& j, const DpoRow& r) { j = json{{"prompt", r.prompt}, {"chosen", r.chosen}, {"rejected", r.rejected}}; }

void from_json(const json& j, DpoRow& r) {
  r.prompt = j.at("prompt").get<std::string>();
  r.chosen = j.at("chosen").get<std::string>();
  r.rejected = j.at("rejected").get<std::string>();
}

std::vector<SftSample> export_sft_utterance(std::span<const SessionRecord> sessions, const SftOptions& options) {
  std::vector<SftSample> out;
  for (const auto& s : sessions) {
    if (s.status != SessionStatus::Retained)
      throw Error(ErrorCode::InvalidRecord, s.session_id + ": only retained sessions are exported");
    std::vector<DialogueTurn> history;
    auto emit_stage = [&](const StageRecord& stage) {
      plan::ActionCursor cursor(stage.plan.actions);
      for (const auto& t : stage.turns) {
        if (t.role == Role::Counselor) {
          const std::string prev =
              cursor.history.empty() ? std::string(samples::kNoAction) : cursor.history.back().action;
          const std::string next = cursor.history.empty() ? cursor.current_key()
                                                          : cursor.next_key().value_or(std::string(samples::kNoAction));
          const std::string* plan_text = options.include_plan_text ? &stage.plan.plan_text : nullptr;
          out.push_back({samples::utterance_context(history, plan_text, prev, next), samples::turn_target(t),
                         s.session_id});
          if (auto r = plan::step(cursor, t.action, t.turn_num); r.verdict != plan::Verdict::Violation)
            cursor = std::move(r.cursor);
        }
        history.push_back(t);
      }
    };
    emit_stage(s.diagnostic);
    if (s.intervention) emit_stage(*s.intervention);
  }
  return out;
}

PlannerExport export_sft_planner(std::span<const SessionRecord> sessions) {
  PlannerExport out;
  for (const auto& s : sessions) {
    if (!s.intervention) {
      out.skipped.push_back(s.session_id);
      continue;
    }
    out.samples.push_back(
        {samples::planner_context(s.diagnostic.turns), samples::plan_target(s.intervention->plan), s.session_id});
  }
  return out;
}

DpoExport export_dpo(std::span<const PreferencePair> pairs, PairTask task) {
  DpoExport out;
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    if (p.task != task) {
      ++out.other_task;
      continue;
    }
    if (!pair_violations(p).empty() || !(p.chosen_score > p.rejected_score)) {
      ++out.invalid;
      continue;
    }
    if (!seen.insert(p.pair_id).second) {
      ++out.duplicates;
      continue;
    }
    out.rows.push_back({p.context, p.chosen, p.rejected});
  }
  return out;
}

}  // namespace stepforge::exporter
