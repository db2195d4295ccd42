#include "stepforge/quality/gate.hpp"

#include <cmath>
#include <sstream>

#include "stepforge/plan/action_cursor.hpp"
#include "stepforge/prompts.hpp"
#include "stepforge/util/parallel.hpp"

namespace stepforge::quality {

namespace {

constexpr std::string_view kCtrsSuffixes[] = {"_score_reason", "_reason"};
constexpr std::string_view kAdherenceSuffixes[] = {"_reason", "_score_reason"};

std::string number(double v) {
  if (v == std::floor(v)) return std::to_string(static_cast<long long>(v));
  std::ostringstream s;
  s << v;
  return s.str();
}

double round4(double v) { return std::round(v * 10000.0) / 10000.0; }

}  // namespace

void check_config(const FilterConfig& cfg) {
  if (cfg.ctrs_min_keep < 0 || cfg.ctrs_min_keep > 6)
    throw Error(ErrorCode::ConfigError, "ctrs_min_keep must lie in [0, 6]");
  if (cfg.adherence_min < 1 || cfg.adherence_min > 5)
    throw Error(ErrorCode::ConfigError, "adherence_min must lie in [1, 5]");
}

RubricScore parse_rubric(const json& value, std::span<const rubrics::Item> items, const std::string& rubric_id,
                         ScoreScale scale, std::span<const std::string_view> reason_suffixes) {
  if (!value.is_object()) throw gateway::ParseRejected(rubric_id + ": judge output is not an object");
  RubricScore score;
  score.rubric_id = rubric_id;
  score.scale = scale;
  for (const auto& item : items) {
    const std::string key(item.key);
    if (!value.contains(key)) throw gateway::ParseRejected(rubric_id + ": missing item " + key);
    const auto& v = value[key];
    if (!v.is_number()) throw gateway::ParseRejected(rubric_id + ": " + key + " is not a number");
    double s = v.get<double>();
    if (s < scale.min || s > scale.max)
      throw gateway::ParseRejected(rubric_id + ": " + key + "=" + number(s) + " outside scale");
    score.item_scores[key] = s;

    std::optional<std::string> reason;
    for (auto suffix : reason_suffixes) {
      auto rk = key + std::string(suffix);
      if (value.contains(rk) && value[rk].is_string() && !value[rk].get<std::string>().empty()) {
        reason = value[rk].get<std::string>();
        break;
      }
    }
    if (!reason) throw gateway::ParseRejected(rubric_id + ": no reason for " + key);
    score.item_reasons[key] = *reason;
  }
  return score;
}

RubricScore score_ctrs8(const gateway::Gateway& gw, const gateway::CallSpec& judge, const SessionRecord& session) {
  if (!session.intervention) throw Error(ErrorCode::InvalidRecord, session.session_id + ": no intervention stage");
  const auto turns = session.all_turns();
  return gateway::call_structured(
      gw, judge.request(prompts::ctrs8(turns), prompts::tag::kCtrs8), gateway::JsonShape::Object,
      [](const json& v) { return parse_rubric(v, rubrics::kCtrs8, "ctrs8", {0, 6}, kCtrsSuffixes); },
      ErrorCode::JudgeParseFailed);
}

RubricScore score_adherence(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                            const SessionRecord& session) {
  if (!session.intervention) throw Error(ErrorCode::InvalidRecord, session.session_id + ": no intervention stage");
  auto prompt = prompts::adherence(session.diagnostic.turns, session.intervention->plan, session.intervention->turns);
  return gateway::call_structured(
      gw, judge.request(std::move(prompt), prompts::tag::kAdherence), gateway::JsonShape::Object,
      [](const json& v) { return parse_rubric(v, rubrics::kAdherence, "adherence", {1, 5}, kAdherenceSuffixes); },
      ErrorCode::JudgeParseFailed);
}

bool monotone_ok(const SessionRecord& session) {
  if (!plan::check_monotone(session.diagnostic.turns, session.diagnostic.plan.actions).ok) return false;
  if (session.intervention &&
      !plan::check_monotone(session.intervention->turns, session.intervention->plan.actions).ok)
    return false;
  return true;
}

FilterDecision apply_filter(const SessionRecord& session, const std::optional<RubricScore>& ctrs,
                            const std::optional<RubricScore>& adherence, const FilterConfig& cfg) {
  FilterDecision d;
  if (!ctrs || !adherence) {
    d.reasons.emplace_back("unscorable");
  } else {
    for (const auto& item : rubrics::kCtrs8) {
      auto it = ctrs->item_scores.find(std::string(item.key));
      if (it == ctrs->item_scores.end()) {
        d.reasons.push_back("ctrs:" + std::string(item.key) + "=missing");
      } else if (it->second < cfg.ctrs_min_keep) {
        d.reasons.push_back("ctrs:" + it->first + "=" + number(it->second));
      }
    }
    for (const auto& item : rubrics::kAdherence) {
      auto it = adherence->item_scores.find(std::string(item.key));
      if (it == adherence->item_scores.end()) {
        d.reasons.push_back("adherence:" + std::string(item.key) + "=missing");
      } else if (it->second < cfg.adherence_min) {
        d.reasons.push_back("adherence:" + it->first + "=" + number(it->second));
      }
    }
  }
  if (cfg.require_monotone && !monotone_ok(session)) d.reasons.emplace_back("monotonicity");
  d.retained = d.reasons.empty();
  return d;
}

CorpusStats corpus_stats(std::span<const SessionRecord> sessions) {
  CorpusStats s;
  s.total = sessions.size();
  for (const auto& r : sessions) {
    if (r.status != SessionStatus::Retained) continue;
    ++s.retained;
    for (const auto& t : r.all_turns()) {
      ++s.total_turns;
      if (t.role == Role::Counselor) ++s.total_pairs;
    }
  }
  if (s.total > 0) s.retention_rate = round4(static_cast<double>(s.retained) / static_cast<double>(s.total));
  if (s.retained > 0) {
    s.avg_turns = static_cast<double>(s.total_turns) / static_cast<double>(s.retained);
    s.avg_pairs = static_cast<double>(s.total_pairs) / static_cast<double>(s.retained);
  }
  return s;
}

json to_json(const CorpusStats& s) {
  return json{{"total", s.total},           {"retained", s.retained},   {"retention_rate", s.retention_rate},
              {"total_turns", s.total_turns}, {"total_pairs", s.total_pairs}, {"avg_turns", s.avg_turns},
              {"avg_pairs", s.avg_pairs}};
}

FilterRun filter_corpus(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                        const std::vector<SessionRecord>& sessions, const FilterConfig& cfg, std::size_t workers) {
  check_config(cfg);
  auto scored = util::parallel_map(sessions, workers, [&](const SessionRecord& s, std::size_t) {
    ScoredSession out;
    out.record = s;
    try {
      out.ctrs = score_ctrs8(gw, judge, s);
      out.adherence = score_adherence(gw, judge, s);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::JudgeParseFailed) throw;
      out.ctrs.reset();
      out.adherence.reset();
      out.judge_error = e.what();
    }
    out.decision = apply_filter(s, out.ctrs, out.adherence, cfg);
    out.record.status = out.decision.retained ? SessionStatus::Retained : SessionStatus::Filtered;
    return out;
  });

  FilterRun run;
  for (auto& o : scored) {
    if (!o.ok()) std::rethrow_exception(o.error);
    auto& s = *o.value;
    const auto& reasons = s.decision.reasons;
    const bool only_monotone = reasons.size() == 1 && reasons.front() == "monotonicity";
    if (s.decision.retained || only_monotone) ++run.passed_scores;
    if (only_monotone) ++run.monotone_rejected;
    run.sessions.push_back(std::move(s));
  }
  return run;
}

json reject_entry(const ScoredSession& s) {
  json j{{"session_id", s.record.session_id},
         {"status", to_string(s.record.status)},
         {"reasons", s.decision.reasons},
         {"ctrs", s.ctrs ? json(*s.ctrs) : json(nullptr)},
         {"adherence", s.adherence ? json(*s.adherence) : json(nullptr)}};
  if (!s.judge_error.empty()) j["judge_error"] = s.judge_error;
  return j;
}

}  // namespace stepforge::quality
