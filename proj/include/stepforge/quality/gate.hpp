#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepforge/core/model.hpp"
#include "stepforge/gateway/structured_call.hpp"
#include "stepforge/rubrics.hpp"

namespace stepforge::quality {

struct FilterConfig {
  int ctrs_min_keep = 5;  // any CTRS item below this discards the session
  double adherence_min = 4.0;
  bool require_monotone = true;
};

/// Throws Error(ConfigError) when a threshold is out of range.
void check_config(const FilterConfig& cfg);

/// Reads {"<Item>": score, "<Item><suffix>": reason, ...} for every item.
/// Scores must be numbers inside the scale and every reason a non-empty
/// string. Throws ParseRejected.
RubricScore parse_rubric(const json& value, std::span<const rubrics::Item> items, const std::string& rubric_id,
                         ScoreScale scale, std::span<const std::string_view> reason_suffixes);

/// Judge calls (one regeneration). Error: JudgeParseFailed.
RubricScore score_ctrs8(const gateway::Gateway& gw, const gateway::CallSpec& judge, const SessionRecord& session);
RubricScore score_adherence(const gateway::Gateway& gw, const gateway::CallSpec& judge, const SessionRecord& session);

struct FilterDecision {
  bool retained = false;
  std::vector<std::string> reasons;  // every failed gate, e.g. "ctrs:Focusing=4"
};

/// Pure. A missing score marks the session unscorable.
FilterDecision apply_filter(const SessionRecord& session, const std::optional<RubricScore>& ctrs,
                            const std::optional<RubricScore>& adherence, const FilterConfig& cfg);

/// True when both stages follow their action sequences.
bool monotone_ok(const SessionRecord& session);

struct CorpusStats {
  std::size_t total = 0;
  std::size_t retained = 0;
  double retention_rate = 0.0;  // rounded to 4 decimals
  std::size_t total_turns = 0;  // utterances in retained sessions
  std::size_t total_pairs = 0;  // counselor turns in retained sessions
  double avg_turns = 0.0;
  double avg_pairs = 0.0;
};

CorpusStats corpus_stats(std::span<const SessionRecord> sessions);
json to_json(const CorpusStats& stats);

struct ScoredSession {
  SessionRecord record;  // status set to Retained or Filtered
  std::optional<RubricScore> ctrs;
  std::optional<RubricScore> adherence;
  FilterDecision decision;
  std::string judge_error;
};

struct FilterRun {
  std::vector<ScoredSession> sessions;  // input order
  std::size_t passed_scores = 0;        // sessions passing the score gates, before monotonicity
  std::size_t monotone_rejected = 0;    // passed the scores, failed only monotonicity
};

FilterRun filter_corpus(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                        const std::vector<SessionRecord>& sessions, const FilterConfig& cfg, std::size_t workers);

/// {"session_id", "status", "reasons", "ctrs", "adherence"} for rejects files.
json reject_entry(const ScoredSession& s);

}  // namespace stepforge::quality
