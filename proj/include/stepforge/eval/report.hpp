#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stepforge/eval/metrics.hpp"

namespace stepforge::eval {

struct EvalOptions {
  bool ctrs = true;
  bool srs = true;
  bool tags = true;
  bool targets = true;
  SrsConfig srs_config;
  double entropy_base = 2.718281828459045;
};

/// Parses a comma list such as "ctrs,srs,tags,diversity,targets".
/// "diversity" implies tags. Throws Error(ConfigError).
EvalOptions parse_metrics(const std::string& list);

struct SessionEval {
  std::string session_id;
  std::string profile_id;
  std::string backend;
  std::optional<RubricScore> ctrs7;
  std::optional<SrsResult> srs;
  std::optional<TagMap> tags;
  std::optional<Target> target;
  std::optional<bool> target_overlap;
  std::vector<std::string> errors;
};

json to_json(const SessionEval& e);

/// The counselor backend a record was produced by.
std::string counselor_backend_of(const SessionRecord& record);

/// Scores every session concurrently. Judge failures are recorded in the
/// entry's errors, never dropped.
std::vector<SessionEval> evaluate_sessions(const gateway::Gateway& gw, const gateway::CallSpec& judge,
                                           const std::vector<SessionRecord>& records,
                                           const std::map<std::string, ClientProfile>& profiles,
                                           const EvalOptions& options, std::size_t workers);

/// Per-backend aggregates: CTRS item means, SRS subscales, diversity, top-3
/// tag shares and target overlap.
json aggregate(const std::vector<SessionEval>& evals, const EvalOptions& options);

/// Plain-text tables for an aggregate report. Missing metrics are noted.
std::string render_report(const json& report);

}  // namespace stepforge::eval
