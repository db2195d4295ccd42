#pragma once

#include <span>
#include <string>
#include <vector>

#include "stepforge/core/model.hpp"

namespace stepforge::exporter {

struct SftSample {
  std::string prompt_context;
  std::string target;
  std::string source_session;

  bool operator==(const SftSample&) const = default;
};

void to_json(json& j, const SftSample& s);
void from_json(const json& j, SftSample& s);

struct SftOptions {
  bool include_plan_text = true;
};

/// One sample per counselor turn of every session, diagnostic then
/// intervention. Throws Error(InvalidRecord) for sessions not Retained.
std::vector<SftSample> export_sft_utterance(std::span<const SessionRecord> sessions, const SftOptions& options = {});

struct PlannerExport {
  std::vector<SftSample> samples;
  std::vector<std::string> skipped;  // sessions without an intervention stage
};

PlannerExport export_sft_planner(std::span<const SessionRecord> sessions);

struct DpoRow {
  std::string prompt;
  std::string chosen;
  std::string rejected;

  bool operator==(const DpoRow&) const = default;
};

void to_json(json& j, const DpoRow& r);
void from_json(const json& j, DpoRow& r);

struct DpoExport {
  std::vector<DpoRow> rows;
  std::size_t duplicates = 0;  // repeated pair_ids dropped
  std::size_t invalid = 0;     // pairs breaking the preference invariant
  std::size_t other_task = 0;
};

DpoExport export_dpo(std::span<const PreferencePair> pairs, PairTask task);

}  // namespace stepforge::exporter
