#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stepforge/pipeline/config.hpp"

namespace stepforge::pipeline {

/// What a stage wrote, relative to the run directory, plus its counters.
struct StageOutput {
  std::vector<std::string> files;
  json counts = json::object();
};

struct StageStatus {
  std::string name;
  std::string status = "pending";  // pending | done | skipped | failed
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  json counts = json::object();
  std::string error;
  bool reused = false;  // taken from the previous manifest, not written to it
};

struct RunSummary {
  bool ok = true;
  std::vector<StageStatus> stages;
  json manifest;
};

/// Shared state for the stages of one run directory.
struct RunContext {
  PipelineConfig cfg;
  std::shared_ptr<gateway::Gateway> gw;
  std::filesystem::path run_dir;
  std::vector<CbtStrategy> strategies;
  /// Provenance timestamps; empty under record/replay so records stay stable.
  std::function<std::string()> clock;

  static RunContext make(PipelineConfig cfg, std::filesystem::path run_dir);
  std::filesystem::path path(const std::string& rel) const { return run_dir / rel; }
};

StageOutput stage_profiles(const RunContext& ctx);
StageOutput stage_synth(const RunContext& ctx);
StageOutput stage_filter(const RunContext& ctx);
StageOutput stage_simulate(const RunContext& ctx);
StageOutput stage_export(const RunContext& ctx);
StageOutput stage_eval(const RunContext& ctx);

StageOutput run_stage(const RunContext& ctx, const std::string& name);

/// Runs cfg.stages in canonical order. A stage is skipped when the existing
/// manifest has the same config digest, marks it done, every recorded output
/// still hashes the same, and no earlier stage ran in this invocation.
/// A failing stage halts the run; the manifest is written either way.
RunSummary run_pipeline(const RunContext& ctx, bool force = false);

/// Head-to-head over two transcript sets paired by profile id.
json compare_sets(const gateway::Gateway& gw, const gateway::CallSpec& judge, const std::vector<SessionRecord>& a,
                  const std::vector<SessionRecord>& b, const std::vector<std::string>& criteria, std::size_t workers);

std::string file_sha256(const std::filesystem::path& file);

}  // namespace stepforge::pipeline
