#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stepforge/core/validate.hpp"
#include "stepforge/eval/report.hpp"
#include "stepforge/gateway/gateway.hpp"
#include "stepforge/gateway/structured_call.hpp"
#include "stepforge/quality/gate.hpp"
#include "stepforge/service/server.hpp"
#include "stepforge/sim/simulation.hpp"

namespace stepforge::pipeline {

using json = nlohmann::json;

struct BackendConfig {
  std::string type = "openai";  // openai | scripted
  std::string model;
  std::string base_url;
  bool supports_n = true;
  int timeout_s = 120;
  std::size_t max_concurrency = 8;
  double requests_per_second = 0.0;
  double burst = 1.0;
  // scripted only
  std::uint64_t seed = 0;
  double invalid_action_rate = 0.1;
  double exit_rate = 0.05;
  double low_score_rate = 0.15;
};

struct SamplingConfig {
  std::string backend;
  double temperature = 1.0;
  double top_p = 1.0;
  std::optional<int> max_output_tokens;

  gateway::CallSpec spec() const { return {backend, {}, temperature, top_p, max_output_tokens}; }
};

inline const std::vector<std::string> kStageOrder = {"profiles", "synth", "filter", "simulate", "export", "eval"};

struct PipelineConfig {
  std::filesystem::path seeds;
  std::optional<std::filesystem::path> strategies;
  std::uint64_t rng_seed = 0;
  std::size_t concurrency = 4;
  gateway::ReplayMode replay_mode = gateway::ReplayMode::Off;
  std::optional<std::filesystem::path> replay_cache;
  std::map<std::string, BackendConfig> backends;
  std::vector<std::string> stages = kStageOrder;

  SamplingConfig profiles{{}, 0.7, 1.0, {}};
  SamplingConfig synth_dialogue{{}, 1.0, 0.9, {}};
  SamplingConfig synth_planner{{}, 1.0, 0.9, {}};
  TurnCaps turn_caps;

  SamplingConfig filter_judge{{}, 0.0, 1.0, {}};
  quality::FilterConfig filter;

  sim::SimulationConfig simulate;
  std::string simulate_source = "retained";  // retained | profiles

  std::vector<std::string> export_formats = {"sft-utterance", "sft-planner", "dpo"};
  bool include_plan_text = true;

  SamplingConfig eval_judge{{}, 0.0, 1.0, {}};
  std::string eval_metrics = "ctrs,srs,tags,diversity,targets";
  std::vector<std::string> eval_counselors;  // empty: simulate.counselor_backend
  std::optional<std::vector<std::string>> srs_hindering;

  service::ServiceConfig serve;

  json source;  // the parsed document, for the digest
};

/// Parses the document. Relative paths are resolved against `base_dir`.
/// Unknown keys and bad values throw Error(ConfigError) naming the key path.
PipelineConfig parse_config(const json& document, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& file);

/// sha256 of the canonical (sorted-key) serialization.
std::string config_digest(const PipelineConfig& cfg);

/// Builds a gateway with every configured backend. In Replay mode backends
/// are registered without an implementation. API keys come from the environment.
std::shared_ptr<gateway::Gateway> build_gateway(const PipelineConfig& cfg);

}  // namespace stepforge::pipeline
