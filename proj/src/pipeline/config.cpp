#include "stepforge/pipeline/config.hpp"

#include <set>

#include "stepforge/core/jsonl.hpp"
#include "stepforge/gateway/scripted_backend.hpp"
#include "stepforge/util/hash.hpp"

namespace stepforge::pipeline {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

// Reads one table and rejects keys nobody asked for.
class Table {
 public:
  Table(const json& value, std::string path) : v_(value), path_(std::move(path)) {
    if (!v_.is_object()) bad(where(), "expected a table");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return v_.contains(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = v_.at(key).get<T>();
    } catch (const json::exception&) {
      bad(key_path(key), "wrong type");
    }
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    if (!has(key) || v_.at(key).is_null()) return;
    T tmp{};
    read(key, tmp);
    out = tmp;
  }

  void read_path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    if (!has(key)) return;
    read(key, s);
    out = resolve(s, base);
  }

  void read_path(const std::string& key, std::optional<std::filesystem::path>& out,
                 const std::filesystem::path& base) {
    if (!has(key) || v_.at(key).is_null()) return;
    std::filesystem::path p;
    read_path(key, p, base);
    out = p;
  }

  Table sub(const std::string& key) {
    has(key);
    return Table(v_.at(key), key_path(key));
  }
  bool has_table(const std::string& key) { return has(key); }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return v_.at(key);
  }
  const json& value() const { return v_; }

  void finish() const {
    for (const auto& [k, _] : v_.items())
      if (!seen_.count(k)) bad(key_path(k), "unknown key");
  }

  static std::filesystem::path resolve(const std::string& s, const std::filesystem::path& base) {
    std::filesystem::path p(s);
    return p.is_absolute() || base.empty() ? p : base / p;
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& v_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_sampling(Table t, SamplingConfig& s, const char* backend_key = "backend") {
  t.read(backend_key, s.backend);
  t.read("temperature", s.temperature);
  t.read("top_p", s.top_p);
  t.read("max_output_tokens", s.max_output_tokens);
  t.finish();
}

void check_sampling(const SamplingConfig& s, const std::string& path, const PipelineConfig& cfg, bool needed) {
  if (s.backend.empty()) {
    if (needed) bad(path + ".backend", "required");
    return;
  }
  if (!cfg.backends.count(s.backend)) bad(path + ".backend", "unknown backend '" + s.backend + "'");
  if (s.temperature < 0) bad(path + ".temperature", "must be >= 0");
  if (s.top_p <= 0 || s.top_p > 1) bad(path + ".top_p", "must lie in (0, 1]");
  if (s.max_output_tokens && *s.max_output_tokens <= 0) bad(path + ".max_output_tokens", "must be positive");
}

bool wants(const PipelineConfig& cfg, const std::string& stage) {
  return std::find(cfg.stages.begin(), cfg.stages.end(), stage) != cfg.stages.end();
}

}  // namespace

PipelineConfig parse_config(const json& document, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  cfg.source = document;
  Table root(document, "");
  root.read_path("seeds", cfg.seeds, base_dir);
  root.read_path("strategies", cfg.strategies, base_dir);
  root.read("rng_seed", cfg.rng_seed);
  root.read("concurrency", cfg.concurrency);
  if (cfg.concurrency == 0) bad("concurrency", "must be positive");

  if (root.has("replay")) {
    auto t = root.sub("replay");
    std::string mode = "off";
    t.read("mode", mode);
    try {
      cfg.replay_mode = gateway::parse_replay_mode(mode);
    } catch (const Error&) {
      bad("replay.mode", "expected off, record or replay");
    }
    t.read_path("cache", cfg.replay_cache, base_dir);
    t.finish();
  }

  if (root.has("backends")) {
    auto all = root.sub("backends");
    for (const auto& [id, _] : all.value().items()) {
      auto t = all.sub(id);
      BackendConfig b;
      t.read("type", b.type);
      t.read("model", b.model);
      t.read("base_url", b.base_url);
      t.read("supports_n", b.supports_n);
      t.read("timeout_s", b.timeout_s);
      t.read("max_concurrency", b.max_concurrency);
      t.read("requests_per_second", b.requests_per_second);
      t.read("burst", b.burst);
      t.read("seed", b.seed);
      t.read("invalid_action_rate", b.invalid_action_rate);
      t.read("exit_rate", b.exit_rate);
      t.read("low_score_rate", b.low_score_rate);
      t.finish();
      const auto path = "backends." + id;
      if (b.type != "openai" && b.type != "scripted") bad(path + ".type", "expected openai or scripted");
      if (b.type == "openai" && b.base_url.empty()) bad(path + ".base_url", "required for openai backends");
      if (b.max_concurrency == 0) bad(path + ".max_concurrency", "must be positive");
      cfg.backends[id] = b;
    }
    all.finish();
  }

  if (root.has("stages")) {
    root.read("stages", cfg.stages);
    for (const auto& s : cfg.stages)
      if (std::find(kStageOrder.begin(), kStageOrder.end(), s) == kStageOrder.end())
        bad("stages", "unknown stage '" + s + "'");
  }

  if (root.has("profiles")) read_sampling(root.sub("profiles"), cfg.profiles);

  if (root.has("synth")) {
    auto t = root.sub("synth");
    t.read("backend", cfg.synth_dialogue.backend);
    t.read("temperature", cfg.synth_dialogue.temperature);
    t.read("top_p", cfg.synth_dialogue.top_p);
    t.read("max_output_tokens", cfg.synth_dialogue.max_output_tokens);
    if (t.has("planner")) read_sampling(t.sub("planner"), cfg.synth_planner);
    t.read("diagnostic_turn_cap", cfg.turn_caps.diagnostic);
    t.read("intervention_turn_cap", cfg.turn_caps.intervention);
    t.finish();
  }
  if (cfg.synth_planner.backend.empty()) cfg.synth_planner.backend = cfg.synth_dialogue.backend;

  if (root.has("filter")) {
    auto t = root.sub("filter");
    t.read("judge", cfg.filter_judge.backend);
    t.read("temperature", cfg.filter_judge.temperature);
    t.read("top_p", cfg.filter_judge.top_p);
    t.read("max_output_tokens", cfg.filter_judge.max_output_tokens);
    t.read("ctrs_min_keep", cfg.filter.ctrs_min_keep);
    t.read("adherence_min", cfg.filter.adherence_min);
    t.read("require_monotone", cfg.filter.require_monotone);
    t.finish();
  }

  if (root.has("simulate")) {
    auto t = root.sub("simulate");
    auto& s = cfg.simulate;
    t.read("source", cfg.simulate_source);
    t.read("n_candidates", s.n_candidates);
    t.read("temperature", s.temperature);
    t.read("top_p", s.top_p);
    t.read("max_turns", s.max_turns);
    t.read("exit_token", s.exit_token);
    t.read("counselor_backend", s.counselor_backend);
    t.read("planner_backend", s.planner_backend);
    t.read("client_backend", s.client_backend);
    t.read("evaluator_backend", s.evaluator_backend);
    t.read("client_temperature", s.client_temperature);
    t.read("evaluator_temperature", s.evaluator_temperature);
    t.read("include_plan_in_context", s.include_plan_in_context);
    std::string scheme = std::string(sim::to_string(s.pair_scheme));
    t.read("pair_scheme", scheme);
    try {
      s.pair_scheme = sim::parse_pair_scheme(scheme);
    } catch (const Error&) {
      bad("simulate.pair_scheme", "unknown scheme '" + scheme + "'");
    }
    t.finish();
    if (cfg.simulate_source != "retained" && cfg.simulate_source != "profiles")
      bad("simulate.source", "expected retained or profiles");
  }
  cfg.simulate.rng_seed = cfg.rng_seed;

  if (root.has("export")) {
    auto t = root.sub("export");
    t.read("formats", cfg.export_formats);
    t.read("include_plan_text", cfg.include_plan_text);
    t.finish();
    for (const auto& f : cfg.export_formats)
      if (f != "sft-utterance" && f != "sft-planner" && f != "dpo") bad("export.formats", "unknown format '" + f + "'");
  }

  if (root.has("eval")) {
    auto t = root.sub("eval");
    t.read("judge", cfg.eval_judge.backend);
    t.read("temperature", cfg.eval_judge.temperature);
    t.read("top_p", cfg.eval_judge.top_p);
    t.read("max_output_tokens", cfg.eval_judge.max_output_tokens);
    t.read("metrics", cfg.eval_metrics);
    t.read("counselors", cfg.eval_counselors);
    t.read("srs_hindering", cfg.srs_hindering);
    t.finish();
    try {
      auto opts = eval::parse_metrics(cfg.eval_metrics);
      if (cfg.srs_hindering) {
        opts.srs_config.hindering_set = *cfg.srs_hindering;
        eval::check_config(opts.srs_config);
      }
    } catch (const Error& e) {
      bad("eval", e.what());
    }
  }

  if (root.has("serve")) {
    try {
      cfg.serve = service::service_config_from_json(root.raw("serve"));
    } catch (const Error& e) {
      bad("serve", e.what());
    }
    if (!cfg.serve.data_dir.is_absolute() && !base_dir.empty()) cfg.serve.data_dir = base_dir / cfg.serve.data_dir;
    for (auto& d : cfg.serve.run_dirs)
      if (!d.is_absolute() && !base_dir.empty()) d = base_dir / d;
    if (cfg.serve.ui_dir && !cfg.serve.ui_dir->is_absolute() && !base_dir.empty())
      cfg.serve.ui_dir = base_dir / *cfg.serve.ui_dir;
  }
  root.finish();

  // Cross-checks for the stages that will run.
  if (cfg.replay_mode != gateway::ReplayMode::Off && !cfg.replay_cache)
    bad("replay.cache", "required when replay.mode is not off");
  check_sampling(cfg.profiles, "profiles", cfg, wants(cfg, "profiles"));
  check_sampling(cfg.synth_dialogue, "synth", cfg, wants(cfg, "synth"));
  check_sampling(cfg.synth_planner, "synth.planner", cfg, wants(cfg, "synth"));
  check_sampling(cfg.filter_judge, "filter.judge", cfg, wants(cfg, "filter"));
  if (wants(cfg, "profiles") && cfg.seeds.empty()) bad("seeds", "required by the profiles stage");
  try {
    quality::check_config(cfg.filter);
  } catch (const Error& e) {
    bad("filter", e.what());
  }
  auto& s = cfg.simulate;
  if (s.planner_backend.empty()) s.planner_backend = s.counselor_backend;
  for (auto [name, id] : {std::pair{"counselor_backend", &s.counselor_backend}, {"planner_backend", &s.planner_backend},
                          {"client_backend", &s.client_backend}, {"evaluator_backend", &s.evaluator_backend}}) {
    if (!id->empty() && !cfg.backends.count(*id)) bad(std::string("simulate.") + name, "unknown backend '" + *id + "'");
  }
  if (wants(cfg, "simulate")) {
    try {
      sim::check_config(s, sim::Mode::Mine);
    } catch (const Error& e) {
      bad("simulate", e.what());
    }
  }
  if (cfg.eval_counselors.empty() && !s.counselor_backend.empty()) cfg.eval_counselors = {s.counselor_backend};
  for (const auto& id : cfg.eval_counselors)
    if (!cfg.backends.count(id)) bad("eval.counselors", "unknown backend '" + id + "'");
  check_sampling(cfg.eval_judge, "eval.judge", cfg, wants(cfg, "eval"));
  if (wants(cfg, "eval")) {
    if (cfg.eval_counselors.empty()) bad("eval.counselors", "required by the eval stage");
    try {
      sim::check_config(s, sim::Mode::Evaluate);
    } catch (const Error& e) {
      bad("simulate", e.what());
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& file) {
  json doc;
  try {
    doc = read_json_file(file);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return parse_config(doc, file.parent_path());
}

std::string config_digest(const PipelineConfig& cfg) { return util::sha256_hex(cfg.source.dump()); }

std::shared_ptr<gateway::Gateway> build_gateway(const PipelineConfig& cfg) {
  std::shared_ptr<gateway::ReplayStore> store;
  if (cfg.replay_cache)
    store = std::make_shared<gateway::ReplayStore>(*cfg.replay_cache);
  else
    store = std::make_shared<gateway::ReplayStore>();
  auto gw = std::make_shared<gateway::Gateway>(cfg.replay_mode, store);
  for (const auto& [id, b] : cfg.backends) {
    gateway::BackendOptions opts{b.model, b.max_concurrency, b.requests_per_second, b.burst};
    std::shared_ptr<gateway::Backend> impl;
    if (cfg.replay_mode != gateway::ReplayMode::Replay) {
      if (b.type == "scripted") {
        impl = std::make_shared<gateway::ScriptedBackend>(
            gateway::ScriptedOptions{b.seed, b.invalid_action_rate, b.exit_rate, b.low_score_rate});
      } else {
        gateway::OpenAiBackendOptions o;
        o.base_url = b.base_url;
        o.api_key = gateway::api_key_from_env(id).value_or("");
        o.timeout = std::chrono::seconds(b.timeout_s);
        o.supports_n = b.supports_n;
        impl = std::make_shared<gateway::OpenAiBackend>(o);
      }
    }
    gw->register_backend(id, impl, opts);
  }
  return gw;
}

}  // namespace stepforge::pipeline
