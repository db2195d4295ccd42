#include "stepforge/pipeline/runner.hpp"

#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "stepforge/core/jsonl.hpp"
#include "stepforge/export/exporter.hpp"
#include "stepforge/plan/planner.hpp"
#include "stepforge/profile/forge.hpp"
#include "stepforge/synth/synthesizer.hpp"
#include "stepforge/util/hash.hpp"
#include "stepforge/util/parallel.hpp"

namespace stepforge::pipeline {

namespace {

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<SessionRecord> read_sessions(const std::filesystem::path& file) {
  return read_jsonl_as<SessionRecord>(file);
}

std::vector<ClientProfile> read_profiles(const std::filesystem::path& file) {
  return read_jsonl_as<ClientProfile>(file);
}

std::string what_of(const std::exception_ptr& p) {
  try {
    std::rethrow_exception(p);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

// Profiles the simulate and eval stages run on.
std::vector<ClientProfile> simulation_profiles(const RunContext& ctx) {
  auto profiles = read_profiles(ctx.path("profiles.jsonl"));
  if (ctx.cfg.simulate_source == "profiles") return profiles;
  std::set<std::string> keep;
  for (const auto& s : read_sessions(ctx.path("retained.jsonl"))) keep.insert(s.profile_id);
  std::erase_if(profiles, [&](const ClientProfile& p) { return !keep.count(p.profile_id); });
  return profiles;
}

std::string safe_name(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}

}  // namespace

std::string file_sha256(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return util::sha256_hex(ss.str());
}

RunContext RunContext::make(PipelineConfig cfg, std::filesystem::path run_dir) {
  RunContext ctx;
  ctx.gw = build_gateway(cfg);
  ctx.strategies = cfg.strategies ? plan::load_strategies(*cfg.strategies) : plan::default_strategies();
  if (cfg.replay_mode == gateway::ReplayMode::Off) ctx.clock = utc_now;
  ctx.cfg = std::move(cfg);
  ctx.run_dir = std::move(run_dir);
  std::filesystem::create_directories(ctx.run_dir);
  return ctx;
}

StageOutput stage_profiles(const RunContext& ctx) {
  auto ingest = profile::ingest_seeds(ctx.cfg.seeds);
  auto forged = profile::forge_profiles(*ctx.gw, ctx.cfg.profiles.spec(), ingest.seeds, ctx.cfg.rng_seed,
                                        ctx.cfg.concurrency);
  std::vector<json> failures;
  for (const auto& r : ingest.rejects) failures.push_back({{"row", r.row}, {"reason", r.reason}});
  for (const auto& f : forged.failures) failures.push_back({{"seed_id", f.seed_id}, {"error", f.message}});
  write_jsonl(ctx.path("profiles.jsonl"), forged.profiles);
  write_jsonl(ctx.path("profile_failures.jsonl"), failures);
  if (forged.profiles.empty()) throw Error(ErrorCode::StageFailed, "no profile could be built");
  StageOutput out{{"profiles.jsonl", "profile_failures.jsonl"}, {}};
  out.counts = {{"seeds", ingest.seeds.size()},
                {"seed_rejects", ingest.rejects.size()},
                {"profiles", forged.profiles.size()},
                {"failures", forged.failures.size()}};
  return out;
}

StageOutput stage_synth(const RunContext& ctx) {
  const auto profiles = read_profiles(ctx.path("profiles.jsonl"));
  synth::SynthesisSpecs specs{ctx.cfg.synth_dialogue.spec(), ctx.cfg.synth_planner.spec(), ctx.cfg.turn_caps,
                              ctx.clock};
  auto results = util::parallel_map(profiles, ctx.cfg.concurrency, [&](const ClientProfile& p, std::size_t) {
    return synth::synthesize_session(*ctx.gw, specs, p, ctx.strategies);
  });

  StageOutput out;
  std::vector<SessionRecord> sessions;
  std::vector<json> failures;
  std::filesystem::remove_all(ctx.path("partials"));
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].ok()) {
      sessions.push_back(std::move(*results[i].value));
      continue;
    }
    try {
      std::rethrow_exception(results[i].error);
    } catch (const synth::SessionAborted& e) {
      if (e.code() == ErrorCode::ReplayMiss || e.code() == ErrorCode::BackendUnavailable) throw;
      const auto rel = "partials/" + safe_name(e.partial().session_id) + ".json";
      write_json_file(ctx.path(rel), {{"stage", e.stage()},
                                      {"code", to_string(e.code())},
                                      {"error", e.what()},
                                      {"record", e.partial()}});
      out.files.push_back(rel);
      failures.push_back({{"profile_id", profiles[i].profile_id}, {"stage", e.stage()}, {"error", e.what()}});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ReplayMiss || e.code() == ErrorCode::BackendUnavailable) throw;
      failures.push_back({{"profile_id", profiles[i].profile_id}, {"error", e.what()}});
    }
  }
  write_jsonl(ctx.path("sessions.jsonl"), sessions);
  write_jsonl(ctx.path("synth_failures.jsonl"), failures);
  if (sessions.empty()) throw Error(ErrorCode::StageFailed, "no session was synthesized");
  out.files.insert(out.files.begin(), {"sessions.jsonl", "synth_failures.jsonl"});
  out.counts = {{"profiles", profiles.size()}, {"sessions", sessions.size()}, {"aborted", failures.size()}};
  return out;
}

StageOutput stage_filter(const RunContext& ctx) {
  const auto sessions = read_sessions(ctx.path("sessions.jsonl"));
  auto run = quality::filter_corpus(*ctx.gw, ctx.cfg.filter_judge.spec(), sessions, ctx.cfg.filter, ctx.cfg.concurrency);
  std::vector<SessionRecord> all, retained;
  std::vector<json> rejects;
  std::size_t unscorable = 0;
  for (const auto& s : run.sessions) {
    all.push_back(s.record);
    if (s.decision.retained)
      retained.push_back(s.record);
    else
      rejects.push_back(quality::reject_entry(s));
    unscorable += !s.ctrs;
  }
  write_jsonl(ctx.path("retained.jsonl"), retained);
  write_jsonl(ctx.path("rejects.jsonl"), rejects);
  auto stats = quality::to_json(quality::corpus_stats(all));
  stats["passed_scores"] = run.passed_scores;
  stats["monotone_rejected"] = run.monotone_rejected;
  stats["unscorable"] = unscorable;
  write_json_file(ctx.path("filter_stats.json"), stats);
  return {{"retained.jsonl", "rejects.jsonl", "filter_stats.json"},
          {{"sessions", sessions.size()}, {"retained", retained.size()}, {"rejected", rejects.size()}}};
}

StageOutput stage_simulate(const RunContext& ctx) {
  const auto profiles = simulation_profiles(ctx);
  auto batch = sim::run_batch(*ctx.gw, profiles, ctx.strategies, ctx.cfg.simulate, sim::Mode::Mine,
                              ctx.cfg.concurrency);
  std::vector<SessionRecord> transcripts;
  std::vector<PreferencePair> utterance_pairs, plan_pairs;
  std::vector<json> failures;
  for (auto& r : batch.sessions) {
    transcripts.push_back(r.record);
    utterance_pairs.insert(utterance_pairs.end(), r.utterance_pairs.begin(), r.utterance_pairs.end());
    plan_pairs.insert(plan_pairs.end(), r.plan_pairs.begin(), r.plan_pairs.end());
  }
  for (const auto& f : batch.failures) failures.push_back({{"profile_id", f.profile_id}, {"error", f.message}});
  write_jsonl(ctx.path("sim/transcripts.jsonl"), transcripts);
  write_jsonl(ctx.path("sim/pairs_utterance.jsonl"), utterance_pairs);
  write_jsonl(ctx.path("sim/pairs_plan.jsonl"), plan_pairs);
  write_jsonl(ctx.path("sim/failures.jsonl"), failures);
  return {{"sim/transcripts.jsonl", "sim/pairs_utterance.jsonl", "sim/pairs_plan.jsonl", "sim/failures.jsonl"},
          {{"profiles", profiles.size()},
           {"sessions", transcripts.size()},
           {"failures", failures.size()},
           {"utterance_pairs", utterance_pairs.size()},
           {"plan_pairs", plan_pairs.size()}}};
}

StageOutput stage_export(const RunContext& ctx) {
  StageOutput out;
  const auto& formats = ctx.cfg.export_formats;
  auto want = [&](const char* f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
  std::vector<SessionRecord> retained;
  if (want("sft-utterance") || want("sft-planner")) retained = read_sessions(ctx.path("retained.jsonl"));
  if (want("sft-utterance")) {
    auto samples = exporter::export_sft_utterance(retained, {ctx.cfg.include_plan_text});
    write_jsonl(ctx.path("export/sft_utterance.jsonl"), samples);
    out.files.emplace_back("export/sft_utterance.jsonl");
    out.counts["sft_utterance"] = samples.size();
  }
  if (want("sft-planner")) {
    auto planner = exporter::export_sft_planner(retained);
    write_jsonl(ctx.path("export/sft_planner.jsonl"), planner.samples);
    out.files.emplace_back("export/sft_planner.jsonl");
    out.counts["sft_planner"] = planner.samples.size();
    out.counts["sft_planner_skipped"] = planner.skipped.size();
  }
  if (want("dpo")) {
    for (auto [task, name] : {std::pair{PairTask::Utterance, "utterance"}, {PairTask::Plan, "plan"}}) {
      const auto src = ctx.path(std::string("sim/pairs_") + name + ".jsonl");
      std::vector<PreferencePair> pairs;
      if (std::filesystem::exists(src)) pairs = read_jsonl_as<PreferencePair>(src);
      auto dpo = exporter::export_dpo(pairs, task);
      const auto rel = std::string("export/dpo_") + name + ".jsonl";
      write_jsonl(ctx.path(rel), dpo.rows);
      out.files.push_back(rel);
      out.counts[std::string("dpo_") + name] = dpo.rows.size();
      out.counts[std::string("dpo_") + name + "_dropped"] = dpo.duplicates + dpo.invalid + dpo.other_task;
    }
  }
  return out;
}

StageOutput stage_eval(const RunContext& ctx) {
  auto options = eval::parse_metrics(ctx.cfg.eval_metrics);
  if (ctx.cfg.srs_hindering) options.srs_config.hindering_set = *ctx.cfg.srs_hindering;
  const auto profiles = simulation_profiles(ctx);
  std::map<std::string, ClientProfile> by_id;
  for (const auto& p : profiles) by_id[p.profile_id] = p;

  StageOutput out;
  std::vector<SessionRecord> transcripts;
  std::vector<json> failures;
  for (const auto& counselor : ctx.cfg.eval_counselors) {
    auto cfg = ctx.cfg.simulate;
    cfg.counselor_backend = counselor;
    cfg.planner_backend = counselor;
    auto batch = sim::run_batch(*ctx.gw, profiles, ctx.strategies, cfg, sim::Mode::Evaluate, ctx.cfg.concurrency);
    std::vector<SessionRecord> mine;
    for (auto& r : batch.sessions) mine.push_back(r.record);
    for (const auto& f : batch.failures)
      failures.push_back({{"counselor", counselor}, {"profile_id", f.profile_id}, {"error", f.message}});
    const auto rel = "eval/transcripts_" + safe_name(counselor) + ".jsonl";
    write_jsonl(ctx.path(rel), mine);
    out.files.push_back(rel);
    transcripts.insert(transcripts.end(), mine.begin(), mine.end());
  }
  auto evals = eval::evaluate_sessions(*ctx.gw, ctx.cfg.eval_judge.spec(), transcripts, by_id, options,
                                       ctx.cfg.concurrency);
  std::vector<json> rows;
  for (const auto& e : evals) rows.push_back(eval::to_json(e));
  write_jsonl(ctx.path("eval/sessions.jsonl"), rows);
  write_jsonl(ctx.path("eval/failures.jsonl"), failures);
  auto report = eval::aggregate(evals, options);
  write_json_file(ctx.path("eval/report.json"), report);
  {
    std::ofstream txt(ctx.path("eval/report.txt"), std::ios::binary | std::ios::trunc);
    txt << eval::render_report(report);
  }
  out.files.insert(out.files.end(),
                   {"eval/sessions.jsonl", "eval/failures.jsonl", "eval/report.json", "eval/report.txt"});
  out.counts = {{"counselors", ctx.cfg.eval_counselors.size()},
                {"transcripts", transcripts.size()},
                {"failures", failures.size()}};
  return out;
}

StageOutput run_stage(const RunContext& ctx, const std::string& name) {
  if (name == "profiles") return stage_profiles(ctx);
  if (name == "synth") return stage_synth(ctx);
  if (name == "filter") return stage_filter(ctx);
  if (name == "simulate") return stage_simulate(ctx);
  if (name == "export") return stage_export(ctx);
  if (name == "eval") return stage_eval(ctx);
  throw Error(ErrorCode::ConfigError, "unknown stage '" + name + "'");
}

namespace {

json to_json(const StageStatus& s) {
  json j{{"name", s.name}, {"status", s.status}, {"outputs", s.outputs}, {"counts", s.counts}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

std::optional<StageStatus> reusable(const json& previous, const std::string& name, const RunContext& ctx) {
  if (!previous.is_object() || !previous.contains("stages")) return std::nullopt;
  for (const auto& s : previous["stages"]) {
    if (s.value("name", std::string()) != name) continue;
    if (s.value("status", std::string()) != "done") return std::nullopt;
    StageStatus st;
    st.name = name;
    st.status = "done";
    st.reused = true;
    st.counts = s.value("counts", json::object());
    const auto outputs = s.value("outputs", json::object());
    for (const auto& [rel, hash] : outputs.items()) {
      const auto file = ctx.path(rel);
      if (!std::filesystem::exists(file) || file_sha256(file) != hash.get<std::string>()) return std::nullopt;
      st.outputs[rel] = hash.get<std::string>();
    }
    return st;
  }
  return std::nullopt;
}

}  // namespace

RunSummary run_pipeline(const RunContext& ctx, bool force) {
  const auto digest = config_digest(ctx.cfg);
  const auto manifest_path = ctx.path("manifest.json");
  json previous;
  if (!force && std::filesystem::exists(manifest_path)) {
    try {
      previous = read_json_file(manifest_path);
    } catch (const Error&) {
      previous = nullptr;
    }
    if (!previous.is_object() || previous.value("config_digest", std::string()) != digest) previous = nullptr;
  }

  RunSummary summary;
  bool upstream_ran = false;
  bool halted = false;
  for (const auto& name : kStageOrder) {
    if (std::find(ctx.cfg.stages.begin(), ctx.cfg.stages.end(), name) == ctx.cfg.stages.end()) continue;
    StageStatus st;
    st.name = name;
    if (halted) {
      summary.stages.push_back(st);
      continue;
    }
    if (!upstream_ran) {
      if (auto prior = reusable(previous, name, ctx)) {
        summary.stages.push_back(*prior);
        continue;
      }
    }
    upstream_ran = true;
    try {
      auto out = run_stage(ctx, name);
      st.status = "done";
      st.counts = out.counts;
      for (const auto& rel : out.files) st.outputs[rel] = file_sha256(ctx.path(rel));
    } catch (const std::exception& e) {
      st.status = "failed";
      st.error = e.what();
      summary.ok = false;
      halted = true;
    }
    summary.stages.push_back(st);
  }

  json backends = json::object();
  for (const auto& [id, b] : ctx.cfg.backends) backends[id] = {{"type", b.type}, {"model", b.model}};
  json stages = json::array();
  for (const auto& s : summary.stages) stages.push_back(to_json(s));
  summary.manifest = {{"config_digest", digest},
                      {"replay_mode", gateway::to_string(ctx.cfg.replay_mode)},
                      {"rng_seed", ctx.cfg.rng_seed},
                      {"backends", backends},
                      {"stages", stages},
                      {"ok", summary.ok}};
  write_json_file(manifest_path, summary.manifest);
  return summary;
}

json compare_sets(const gateway::Gateway& gw, const gateway::CallSpec& judge, const std::vector<SessionRecord>& a,
                  const std::vector<SessionRecord>& b, const std::vector<std::string>& criteria, std::size_t workers) {
  std::map<std::string, const SessionRecord*> b_by_profile;
  for (const auto& r : b) b_by_profile.emplace(r.profile_id, &r);
  std::vector<std::pair<const SessionRecord*, const SessionRecord*>> matched;
  for (const auto& r : a)
    if (auto it = b_by_profile.find(r.profile_id); it != b_by_profile.end()) matched.emplace_back(&r, it->second);

  auto results = util::parallel_map(matched, workers, [&](const auto& m, std::size_t) {
    const auto ta = m.first->all_turns();
    const auto tb = m.second->all_turns();
    return eval::head_to_head(gw, judge, ta, tb, criteria);
  });

  std::map<std::string, std::vector<eval::Preference>> per_criterion;
  json matches = json::array();
  json failures = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [ra, rb] = matched[i];
    if (!results[i].ok()) {
      failures.push_back({{"profile_id", ra->profile_id}, {"error", what_of(results[i].error)}});
      continue;
    }
    json verdicts = json::object();
    for (const auto& [c, p] : *results[i].value) {
      per_criterion[c].push_back(p);
      verdicts[c] = eval::to_string(p);
    }
    matches.push_back({{"profile_id", ra->profile_id},
                       {"a_session", ra->session_id},
                       {"b_session", rb->session_id},
                       {"verdicts", verdicts}});
  }
  json rates = json::object();
  for (const auto& c : criteria) {
    const auto w = eval::win_rates(per_criterion[c]);
    rates[c] = {{"a", w.a}, {"b", w.b}, {"tie", w.tie}};
  }
  return {{"pairs", matched.size()}, {"compared", matches.size()}, {"win_rates", rates}, {"matches", matches},
          {"failures", failures}};
}

}  // namespace stepforge::pipeline
