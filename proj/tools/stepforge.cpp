// stepforge command line entry point.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "stepforge/core/jsonl.hpp"
#include "stepforge/eval/report.hpp"
#include "stepforge/export/exporter.hpp"
#include "stepforge/pipeline/runner.hpp"
#include "stepforge/plan/planner.hpp"
#include "stepforge/profile/forge.hpp"
#include "stepforge/rubrics.hpp"
#include "stepforge/service/server.hpp"
#include "stepforge/synth/synthesizer.hpp"

namespace fs = std::filesystem;
using namespace stepforge;
using json = nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::string replay;
  std::string cache;
  std::optional<std::uint64_t> rng_seed;
  std::size_t concurrency = 0;
};

// Config for a single subcommand: the file (if any) with no stage list, so only
// the flags the subcommand uses are cross-checked.
pipeline::PipelineConfig load(const Globals& g, bool whole_pipeline) {
  json doc = json::object();
  fs::path base;
  if (!g.config.empty()) {
    try {
      doc = read_json_file(g.config);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, e.what());
    }
    base = fs::path(g.config).parent_path();
  }
  if (!whole_pipeline) doc["stages"] = json::array();
  if (!doc.contains("backends")) doc["backends"] = {{"scripted", {{"type", "scripted"}, {"model", "scripted"}}}};
  if (!g.replay.empty()) doc["replay"]["mode"] = g.replay;
  if (!g.cache.empty()) doc["replay"]["cache"] = fs::absolute(g.cache).string();
  if (g.rng_seed) doc["rng_seed"] = *g.rng_seed;
  if (g.concurrency) doc["concurrency"] = g.concurrency;
  return pipeline::parse_config(doc, base);
}

std::string pick(const std::string& flag, const std::string& configured, const char* what) {
  if (!flag.empty()) return flag;
  if (!configured.empty()) return configured;
  throw Error(ErrorCode::ConfigError, std::string("no ") + what + " backend given");
}

void print_counts(const pipeline::StageOutput& out) {
  std::cout << out.counts.dump(2) << "\n";
  for (const auto& f : out.files) std::cout << "wrote " << f << "\n";
}

fs::path staged(const fs::path& dir, const fs::path& file, const std::string& name) {
  const auto dst = dir / name;
  fs::create_directories(dir);
  if (fs::absolute(file) != fs::absolute(dst)) fs::copy_file(file, dst, fs::copy_options::overwrite_existing);
  return dst;
}

service::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stepforge: CBT dialogue synthesis, preference mining and evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--replay", g.replay, "Replay mode")->check(CLI::IsMember({"off", "record", "replay"}));
  app.add_option("--cache", g.cache, "Replay cache file");
  app.add_option("--rng-seed", g.rng_seed, "RNG seed");
  app.add_option("--concurrency", g.concurrency, "Worker threads");

  // profiles
  auto* profiles = app.add_subcommand("profiles", "Decompose seed thoughts into client profiles");
  std::string seeds, profiles_out, profiles_backend;
  profiles->add_option("--seeds", seeds, "Seed JSONL or CSV")->required()->check(CLI::ExistingFile);
  profiles->add_option("--out", profiles_out, "Output profiles JSONL")->required();
  profiles->add_option("--backend", profiles_backend, "Backend id");

  // synth
  auto* synth = app.add_subcommand("synth", "Synthesize two-stage sessions");
  std::string synth_profiles, synth_out, synth_backend;
  synth->add_option("--profiles", synth_profiles, "Profiles JSONL")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--backend", synth_backend, "Backend id");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Generate an intervention plan for a session");
  std::string plan_session, plan_sessions, plan_strategies, plan_backend;
  plan_cmd->add_option("--session", plan_session, "Session id")->required();
  plan_cmd->add_option("--sessions", plan_sessions, "Sessions JSONL holding the session")
      ->required()
      ->check(CLI::ExistingFile);
  plan_cmd->add_option("--strategies", plan_strategies, "Strategy catalog JSON")->check(CLI::ExistingFile);
  plan_cmd->add_option("--backend", plan_backend, "Backend id");

  // filter
  auto* filter = app.add_subcommand("filter", "Score sessions and keep the ones that pass");
  std::string filter_in, filter_out, filter_rejects, filter_judge, filter_stats;
  filter->add_option("--in", filter_in, "Sessions JSONL")->required()->check(CLI::ExistingFile);
  filter->add_option("--out", filter_out, "Retained JSONL")->required();
  filter->add_option("--rejects", filter_rejects, "Rejects JSONL")->required();
  filter->add_option("--stats", filter_stats, "Stats JSON (default: next to --out)");
  filter->add_option("--judge", filter_judge, "Judge backend id");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Turn-by-turn simulation with a counselor backend");
  std::string sim_profiles, sim_mode = "mine", sim_out, sim_counselor;
  simulate->add_option("--profiles", sim_profiles, "Profiles JSONL")->required()->check(CLI::ExistingFile);
  simulate->add_option("--mode", sim_mode, "mine or evaluate")->check(CLI::IsMember({"mine", "evaluate"}));
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_option("--counselor", sim_counselor, "Counselor backend id");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score transcripts with CTRS, SRS, tags and targets");
  std::string eval_transcripts, eval_profiles, eval_judge, eval_metrics, eval_out;
  eval_cmd->add_option("--transcripts", eval_transcripts, "Transcripts JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--profiles", eval_profiles, "Profiles JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--judge", eval_judge, "Judge backend id");
  eval_cmd->add_option("--metrics", eval_metrics, "Comma list: ctrs,srs,tags,diversity,targets");
  eval_cmd->add_option("--out", eval_out, "Output directory (default: print)");

  // h2h
  auto* h2h = app.add_subcommand("h2h", "Head-to-head comparison of two transcript sets");
  std::string h2h_a, h2h_b, h2h_judge, h2h_out;
  std::vector<std::string> h2h_criteria;
  h2h->add_option("--a", h2h_a, "Transcripts of counselor A")->required()->check(CLI::ExistingFile);
  h2h->add_option("--b", h2h_b, "Transcripts of counselor B")->required()->check(CLI::ExistingFile);
  h2h->add_option("--judge", h2h_judge, "Judge backend id");
  h2h->add_option("--criteria", h2h_criteria, "Criteria (default: all seven)");
  h2h->add_option("--out", h2h_out, "Output JSON (default: print)");

  // export
  auto* export_cmd = app.add_subcommand("export", "Export training data from a run directory");
  std::string export_run, export_format, export_out;
  bool export_no_plan = false;
  export_cmd->add_option("--run", export_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("--format", export_format, "Format")
      ->required()
      ->check(CLI::IsMember({"sft-utterance", "sft-planner", "dpo"}));
  export_cmd->add_option("--out", export_out, "Output JSONL (dpo: prefix)")->required();
  export_cmd->add_flag("--no-plan-text", export_no_plan, "Leave the stage plan text out of SFT contexts");

  // report
  auto* report = app.add_subcommand("report", "Render the evaluation report of a run");
  std::string report_run;
  report->add_option("run_dir", report_run, "Run directory")->required()->check(CLI::ExistingDirectory);

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the review API");
  int serve_port = -1;
  std::string serve_data;
  std::vector<std::string> serve_runs;
  serve->add_option("--port", serve_port, "Port");
  serve->add_option("--data-dir", serve_data, "Review data directory");
  serve->add_option("--run", serve_runs, "Run directories with transcripts");

  // run
  auto* run = app.add_subcommand("run", "Run the configured pipeline stages");
  std::string run_out;
  bool run_force = false;
  run->add_option("--out", run_out, "Run directory")->required();
  run->add_flag("--force", run_force, "Ignore the existing manifest");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (g.config.empty()) throw Error(ErrorCode::ConfigError, "run needs --config");
      auto ctx = pipeline::RunContext::make(load(g, true), run_out);
      auto summary = pipeline::run_pipeline(ctx, run_force);
      for (const auto& s : summary.stages)
        std::cout << s.name << ": " << s.status << (s.reused ? " (reused)" : "") << (s.error.empty() ? "" : " (" + s.error + ")") << "\n";
      return summary.ok ? 0 : 1;
    }

    if (*report) {
      const fs::path file = fs::path(report_run) / "eval/report.json";
      if (!fs::exists(file)) {
        std::cout << "no data\n";
        return 0;
      }
      std::cout << eval::render_report(read_json_file(file));
      return 0;
    }

    if (*serve) {
      auto cfg = load(g, false).serve;
      service::apply_env_overrides(cfg, service::process_env());
      if (serve_port >= 0) cfg.port = serve_port;
      if (!serve_data.empty()) cfg.data_dir = serve_data;
      for (const auto& r : serve_runs) cfg.run_dirs.emplace_back(r);
      service::Server server(cfg);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving on " << cfg.host << ":" << cfg.port << std::endl;
      server.run();
      return 0;
    }

    auto cfg = load(g, false);

    if (*profiles) {
      cfg.seeds = seeds;
      cfg.profiles.backend = pick(profiles_backend, cfg.profiles.backend, "profiles");
      const fs::path out(profiles_out);
      auto ctx = pipeline::RunContext::make(cfg, out.has_parent_path() ? out.parent_path() : fs::path("."));
      auto result = pipeline::stage_profiles(ctx);
      if (ctx.path("profiles.jsonl") != fs::absolute(out) && fs::path(out).filename() != "profiles.jsonl")
        fs::rename(ctx.path("profiles.jsonl"), out);
      print_counts(result);
      return 0;
    }

    if (*synth) {
      cfg.synth_dialogue.backend = pick(synth_backend, cfg.synth_dialogue.backend, "synth");
      if (cfg.synth_planner.backend.empty() || !synth_backend.empty()) cfg.synth_planner.backend = cfg.synth_dialogue.backend;
      auto ctx = pipeline::RunContext::make(cfg, synth_out);
      staged(synth_out, synth_profiles, "profiles.jsonl");
      print_counts(pipeline::stage_synth(ctx));
      return 0;
    }

    if (*plan_cmd) {
      const auto backend = pick(plan_backend, cfg.synth_planner.backend, "planner");
      const auto strategies = plan_strategies.empty() ? plan::default_strategies() : plan::load_strategies(plan_strategies);
      auto ctx = pipeline::RunContext::make(cfg, ".");
      for (const auto& s : read_jsonl_as<SessionRecord>(plan_sessions)) {
        if (s.session_id != plan_session) continue;
        auto spec = cfg.synth_planner.spec();
        spec.backend_id = backend;
        const auto plan = plan::generate_intervention_plan(*ctx.gw, spec, s.diagnostic.turns, strategies);
        std::cout << json(plan).dump(2) << "\n";
        return 0;
      }
      throw Error(ErrorCode::InvalidRecord, "no session " + plan_session + " in " + plan_sessions);
    }

    if (*filter) {
      auto judge = cfg.filter_judge;
      judge.backend = pick(filter_judge, judge.backend, "judge");
      auto ctx = pipeline::RunContext::make(cfg, ".");
      auto sessions = read_jsonl_as<SessionRecord>(filter_in);
      auto run_result = quality::filter_corpus(*ctx.gw, judge.spec(), sessions, cfg.filter, cfg.concurrency);
      std::vector<SessionRecord> all, retained;
      std::vector<json> rejects;
      for (const auto& s : run_result.sessions) {
        all.push_back(s.record);
        if (s.decision.retained)
          retained.push_back(s.record);
        else
          rejects.push_back(quality::reject_entry(s));
      }
      write_jsonl(filter_out, retained);
      write_jsonl(filter_rejects, rejects);
      auto stats = quality::to_json(quality::corpus_stats(all));
      stats["passed_scores"] = run_result.passed_scores;
      stats["monotone_rejected"] = run_result.monotone_rejected;
      const fs::path stats_path =
          filter_stats.empty() ? fs::path(filter_out).parent_path() / "filter_stats.json" : fs::path(filter_stats);
      write_json_file(stats_path, stats);
      std::cout << stats.dump(2) << "\n";
      return 0;
    }

    if (*simulate) {
      if (!sim_counselor.empty()) {
        cfg.simulate.counselor_backend = sim_counselor;
        cfg.simulate.planner_backend = sim_counselor;
      }
      auto& s = cfg.simulate;
      for (auto* id : {&s.counselor_backend, &s.planner_backend, &s.client_backend, &s.evaluator_backend})
        if (id->empty() && cfg.backends.size() == 1) *id = cfg.backends.begin()->first;
      const auto mode = sim::parse_mode(sim_mode);
      sim::check_config(s, mode);
      auto ctx = pipeline::RunContext::make(cfg, sim_out);
      const auto profs = read_jsonl_as<ClientProfile>(sim_profiles);
      auto batch = sim::run_batch(*ctx.gw, profs, ctx.strategies, s, mode, cfg.concurrency);
      std::vector<SessionRecord> transcripts;
      std::vector<PreferencePair> up, pp;
      for (auto& r : batch.sessions) {
        transcripts.push_back(r.record);
        up.insert(up.end(), r.utterance_pairs.begin(), r.utterance_pairs.end());
        pp.insert(pp.end(), r.plan_pairs.begin(), r.plan_pairs.end());
      }
      write_jsonl(ctx.path("transcripts.jsonl"), transcripts);
      if (mode == sim::Mode::Mine) {
        write_jsonl(ctx.path("pairs_utterance.jsonl"), up);
        write_jsonl(ctx.path("pairs_plan.jsonl"), pp);
      }
      for (const auto& f : batch.failures) std::cerr << "failed " << f.profile_id << ": " << f.message << "\n";
      std::cout << json{{"sessions", transcripts.size()},
                        {"failures", batch.failures.size()},
                        {"utterance_pairs", up.size()},
                        {"plan_pairs", pp.size()}}
                       .dump(2)
                << "\n";
      return batch.failures.empty() ? 0 : 1;
    }

    if (*eval_cmd) {
      auto judge = cfg.eval_judge;
      judge.backend = pick(eval_judge, judge.backend, "judge");
      auto options = eval::parse_metrics(eval_metrics.empty() ? cfg.eval_metrics : eval_metrics);
      if (cfg.srs_hindering) options.srs_config.hindering_set = *cfg.srs_hindering;
      auto ctx = pipeline::RunContext::make(cfg, eval_out.empty() ? fs::path(".") : fs::path(eval_out));
      std::map<std::string, ClientProfile> by_id;
      for (auto& p : read_jsonl_as<ClientProfile>(eval_profiles)) by_id[p.profile_id] = p;
      const auto records = read_jsonl_as<SessionRecord>(eval_transcripts);
      auto evals = eval::evaluate_sessions(*ctx.gw, judge.spec(), records, by_id, options, cfg.concurrency);
      auto rep = eval::aggregate(evals, options);
      if (!eval_out.empty()) {
        std::vector<json> rows;
        for (const auto& e : evals) rows.push_back(eval::to_json(e));
        write_jsonl(ctx.path("sessions.jsonl"), rows);
        write_json_file(ctx.path("report.json"), rep);
        std::ofstream(ctx.path("report.txt"), std::ios::binary) << eval::render_report(rep);
      }
      std::cout << eval::render_report(rep);
      return 0;
    }

    if (*h2h) {
      auto judge = cfg.eval_judge;
      judge.backend = pick(h2h_judge, judge.backend, "judge");
      if (h2h_criteria.empty())
        for (const auto& c : rubrics::kHeadToHead) h2h_criteria.emplace_back(c.key);
      auto ctx = pipeline::RunContext::make(cfg, ".");
      auto result = pipeline::compare_sets(*ctx.gw, judge.spec(), read_jsonl_as<SessionRecord>(h2h_a),
                                           read_jsonl_as<SessionRecord>(h2h_b), h2h_criteria, cfg.concurrency);
      if (!h2h_out.empty()) write_json_file(h2h_out, result);
      std::cout << result["win_rates"].dump(2) << "\n";
      return 0;
    }

    if (*export_cmd) {
      const fs::path run_dir(export_run);
      const fs::path out(export_out);
      if (export_format == "sft-utterance") {
        auto samples = exporter::export_sft_utterance(read_jsonl_as<SessionRecord>(run_dir / "retained.jsonl"),
                                                      {!export_no_plan});
        write_jsonl(out, samples);
        std::cout << samples.size() << " samples\n";
      } else if (export_format == "sft-planner") {
        auto planner = exporter::export_sft_planner(read_jsonl_as<SessionRecord>(run_dir / "retained.jsonl"));
        write_jsonl(out, planner.samples);
        std::cout << planner.samples.size() << " samples, " << planner.skipped.size() << " skipped\n";
      } else {
        for (auto [task, name] : {std::pair{PairTask::Utterance, "utterance"}, {PairTask::Plan, "plan"}}) {
          const auto src = run_dir / "sim" / (std::string("pairs_") + name + ".jsonl");
          if (!fs::exists(src)) continue;
          auto dpo = exporter::export_dpo(read_jsonl_as<PreferencePair>(src), task);
          const auto dst = out.parent_path() / (out.stem().string() + "_" + name + out.extension().string());
          write_jsonl(dst, dpo.rows);
          std::cout << dst.string() << ": " << dpo.rows.size() << " rows\n";
        }
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
