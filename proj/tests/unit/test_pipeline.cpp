#include <cstdio>
#include <cstdlib>
#include <string>

#include <gtest/gtest.h>

#include "pipeline_fixture.hpp"
#include "stepforge/core/jsonl.hpp"

using namespace stepforge;
using fixtures::TempDir;
namespace fs = std::filesystem;

namespace {

std::string config_error(const nlohmann::json& doc) {
  try {
    pipeline::parse_config(doc);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(STEPFORGE_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, UnknownKeyNamesItsPath) {
  TempDir dir;
  auto doc = fixtures::offline_config(dir.path, 2, "off");
  doc["filter"]["x"] = 1;
  const auto msg = config_error(doc);
  EXPECT_NE(msg.find("filter.x"), std::string::npos) << msg;
  EXPECT_NE(msg.find("unknown key"), std::string::npos) << msg;
}

TEST(Config, BadValuesNameTheirPath) {
  TempDir dir;
  auto doc = fixtures::offline_config(dir.path, 2, "off");
  doc["synth"]["top_p"] = 1.5;
  EXPECT_NE(config_error(doc).find("synth.top_p"), std::string::npos);

  doc = fixtures::offline_config(dir.path, 2, "off");
  doc["filter"]["judge"] = "nobody";
  EXPECT_NE(config_error(doc).find("filter.judge"), std::string::npos);

  doc = fixtures::offline_config(dir.path, 2, "off");
  doc["eval"]["counselors"] = {"ghost"};
  EXPECT_NE(config_error(doc).find("eval.counselors"), std::string::npos);

  doc = fixtures::offline_config(dir.path, 2, "off");
  doc["rng_seed"] = "seven";
  EXPECT_NE(config_error(doc).find("rng_seed"), std::string::npos);
}

TEST(Config, DigestIgnoresKeyOrder) {
  TempDir dir;
  auto a = fixtures::offline_config(dir.path, 2, "off");
  nlohmann::json b;
  for (auto it = a.rbegin(); it != a.rend(); ++it) b[it.key()] = it.value();
  EXPECT_EQ(pipeline::config_digest(pipeline::parse_config(a)), pipeline::config_digest(pipeline::parse_config(b)));
  a["rng_seed"] = 8;
  EXPECT_NE(pipeline::config_digest(pipeline::parse_config(a)), pipeline::config_digest(pipeline::parse_config(b)));
}

TEST(Pipeline, FullOfflineRunWritesEveryStage) {
  TempDir dir;
  const auto summary = fixtures::run_offline(fixtures::offline_config(dir.path, 4, "off"), dir / "run");
  ASSERT_TRUE(summary.ok) << summary.manifest.dump(2);
  ASSERT_EQ(summary.stages.size(), pipeline::kStageOrder.size());
  for (const auto& s : summary.stages) {
    EXPECT_EQ(s.status, "done") << s.name << ": " << s.error;
    for (const auto& [rel, hash] : s.outputs) {
      EXPECT_TRUE(fs::exists(dir / "run" / rel)) << rel;
      EXPECT_EQ(pipeline::file_sha256(dir / "run" / rel), hash);
    }
  }
  const auto manifest = read_json_file(dir / "run/manifest.json");
  EXPECT_EQ(manifest, summary.manifest);
  EXPECT_TRUE(manifest["ok"].get<bool>());

  const auto sessions = read_jsonl_as<SessionRecord>(dir / "run/sessions.jsonl");
  const auto retained = read_jsonl_as<SessionRecord>(dir / "run/retained.jsonl");
  const auto rejects = read_jsonl(dir / "run/rejects.jsonl");
  EXPECT_EQ(sessions.size(), retained.size() + rejects.size());
  for (const auto& s : retained) EXPECT_EQ(s.status, SessionStatus::Retained);
  for (const auto& r : rejects) EXPECT_FALSE(r["reasons"].empty()) << r.dump();
}

TEST(Pipeline, ResumeReusesUntouchedStagesAndRerunsDownstream) {
  TempDir dir;
  const auto doc = fixtures::offline_config(dir.path, 3, "record");
  ASSERT_TRUE(fixtures::run_offline(doc, dir / "run").ok);

  auto again = fixtures::run_offline(doc, dir / "run");
  ASSERT_TRUE(again.ok);
  for (const auto& s : again.stages) EXPECT_TRUE(s.reused) << s.name;

  fs::remove(dir / "run/retained.jsonl");
  auto partial = fixtures::run_offline(doc, dir / "run");
  ASSERT_TRUE(partial.ok);
  for (const auto& s : partial.stages) {
    const bool upstream = s.name == "profiles" || s.name == "synth";
    EXPECT_EQ(s.reused, upstream) << s.name;
  }
  EXPECT_TRUE(fs::exists(dir / "run/retained.jsonl"));

  auto forced = fixtures::run_offline(doc, dir / "run", true);
  for (const auto& s : forced.stages) EXPECT_FALSE(s.reused) << s.name;
}

TEST(Pipeline, ChangedConfigInvalidatesTheManifest) {
  TempDir dir;
  auto doc = fixtures::offline_config(dir.path, 2, "off");
  ASSERT_TRUE(fixtures::run_offline(doc, dir / "run").ok);
  doc["filter"]["ctrs_min_keep"] = 4;
  for (const auto& s : fixtures::run_offline(doc, dir / "run").stages) EXPECT_FALSE(s.reused) << s.name;
}

TEST(Pipeline, ReplayRunsMatchByteForByte) {
  TempDir dir;
  ASSERT_TRUE(fixtures::run_offline(fixtures::offline_config(dir.path, 3, "record"), dir / "rec").ok);
  const auto doc = fixtures::offline_config(dir.path, 3, "replay");
  const auto a = fixtures::run_offline(doc, dir / "a");
  const auto b = fixtures::run_offline(doc, dir / "b");
  ASSERT_TRUE(a.ok) << a.manifest.dump(2);
  ASSERT_TRUE(b.ok);
  EXPECT_EQ(a.manifest, b.manifest);
  for (const auto& s : a.stages)
    for (const auto& [rel, hash] : s.outputs) EXPECT_EQ(fixtures::slurp(dir / "a" / rel), fixtures::slurp(dir / "b" / rel)) << rel;
  // the recorded run and its replays agree as well
  EXPECT_EQ(fixtures::slurp(dir / "rec/retained.jsonl"), fixtures::slurp(dir / "a/retained.jsonl"));
}

TEST(Pipeline, ReplayMissHaltsAndStillWritesManifest) {
  TempDir dir;
  const auto summary = fixtures::run_offline(fixtures::offline_config(dir.path, 2, "replay"), dir / "run");
  EXPECT_FALSE(summary.ok);
  ASSERT_TRUE(fs::exists(dir / "run/manifest.json"));
  const auto manifest = read_json_file(dir / "run/manifest.json");
  EXPECT_FALSE(manifest["ok"].get<bool>());
  bool seen_failed = false;
  for (const auto& s : manifest["stages"]) {
    const auto status = s["status"].get<std::string>();
    if (seen_failed) EXPECT_EQ(status, "pending");
    if (status == "failed") {
      seen_failed = true;
      EXPECT_FALSE(s["error"].get<std::string>().empty());
    }
  }
  EXPECT_TRUE(seen_failed);
}

TEST(Cli, RunExitCodes) {
  TempDir dir;
  auto doc = fixtures::offline_config(dir.path, 2, "off");
  write_json_file(dir / "ok.json", doc);
  EXPECT_EQ(run_cli("--config " + (dir / "ok.json").string() + " run --out " + (dir / "run").string(), dir / "log1"), 0)
      << fixtures::slurp(dir / "log1");
  EXPECT_TRUE(fs::exists(dir / "run/manifest.json"));

  EXPECT_EQ(run_cli("report " + (dir / "run").string(), dir / "log2"), 0);
  EXPECT_FALSE(fixtures::slurp(dir / "log2").empty());

  doc["filter"]["x"] = 1;
  write_json_file(dir / "bad.json", doc);
  EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string() + " run --out " + (dir / "run2").string(), dir / "log3"), 2);
  EXPECT_NE(fixtures::slurp(dir / "log3").find("filter.x"), std::string::npos);

  const auto miss = fixtures::offline_config(dir.path, 2, "replay");
  auto miss_doc = miss;
  miss_doc["replay"]["cache"] = (dir / "empty_cache.jsonl").string();
  write_json_file(dir / "miss.json", miss_doc);
  EXPECT_EQ(run_cli("--config " + (dir / "miss.json").string() + " run --out " + (dir / "run3").string(), dir / "log4"), 1);
  EXPECT_TRUE(fs::exists(dir / "run3/manifest.json"));
}

TEST(Cli, ExportSubcommand) {
  TempDir dir;
  ASSERT_TRUE(fixtures::run_offline(fixtures::offline_config(dir.path, 3, "off"), dir / "run").ok);
  EXPECT_EQ(run_cli("export --run " + (dir / "run").string() + " --format sft-planner --out " + (dir / "p.jsonl").string(),
                    dir / "log"),
            0);
  EXPECT_EQ(fixtures::slurp(dir / "p.jsonl"), fixtures::slurp(dir / "run/export/sft_planner.jsonl"));
}
