#include "stepforge/service/server.hpp"

#include <cstdlib>
#include <set>

#include <httplib.h>

#include "stepforge/core/jsonl.hpp"

namespace stepforge::service {

using json = nlohmann::json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaMismatch: return 400;
    case ErrorCode::TaskNotFound: return 404;
    case ErrorCode::DuplicateVote:
    case ErrorCode::TaskClosed: return 409;
    default: return 500;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  reply(res, status, {{"error", code}, {"message", message}});
}

json task_view(const review::ReviewTask& t, const std::string& annotator) {
  return {{"task_id", t.task_id},
          {"kind", review::to_string(t.kind)},
          {"status", review::to_string(t.status)},
          {"required_votes", t.required_votes},
          {"vote_count", t.votes.size()},
          {"voted", t.has_voted(annotator)},
          {"payload", review::blind(t.payload)},
          {"verdict", t.verdict}};
}

std::vector<std::filesystem::path> session_files(const std::filesystem::path& run) {
  std::vector<std::filesystem::path> out;
  for (const char* name : {"sessions.jsonl", "retained.jsonl"})
    if (std::filesystem::exists(run / name)) out.push_back(run / name);
  if (std::filesystem::is_directory(run / "sim"))
    for (const auto& e : std::filesystem::directory_iterator(run / "sim"))
      if (e.path().extension() == ".jsonl") out.push_back(e.path());
  std::sort(out.begin() + std::min<std::ptrdiff_t>(2, static_cast<std::ptrdiff_t>(out.size())), out.end());
  return out;
}

}  // namespace

ServiceConfig service_config_from_json(const json& v) {
  if (!v.is_object()) throw Error(ErrorCode::ConfigError, "serve: config must be an object");
  static const std::set<std::string> known = {"host", "port", "data_dir", "run_dirs", "ui_dir", "tokens"};
  for (const auto& [k, _] : v.items())
    if (!known.count(k)) throw Error(ErrorCode::ConfigError, "serve." + k + ": unknown key");
  ServiceConfig cfg;
  try {
    if (v.contains("host")) cfg.host = v["host"].get<std::string>();
    if (v.contains("port")) cfg.port = v["port"].get<int>();
    if (v.contains("data_dir")) cfg.data_dir = v["data_dir"].get<std::string>();
    if (v.contains("run_dirs"))
      for (const auto& d : v["run_dirs"]) cfg.run_dirs.emplace_back(d.get<std::string>());
    if (v.contains("ui_dir")) cfg.ui_dir = v["ui_dir"].get<std::string>();
    if (v.contains("tokens")) cfg.tokens = v["tokens"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("serve: ") + e.what());
  }
  if (cfg.port < 0 || cfg.port > 65535) throw Error(ErrorCode::ConfigError, "serve.port out of range");
  return cfg;
}

void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& env) {
  if (auto v = env("STEPFORGE_SERVE_HOST")) cfg.host = *v;
  if (auto v = env("STEPFORGE_SERVE_PORT")) {
    try {
      cfg.port = std::stoi(*v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "STEPFORGE_SERVE_PORT is not a number");
    }
  }
  if (auto v = env("STEPFORGE_SERVE_DATA_DIR")) cfg.data_dir = *v;
  if (auto v = env("STEPFORGE_SERVE_UI_DIR")) cfg.ui_dir = *v;
  if (auto v = env("STEPFORGE_SERVE_TOKENS")) {
    cfg.tokens.clear();
    std::size_t pos = 0;
    while (pos <= v->size()) {
      auto end = v->find(',', pos);
      auto item = v->substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      auto colon = item.find(':');
      if (!item.empty()) {
        if (colon == std::string::npos || colon == 0 || colon + 1 == item.size())
          throw Error(ErrorCode::ConfigError, "STEPFORGE_SERVE_TOKENS entries are token:annotator");
        cfg.tokens[item.substr(0, colon)] = item.substr(colon + 1);
      }
      if (end == std::string::npos) break;
      pos = end + 1;
    }
  }
}

EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name)) return std::string(v);
    return std::nullopt;
  };
}

std::optional<json> find_transcript(const std::vector<std::filesystem::path>& run_dirs, const std::string& id) {
  for (const auto& run : run_dirs)
    for (const auto& file : session_files(run))
      for (auto& rec : read_jsonl(file))
        if (rec.is_object() && rec.value("session_id", std::string()) == id) {
          rec.erase("provenance");
          return review::blind(rec);
        }
  return std::nullopt;
}

Server::Server(ServiceConfig cfg)
    : cfg_(std::move(cfg)), store_(cfg_.data_dir), http_(std::make_unique<httplib::Server>()) {
  routes();
}

Server::~Server() { stop(); }

void Server::routes() {
  auto& s = *http_;

  // Resolves the bearer token or answers 401 and returns nullopt.
  auto annotator = [this](const httplib::Request& req, httplib::Response& res) -> std::optional<std::string> {
    const auto header = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    if (header.rfind(prefix, 0) == 0) {
      auto it = cfg_.tokens.find(header.substr(prefix.size()));
      if (it != cfg_.tokens.end()) return it->second;
    }
    fail(res, 401, "Unauthorized", "missing or unknown bearer token");
    return std::nullopt;
  };

  auto guarded = [](httplib::Response& res, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      fail(res, status_for(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      fail(res, 400, "SchemaMismatch", e.what());
    }
  };

  s.Post("/api/tasks", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!annotator(req, res)) return;
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      if (!body.is_object() || !body.contains("kind") || !body.contains("payload"))
        throw Error(ErrorCode::SchemaMismatch, "body needs kind and payload");
      const auto kind = review::parse_task_kind(body["kind"].get<std::string>());
      const int required = body.value("required_votes", 3);
      reply(res, 201, {{"task_id", store_.create_task(kind, body["payload"], required)}});
    });
  });

  s.Get("/api/tasks", [=, this](const httplib::Request& req, httplib::Response& res) {
    auto who = annotator(req, res);
    if (!who) return;
    guarded(res, [&] {
      std::optional<review::TaskStatus> status;
      std::optional<review::TaskKind> kind;
      if (req.has_param("status")) status = review::parse_task_status(req.get_param_value("status"));
      if (req.has_param("kind")) kind = review::parse_task_kind(req.get_param_value("kind"));
      json out = json::array();
      for (const auto& t : store_.list(status, kind)) out.push_back(task_view(t, *who));
      reply(res, 200, {{"tasks", out}});
    });
  });

  s.Post(R"(/api/tasks/([^/]+)/votes)", [=, this](const httplib::Request& req, httplib::Response& res) {
    auto who = annotator(req, res);
    if (!who) return;
    guarded(res, [&] {
      const auto t = store_.submit_vote(req.matches[1], *who, json::parse(req.body));
      reply(res, 200, task_view(t, *who));
    });
  });

  s.Get("/api/reports/agreement", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!annotator(req, res)) return;
    guarded(res, [&] { reply(res, 200, review::to_json(review::agreement_report(store_.list()))); });
  });

  s.Get(R"(/api/transcripts/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!annotator(req, res)) return;
    guarded(res, [&] {
      auto t = find_transcript(cfg_.run_dirs, req.matches[1]);
      if (!t) {
        fail(res, 404, "NotFound", "no transcript " + std::string(req.matches[1]));
        return;
      }
      reply(res, 200, *t);
    });
  });

  if (cfg_.ui_dir && std::filesystem::is_directory(*cfg_.ui_dir)) s.set_mount_point("/", cfg_.ui_dir->string());
}

int Server::start() {
  int port = cfg_.port;
  if (port == 0) {
    port = http_->bind_to_any_port(cfg_.host);
  } else if (!http_->bind_to_port(cfg_.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorCode::ConfigError, "cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return port;
}

void Server::run() {
  if (!http_->listen(cfg_.host, cfg_.port))
    throw Error(ErrorCode::ConfigError, "cannot listen on " + cfg_.host + ":" + std::to_string(cfg_.port));
}

void Server::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace stepforge::service
