#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stepforge/service/review_store.hpp"

namespace httplib {
class Server;
}

namespace stepforge::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "review-data";
  std::vector<std::filesystem::path> run_dirs;
  std::optional<std::filesystem::path> ui_dir;
  std::map<std::string, std::string> tokens;  // bearer token -> opaque annotator id
};

/// Reads {"host", "port", "data_dir", "run_dirs", "ui_dir", "tokens"}; unknown keys are a ConfigError.
ServiceConfig service_config_from_json(const nlohmann::json& value);

/// STEPFORGE_SERVE_PORT, STEPFORGE_SERVE_HOST, STEPFORGE_SERVE_DATA_DIR, STEPFORGE_SERVE_UI_DIR,
/// STEPFORGE_SERVE_TOKENS ("token:annotator,token:annotator", replaces the file's map).
using EnvLookup = std::function<std::optional<std::string>(const char*)>;
void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& env);
EnvLookup process_env();

/// Finds a session by id in the run directories; provenance is stripped.
std::optional<nlohmann::json> find_transcript(const std::vector<std::filesystem::path>& run_dirs,
                                              const std::string& session_id);

class Server {
 public:
  explicit Server(ServiceConfig cfg);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start();
  /// Binds and blocks until stop().
  void run();
  void stop();

  review::ReviewStore& store() { return store_; }
  const ServiceConfig& config() const { return cfg_; }

 private:
  void routes();

  ServiceConfig cfg_;
  review::ReviewStore store_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
};

}  // namespace stepforge::service
