#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stepforge/gateway/chat.hpp"

namespace stepforge::gateway {

/// Connection-level failure (refused, reset, timeout). Retryable.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-2xx HTTP answer. Retryable only for 5xx.
class HttpStatusError : public std::runtime_error {
 public:
  HttpStatusError(int status, const std::string& body)
      : std::runtime_error("HTTP " + std::to_string(status) + ": " + body), status_(status) {}

  int status() const noexcept { return status_; }
  bool retryable() const noexcept { return status_ >= 500; }

 private:
  int status_;
};

/// A chat-completion provider. Implementations return exactly request.n
/// completions or throw.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  /// False when the provider rejects n > 1; the gateway then issues n
  /// single-completion calls.
  virtual bool supports_n() const { return true; }
};

struct OpenAiBackendOptions {
  std::string base_url;  // scheme://host[:port][/prefix]
  std::string api_key;   // empty: no Authorization header
  std::chrono::seconds timeout{120};
  bool supports_n = true;
};

/// Speaks the OpenAI-compatible /v1/chat/completions protocol over HTTP(S).
class OpenAiBackend : public Backend {
 public:
  explicit OpenAiBackend(OpenAiBackendOptions options);
  ChatResponse complete(const ChatRequest& request) override;
  bool supports_n() const override { return options_.supports_n; }

 private:
  OpenAiBackendOptions options_;
  std::string origin_;
  std::string path_prefix_;
};

/// Environment variable holding the bearer token for a backend id:
/// STEPFORGE_API_KEY_<ID> with the id uppercased and non-alphanumerics as '_'.
std::string api_key_variable(const std::string& backend_id);
std::optional<std::string> api_key_from_env(const std::string& backend_id);

}  // namespace stepforge::gateway
