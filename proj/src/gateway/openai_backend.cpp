#include <cctype>
#include <cstdlib>

#include <httplib.h>

#include "stepforge/error.hpp"
#include "stepforge/gateway/backend.hpp"

namespace stepforge::gateway {

namespace {

// Splits "http://host:port/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  auto scheme_end = url.find("://");
  auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

OpenAiBackend::OpenAiBackend(OpenAiBackendOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw Error(ErrorCode::ConfigError, "backend base_url is empty");
  std::tie(origin_, path_prefix_) = split_base_url(options_.base_url);
}

ChatResponse OpenAiBackend::complete(const ChatRequest& request) {
  httplib::Client client(origin_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  auto result = client.Post(path_prefix_ + "/v1/chat/completions", headers, wire_body(request),
                            "application/json");
  if (!result) throw TransportError("transport failure: " + httplib::to_string(result.error()));
  if (result->status < 200 || result->status >= 300) throw HttpStatusError(result->status, result->body);
  auto response = parse_wire_response(result->body);
  if (static_cast<int>(response.completions.size()) != request.n)
    throw Error(ErrorCode::MalformedResponse, "expected " + std::to_string(request.n) + " completions, got " +
                                                  std::to_string(response.completions.size()));
  return response;
}

std::string api_key_variable(const std::string& backend_id) {
  std::string name = "STEPFORGE_API_KEY_";
  for (char c : backend_id)
    name += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                                                        : '_';
  return name;
}

std::optional<std::string> api_key_from_env(const std::string& backend_id) {
  if (const char* v = std::getenv(api_key_variable(backend_id).c_str()); v != nullptr && *v != '\0')
    return std::string(v);
  return std::nullopt;
}

}  // namespace stepforge::gateway
