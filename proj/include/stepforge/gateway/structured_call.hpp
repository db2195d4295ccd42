#pragma once

#include <exception>
#include <optional>
#include <string>
#include <utility>

#include "stepforge/error.hpp"
#include "stepforge/gateway/gateway.hpp"
#include "stepforge/gateway/json_extract.hpp"

namespace stepforge::gateway {

inline constexpr const char* kRegenerateInstruction =
    "Your previous reply could not be used. Return only the requested JSON, with no other text.";

/// Backend and sampling parameters for one kind of call.
struct CallSpec {
  std::string backend_id;
  std::string model;  // empty: the backend's default model
  double temperature = 1.0;
  double top_p = 1.0;
  std::optional<int> max_output_tokens;

  ChatRequest request(std::string prompt, std::string tag, int n = 1) const {
    ChatRequest r;
    r.backend_id = backend_id;
    r.model = model;
    r.messages.push_back({MessageRole::User, std::move(prompt)});
    r.temperature = temperature;
    r.top_p = top_p;
    r.n = n;
    r.max_output_tokens = max_output_tokens;
    r.request_tag = std::move(tag);
    return r;
  }
};

/// Thrown by parse callbacks when a JSON value is present but unusable.
class ParseRejected : public Error {
 public:
  explicit ParseRejected(const std::string& message) : Error(ErrorCode::MalformedResponse, message) {}
};

namespace detail {
inline bool is_parse_code(ErrorCode code) {
  return code == ErrorCode::MalformedResponse || code == ErrorCode::NoJsonFound || code == ErrorCode::ShapeMismatch;
}
}  // namespace detail

/// Calls the gateway for one completion and parses it. On a failure the
/// request is issued again with the rejected reply and a correction appended,
/// so replayed runs regenerate deterministically.
///
/// After the last attempt: parse failures become Error(failure_code); any
/// other Error thrown by `parse` (constraint or structural checks) is
/// rethrown as is. Gateway errors (BackendUnavailable, ReplayMiss) propagate
/// immediately.
template <typename Parse>
auto call_structured(const Gateway& gw, ChatRequest request, JsonShape shape, Parse parse, ErrorCode failure_code,
                     int attempts = 2) -> decltype(parse(std::declval<const nlohmann::json&>())) {
  std::string last;
  std::exception_ptr last_error;
  request.n = 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto response = gw.complete(request);
    const std::string& text = response.completions.front();
    try {
      return parse(extract_json(text, shape));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BackendUnavailable || e.code() == ErrorCode::ReplayMiss) throw;
      last = e.what();
      last_error = detail::is_parse_code(e.code()) ? nullptr : std::current_exception();
    } catch (const nlohmann::json::exception& e) {
      last = e.what();
      last_error = nullptr;
    }
    request.messages.push_back({MessageRole::Assistant, text});
    request.messages.push_back({MessageRole::User, kRegenerateInstruction});
  }
  if (last_error) std::rethrow_exception(last_error);
  throw Error(failure_code, request.request_tag + ": " + last);
}

}  // namespace stepforge::gateway
