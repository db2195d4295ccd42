#include "stepforge/gateway/chat.hpp"

#include <algorithm>

#include "stepforge/error.hpp"
#include "stepforge/util/hash.hpp"

namespace stepforge::gateway {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(MessageRole role) noexcept {
  switch (role) {
    case MessageRole::System: return "system";
    case MessageRole::User: return "user";
    case MessageRole::Assistant: return "assistant";
  }
  return "user";
}

MessageRole parse_message_role(std::string_view text) {
  if (text == "system") return MessageRole::System;
  if (text == "user") return MessageRole::User;
  if (text == "assistant") return MessageRole::Assistant;
  throw Error(ErrorCode::MalformedResponse, "unknown message role '" + std::string(text) + "'");
}

void check_request(const ChatRequest& r) {
  if (r.messages.empty()) throw Error(ErrorCode::MalformedResponse, "request has no messages");
  if (r.n < 1) throw Error(ErrorCode::MalformedResponse, "n must be >= 1");
  if (r.temperature < 0.0) throw Error(ErrorCode::MalformedResponse, "temperature must be >= 0");
  if (!(r.top_p > 0.0 && r.top_p <= 1.0)) throw Error(ErrorCode::MalformedResponse, "top_p must be in (0,1]");
  if (r.max_output_tokens && *r.max_output_tokens < 1)
    throw Error(ErrorCode::MalformedResponse, "max_output_tokens must be positive");
}

std::string replay_digest(const ChatRequest& r, int candidate_index) {
  json messages = json::array();
  for (const auto& m : r.messages) messages.push_back(json::array({to_string(m.role), m.content}));
  json material = json::array(
      {r.backend_id, r.model, messages, r.temperature, r.top_p, r.n, candidate_index});
  return util::sha256_hex(material.dump());
}

std::string wire_body(const ChatRequest& r) {
  ordered_json body;
  body["model"] = r.model;
  ordered_json messages = ordered_json::array();
  for (const auto& m : r.messages) {
    ordered_json msg;
    msg["role"] = to_string(m.role);
    msg["content"] = m.content;
    messages.push_back(std::move(msg));
  }
  body["messages"] = std::move(messages);
  body["temperature"] = r.temperature;
  body["top_p"] = r.top_p;
  body["n"] = r.n;
  if (r.max_output_tokens) body["max_tokens"] = *r.max_output_tokens;
  return body.dump();
}

ChatResponse parse_wire_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
    throw Error(ErrorCode::MalformedResponse, "response has no choices");

  std::vector<std::pair<long, std::string>> indexed;
  long fallback = 0;
  for (const auto& choice : doc["choices"]) {
    const json* content = nullptr;
    if (choice.contains("message") && choice["message"].is_object() && choice["message"].contains("content"))
      content = &choice["message"]["content"];
    if (content == nullptr || !content->is_string())
      throw Error(ErrorCode::MalformedResponse, "choice without string message.content");
    long idx = choice.contains("index") && choice["index"].is_number_integer() ? choice["index"].get<long>()
                                                                               : fallback;
    ++fallback;
    indexed.emplace_back(idx, content->get<std::string>());
  }
  std::stable_sort(indexed.begin(), indexed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  ChatResponse out;
  for (auto& [_, text] : indexed) out.completions.push_back(std::move(text));
  if (doc.contains("usage") && doc["usage"].is_object()) {
    TokenUsage usage;
    usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
    usage.completion_tokens = doc["usage"].value("completion_tokens", 0L);
    out.usage = usage;
  }
  return out;
}

}  // namespace stepforge::gateway
