#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace stepforge::gateway {

enum class MessageRole { System, User, Assistant };

std::string_view to_string(MessageRole role) noexcept;
MessageRole parse_message_role(std::string_view text);

struct ChatMessage {
  MessageRole role = MessageRole::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string backend_id;
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  double top_p = 1.0;
  int n = 1;
  std::optional<int> max_output_tokens;
  std::string request_tag;  // pipeline stage label; not part of the replay key

  bool operator==(const ChatRequest&) const = default;
};

/// Throws Error(MalformedResponse) when the request breaks its invariants.
void check_request(const ChatRequest& request);

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct ChatResponse {
  std::vector<std::string> completions;
  std::optional<TokenUsage> usage;
  bool cache_hit = false;
};

/// Content hash of (backend_id, model, messages, temperature, top_p, n,
/// candidate_index). Identical requests always give identical digests.
std::string replay_digest(const ChatRequest& request, int candidate_index = 0);

/// Body of POST /v1/chat/completions, keys in wire order:
/// model, messages, temperature, top_p, n, max_tokens (only when set).
std::string wire_body(const ChatRequest& request);

/// Extracts choices[*].message.content (ordered by choice index) and usage.
/// Throws Error(MalformedResponse).
ChatResponse parse_wire_response(const std::string& body);

}  // namespace stepforge::gateway
