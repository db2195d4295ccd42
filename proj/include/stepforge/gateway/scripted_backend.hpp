#pragma once

#include <cstdint>

#include "stepforge/gateway/backend.hpp"

namespace stepforge::gateway {

struct ScriptedOptions {
  std::uint64_t seed = 0;
  double invalid_action_rate = 0.1;  // counselor candidates that break the order
  double exit_rate = 0.05;           // per client turn, after the opening turns
  double low_score_rate = 0.15;      // CTRS-8 items scored at the discard line
};

/// Offline stand-in for a chat model. It reads the marker lines the prompt
/// builders emit and answers each request tag with well-formed JSON. Output
/// is a pure function of (seed, request, completion index).
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(ScriptedOptions options = {}) : options_(options) {}
  ChatResponse complete(const ChatRequest& request) override;

 private:
  ScriptedOptions options_;
};

}  // namespace stepforge::gateway
