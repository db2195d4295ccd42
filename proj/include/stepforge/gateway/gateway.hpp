#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <shared_mutex>
#include <string>

#include "stepforge/gateway/backend.hpp"
#include "stepforge/gateway/chat.hpp"
#include "stepforge/gateway/replay_store.hpp"

namespace stepforge::gateway {

enum class ReplayMode {
  Off,     // always call the backend, cache untouched
  Record,  // serve cached entries, call and persist on miss
  Replay,  // cache only; a miss is an error
};

std::string_view to_string(ReplayMode mode) noexcept;
ReplayMode parse_replay_mode(std::string_view text);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
};

struct BackendOptions {
  std::string default_model;
  std::size_t max_concurrency = 8;
  double requests_per_second = 0.0;  // 0 disables the rate limiter
  double burst = 1.0;
};

/// Token bucket. acquire() blocks until a token is available.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;
  using Sleeper = std::function<void(std::chrono::nanoseconds)>;

  RateLimiter(double rate_per_second, double burst, Sleeper sleeper = {});
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  Sleeper sleeper_;
};

/// Single entry point for every chat-completion call in the pipeline.
/// Thread-safe; one instance is shared by all concurrent tasks.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Gateway(ReplayMode mode = ReplayMode::Off, std::shared_ptr<ReplayStore> store = nullptr);

  /// Replay-only backends need no implementation; pass nullptr.
  void register_backend(const std::string& id, std::shared_ptr<Backend> backend, BackendOptions options = {});
  bool has_backend(const std::string& id) const;
  const BackendOptions& options(const std::string& id) const;

  void set_retry_policy(RetryPolicy policy) { retry_ = policy; }
  /// Replaces the backoff sleep (tests use a recorder instead of waiting).
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  ReplayMode mode() const { return mode_; }
  ReplayStore& store() { return *store_; }

  /// Returns request.n completions. Errors: BackendUnavailable (unknown id,
  /// or retries exhausted), ReplayMiss, MalformedResponse.
  ChatResponse complete(ChatRequest request) const;

 private:
  struct Entry {
    std::shared_ptr<Backend> backend;
    BackendOptions options;
    std::unique_ptr<std::counting_semaphore<1024>> slots;
    std::unique_ptr<RateLimiter> limiter;
  };

  const Entry& entry(const std::string& id) const;
  std::optional<std::vector<std::string>> lookup(const ChatRequest& request) const;
  std::vector<std::string> call_live(const Entry& e, const ChatRequest& request, std::optional<TokenUsage>& usage) const;
  ChatResponse call_with_retry(const Entry& e, const ChatRequest& request) const;

  ReplayMode mode_;
  std::shared_ptr<ReplayStore> store_;
  RetryPolicy retry_;
  Sleeper sleeper_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<Entry>> backends_;
};

}  // namespace stepforge::gateway
