#include "stepforge/gateway/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "stepforge/error.hpp"

namespace stepforge::gateway {

std::string_view to_string(ReplayMode mode) noexcept {
  switch (mode) {
    case ReplayMode::Off: return "off";
    case ReplayMode::Record: return "record";
    case ReplayMode::Replay: return "replay";
  }
  return "off";
}

ReplayMode parse_replay_mode(std::string_view text) {
  if (text == "off") return ReplayMode::Off;
  if (text == "record") return ReplayMode::Record;
  if (text == "replay") return ReplayMode::Replay;
  throw Error(ErrorCode::ConfigError, "replay mode must be record|replay|off, got '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double rate_per_second, double burst, Sleeper sleeper)
    : rate_(rate_per_second),
      burst_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(Clock::now()),
      sleeper_(sleeper ? std::move(sleeper) : [](std::chrono::nanoseconds d) { std::this_thread::sleep_for(d); }) {}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  for (;;) {
    std::chrono::nanoseconds wait{0};
    {
      std::lock_guard lock(mutex_);
      auto now = Clock::now();
      double elapsed = std::chrono::duration<double>(now - last_).count();
      tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::nanoseconds(static_cast<long long>((1.0 - tokens_) / rate_ * 1e9));
    }
    sleeper_(wait);
  }
}

// ---------------------------------------------------------------------------

Gateway::Gateway(ReplayMode mode, std::shared_ptr<ReplayStore> store)
    : mode_(mode),
      store_(store ? std::move(store) : std::make_shared<ReplayStore>()),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

void Gateway::register_backend(const std::string& id, std::shared_ptr<Backend> backend, BackendOptions options) {
  auto e = std::make_unique<Entry>();
  e->backend = std::move(backend);
  e->slots = std::make_unique<std::counting_semaphore<1024>>(
      static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options.max_concurrency, 1, 1024)));
  e->limiter = std::make_unique<RateLimiter>(options.requests_per_second, options.burst);
  e->options = std::move(options);
  std::unique_lock lock(registry_mutex_);
  backends_[id] = std::move(e);
}

bool Gateway::has_backend(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  return backends_.contains(id);
}

const BackendOptions& Gateway::options(const std::string& id) const { return entry(id).options; }

const Gateway::Entry& Gateway::entry(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  auto it = backends_.find(id);
  if (it == backends_.end()) throw Error(ErrorCode::BackendUnavailable, "backend '" + id + "' is not registered");
  return *it->second;
}

std::optional<std::vector<std::string>> Gateway::lookup(const ChatRequest& request) const {
  auto first = store_->find(replay_digest(request, 0));
  if (!first) return std::nullopt;
  if (static_cast<int>(first->size()) == request.n) return first;
  if (first->size() != 1) return std::nullopt;
  // Emulated n: one entry per candidate index.
  std::vector<std::string> out = *first;
  for (int i = 1; i < request.n; ++i) {
    auto next = store_->find(replay_digest(request, i));
    if (!next || next->size() != 1) return std::nullopt;
    out.push_back(next->front());
  }
  return out;
}

ChatResponse Gateway::call_with_retry(const Entry& e, const ChatRequest& request) const {
  if (!e.backend) throw Error(ErrorCode::BackendUnavailable, "backend '" + request.backend_id + "' has no live client");
  std::string last_error;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    try {
      e.limiter->acquire();
      e.slots->acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{*e.slots};
      auto response = e.backend->complete(request);
      if (static_cast<int>(response.completions.size()) != request.n)
        throw Error(ErrorCode::MalformedResponse, "expected " + std::to_string(request.n) + " completions, got " +
                                                      std::to_string(response.completions.size()));
      return response;
    } catch (const HttpStatusError& err) {
      if (!err.retryable()) throw Error(ErrorCode::BackendUnavailable, err.what());
      last_error = err.what();
    } catch (const TransportError& err) {
      last_error = err.what();
    }
    if (attempt < retry_.max_attempts) {
      auto delay = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(retry_.base_delay.count()) * std::pow(retry_.factor, attempt - 1)));
      sleeper_(delay);
    }
  }
  throw Error(ErrorCode::BackendUnavailable,
              "'" + request.backend_id + "' failed after " + std::to_string(retry_.max_attempts) +
                  " attempts: " + last_error);
}

std::vector<std::string> Gateway::call_live(const Entry& e, const ChatRequest& request,
                                            std::optional<TokenUsage>& usage) const {
  const bool record = mode_ == ReplayMode::Record;
  if (request.n == 1 || !e.backend || e.backend->supports_n()) {
    auto response = call_with_retry(e, request);
    usage = response.usage;
    if (record) return store_->put_if_absent(replay_digest(request, 0), response.completions);
    return response.completions;
  }
  std::vector<std::string> out;
  ChatRequest single = request;
  single.n = 1;
  for (int i = 0; i < request.n; ++i) {
    auto response = call_with_retry(e, single);
    if (record)
      out.push_back(store_->put_if_absent(replay_digest(request, i), response.completions).front());
    else
      out.push_back(response.completions.front());
  }
  return out;
}

ChatResponse Gateway::complete(ChatRequest request) const {
  const Entry& e = entry(request.backend_id);
  if (request.model.empty()) request.model = e.options.default_model;
  check_request(request);

  if (mode_ != ReplayMode::Off) {
    if (auto cached = lookup(request)) return ChatResponse{std::move(*cached), std::nullopt, true};
    if (mode_ == ReplayMode::Replay)
      throw Error(ErrorCode::ReplayMiss, "no recorded completion for " + request.request_tag + " (" +
                                             replay_digest(request, 0).substr(0, 12) + ")");
  }
  ChatResponse out;
  out.completions = call_live(e, request, out.usage);
  return out;
}

}  // namespace stepforge::gateway
