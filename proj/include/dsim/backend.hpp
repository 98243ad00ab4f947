#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dsim/error.hpp"
#include "dsim/util.hpp"

namespace dsim {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.7;
  std::optional<int> max_tokens;
  std::optional<std::uint64_t> seed;
};

struct ChatResponse {
  std::string content;
  std::string finish_reason = "stop";
};

// Anything that can answer one chat completion. Implementations must be safe
// to call from multiple worker threads.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string describe() const = 0;
};

using BackendPtr = std::shared_ptr<ChatBackend>;

// ---------------------------------------------------------------------------
// Clock abstraction so tests can fast-forward through backoff sleeps.

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::steady_clock::time_point now() = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock : public Clock {
 public:
  std::chrono::steady_clock::time_point now() override {
    return std::chrono::steady_clock::now();
  }
  void sleep_for(std::chrono::milliseconds d) override {
    std::this_thread::sleep_for(d);
  }
};

// Manual clock: sleep_for advances time instantly and records each request.
class FakeClock : public Clock {
 public:
  std::chrono::steady_clock::time_point now() override {
    std::lock_guard lock(mu_);
    return t_;
  }
  void sleep_for(std::chrono::milliseconds d) override {
    std::lock_guard lock(mu_);
    t_ += d;
    sleeps_.push_back(d);
  }
  std::vector<std::chrono::milliseconds> sleeps() const {
    std::lock_guard lock(mu_);
    return sleeps_;
  }
  std::chrono::milliseconds total_slept() const {
    std::lock_guard lock(mu_);
    std::chrono::milliseconds total{0};
    for (auto d : sleeps_) total += d;
    return total;
  }

 private:
  mutable std::mutex mu_;
  std::chrono::steady_clock::time_point t_{};
  std::vector<std::chrono::milliseconds> sleeps_;
};

// ---------------------------------------------------------------------------
// Request pacing: capacity-1 token bucket, i.e. a minimum spacing of
// 60/requests_per_minute seconds between acquisitions.

class TokenBucket {
 public:
  TokenBucket(double requests_per_minute, std::shared_ptr<Clock> clock)
      : clock_(std::move(clock)) {
    if (requests_per_minute > 0)
      spacing_ = std::chrono::milliseconds(
          static_cast<long>(60000.0 / requests_per_minute));
  }

  // Blocks (via the clock, so fakeable) until the next request may go out.
  void acquire() {
    if (spacing_.count() == 0) return;
    std::chrono::milliseconds wait{0};
    {
      std::lock_guard lock(mu_);
      auto now = clock_->now();
      if (has_last_ && now < last_ + spacing_) {
        wait = std::chrono::duration_cast<std::chrono::milliseconds>(
            last_ + spacing_ - now);
      }
      last_ = std::max(now, has_last_ ? last_ + spacing_ : now);
      has_last_ = true;
    }
    if (wait.count() > 0) clock_->sleep_for(wait);
  }

 private:
  std::shared_ptr<Clock> clock_;
  std::chrono::milliseconds spacing_{0};
  std::mutex mu_;
  bool has_last_ = false;
  std::chrono::steady_clock::time_point last_{};
};

// ---------------------------------------------------------------------------
// Retry policy shared by the HTTP backend and the transport-level tests.

struct RetryPolicy {
  int max_retries = 3;                       // retries beyond the first attempt
  std::chrono::milliseconds base_delay{250};
  std::chrono::milliseconds max_delay{8000};
  double multiplier = 2.0;

  std::chrono::milliseconds delay_for(int retry_index) const {
    double d = static_cast<double>(base_delay.count());
    for (int i = 0; i < retry_index; ++i) d *= multiplier;
    return std::min(std::chrono::milliseconds(static_cast<long>(d)), max_delay);
  }
};

// One raw transport exchange. status<0 means the connection itself failed
// (timeout, refused); body is the raw response payload otherwise.
struct TransportResult {
  int status = -1;
  std::string body;
};

using TransportFn = std::function<TransportResult(const std::string& payload)>;

inline bool status_is_retryable(int status) {
  return status < 0 || status == 429 || (status >= 500 && status < 600);
}

// Drives a TransportFn through the retry schedule. Returns the successful
// body; throws TransportError after exhausting retries on retryable faults,
// ProviderError immediately on non-retryable HTTP errors.
inline std::string run_with_retries(const TransportFn& transport,
                                    const std::string& payload,
                                    const RetryPolicy& policy, Clock& clock,
                                    TokenBucket* bucket = nullptr) {
  int attempts = 0;
  for (int retry = 0;; ++retry) {
    if (bucket) bucket->acquire();
    ++attempts;
    TransportResult result = transport(payload);
    if (result.status >= 200 && result.status < 300) return result.body;
    if (!status_is_retryable(result.status))
      throw ProviderError("backend rejected request", result.status, result.body);
    if (retry >= policy.max_retries) {
      std::string reason = result.status < 0
                               ? "connection failed"
                               : "status " + std::to_string(result.status);
      throw TransportError("backend unreachable: " + reason, attempts);
    }
    clock.sleep_for(policy.delay_for(retry));
  }
}

// ---------------------------------------------------------------------------
// Chat-completions payload shaping, shared by the HTTP backend and tests.

inline nlohmann::json chat_request_to_json(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json payload = {{"model", request.model},
                            {"messages", messages},
                            {"temperature", request.temperature}};
  if (request.max_tokens) payload["max_tokens"] = *request.max_tokens;
  if (request.seed) payload["seed"] = *request.seed;
  return payload;
}

inline ChatResponse chat_response_from_json(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed completion response: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
    throw ParseError("completion response has no choices");
  const auto& choice = doc["choices"][0];
  if (!choice.contains("message") || !choice["message"].contains("content"))
    throw ParseError("completion choice has no message content");
  ChatResponse response;
  response.content = choice["message"]["content"].get<std::string>();
  response.finish_reason = choice.value("finish_reason", "stop");
  return response;
}

// ---------------------------------------------------------------------------
// Scripted backend: deterministic stand-in for a model. Resolution order:
//   1. first contains-rule matching the latest user message,
//   2. next unconsumed entry of the sequence script,
//   3. the fallback reply.
// A backend with no applicable reply is a configuration fault, not a model
// fault, so that throws ConfigError.

struct ScriptRule {
  std::string needle;  // matched case-insensitively against the latest user message
  std::string reply;
};

class ScriptedBackend : public ChatBackend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::string name) : name_(std::move(name)) {}

  ScriptedBackend& add_rule(std::string needle, std::string reply) {
    rules_.push_back({std::move(needle), std::move(reply)});
    return *this;
  }
  ScriptedBackend& add_sequence(std::string reply) {
    sequence_.push_back(std::move(reply));
    return *this;
  }
  ScriptedBackend& set_fallback(std::string reply) {
    fallback_ = std::move(reply);
    return *this;
  }

  ChatResponse complete(const ChatRequest& request) override {
    // Rules match against the system text plus the latest user message: the
    // system prompt identifies the task (stage, rubric, artifact), the latest
    // user message the immediate query. Earlier history is excluded so stale
    // turns cannot shadow newer rules.
    std::string latest_user;
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
      if (it->role == "user") {
        latest_user = it->content;
        break;
      }
    }
    std::string haystack;
    for (const auto& m : request.messages)
      if (m.role == "system") haystack += m.content + "\n";
    haystack += latest_user;
    haystack = to_lower(haystack);
    for (const auto& rule : rules_) {
      if (contains(haystack, to_lower(rule.needle))) return {rule.reply};
    }
    {
      std::lock_guard lock(mu_);
      if (next_sequence_ < sequence_.size()) return {sequence_[next_sequence_++]};
    }
    if (fallback_) return {*fallback_};
    throw ConfigError("scripted backend '" + name_ +
                      "' has no reply for the request (no rule matched, sequence "
                      "exhausted, no fallback)");
  }

  std::string describe() const override { return "scripted:" + name_; }

 private:
  std::string name_ = "anonymous";
  std::vector<ScriptRule> rules_;
  std::vector<std::string> sequence_;
  std::optional<std::string> fallback_;
  std::mutex mu_;
  std::size_t next_sequence_ = 0;
};

// Wraps a TransportFn as a ChatBackend; used in unit tests to exercise the
// retry path without sockets.
class TransportBackend : public ChatBackend {
 public:
  TransportBackend(TransportFn transport, RetryPolicy policy,
                   std::shared_ptr<Clock> clock,
                   std::shared_ptr<TokenBucket> bucket = nullptr)
      : transport_(std::move(transport)),
        policy_(policy),
        clock_(std::move(clock)),
        bucket_(std::move(bucket)) {}

  ChatResponse complete(const ChatRequest& request) override {
    std::string body = run_with_retries(transport_, chat_request_to_json(request).dump(),
                                        policy_, *clock_, bucket_.get());
    return chat_response_from_json(body);
  }

  std::string describe() const override { return "transport"; }

 private:
  TransportFn transport_;
  RetryPolicy policy_;
  std::shared_ptr<Clock> clock_;
  std::shared_ptr<TokenBucket> bucket_;
};

// ---------------------------------------------------------------------------
// Backend configuration (wire shape used in run configs).

struct BackendConfig {
  std::string type = "http";  // "http" | "scripted"
  // http
  std::string endpoint_url;
  std::string api_key_env;    // name of the env var holding the key; never the key
  double requests_per_minute = 0;  // 0 = unpaced
  int max_retries = 3;
  int timeout_seconds = 120;
  // scripted
  std::vector<ScriptRule> rules;
  std::vector<std::string> sequence;
  std::optional<std::string> fallback;
};

inline BackendConfig backend_config_from_json(const nlohmann::json& j) {
  BackendConfig cfg;
  cfg.type = j.value("type", "http");
  if (cfg.type == "http") {
    if (!j.contains("endpoint_url"))
      throw ConfigError("http backend config requires endpoint_url");
    cfg.endpoint_url = j["endpoint_url"].get<std::string>();
    cfg.api_key_env = j.value("api_key_env", "");
    cfg.requests_per_minute = j.value("requests_per_minute", 0.0);
    cfg.max_retries = j.value("max_retries", 3);
    cfg.timeout_seconds = j.value("timeout_seconds", 120);
  } else if (cfg.type == "scripted") {
    for (const auto& r : j.value("rules", nlohmann::json::array()))
      cfg.rules.push_back({r.at("contains").get<std::string>(),
                           r.at("reply").get<std::string>()});
    for (const auto& s : j.value("sequence", nlohmann::json::array()))
      cfg.sequence.push_back(s.get<std::string>());
    if (j.contains("fallback")) cfg.fallback = j["fallback"].get<std::string>();
  } else {
    throw ConfigError("unknown backend type: " + cfg.type);
  }
  return cfg;
}

inline std::shared_ptr<ScriptedBackend> make_scripted_backend(
    const BackendConfig& cfg, const std::string& name) {
  auto backend = std::make_shared<ScriptedBackend>(name);
  for (const auto& r : cfg.rules) backend->add_rule(r.needle, r.reply);
  for (const auto& s : cfg.sequence) backend->add_sequence(s);
  if (cfg.fallback) backend->set_fallback(*cfg.fallback);
  return backend;
}

}  // namespace dsim
