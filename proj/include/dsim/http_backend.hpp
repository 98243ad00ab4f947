#pragma once

// Live chat-completions client. Kept out of backend.hpp so translation units
// that only need scripted backends avoid the httplib include.

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>

#include "dsim/backend.hpp"
#include "dsim/error.hpp"

namespace dsim {

// Splits "http://host:port/base" into (scheme://host:port, /base).
struct EndpointParts {
  std::string origin;
  std::string base_path;
};

inline EndpointParts split_endpoint_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint_url must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  EndpointParts parts;
  if (path_start == std::string::npos) {
    parts.origin = url;
  } else {
    parts.origin = url.substr(0, path_start);
    parts.base_path = url.substr(path_start);
  }
  while (!parts.base_path.empty() && parts.base_path.back() == '/')
    parts.base_path.pop_back();
  return parts;
}

class HttpBackend : public ChatBackend {
 public:
  HttpBackend(const BackendConfig& cfg, std::shared_ptr<Clock> clock,
              std::shared_ptr<TokenBucket> bucket)
      : cfg_(cfg), clock_(std::move(clock)), bucket_(std::move(bucket)) {
    EndpointParts parts = split_endpoint_url(cfg.endpoint_url);
    origin_ = parts.origin;
    path_ = parts.base_path + "/chat/completions";
    if (!cfg.api_key_env.empty()) {
      // Keys come from the environment, never from config file contents.
      const char* key = std::getenv(cfg.api_key_env.c_str());
      if (key && *key) api_key_ = key;
    }
    policy_.max_retries = cfg.max_retries;
  }

  ChatResponse complete(const ChatRequest& request) override {
    TransportFn transport = [this](const std::string& payload) {
      httplib::Client client(origin_);
      client.set_connection_timeout(cfg_.timeout_seconds, 0);
      client.set_read_timeout(cfg_.timeout_seconds, 0);
      client.set_write_timeout(cfg_.timeout_seconds, 0);
      httplib::Headers headers;
      if (!api_key_.empty())
        headers.emplace("Authorization", "Bearer " + api_key_);
      auto result = client.Post(path_, headers, payload, "application/json");
      if (!result) return TransportResult{-1, httplib::to_string(result.error())};
      return TransportResult{result->status, result->body};
    };
    std::string body = run_with_retries(transport, chat_request_to_json(request).dump(),
                                        policy_, *clock_, bucket_.get());
    return chat_response_from_json(body);
  }

  std::string describe() const override { return "http:" + cfg_.endpoint_url; }

 private:
  BackendConfig cfg_;
  std::shared_ptr<Clock> clock_;
  std::shared_ptr<TokenBucket> bucket_;
  std::string origin_;
  std::string path_;
  std::string api_key_;
  RetryPolicy policy_;
};

// One pacing bucket per endpoint origin, shared by every backend handle built
// through this registry, so parallel workers respect a single global rate.
class BackendRegistry {
 public:
  explicit BackendRegistry(std::shared_ptr<Clock> clock) : clock_(std::move(clock)) {}

  BackendPtr make(const BackendConfig& cfg, const std::string& name) {
    if (cfg.type == "scripted") return make_scripted_backend(cfg, name);
    std::shared_ptr<TokenBucket> bucket;
    if (cfg.requests_per_minute > 0) {
      std::lock_guard lock(mu_);
      auto& slot = buckets_[cfg.endpoint_url];
      if (!slot)
        slot = std::make_shared<TokenBucket>(cfg.requests_per_minute, clock_);
      bucket = slot;
    }
    return std::make_shared<HttpBackend>(cfg, clock_, bucket);
  }

 private:
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<TokenBucket>> buckets_;
};

}  // namespace dsim
