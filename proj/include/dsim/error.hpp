#pragma once

#include <stdexcept>
#include <string>

namespace dsim {

// Malformed wire input (scenario files, judge/checklist output, run logs).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally valid input that breaks a domain invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad harness configuration (unknown section id, missing template slot, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inputs on which a metric is mathematically undefined (empty gold checklist,
// zero variance, kappa with p_e = 1).
struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Transient transport failure that survived all retries.
struct TransportError : std::runtime_error {
  int attempts;
  TransportError(const std::string& msg, int attempts_)
      : std::runtime_error(msg + " (attempts=" + std::to_string(attempts_) + ")"),
        attempts(attempts_) {}
};

// Non-retryable provider response (4xx other than 429, unparseable body).
struct ProviderError : std::runtime_error {
  int status;
  std::string body_excerpt;
  ProviderError(const std::string& msg, int status_, std::string excerpt)
      : std::runtime_error(msg + " (status=" + std::to_string(status_) +
                           ", body=" + excerpt.substr(0, 200) + ")"),
        status(status_),
        body_excerpt(std::move(excerpt)) {}
};

}  // namespace dsim
