#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "gdlgen/backend.hpp"

namespace gdlgen {

struct RetryPolicy {
  std::size_t max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
};

struct HttpBackendConfig {
  std::string base_url;  // scheme://host[:port][/prefix]
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the token; may be empty
  std::size_t max_concurrency = 4;
  double temperature = 0.0;
  std::size_t max_tokens = 1024;
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
};

// Counting semaphore shared by all sessions of one backend.
class ConcurrencyLimit {
 public:
  explicit ConcurrencyLimit(std::size_t capacity) : free_(capacity == 0 ? 1 : capacity) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t free_;
};

// Chat-completions client: POST {base_url}/v1/chat/completions with one user
// message holding the prompt; the reply is choices[0].message.content.
// Transport errors, HTTP 429 and 5xx are retried with exponential backoff;
// other statuses and malformed payloads fail immediately with BackendError.
class HttpBackend final : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(HttpBackendConfig config, Sleeper sleeper = {});

  GenerationResult generate(const GenerationRequest& request, std::string_view prompt) override;
  std::unique_ptr<Backend> session(std::string_view instance_id, std::uint64_t seed) const override;
  std::string name() const override { return "http"; }

 private:
  std::shared_ptr<const HttpBackendConfig> config_;
  std::shared_ptr<ConcurrencyLimit> limit_;
  Sleeper sleeper_;
};

}  // namespace gdlgen
