#include "gdlgen/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "gdlgen/error.hpp"

namespace gdlgen {

void ConcurrencyLimit::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return free_ > 0; });
  --free_;
}

void ConcurrencyLimit::release() {
  {
    std::lock_guard lock(mutex_);
    ++free_;
  }
  cv_.notify_one();
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError(fmt::format("base_url '{}' lacks a scheme", url));
  auto slash = url.find('/', scheme + 3);
  SplitUrl out{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config, Sleeper sleeper)
    : config_(std::make_shared<const HttpBackendConfig>(std::move(config))),
      limit_(std::make_shared<ConcurrencyLimit>(config_->max_concurrency)),
      sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  split_url(config_->base_url);
}

std::unique_ptr<Backend> HttpBackend::session(std::string_view, std::uint64_t) const {
  auto s = std::make_unique<HttpBackend>(*this);
  return s;
}

GenerationResult HttpBackend::generate(const GenerationRequest&, std::string_view prompt) {
  const auto& cfg = *config_;
  auto url = split_url(cfg.base_url);

  nlohmann::json body{
      {"model", cfg.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
      {"temperature", cfg.temperature},
      {"max_tokens", cfg.max_tokens},
  };
  httplib::Headers headers;
  if (!cfg.api_key_env.empty()) {
    const char* key = std::getenv(cfg.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw BackendError(fmt::format("environment variable {} is not set", cfg.api_key_env));
    headers.emplace("Authorization", fmt::format("Bearer {}", key));
  }
  const auto payload = body.dump();
  const auto path = url.path + "/v1/chat/completions";

  limit_->acquire();
  struct Release {
    ConcurrencyLimit& l;
    ~Release() { l.release(); }
  } release{*limit_};

  const auto started = std::chrono::steady_clock::now();
  std::string last_error;
  auto delay = cfg.retry.base_delay;
  const std::size_t attempts = std::max<std::size_t>(1, cfg.retry.max_attempts);
  for (std::size_t attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg.timeout);
    client.set_read_timeout(cfg.timeout);
    client.set_write_timeout(cfg.timeout);
    auto res = client.Post(path, headers, payload, "application/json");

    bool retry = false;
    if (!res) {
      last_error = fmt::format("transport error: {}", httplib::to_string(res.error()));
      retry = true;
    } else if (res->status != 200) {
      last_error = fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200));
      retry = retryable(res->status);
    } else {
      try {
        auto reply = nlohmann::json::parse(res->body);
        auto text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        return {std::move(text), ms, attempt};
      } catch (const nlohmann::json::exception& e) {
        throw BackendError(fmt::format("malformed completion payload: {}", e.what()));
      }
    }
    if (!retry) break;
    if (attempt < attempts) {
      sleeper_(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * cfg.retry.factor));
    }
  }
  throw BackendError(last_error);
}

}  // namespace gdlgen
