#include "gdlgen/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gdlgen/error.hpp"

namespace gdlgen {

namespace {

namespace fs = std::filesystem;

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    if constexpr (std::is_unsigned_v<T>) {
      if (!it->is_number_unsigned()) throw ConfigError(fmt::format("'{}' must be a non-negative integer", key));
    }
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(fmt::format("'{}' has the wrong type", key));
  }
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

RunConfig RunConfig::from_json_text(std::string_view text, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("invalid config JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig c;
  auto& d = c.decoding;
  read(j, "rule_iter_limit", d.rule_iter_limit);
  read(j, "desc_iter_limit", d.desc_iter_limit);
  read(j, "demo_count", d.demo_count);
  read(j, "temperature", d.temperature);
  read(j, "max_desc_tokens", d.max_desc_tokens);
  read(j, "prompt_budget", d.prompt_budget);
  read(j, "random_depth_limit", d.random_depth_limit);
  d.validate();

  read(j, "template_version", c.template_version);
  read(j, "template_path", c.template_path);
  c.template_path = resolve(base_dir, c.template_path);
  read(j, "grammar", c.grammar_path);
  c.grammar_path = resolve(base_dir, c.grammar_path);
  std::string mode = "same";
  read(j, "demo_mode", mode);
  auto parsed_mode = demo_mode_from_string(mode);
  if (!parsed_mode) throw ConfigError(fmt::format("unknown demo_mode '{}'", mode));
  c.demo_mode = *parsed_mode;
  read(j, "max_tokens", c.max_tokens);
  if (c.max_tokens == 0) throw ConfigError("max_tokens must be at least 1");

  auto b = j.find("backend");
  if (b == j.end() || !b->is_object()) throw ConfigError("config needs a 'backend' object");
  auto& bc = c.backend;
  read(*b, "type", bc.type);
  if (bc.type == "http") {
    auto& h = bc.http;
    read(*b, "base_url", h.base_url);
    read(*b, "model", h.model);
    read(*b, "api_key_env", h.api_key_env);
    read(*b, "max_concurrency", h.max_concurrency);
    std::size_t timeout_s = 120, attempts = 3;
    double base_s = 1.0;
    read(*b, "timeout_s", timeout_s);
    read(*b, "max_attempts", attempts);
    read(*b, "backoff_base_s", base_s);
    read(*b, "backoff_factor", h.retry.factor);
    h.timeout = std::chrono::seconds(timeout_s);
    h.retry.max_attempts = attempts;
    h.retry.base_delay = std::chrono::milliseconds(static_cast<long long>(base_s * 1000));
    h.temperature = d.temperature;
    h.max_tokens = d.max_desc_tokens;
    if (h.base_url.empty()) throw ConfigError("http backend needs 'base_url'");
    if (h.model.empty()) throw ConfigError("http backend needs 'model'");
  } else if (bc.type == "scripted") {
    read(*b, "path", bc.path);
    if (bc.path.empty()) throw ConfigError("scripted backend needs 'path'");
    bc.path = resolve(base_dir, bc.path);
  } else if (bc.type == "random") {
    read(*b, "seed", bc.seed);
    read(*b, "depth_limit", bc.depth_limit);
    if (bc.depth_limit == 0) throw ConfigError("depth_limit must be at least 1");
  } else {
    throw ConfigError(fmt::format("unknown backend type '{}'", bc.type));
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path));
  std::stringstream buf;
  buf << in.rdbuf();
  auto dir = fs::path(path).parent_path().string();
  return from_json_text(buf.str(), dir.empty() ? "." : dir);
}

PromptTemplates RunConfig::templates() const {
  PromptTemplates t = template_path.empty() ? PromptTemplates::builtin() : PromptTemplates::from_file(template_path);
  if (t.version != template_version)
    throw ConfigError(fmt::format("template version '{}' requested but '{}' loaded", template_version, t.version));
  return t;
}

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
  const auto& b = config.backend;
  if (b.type == "http") return std::make_unique<HttpBackend>(b.http);
  if (b.type == "scripted") return ScriptedBackend::from_json_file(b.path);
  return std::make_unique<RandomBackend>(b.seed, b.depth_limit);
}

}  // namespace gdlgen
