#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "gdlgen/backend.hpp"
#include "gdlgen/dataset.hpp"
#include "gdlgen/decoding.hpp"
#include "gdlgen/http_backend.hpp"
#include "gdlgen/prompt.hpp"

namespace gdlgen {

struct BackendConfig {
  std::string type = "scripted";  // http | scripted | random
  // http
  HttpBackendConfig http;
  // scripted
  std::string path;
  // random
  std::uint64_t seed = 0;
  std::size_t depth_limit = 8;
};

// Run configuration file (JSON). Recognized keys:
//   rule_iter_limit, desc_iter_limit, demo_count, temperature,
//   max_desc_tokens, prompt_budget, random_depth_limit,
//   template_version, template_path, grammar, demo_mode, max_tokens,
//   backend: {type: http, base_url, model, api_key_env, max_concurrency,
//             timeout_s, max_attempts, backoff_base_s, backoff_factor}
//          | {type: scripted, path} | {type: random, seed, depth_limit}
// Relative paths are resolved against the config file's directory.
struct RunConfig {
  DecodingConfig decoding;
  BackendConfig backend;
  std::string template_version = "v1";
  std::string template_path;  // overrides the built-in templates
  std::string grammar_path;   // full grammar
  DemoMode demo_mode = DemoMode::same;
  std::size_t max_tokens = 300;  // length filter on descriptions

  static RunConfig from_json_text(std::string_view text, const std::string& base_dir = ".");
  static RunConfig from_file(const std::string& path);

  PromptTemplates templates() const;
};

std::unique_ptr<Backend> make_backend(const RunConfig& config);

}  // namespace gdlgen
