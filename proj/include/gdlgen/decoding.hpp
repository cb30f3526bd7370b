#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gdlgen/backend.hpp"
#include "gdlgen/grammar.hpp"
#include "gdlgen/prompt.hpp"

namespace gdlgen {

struct DecodingConfig {
  std::size_t rule_iter_limit = 20;
  std::size_t desc_iter_limit = 10;
  std::size_t demo_count = 3;
  double temperature = 0.0;
  std::size_t max_desc_tokens = 1024;
  // Character budget per prompt; 0 disables demo truncation.
  std::size_t prompt_budget = 0;
  // Depth limit for the random baseline's expansion.
  std::size_t random_depth_limit = 8;

  // Throws ConfigError when a limit is 0.
  void validate() const;
};

enum class Termination { converged, limit, backend_error };
std::string_view to_string(Termination t) noexcept;

enum class Stage { rule_decoding, description_decoding, random_expansion };
std::string_view to_string(Stage s) noexcept;

// One backend round trip, in call order.
struct BackendCall {
  Stage stage = Stage::rule_decoding;
  RequestKind kind = RequestKind::generate_grammar;
  std::size_t iteration = 0;
  std::string prompt;
  std::string response;
  std::string payload;  // extracted part of the response
  double latency_ms = 0.0;
  std::size_t demos_dropped = 0;
  std::string error;  // non-empty on hard failure
};

struct RuleIteration {
  std::size_t iteration = 0;
  std::size_t alt_count = 0;  // alternatives in the current candidate grammar
  std::size_t valid_count = 0;
  std::vector<RejectedAlt> rejected;
  std::vector<std::string> undefined;  // N_U after pruning
  std::vector<std::string> pruned;     // undefined names absent from the full grammar
  bool fallback = false;               // completion answer unusable; all candidates merged
  double latency_ms = 0.0;
};

struct RuleTrace {
  std::vector<RuleIteration> iterations;
  Termination termination = Termination::converged;
  std::vector<std::string> notes;
};

struct DescriptionIteration {
  std::size_t iteration = 0;
  std::size_t valid_len = 0;
  std::size_t candidate_count = 0;
  bool complete = false;
  bool lex_error = false;
  std::string proposed;  // terminal answered by the backend
  std::string chosen;    // terminal actually appended
  bool fallback = false;
  std::size_t length = 0;  // tokens in the description entering this iteration (0 if it does not lex)
  double latency_ms = 0.0;
};

struct DescriptionTrace {
  std::vector<DescriptionIteration> iterations;
  Termination termination = Termination::converged;
  std::vector<std::string> notes;
};

struct RuleDecodingResult {
  Grammar grammar;  // closed, a subset of the full grammar
  RuleTrace trace;
  std::vector<BackendCall> calls;
};

struct DescriptionDecodingResult {
  std::string description;
  DescriptionTrace trace;
  std::vector<BackendCall> calls;
};

struct DecodingContext {
  Backend& backend;
  const PromptTemplates& templates;
  const DecodingConfig& config;
};

// Iterative rule decoding against the full grammar `g_full`. The result is
// always closed: when the loop stops at the limit (or on a backend failure),
// definitions for names still undefined are pulled from `g_full`. If the
// result derives nothing, shallowest `g_full` alternatives are added for the
// unproductive names.
RuleDecodingResult run_rule_decoding(const DecodingContext& ctx, const Grammar& g_full,
                                     const std::vector<Demonstration>& demos, const std::string& query);

// Iterative description decoding under the closed grammar `gy`.
DescriptionDecodingResult run_description_decoding(const DecodingContext& ctx, const Grammar& gy,
                                                   const std::vector<Demonstration>& demos,
                                                   const std::string& query);

// Terminal appended when the backend's answer is not a candidate: the first
// candidate, with classes concretized to their placeholders.
std::string fallback_terminal(const std::vector<TerminalExpectation>& candidates);

// True if `answer` is the text of a literal candidate or lexes as a single
// token of a class candidate.
bool is_candidate(const std::vector<TerminalExpectation>& candidates, std::string_view answer);

enum class Method { gdg, ggdg, random };
std::string_view to_string(Method m) noexcept;
std::optional<Method> method_from_string(std::string_view name) noexcept;

struct PipelineInstance {
  std::string id;
  std::string query;
  std::vector<Demonstration> demos;
};

struct PipelineResult {
  std::optional<Grammar> grammar;  // absent for GDG
  std::string description;
  std::optional<RuleTrace> rule_trace;
  std::optional<DescriptionTrace> description_trace;
  std::vector<BackendCall> calls;
  bool backend_error = false;
  std::string error;
};

// GDG: one grammar-free description request. GGDG: rule decoding, then
// description decoding under the decoded grammar. Random: rule decoding, then
// a seeded random expansion of the decoded grammar.
PipelineResult run_pipeline(Method method, const DecodingContext& ctx, const Grammar& g_full,
                            const PipelineInstance& instance, std::uint64_t seed);

}  // namespace gdlgen
