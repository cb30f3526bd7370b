#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gdlgen/earley.hpp"
#include "gdlgen/grammar.hpp"

namespace gdlgen {

// One in-context example: query, its minimal grammar and its description.
struct Demonstration {
  std::string query;
  Grammar grammar;
  std::string description;
};

enum class RequestKind {
  generate_grammar,
  complete_rules,
  generate_description,
  select_terminal,
  complete_description,
};

std::string_view to_string(RequestKind kind) noexcept;
std::optional<RequestKind> request_kind_from_string(std::string_view name) noexcept;

struct GenerateGrammarContext {};

struct CompleteRulesContext {
  Grammar valid;       // validated rules so far
  Grammar candidates;  // full-grammar alternatives for the undefined names
};

struct GenerateDescriptionContext {
  std::optional<Grammar> grammar;  // absent for grammar-free generation
};

struct SelectTerminalContext {
  Grammar grammar;
  std::string prefix;
  std::vector<TerminalExpectation> candidates;
};

struct CompleteDescriptionContext {
  Grammar grammar;
  std::string prefix;  // valid prefix with the chosen terminal appended
};

using RequestContext = std::variant<GenerateGrammarContext, CompleteRulesContext, GenerateDescriptionContext,
                                    SelectTerminalContext, CompleteDescriptionContext>;

struct GenerationRequest {
  std::vector<Demonstration> demos;
  std::string query;
  RequestContext context;
  // Whether demos are shown with their grammars.
  bool demos_with_grammar = true;

  RequestKind kind() const noexcept { return static_cast<RequestKind>(context.index()); }
};

struct GenerationResult {
  std::string text;
  double latency_ms = 0.0;
  std::size_t attempts = 1;
};

// Text-generation contract shared by both decoding loops. `prompt` is the
// rendered template for `request`; backends that do not talk to a model may
// ignore it.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual GenerationResult generate(const GenerationRequest& request, std::string_view prompt) = 0;

  // Fresh backend for one pipeline instance. State such as call counters and
  // RNG streams is per session so concurrent instances stay reproducible.
  virtual std::unique_ptr<Backend> session(std::string_view instance_id, std::uint64_t seed) const = 0;

  virtual std::string name() const = 0;
};

// Replays canned responses from a map keyed "<kind>#<n>", where n counts
// calls of that kind within the session. Lookup order: "<instance>:<kind>#<n>",
// "<kind>#<n>", then the wildcard "<kind>#*". A miss is a BackendError.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::map<std::string, std::string> responses, std::string instance_id = {});

  static std::unique_ptr<ScriptedBackend> from_json_file(const std::string& path);

  GenerationResult generate(const GenerationRequest& request, std::string_view prompt) override;
  std::unique_ptr<Backend> session(std::string_view instance_id, std::uint64_t seed) const override;
  std::string name() const override { return "scripted"; }

 private:
  std::shared_ptr<const std::map<std::string, std::string>> responses_;
  std::string instance_id_;
  std::map<RequestKind, std::size_t> counters_;
  std::mutex mutex_;
};

// Seeded baseline: picks a random candidate terminal, samples a random
// expansion when a grammar is given, and answers one random full-grammar
// alternative per undefined name in rule completion.
class RandomBackend final : public Backend {
 public:
  RandomBackend(std::uint64_t seed, std::size_t depth_limit);

  GenerationResult generate(const GenerationRequest& request, std::string_view prompt) override;
  std::unique_ptr<Backend> session(std::string_view instance_id, std::uint64_t seed) const override;
  std::string name() const override { return "random"; }

 private:
  std::uint64_t seed_;
  std::size_t depth_limit_;
  std::mt19937_64 rng_;
  std::mutex mutex_;
};

// Stable 64-bit hash for deriving per-instance seeds.
std::uint64_t stable_hash(std::string_view text, std::uint64_t seed = 0) noexcept;

}  // namespace gdlgen
