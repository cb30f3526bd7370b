#include "gdlgen/backend.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gdlgen/error.hpp"
#include "gdlgen/random_expand.hpp"

namespace gdlgen {

std::string_view to_string(RequestKind kind) noexcept {
  switch (kind) {
    case RequestKind::generate_grammar: return "GenerateGrammar";
    case RequestKind::complete_rules: return "CompleteRules";
    case RequestKind::generate_description: return "GenerateDescription";
    case RequestKind::select_terminal: return "SelectTerminal";
    case RequestKind::complete_description: return "CompleteDescription";
  }
  return "?";
}

std::optional<RequestKind> request_kind_from_string(std::string_view name) noexcept {
  for (auto k : {RequestKind::generate_grammar, RequestKind::complete_rules, RequestKind::generate_description,
                 RequestKind::select_terminal, RequestKind::complete_description})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::uint64_t stable_hash(std::string_view text, std::uint64_t seed) noexcept {
  // FNV-1a, then a splitmix finalizer to spread nearby seeds.
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::map<std::string, std::string> responses, std::string instance_id)
    : responses_(std::make_shared<const std::map<std::string, std::string>>(std::move(responses))),
      instance_id_(std::move(instance_id)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open scripted responses {}", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  if (!j.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", path));
  std::map<std::string, std::string> responses;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) throw ConfigError(fmt::format("{}: value for {} is not a string", path, key));
    responses[key] = value.get<std::string>();
  }
  return std::make_unique<ScriptedBackend>(std::move(responses));
}

GenerationResult ScriptedBackend::generate(const GenerationRequest& request, std::string_view) {
  std::size_t n;
  {
    std::lock_guard lock(mutex_);
    n = counters_[request.kind()]++;
  }
  auto kind = to_string(request.kind());
  std::vector<std::string> keys;
  if (!instance_id_.empty()) keys.push_back(fmt::format("{}:{}#{}", instance_id_, kind, n));
  keys.push_back(fmt::format("{}#{}", kind, n));
  if (!instance_id_.empty()) keys.push_back(fmt::format("{}:{}#*", instance_id_, kind));
  keys.push_back(fmt::format("{}#*", kind));
  for (const auto& key : keys) {
    auto it = responses_->find(key);
    if (it != responses_->end()) return {it->second, 0.0, 1};
  }
  throw BackendError(fmt::format("no scripted response for {}#{}", kind, n));
}

std::unique_ptr<Backend> ScriptedBackend::session(std::string_view instance_id, std::uint64_t) const {
  auto s = std::make_unique<ScriptedBackend>(std::map<std::string, std::string>{}, std::string(instance_id));
  s->responses_ = responses_;
  return s;
}

// ---------------------------------------------------------------------------

RandomBackend::RandomBackend(std::uint64_t seed, std::size_t depth_limit)
    : seed_(seed), depth_limit_(depth_limit), rng_(seed) {}

GenerationResult RandomBackend::generate(const GenerationRequest& request, std::string_view) {
  std::lock_guard lock(mutex_);
  return std::visit(
      [&](const auto& ctx) -> GenerationResult {
        using T = std::decay_t<decltype(ctx)>;
        if constexpr (std::is_same_v<T, SelectTerminalContext>) {
          if (ctx.candidates.empty()) return {};
          std::uniform_int_distribution<std::size_t> dist(0, ctx.candidates.size() - 1);
          const auto& c = ctx.candidates[dist(rng_)];
          return {c.kind == TerminalExpectation::Kind::literal ? c.text : placeholder_for(c.text)};
        } else if constexpr (std::is_same_v<T, CompleteRulesContext>) {
          std::string out;
          for (const auto& name : ctx.candidates.defined_names()) {
            auto alts = ctx.candidates.alts_for(name);
            std::uniform_int_distribution<std::size_t> dist(0, alts.size() - 1);
            out += render_alt(ctx.candidates.alts()[alts[dist(rng_)]]);
            out += '\n';
          }
          return {out};
        } else if constexpr (std::is_same_v<T, GenerateDescriptionContext>) {
          if (!ctx.grammar || undefined_nonterminals(*ctx.grammar).size() > 0) return {};
          try {
            return {random_expand(*ctx.grammar, rng_, depth_limit_)};
          } catch (const EmptyLanguageError&) {
            return {};
          }
        } else {
          return {};
        }
      },
      request.context);
}

std::unique_ptr<Backend> RandomBackend::session(std::string_view instance_id, std::uint64_t seed) const {
  return std::make_unique<RandomBackend>(stable_hash(instance_id, seed_ ^ seed), depth_limit_);
}

}  // namespace gdlgen
