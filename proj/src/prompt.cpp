#include "gdlgen/prompt.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gdlgen/embedded_templates.hpp"
#include "gdlgen/error.hpp"
#include "gdlgen/lexer.hpp"

namespace gdlgen {

namespace {

std::string require_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw ConfigError(fmt::format("template field '{}' missing", key));
  return it->get<std::string>();
}

std::string render_candidates(const std::vector<TerminalExpectation>& candidates, const PromptTemplates& t) {
  std::string out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto& pattern = c.kind == TerminalExpectation::Kind::literal ? t.candidate_literal : t.candidate_class;
    out += substitute(pattern, {{"index", std::to_string(i + 1)}, {"text", c.text}});
  }
  return out;
}

std::string render_demos(const GenerationRequest& request, const PromptTemplates& t, std::size_t skip) {
  if (request.demos.size() <= skip) return "";
  std::string blocks;
  for (std::size_t i = skip; i < request.demos.size(); ++i) {
    const auto& d = request.demos[i];
    std::map<std::string, std::string, std::less<>> values{
        {"index", std::to_string(i - skip + 1)}, {"query", d.query}, {"description", d.description}};
    if (request.demos_with_grammar) {
      values["grammar"] = render_grammar(d.grammar);
      blocks += substitute(t.demo_with_grammar, values);
    } else {
      blocks += substitute(t.demo_without_grammar, values);
    }
    if (i + 1 < request.demos.size()) blocks += '\n';
  }
  return substitute(t.demo_section, {{"demos", blocks}});
}

std::string strip(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Contents of the first ``` fenced block (info string skipped), if any.
std::optional<std::string> first_fence(std::string_view raw) {
  auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body = raw.find('\n', open);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  auto close = raw.find("```", body);
  if (close == std::string_view::npos) return std::string(raw.substr(body));
  return std::string(raw.substr(body, close - body));
}

// First `(`-balanced s-expression; string literals are skipped when counting.
std::string first_sexpr(std::string_view s) {
  auto open = s.find('(');
  if (open == std::string_view::npos) return strip(s);
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '(') ++depth;
    else if (c == ')' && --depth == 0) return std::string(s.substr(open, i - open + 1));
  }
  return strip(s.substr(open));
}

}  // namespace

std::string substitute(std::string_view pattern, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(pattern.size());
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] == '{') {
      auto close = pattern.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(pattern.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += pattern[i++];
  }
  return out;
}

PromptTemplates PromptTemplates::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("invalid template file: {}", e.what()));
  }
  PromptTemplates t;
  t.version = require_string(j, "version");
  t.demo_section = require_string(j, "demo_section");
  t.demo_with_grammar = require_string(j, "demo_with_grammar");
  t.demo_without_grammar = require_string(j, "demo_without_grammar");
  t.grammar_section = require_string(j, "grammar_section");
  t.candidate_literal = require_string(j, "candidate_literal");
  t.candidate_class = require_string(j, "candidate_class");
  auto kinds = j.find("kinds");
  if (kinds == j.end() || !kinds->is_object()) throw ConfigError("template field 'kinds' missing");
  for (auto kind : {RequestKind::generate_grammar, RequestKind::complete_rules, RequestKind::generate_description,
                    RequestKind::select_terminal, RequestKind::complete_description})
    t.kinds[kind] = require_string(*kinds, std::string(to_string(kind)).c_str());
  return t;
}

PromptTemplates PromptTemplates::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open template file {}", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates t = from_json(detail::kEmbeddedTemplates);
  return t;
}

BuiltPrompt build_prompt(const GenerationRequest& request, const PromptTemplates& t, std::size_t char_budget) {
  std::map<std::string, std::string, std::less<>> values{{"query", request.query}};
  std::visit(
      [&](const auto& ctx) {
        using T = std::decay_t<decltype(ctx)>;
        if constexpr (std::is_same_v<T, CompleteRulesContext>) {
          values["valid_rules"] = render_grammar(ctx.valid);
          values["candidate_rules"] = render_grammar(ctx.candidates);
        } else if constexpr (std::is_same_v<T, GenerateDescriptionContext>) {
          values["grammar_section"] =
              ctx.grammar ? substitute(t.grammar_section, {{"grammar", render_grammar(*ctx.grammar)}}) : "";
        } else if constexpr (std::is_same_v<T, SelectTerminalContext>) {
          values["grammar"] = render_grammar(ctx.grammar);
          values["prefix"] = ctx.prefix;
          values["candidates"] = render_candidates(ctx.candidates, t);
        } else if constexpr (std::is_same_v<T, CompleteDescriptionContext>) {
          values["grammar"] = render_grammar(ctx.grammar);
          values["prefix"] = ctx.prefix;
        }
      },
      request.context);

  const auto& pattern = t.kinds.at(request.kind());
  BuiltPrompt built;
  for (std::size_t skip = 0;; ++skip) {
    values["demos"] = render_demos(request, t, skip);
    built.text = substitute(pattern, values);
    built.demos_dropped = skip;
    if (char_budget == 0 || built.text.size() <= char_budget || skip >= request.demos.size()) break;
  }
  return built;
}

std::string extract_payload(RequestKind kind, std::string_view raw) {
  auto fenced = first_fence(raw);
  std::string body = fenced ? *fenced : std::string(raw);
  switch (kind) {
    case RequestKind::generate_grammar:
    case RequestKind::complete_rules:
      return body;
    case RequestKind::generate_description:
      return first_sexpr(body);
    case RequestKind::complete_description:
      return strip(body);
    case RequestKind::select_terminal: {
      auto text = strip(body);
      try {
        auto ts = tokenize(text);
        if (!ts.empty()) return ts.tokens[0].text;
      } catch (const LexError&) {
      }
      auto end = text.find_first_of(" \t\r\n");
      return text.substr(0, end);
    }
  }
  return body;
}

}  // namespace gdlgen
