#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "gdlgen/backend.hpp"

namespace gdlgen {

// Versioned prompt templates. Placeholders are `{name}`; unknown braces are
// left untouched so GDL text can appear in templates verbatim.
struct PromptTemplates {
  std::string version;
  std::string demo_section;
  std::string demo_with_grammar;
  std::string demo_without_grammar;
  std::string grammar_section;
  std::string candidate_literal;
  std::string candidate_class;
  std::map<RequestKind, std::string> kinds;

  // Parses the JSON template file format. Throws ConfigError.
  static PromptTemplates from_json(std::string_view text);
  static PromptTemplates from_file(const std::string& path);
  // The templates shipped with the library (version "v1").
  static const PromptTemplates& builtin();
};

struct BuiltPrompt {
  std::string text;
  // Oldest demonstrations dropped to fit the character budget.
  std::size_t demos_dropped = 0;
};

// Renders `request` with `templates`. A budget of 0 means unlimited; otherwise
// demonstrations are dropped oldest-first until the prompt fits or none remain.
BuiltPrompt build_prompt(const GenerationRequest& request, const PromptTemplates& templates,
                         std::size_t char_budget = 0);

// Single-pass `{name}` substitution; values are not rescanned.
std::string substitute(std::string_view pattern, const std::map<std::string, std::string, std::less<>>& values);

// Payload extraction from raw model output:
//   grammar kinds         first ``` block, else the whole text
//   description kinds     first `(`-balanced s-expression inside the first
//                         ``` block or the text (to end of text if unbalanced)
//   CompleteDescription   first ``` block, else the whole text, trimmed
//   SelectTerminal        first lexer token of the trimmed text
std::string extract_payload(RequestKind kind, std::string_view raw);

}  // namespace gdlgen
