#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gdlgen/backend.hpp"
#include "gdlgen/grammar.hpp"

namespace gdlgen {

struct Example {
  std::string id;
  std::string category;  // e.g. board/space/line
  std::string query;
  std::string description;
  std::optional<Grammar> grammar;  // precomputed minimal grammar
};

// JSONL, one object per line with `id`, `category`, `query`, `description`
// and optional `grammar` text. Blank lines are skipped. Throws DatasetError on
// malformed lines (with line number), duplicate ids, descriptions that do not
// lex, and grammars that do not derive their description.
std::vector<Example> load_dataset(const std::string& path);
std::vector<Example> parse_dataset(std::string_view text, std::string_view source = "<dataset>");

// One JSONL line; inverse of parse_dataset for a single record.
std::string dataset_line(const Example& e);

// Every precomputed grammar must be a subset of `g_full`. Throws DatasetError.
void check_against(const std::vector<Example>& examples, const Grammar& g_full);

using TokenCounter = std::function<std::size_t(std::string_view)>;
std::size_t lexer_token_count(std::string_view description);

// Keeps descriptions with at most `max_tokens` tokens. Throws DatasetError if
// max_tokens is 0.
std::vector<Example> filter_by_length(const std::vector<Example>& examples, std::size_t max_tokens,
                                      const TokenCounter& counter = lexer_token_count);

enum class DemoMode { same, cross };
std::optional<DemoMode> demo_mode_from_string(std::string_view name) noexcept;

// Same mode draws from the test's category, cross mode from every other
// category; the test itself is never drawn. Seeded shuffle without
// replacement. Throws DatasetError when the pool is too small.
std::vector<Example> select_demonstrations(const std::vector<Example>& pool, const Example& test, std::size_t n,
                                           DemoMode mode, std::uint64_t seed);

// Demonstration for prompting; computes the minimal grammar from `g_full`
// when the example has none.
Demonstration to_demonstration(const Example& e, const Grammar& g_full);

}  // namespace gdlgen
