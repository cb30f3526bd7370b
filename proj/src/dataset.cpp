#include "gdlgen/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gdlgen/earley.hpp"
#include "gdlgen/error.hpp"
#include "gdlgen/lexer.hpp"
#include "gdlgen/minimal_grammar.hpp"

namespace gdlgen {

namespace {

std::string field(const nlohmann::json& j, const char* key, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw DatasetError(fmt::format("{}: missing string field '{}'", where, key));
  return it->get<std::string>();
}

}  // namespace

std::vector<Example> parse_dataset(std::string_view text, std::string_view source) {
  std::vector<Example> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    auto where = fmt::format("{}:{}", source, line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(fmt::format("{}: malformed JSON: {}", where, e.what()));
    }
    if (!j.is_object()) throw DatasetError(fmt::format("{}: expected an object", where));
    Example e;
    e.id = field(j, "id", where);
    e.category = field(j, "category", where);
    e.query = field(j, "query", where);
    e.description = field(j, "description", where);
    if (!ids.insert(e.id).second) throw DatasetError(fmt::format("{}: duplicate id '{}'", where, e.id));

    TokenStream ts;
    try {
      ts = tokenize(e.description);
    } catch (const LexError& err) {
      throw DatasetError(fmt::format("{}: example '{}': description does not lex: {}", where, e.id, err.what()));
    }
    if (auto g = j.find("grammar"); g != j.end() && !g->is_null()) {
      if (!g->is_string()) throw DatasetError(fmt::format("{}: example '{}': grammar must be text", where, e.id));
      try {
        e.grammar = parse_grammar(g->get<std::string>());
      } catch (const Error& err) {
        throw DatasetError(fmt::format("{}: example '{}': bad grammar: {}", where, e.id, err.what()));
      }
      if (!recognize(*e.grammar, ts))
        throw DatasetError(fmt::format("{}: example '{}': grammar does not derive the description", where, e.id));
    }
    out.push_back(std::move(e));
    if (end == text.size()) break;
  }
  return out;
}

std::vector<Example> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(fmt::format("cannot open dataset {}", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), path);
}

std::string dataset_line(const Example& e) {
  nlohmann::ordered_json j{{"id", e.id}, {"category", e.category}, {"query", e.query}, {"description", e.description}};
  if (e.grammar) j["grammar"] = render_grammar(*e.grammar);
  return j.dump();
}

void check_against(const std::vector<Example>& examples, const Grammar& g_full) {
  for (const auto& e : examples) {
    if (!e.grammar) continue;
    auto v = validate_subset(*e.grammar, g_full);
    if (!v.rejected.empty())
      throw DatasetError(fmt::format("example '{}': grammar alternative `{}` is not in the full grammar", e.id,
                                     render_alt(v.rejected.front().alt)));
  }
}

std::size_t lexer_token_count(std::string_view description) { return tokenize(description).size(); }

std::vector<Example> filter_by_length(const std::vector<Example>& examples, std::size_t max_tokens,
                                      const TokenCounter& counter) {
  if (max_tokens == 0) throw DatasetError("max_tokens must be at least 1");
  std::vector<Example> out;
  for (const auto& e : examples)
    if (counter(e.description) <= max_tokens) out.push_back(e);
  return out;
}

std::optional<DemoMode> demo_mode_from_string(std::string_view name) noexcept {
  if (name == "same") return DemoMode::same;
  if (name == "cross") return DemoMode::cross;
  return std::nullopt;
}

std::vector<Example> select_demonstrations(const std::vector<Example>& pool, const Example& test, std::size_t n,
                                           DemoMode mode, std::uint64_t seed) {
  std::vector<const Example*> eligible;
  for (const auto& e : pool) {
    if (e.id == test.id) continue;
    bool same = e.category == test.category;
    if ((mode == DemoMode::same) == same) eligible.push_back(&e);
  }
  if (eligible.size() < n)
    throw DatasetError(fmt::format("{} demonstrations for '{}' need {} examples {} category '{}', found {}",
                                   mode == DemoMode::same ? "same-category" : "cross-category", test.id, n,
                                   mode == DemoMode::same ? "in" : "outside", test.category, eligible.size()));
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(*eligible[i]);
  return out;
}

Demonstration to_demonstration(const Example& e, const Grammar& g_full) {
  Grammar g = e.grammar ? *e.grammar : extract_minimal(g_full, tokenize(e.description));
  return {e.query, std::move(g), e.description};
}

}  // namespace gdlgen
