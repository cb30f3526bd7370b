#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gdlgen {

enum class SymbolKind {
  literal,      // exact token text, e.g. "game" or "("
  token_class,  // open lexical class: IDENTIFIER, NUMBER, STRING, NAMED_PARAM
  nonterminal,
};

struct Symbol {
  SymbolKind kind = SymbolKind::literal;
  std::string text;

  static Symbol literal(std::string text) { return {SymbolKind::literal, std::move(text)}; }
  static Symbol token_class(std::string name) { return {SymbolKind::token_class, std::move(name)}; }
  static Symbol nonterminal(std::string name) { return {SymbolKind::nonterminal, std::move(name)}; }

  bool is_terminal() const noexcept { return kind != SymbolKind::nonterminal; }

  auto operator<=>(const Symbol&) const = default;
};

// One alternative of a production. An empty rhs is epsilon.
struct RuleAlt {
  std::string lhs;
  std::vector<Symbol> rhs;

  auto operator<=>(const RuleAlt&) const = default;
};

bool is_token_class_name(std::string_view name) noexcept;

// A context-free grammar in plain BNF. Values are immutable once built; every
// operation below returns a new grammar.
//
// Alternative order is preserved from the source and is the tie-break order
// used by the parser and by grammar reduction. Identical alternatives are
// collapsed on construction.
class Grammar {
 public:
  Grammar() = default;
  Grammar(std::string start, std::vector<RuleAlt> alts, bool partial = true,
          std::map<std::string, std::string> provenance = {});

  const std::string& start() const noexcept { return start_; }
  const std::vector<RuleAlt>& alts() const noexcept { return alts_; }
  // Synthesized nonterminal -> the EBNF construct it replaced.
  const std::map<std::string, std::string>& provenance() const noexcept { return provenance_; }
  bool partial() const noexcept { return partial_; }
  bool empty() const noexcept { return alts_.empty(); }
  std::size_t size() const noexcept { return alts_.size(); }

  bool contains(const RuleAlt& alt) const;
  bool defines(std::string_view name) const;
  // Left-hand sides in order of first appearance.
  std::vector<std::string> defined_names() const;
  // Every nonterminal that appears on either side, sorted.
  std::set<std::string> nonterminals() const;
  // Indices into alts() for the given lhs, in grammar order.
  std::vector<std::size_t> alts_for(std::string_view name) const;

  // Copy with the alternative at `index` removed.
  Grammar without(std::size_t index) const;
  // Copy keeping only the listed alternative indices (kept in grammar order).
  Grammar subset(const std::vector<std::size_t>& indices) const;

  bool operator==(const Grammar& other) const;

 private:
  std::string start_;
  std::vector<RuleAlt> alts_;
  std::map<std::string, std::string> provenance_;
  bool partial_ = true;
};

// Alt-set equality, ignoring order, start and provenance.
bool same_alt_set(const Grammar& a, const Grammar& b);

struct GrammarWarning {
  std::size_t line = 0;
  std::string message;
};

// Parses the grammar text format:
//
//   lhs : alt | alt ...        one production per logical line
//       | alt                  indented lines continue the previous production
//   // comment                 to end of line
//
// Terminals are double-quoted literals or the class names IDENTIFIER, NUMBER,
// STRING and NAMED_PARAM. An empty alternative (or the symbol ε) is epsilon.
// `;` may also terminate a production so several fit on one line. EBNF sugar
// `?`, `*`, `+` and parenthesized groups is lowered to BNF with synthesized
// nonterminals `<lhs>__opt`, `<lhs>__star`, `<lhs>__plus` and `<lhs>__grpK`.
//
// When `partial` is false, undefined nonterminals raise
// UndefinedNonterminalError. Duplicate alternatives are dropped with a warning.
Grammar parse_grammar(std::string_view text, bool partial = false,
                      std::vector<GrammarWarning>* warnings = nullptr);

// Production-by-production variant for model output: productions that fail to
// parse are dropped and reported instead of aborting the whole text. The
// result is always partial.
struct LenientParse {
  Grammar grammar;
  std::vector<std::string> dropped;
};
LenientParse parse_grammar_lenient(std::string_view text);

// Canonical text: one production per lhs (start first, then first-appearance
// order), alternatives in stored order. Synthesized names are kept as is.
std::string render_grammar(const Grammar& g);
std::string render_alt(const RuleAlt& alt);
std::string render_symbol(const Symbol& symbol);

// {names used on some rhs} \ {names defined as some lhs}, sorted.
std::set<std::string> undefined_nonterminals(const Grammar& g);

// Partial grammar with every alternative of `g` whose lhs is in `names`.
// Throws UnknownRuleError if a name has no alternatives in `g`.
Grammar rules_for(const Grammar& g, const std::set<std::string>& names);

enum class RejectReason { lhs_unknown, alt_not_in_reference };

struct RejectedAlt {
  RuleAlt alt;
  RejectReason reason;
};

struct SubsetValidation {
  Grammar valid;
  std::vector<RejectedAlt> rejected;
};

// Splits `candidate` into alternatives that appear verbatim in `reference` and
// those that do not. Matching is per alternative, not per production.
SubsetValidation validate_subset(const Grammar& candidate, const Grammar& reference);

// Union of alternatives, base order first. Start is base.start unless base is
// empty.
Grammar merge(const Grammar& base, const Grammar& addition);

std::string_view to_string(RejectReason reason) noexcept;

}  // namespace gdlgen
