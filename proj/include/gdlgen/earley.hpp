#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "gdlgen/grammar.hpp"
#include "gdlgen/lexer.hpp"

namespace gdlgen {

// A terminal the parser can scan next: either an exact literal or any token
// of an open lexical class.
struct TerminalExpectation {
  enum class Kind { literal, token_class };
  Kind kind = Kind::literal;
  std::string text;  // literal text or class name

  auto operator<=>(const TerminalExpectation&) const = default;
};

enum class PrefixStatus { complete, prefix };

struct PrefixAnalysis {
  PrefixStatus status = PrefixStatus::prefix;
  std::size_t valid_len = 0;
  // Literals sorted by text, then classes sorted by name.
  std::vector<TerminalExpectation> candidates;
};

// Alternatives used by one complete derivation, as indices into the grammar's
// alternatives, in grammar order.
struct DerivationUse {
  std::vector<std::size_t> alts;
};

bool matches(const Symbol& terminal, const Token& token);
bool matches(const TerminalExpectation& expectation, const Token& token);

// Membership test. Throws UndefinedNonterminalError for partial grammars.
bool recognize(const Grammar& g, const TokenStream& ts);

// Like recognize, but undefined nonterminals derive nothing instead of being
// an error. Used when probing grammars with alternatives removed.
bool recognize_partial(const Grammar& g, const TokenStream& ts);

// Longest valid prefix of `ts` under `g` and the terminals that may follow it.
PrefixAnalysis parse_prefix(const Grammar& g, const TokenStream& ts);

// Alternatives of one derivation of `ts`. Under ambiguity the derivation whose
// leftmost rule sequence is smallest by alternative index is chosen. Throws
// NotASentenceError if ts is not in L(g).
DerivationUse derivation_rules(const Grammar& g, const TokenStream& ts);

}  // namespace gdlgen
