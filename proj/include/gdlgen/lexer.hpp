#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gdlgen {

enum class TokenClass { lparen, rparen, lbrace, rbrace, identifier, number, string, named_param };

std::string_view to_string(TokenClass cls) noexcept;

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

struct Token {
  TokenClass cls = TokenClass::identifier;
  std::string text;  // exact source spelling; STRING keeps its quotes
  Span span;
};

struct TokenStream {
  std::vector<Token> tokens;
  std::string source;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
};

// Lexes game-description text. Whitespace and `//` comments are skipped.
//
//   ( ) { }        LPAREN RPAREN LBRACE RBRACE
//   "..."          STRING (backslash escapes allowed)
//   -?digits(.d+)? NUMBER
//   name:          NAMED_PARAM
//   name           IDENTIFIER: letters, digits and _ . < > = + - * / ^ % ! &,
//                  not starting with a digit
//
// Longest match wins; a NUMBER beats an IDENTIFIER of equal length. A digit
// run glued to identifier characters (e.g. `3x`) is rejected. Throws LexError.
TokenStream tokenize(std::string_view text);

// First `upto` tokens joined with single spaces.
std::string detokenize(const TokenStream& ts, std::size_t upto);
std::string detokenize(const TokenStream& ts);

// Builds a stream from pre-split words; used for synthetic token alphabets.
TokenStream tokens_from_words(const std::vector<std::string>& words);

}  // namespace gdlgen
