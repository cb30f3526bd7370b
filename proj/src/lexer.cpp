#include "gdlgen/lexer.hpp"

#include <cctype>

#include <fmt/format.h>

#include "gdlgen/error.hpp"

namespace gdlgen {

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

bool is_operator_char(char c) {
  switch (c) {
    case '_': case '.': case '<': case '>': case '=': case '+': case '-':
    case '*': case '/': case '^': case '%': case '!': case '&':
      return true;
    default:
      return false;
  }
}

bool is_ident_char(char c) { return is_letter(c) || is_digit(c) || is_operator_char(c); }
bool is_ident_start(char c) { return is_letter(c) || is_operator_char(c); }

// Length of a NUMBER at `pos`, or 0.
std::size_t match_number(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
  std::size_t digits = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == digits) return 0;
  if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
  }
  return i - pos;
}

std::size_t match_identifier(std::string_view s, std::size_t pos) {
  if (pos >= s.size() || !is_ident_start(s[pos])) return 0;
  std::size_t i = pos;
  while (i < s.size() && is_ident_char(s[i])) {
    // A `//` inside a run starts a comment.
    if (s[i] == '/' && i + 1 < s.size() && s[i + 1] == '/') break;
    ++i;
  }
  return i - pos;
}

}  // namespace

std::string_view to_string(TokenClass cls) noexcept {
  switch (cls) {
    case TokenClass::lparen: return "LPAREN";
    case TokenClass::rparen: return "RPAREN";
    case TokenClass::lbrace: return "LBRACE";
    case TokenClass::rbrace: return "RBRACE";
    case TokenClass::identifier: return "IDENTIFIER";
    case TokenClass::number: return "NUMBER";
    case TokenClass::string: return "STRING";
    case TokenClass::named_param: return "NAMED_PARAM";
  }
  return "?";
}

TokenStream tokenize(std::string_view text) {
  TokenStream ts;
  ts.source = std::string(text);
  std::size_t i = 0;
  auto push = [&](TokenClass cls, std::size_t len) {
    ts.tokens.push_back({cls, std::string(text.substr(i, len)), {i, i + len}});
    i += len;
  };

  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    switch (c) {
      case '(': push(TokenClass::lparen, 1); continue;
      case ')': push(TokenClass::rparen, 1); continue;
      case '{': push(TokenClass::lbrace, 1); continue;
      case '}': push(TokenClass::rbrace, 1); continue;
      default: break;
    }
    if (c == '"') {
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != '"') j += (text[j] == '\\') ? 2 : 1;
      if (j >= text.size()) throw LexError("unterminated string", i, text.size());
      push(TokenClass::string, j + 1 - i);
      continue;
    }

    std::size_t num = match_number(text, i);
    std::size_t ident = match_identifier(text, i);
    if (num > 0 && num >= ident) {
      std::size_t end = i + num;
      if (end < text.size() && (is_letter(text[end]) || text[end] == '_'))
        throw LexError("identifier may not start with a digit", i, end + 1);
      push(TokenClass::number, num);
      continue;
    }
    if (ident > 0) {
      if (i + ident < text.size() && text[i + ident] == ':') push(TokenClass::named_param, ident + 1);
      else push(TokenClass::identifier, ident);
      continue;
    }
    throw LexError(fmt::format("illegal character 0x{:02x}", static_cast<unsigned char>(c)), i, i + 1);
  }
  return ts;
}

std::string detokenize(const TokenStream& ts, std::size_t upto) {
  std::string out;
  for (std::size_t k = 0; k < upto && k < ts.tokens.size(); ++k) {
    if (k) out += ' ';
    out += ts.tokens[k].text;
  }
  return out;
}

std::string detokenize(const TokenStream& ts) { return detokenize(ts, ts.tokens.size()); }

TokenStream tokens_from_words(const std::vector<std::string>& words) {
  std::string source;
  for (const auto& w : words) {
    if (!source.empty()) source += ' ';
    source += w;
  }
  return tokenize(source);
}

}  // namespace gdlgen
