#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdlgen {

// Base for every error raised by the library. Tools map subclasses to exit
// codes: input/parse errors -> 2, runtime/backend failures -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GrammarSyntaxError : public Error {
 public:
  GrammarSyntaxError(const std::string& message, std::size_t line, std::size_t column);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Raised when a grammar that must be closed references nonterminals with no
// defining alternative.
class UndefinedNonterminalError : public Error {
 public:
  explicit UndefinedNonterminalError(std::vector<std::string> names);

  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

class UnknownRuleError : public Error {
 public:
  explicit UnknownRuleError(std::vector<std::string> names);

  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

class LexError : public Error {
 public:
  LexError(const std::string& message, std::size_t begin, std::size_t end);

  std::size_t begin() const noexcept { return begin_; }
  std::size_t end() const noexcept { return end_; }

 private:
  std::size_t begin_;
  std::size_t end_;
};

class NotASentenceError : public Error {
 public:
  using Error::Error;
};

class NotASubsetError : public Error {
 public:
  using Error::Error;
};

class EmptyLanguageError : public Error {
 public:
  using Error::Error;
};

// Transport failure, timeout, rate limit or malformed payload after retries.
class BackendError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gdlgen
