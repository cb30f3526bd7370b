#include "gdlgen/error.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace gdlgen {

GrammarSyntaxError::GrammarSyntaxError(const std::string& message, std::size_t line,
                                       std::size_t column)
    : Error(fmt::format("{}:{}: {}", line, column, message)), line_(line), column_(column) {}

UndefinedNonterminalError::UndefinedNonterminalError(std::vector<std::string> names)
    : Error(fmt::format("undefined nonterminals: {}", fmt::join(names, ", "))),
      names_(std::move(names)) {}

UnknownRuleError::UnknownRuleError(std::vector<std::string> names)
    : Error(fmt::format("no rules defined for: {}", fmt::join(names, ", "))),
      names_(std::move(names)) {}

LexError::LexError(const std::string& message, std::size_t begin, std::size_t end)
    : Error(fmt::format("{} at bytes [{}, {})", message, begin, end)), begin_(begin), end_(end) {}

}  // namespace gdlgen
