#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "gdlgen/grammar.hpp"

namespace gdlgen {

// Fixed concrete token for an open lexical class: STRING -> "s", NUMBER -> 1,
// IDENTIFIER -> id, NAMED_PARAM -> p:.
std::string placeholder_for(std::string_view class_name);

// Samples a sentence of L(g) top-down from g.start. Below `depth_limit` each
// nonterminal picks uniformly among its productive alternatives; at or beyond
// it, the alternative with the shallowest finite derivation is taken (then
// fewest nonterminals, then lowest index), so expansion always terminates.
// Tokens are joined with single spaces. Throws EmptyLanguageError if g derives
// nothing and UndefinedNonterminalError if g is not closed.
std::string random_expand(const Grammar& g, std::uint64_t seed, std::size_t depth_limit);
std::string random_expand(const Grammar& g, std::mt19937_64& rng, std::size_t depth_limit);

}  // namespace gdlgen
