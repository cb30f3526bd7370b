#pragma once

#include <vector>

#include "gdlgen/grammar.hpp"
#include "gdlgen/lexer.hpp"

namespace gdlgen {

// Smallest-by-inclusion subset of `g` that still derives `ts`: starts from
// the canonical derivation's alternatives, then repeatedly drops any
// alternative (last to first) whose removal keeps `ts` derivable, until a
// full pass removes nothing. Throws NotASentenceError if ts is not in L(g).
Grammar extract_minimal(const Grammar& g, const TokenStream& ts);

// Alternatives of `gy` that can be removed with `ts` still derivable. An empty
// result certifies minimality. Throws NotASubsetError if some alternative of
// `gy` is not in `g`, NotASentenceError if ts is not in L(gy).
std::vector<RuleAlt> check_minimality(const Grammar& gy, const Grammar& g, const TokenStream& ts);

}  // namespace gdlgen
