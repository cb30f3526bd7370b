#include "gdlgen/random_expand.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <vector>

#include "gdlgen/error.hpp"

namespace gdlgen {

std::string placeholder_for(std::string_view class_name) {
  if (class_name == "STRING") return "\"s\"";
  if (class_name == "NUMBER") return "1";
  if (class_name == "IDENTIFIER") return "id";
  if (class_name == "NAMED_PARAM") return "p:";
  return std::string(class_name);
}

namespace {

constexpr std::size_t kInfinite = std::numeric_limits<std::size_t>::max();

struct Expander {
  const Grammar& g;
  // Minimal derivation height per nonterminal and per alternative.
  std::map<std::string, std::size_t, std::less<>> height;
  std::vector<std::size_t> alt_height;

  explicit Expander(const Grammar& grammar) : g(grammar), alt_height(grammar.size(), kInfinite) {
    for (const auto& name : g.nonterminals()) height[name] = kInfinite;
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t h = 0;
        for (const auto& sym : g.alts()[i].rhs) {
          if (sym.kind != SymbolKind::nonterminal) continue;
          h = std::max(h, height[sym.text]);
        }
        if (h == kInfinite) continue;
        ++h;
        if (h < alt_height[i]) {
          alt_height[i] = h;
          changed = true;
        }
        auto& lhs = height[g.alts()[i].lhs];
        if (h < lhs) lhs = h;
      }
    }
  }

  std::size_t pick(const std::string& name, std::size_t depth, std::size_t limit, std::mt19937_64& rng) const {
    std::vector<std::size_t> live;
    for (auto i : g.alts_for(name))
      if (alt_height[i] != kInfinite) live.push_back(i);
    if (depth < limit) {
      std::uniform_int_distribution<std::size_t> dist(0, live.size() - 1);
      return live[dist(rng)];
    }
    auto nonterminal_count = [&](std::size_t i) {
      const auto& rhs = g.alts()[i].rhs;
      return std::count_if(rhs.begin(), rhs.end(),
                           [](const Symbol& s) { return s.kind == SymbolKind::nonterminal; });
    };
    return *std::min_element(live.begin(), live.end(), [&](std::size_t a, std::size_t b) {
      if (alt_height[a] != alt_height[b]) return alt_height[a] < alt_height[b];
      auto na = nonterminal_count(a), nb = nonterminal_count(b);
      if (na != nb) return na < nb;
      return a < b;
    });
  }
};

}  // namespace

std::string random_expand(const Grammar& g, std::mt19937_64& rng, std::size_t depth_limit) {
  auto undefined = undefined_nonterminals(g);
  if (!undefined.empty())
    throw UndefinedNonterminalError(std::vector<std::string>(undefined.begin(), undefined.end()));
  if (!g.defines(g.start())) throw EmptyLanguageError("start symbol has no alternatives");

  Expander ex(g);
  if (ex.height.at(g.start()) == kInfinite) throw EmptyLanguageError("grammar derives no sentence");

  struct Frame {
    const Symbol* symbol;
    std::size_t depth;
  };
  const Symbol root = Symbol::nonterminal(g.start());
  std::vector<Frame> stack{{&root, 0}};
  std::string out;
  auto emit = [&](const std::string& text) {
    if (!out.empty()) out += ' ';
    out += text;
  };
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    switch (f.symbol->kind) {
      case SymbolKind::literal: emit(f.symbol->text); break;
      case SymbolKind::token_class: emit(placeholder_for(f.symbol->text)); break;
      case SymbolKind::nonterminal: {
        const auto& rhs = g.alts()[ex.pick(f.symbol->text, f.depth, depth_limit, rng)].rhs;
        for (auto it = rhs.rbegin(); it != rhs.rend(); ++it) stack.push_back({&*it, f.depth + 1});
        break;
      }
    }
  }
  return out;
}

std::string random_expand(const Grammar& g, std::uint64_t seed, std::size_t depth_limit) {
  std::mt19937_64 rng(seed);
  return random_expand(g, rng, depth_limit);
}

}  // namespace gdlgen
