#include "gdlgen/earley.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "gdlgen/error.hpp"

namespace gdlgen {

bool matches(const Symbol& terminal, const Token& token) {
  switch (terminal.kind) {
    case SymbolKind::literal: return token.text == terminal.text;
    case SymbolKind::token_class: return to_string(token.cls) == terminal.text;
    case SymbolKind::nonterminal: return false;
  }
  return false;
}

bool matches(const TerminalExpectation& expectation, const Token& token) {
  if (expectation.kind == TerminalExpectation::Kind::literal) return token.text == expectation.text;
  return to_string(token.cls) == expectation.text;
}

namespace {

constexpr int kTerminal = -1;

struct CompiledSymbol {
  int nonterminal = kTerminal;  // id, or kTerminal
  const Symbol* symbol = nullptr;
};

struct CompiledAlt {
  int lhs = 0;
  std::vector<CompiledSymbol> rhs;
  std::size_t source_index = 0;  // index into Grammar::alts()
};

// Integer-indexed view of a grammar. Alternatives that mention a nonterminal
// deriving no terminal string are dropped up front, so every chart item that
// survives is extendable to a full sentence.
class CompiledGrammar {
 public:
  CompiledGrammar(const Grammar& g, bool allow_partial) {
    if (!allow_partial) {
      auto undefined = undefined_nonterminals(g);
      if (!g.defines(g.start())) undefined.insert(g.start().empty() ? "<start>" : g.start());
      if (!undefined.empty())
        throw UndefinedNonterminalError(std::vector<std::string>(undefined.begin(), undefined.end()));
    }

    for (const auto& name : g.nonterminals()) id(name);
    start_ = g.start().empty() ? -1 : id(g.start());

    std::vector<CompiledAlt> all;
    for (std::size_t i = 0; i < g.alts().size(); ++i) {
      const auto& alt = g.alts()[i];
      CompiledAlt c{id(alt.lhs), {}, i};
      for (const auto& sym : alt.rhs)
        c.rhs.push_back({sym.kind == SymbolKind::nonterminal ? id(sym.text) : kTerminal, &sym});
      all.push_back(std::move(c));
    }

    std::vector<bool> productive(names_.size(), false);
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& alt : all) {
        if (productive[alt.lhs]) continue;
        bool ok = std::all_of(alt.rhs.begin(), alt.rhs.end(), [&](const CompiledSymbol& s) {
          return s.nonterminal == kTerminal || productive[s.nonterminal];
        });
        if (ok) productive[alt.lhs] = changed = true;
      }
    }

    by_lhs_.assign(names_.size(), {});
    for (auto& alt : all) {
      bool ok = productive[alt.lhs] &&
                std::all_of(alt.rhs.begin(), alt.rhs.end(), [&](const CompiledSymbol& s) {
                  return s.nonterminal == kTerminal || productive[s.nonterminal];
                });
      if (!ok) continue;
      by_lhs_[alt.lhs].push_back(static_cast<int>(alts_.size()));
      alts_.push_back(std::move(alt));
    }

    nullable_.assign(names_.size(), false);
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& alt : alts_) {
        if (nullable_[alt.lhs]) continue;
        bool ok = std::all_of(alt.rhs.begin(), alt.rhs.end(), [&](const CompiledSymbol& s) {
          return s.nonterminal != kTerminal && nullable_[s.nonterminal];
        });
        if (ok) nullable_[alt.lhs] = changed = true;
      }
    }
  }

  int start() const { return start_; }
  const std::vector<CompiledAlt>& alts() const { return alts_; }
  const std::vector<int>& alts_of(int nt) const { return by_lhs_[nt]; }
  bool nullable(int nt) const { return nullable_[nt]; }

 private:
  int id(const std::string& name) {
    auto [it, inserted] = ids_.emplace(name, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }

  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
  std::vector<CompiledAlt> alts_;
  std::vector<std::vector<int>> by_lhs_;
  std::vector<bool> nullable_;
  int start_ = -1;
};

struct Item {
  std::uint32_t alt;
  std::uint32_t dot;
  std::uint32_t origin;
};

std::uint64_t item_key(std::uint32_t alt, std::uint32_t dot, std::uint32_t origin) {
  return (static_cast<std::uint64_t>(alt) << 40) | (static_cast<std::uint64_t>(dot) << 32) | origin;
}

std::uint64_t span_key(std::uint64_t what, std::uint32_t from, std::uint32_t to) {
  return (what << 40) ^ (static_cast<std::uint64_t>(from) << 20) ^ to;
}

struct Column {
  std::vector<Item> items;
  std::unordered_set<std::uint64_t> seen;
  // nonterminal -> indices of items whose next symbol is that nonterminal
  std::unordered_map<int, std::vector<std::size_t>> waiting;

  void add(const Item& item) {
    if (seen.insert(item_key(item.alt, item.dot, item.origin)).second) items.push_back(item);
  }
};

class Chart {
 public:
  Chart(const CompiledGrammar& g, const TokenStream& ts, bool record_spans)
      : g_(g), ts_(ts), record_spans_(record_spans) {}

  // Fills columns left to right until the input is consumed or no item can
  // scan the next token. Returns the index of the last non-empty column.
  std::size_t run() {
    const std::size_t n = ts_.tokens.size();
    columns_.assign(n + 1, {});
    if (g_.start() >= 0)
      for (int a : g_.alts_of(g_.start())) columns_[0].add({static_cast<std::uint32_t>(a), 0, 0});

    std::size_t last = 0;
    for (std::size_t k = 0; k <= n; ++k) {
      if (columns_[k].items.empty()) break;
      last = k;
      process(k);
    }
    return last;
  }

  bool accepted() const {
    const auto& col = columns_.back();
    return std::any_of(col.items.begin(), col.items.end(), [&](const Item& it) {
      const auto& alt = g_.alts()[it.alt];
      return it.origin == 0 && alt.lhs == g_.start() && it.dot == alt.rhs.size();
    });
  }

  std::vector<TerminalExpectation> expectations(std::size_t k) const {
    std::vector<TerminalExpectation> out;
    for (const auto& it : columns_[k].items) {
      const auto& alt = g_.alts()[it.alt];
      if (it.dot == alt.rhs.size() || alt.rhs[it.dot].nonterminal != kTerminal) continue;
      const Symbol& s = *alt.rhs[it.dot].symbol;
      out.push_back({s.kind == SymbolKind::literal ? TerminalExpectation::Kind::literal
                                                   : TerminalExpectation::Kind::token_class,
                     s.text});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool alt_spans(int alt, std::size_t from, std::size_t to) const {
    return alt_spans_.count(span_key(static_cast<std::uint64_t>(alt), from, to)) != 0;
  }
  bool nt_spans(int nt, std::size_t from, std::size_t to) const {
    return nt_spans_.count(span_key(static_cast<std::uint64_t>(nt), from, to)) != 0;
  }

 private:
  void process(std::size_t k) {
    const std::size_t n = ts_.tokens.size();
    Column& col = columns_[k];
    for (std::size_t idx = 0; idx < col.items.size(); ++idx) {
      const Item item = col.items[idx];
      const auto& alt = g_.alts()[item.alt];
      if (item.dot == alt.rhs.size()) {
        if (record_spans_) {
          alt_spans_.insert(span_key(item.alt, item.origin, k));
          nt_spans_.insert(span_key(static_cast<std::uint64_t>(alt.lhs), item.origin, k));
        }
        Column& from = columns_[item.origin];
        auto found = from.waiting.find(alt.lhs);
        if (found == from.waiting.end()) continue;
        // `from` may be `col` itself; re-read the list on every step.
        for (std::size_t w = 0; w < from.waiting[alt.lhs].size(); ++w) {
          const Item parent = from.items[from.waiting[alt.lhs][w]];
          col.add({parent.alt, parent.dot + 1, parent.origin});
        }
        continue;
      }
      const auto& next = alt.rhs[item.dot];
      if (next.nonterminal != kTerminal) {
        col.waiting[next.nonterminal].push_back(idx);
        for (int a : g_.alts_of(next.nonterminal))
          col.add({static_cast<std::uint32_t>(a), 0, static_cast<std::uint32_t>(k)});
        if (g_.nullable(next.nonterminal)) col.add({item.alt, item.dot + 1, item.origin});
      } else if (k < n && matches(*next.symbol, ts_.tokens[k])) {
        columns_[k + 1].add({item.alt, item.dot + 1, item.origin});
      }
    }
  }

  const CompiledGrammar& g_;
  const TokenStream& ts_;
  bool record_spans_;
  std::vector<Column> columns_;
  std::unordered_set<std::uint64_t> alt_spans_;
  std::unordered_set<std::uint64_t> nt_spans_;
};

// Recovers the derivation whose preorder sequence of alternative indices is
// lexicographically smallest, never revisiting a (nonterminal, span) pair on
// the current root-to-leaf path.
class Deriver {
 public:
  using Seq = std::vector<int>;

  Deriver(const CompiledGrammar& g, const TokenStream& ts, const Chart& chart)
      : g_(g), ts_(ts), chart_(chart) {}

  std::optional<Seq> best_nt(int nt, std::size_t i, std::size_t j) {
    const std::uint64_t key = span_key(static_cast<std::uint64_t>(nt), i, j);
    if (path_.count(key)) {
      ++ban_hits_;
      return std::nullopt;
    }
    if (auto m = nt_memo_.find(key); m != nt_memo_.end()) return m->second;

    const std::size_t hits_before = ban_hits_;
    path_.insert(key);
    std::optional<Seq> result;
    for (int a : g_.alts_of(nt)) {
      if (!chart_.alt_spans(a, i, j)) continue;
      if (auto tail = best_rhs(a, 0, i, j)) {
        Seq seq{a};
        seq.insert(seq.end(), tail->begin(), tail->end());
        result = std::move(seq);
        break;
      }
    }
    path_.erase(key);
    if (ban_hits_ == hits_before) nt_memo_.emplace(key, result);
    return result;
  }

 private:
  struct RhsKey {
    int alt;
    std::size_t dot, from, to;
    bool operator==(const RhsKey&) const = default;
  };
  struct RhsKeyHash {
    std::size_t operator()(const RhsKey& k) const {
      std::size_t h = std::hash<int>()(k.alt);
      for (std::size_t v : {k.dot, k.from, k.to}) h = h * 1000003u ^ std::hash<std::size_t>()(v);
      return h;
    }
  };

  std::optional<Seq> best_rhs(int a, std::size_t dot, std::size_t k, std::size_t j) {
    const auto& rhs = g_.alts()[a].rhs;
    if (dot == rhs.size()) return k == j ? std::optional<Seq>(Seq{}) : std::nullopt;

    const RhsKey key{a, dot, k, j};
    if (auto m = rhs_memo_.find(key); m != rhs_memo_.end()) return m->second;
    const std::size_t hits_before = ban_hits_;

    std::optional<Seq> best;
    const auto& sym = rhs[dot];
    if (sym.nonterminal == kTerminal) {
      if (k < j && matches(*sym.symbol, ts_.tokens[k])) best = best_rhs(a, dot + 1, k + 1, j);
    } else {
      for (std::size_t l = k; l <= j; ++l) {
        if (!chart_.nt_spans(sym.nonterminal, k, l) || !suffix_derives(a, dot + 1, l, j)) continue;
        auto head = best_nt(sym.nonterminal, k, l);
        if (!head) continue;
        auto tail = best_rhs(a, dot + 1, l, j);
        if (!tail) continue;
        head->insert(head->end(), tail->begin(), tail->end());
        if (!best || *head < *best) best = std::move(head);
      }
    }
    if (ban_hits_ == hits_before) rhs_memo_.emplace(key, best);
    return best;
  }

  bool suffix_derives(int a, std::size_t dot, std::size_t k, std::size_t j) {
    const auto& rhs = g_.alts()[a].rhs;
    if (dot == rhs.size()) return k == j;
    const RhsKey key{a, dot, k, j};
    if (auto m = suffix_memo_.find(key); m != suffix_memo_.end()) return m->second;
    bool ok = false;
    const auto& sym = rhs[dot];
    if (sym.nonterminal == kTerminal) {
      ok = k < j && matches(*sym.symbol, ts_.tokens[k]) && suffix_derives(a, dot + 1, k + 1, j);
    } else {
      for (std::size_t l = k; l <= j && !ok; ++l)
        ok = chart_.nt_spans(sym.nonterminal, k, l) && suffix_derives(a, dot + 1, l, j);
    }
    suffix_memo_.emplace(key, ok);
    return ok;
  }

  const CompiledGrammar& g_;
  const TokenStream& ts_;
  const Chart& chart_;
  std::unordered_set<std::uint64_t> path_;
  std::size_t ban_hits_ = 0;
  std::unordered_map<std::uint64_t, std::optional<Seq>> nt_memo_;
  std::unordered_map<RhsKey, std::optional<Seq>, RhsKeyHash> rhs_memo_;
  std::unordered_map<RhsKey, bool, RhsKeyHash> suffix_memo_;
};

bool accepts(const Grammar& g, const TokenStream& ts, bool allow_partial) {
  CompiledGrammar cg(g, allow_partial);
  if (cg.start() < 0) return false;
  Chart chart(cg, ts, false);
  std::size_t last = chart.run();
  return last == ts.tokens.size() && chart.accepted();
}

}  // namespace

bool recognize(const Grammar& g, const TokenStream& ts) { return accepts(g, ts, false); }

bool recognize_partial(const Grammar& g, const TokenStream& ts) { return accepts(g, ts, true); }

PrefixAnalysis parse_prefix(const Grammar& g, const TokenStream& ts) {
  CompiledGrammar cg(g, false);
  Chart chart(cg, ts, false);
  PrefixAnalysis out;
  out.valid_len = chart.run();
  out.status = out.valid_len == ts.tokens.size() && chart.accepted() ? PrefixStatus::complete
                                                                      : PrefixStatus::prefix;
  out.candidates = chart.expectations(out.valid_len);
  return out;
}

DerivationUse derivation_rules(const Grammar& g, const TokenStream& ts) {
  CompiledGrammar cg(g, false);
  Chart chart(cg, ts, true);
  if (chart.run() != ts.tokens.size() || !chart.accepted())
    throw NotASentenceError("input is not a sentence of the grammar");

  Deriver deriver(cg, ts, chart);
  auto seq = deriver.best_nt(cg.start(), 0, ts.tokens.size());
  if (!seq) throw NotASentenceError("no derivation found");

  DerivationUse use;
  for (int a : *seq) use.alts.push_back(cg.alts()[a].source_index);
  std::sort(use.alts.begin(), use.alts.end());
  use.alts.erase(std::unique(use.alts.begin(), use.alts.end()), use.alts.end());
  return use;
}

}  // namespace gdlgen
