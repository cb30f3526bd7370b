#include "gdlgen/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <variant>

#include <fmt/format.h>

#include "gdlgen/error.hpp"

namespace gdlgen {

namespace {

constexpr std::string_view kEpsilon = "\xCE\xB5";  // UTF-8 'ε'

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

}  // namespace

bool is_token_class_name(std::string_view name) noexcept {
  return name == "IDENTIFIER" || name == "NUMBER" || name == "STRING" || name == "NAMED_PARAM";
}

// ---------------------------------------------------------------------------
// Grammar value

Grammar::Grammar(std::string start, std::vector<RuleAlt> alts, bool partial,
                 std::map<std::string, std::string> provenance)
    : start_(std::move(start)), provenance_(std::move(provenance)), partial_(partial) {
  std::set<RuleAlt> seen;
  alts_.reserve(alts.size());
  for (auto& alt : alts) {
    if (alt.lhs.empty()) throw std::invalid_argument("rule alternative with empty lhs");
    for (const auto& sym : alt.rhs) {
      if (sym.text.empty()) throw std::invalid_argument("symbol with empty text in " + alt.lhs);
      if (sym.kind == SymbolKind::token_class && !is_token_class_name(sym.text))
        throw std::invalid_argument("unknown token class " + sym.text);
    }
    if (seen.insert(alt).second) alts_.push_back(std::move(alt));
  }
}

bool Grammar::contains(const RuleAlt& alt) const {
  return std::find(alts_.begin(), alts_.end(), alt) != alts_.end();
}

bool Grammar::defines(std::string_view name) const {
  return std::any_of(alts_.begin(), alts_.end(), [&](const RuleAlt& a) { return a.lhs == name; });
}

std::vector<std::string> Grammar::defined_names() const {
  std::vector<std::string> names;
  std::set<std::string_view> seen;
  for (const auto& alt : alts_)
    if (seen.insert(alt.lhs).second) names.push_back(alt.lhs);
  return names;
}

std::set<std::string> Grammar::nonterminals() const {
  std::set<std::string> names;
  for (const auto& alt : alts_) {
    names.insert(alt.lhs);
    for (const auto& sym : alt.rhs)
      if (sym.kind == SymbolKind::nonterminal) names.insert(sym.text);
  }
  return names;
}

std::vector<std::size_t> Grammar::alts_for(std::string_view name) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < alts_.size(); ++i)
    if (alts_[i].lhs == name) out.push_back(i);
  return out;
}

Grammar Grammar::without(std::size_t index) const {
  std::vector<RuleAlt> alts;
  alts.reserve(alts_.size());
  for (std::size_t i = 0; i < alts_.size(); ++i)
    if (i != index) alts.push_back(alts_[i]);
  return Grammar(start_, std::move(alts), partial_, provenance_);
}

Grammar Grammar::subset(const std::vector<std::size_t>& indices) const {
  std::vector<std::size_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<RuleAlt> alts;
  for (auto i : sorted) alts.push_back(alts_.at(i));
  return Grammar(start_, std::move(alts), partial_, provenance_);
}

bool Grammar::operator==(const Grammar& other) const {
  return start_ == other.start_ && alts_ == other.alts_;
}

bool same_alt_set(const Grammar& a, const Grammar& b) {
  std::set<RuleAlt> lhs(a.alts().begin(), a.alts().end());
  std::set<RuleAlt> rhs(b.alts().begin(), b.alts().end());
  return lhs == rhs;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

enum class Tok { name, literal, colon, pipe, lparen, rparen, question, star, plus, semi, epsilon, end };

struct GToken {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

struct SourceLine {
  std::size_t number;  // 1-based
  std::string_view text;
};

// Index of a `//` comment outside double-quoted literals, or npos.
std::size_t comment_start(std::string_view line) {
  bool in_literal = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_literal) {
      if (c == '\\') ++i;
      else if (c == '"') in_literal = false;
    } else if (c == '"') {
      in_literal = true;
    } else if (c == '/' && i + 1 < line.size() && line[i + 1] == '/') {
      return i;
    }
  }
  return std::string_view::npos;
}

// Groups physical lines into logical productions. A line that starts in
// column 0 with a non-`|` character opens a new production; indented lines
// and lines starting with `|` continue the previous one.
std::vector<std::vector<SourceLine>> logical_productions(std::string_view text) {
  std::vector<std::vector<SourceLine>> chunks;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    ++number;
    std::size_t cut = comment_start(line);
    if (cut != std::string_view::npos) line = line.substr(0, cut);
    bool blank = std::all_of(line.begin(), line.end(), [](char c) { return is_blank(c); });
    if (!blank) {
      std::size_t first = line.find_first_not_of(" \t\r");
      bool continuation = first > 0 || line[first] == '|';
      if (continuation && !chunks.empty()) chunks.back().push_back({number, line});
      else chunks.push_back({{number, line}});
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return chunks;
}

std::vector<GToken> lex_production(const std::vector<SourceLine>& lines) {
  std::vector<GToken> out;
  for (const auto& [number, line] : lines) {
    std::size_t i = 0;
    while (i < line.size()) {
      char c = line[i];
      std::size_t col = i + 1;
      if (is_blank(c)) {
        ++i;
        continue;
      }
      auto single = [&](Tok kind) {
        out.push_back({kind, std::string(1, c), number, col});
        ++i;
      };
      switch (c) {
        case ':': single(Tok::colon); continue;
        case '|': single(Tok::pipe); continue;
        case '(': single(Tok::lparen); continue;
        case ')': single(Tok::rparen); continue;
        case '?': single(Tok::question); continue;
        case '*': single(Tok::star); continue;
        case '+': single(Tok::plus); continue;
        case ';': single(Tok::semi); continue;
        default: break;
      }
      if (c == '"') {
        std::string value;
        std::size_t j = i + 1;
        bool closed = false;
        while (j < line.size()) {
          if (line[j] == '\\' && j + 1 < line.size()) {
            value.push_back(line[j + 1]);
            j += 2;
          } else if (line[j] == '"') {
            closed = true;
            break;
          } else {
            value.push_back(line[j++]);
          }
        }
        if (!closed) throw GrammarSyntaxError("unterminated literal", number, col);
        if (value.empty()) throw GrammarSyntaxError("empty literal", number, col);
        out.push_back({Tok::literal, std::move(value), number, col});
        i = j + 1;
        continue;
      }
      if (line.substr(i, kEpsilon.size()) == kEpsilon) {
        out.push_back({Tok::epsilon, std::string(kEpsilon), number, col});
        i += kEpsilon.size();
        continue;
      }
      if (is_name_start(c)) {
        std::size_t j = i;
        while (j < line.size() && is_name_char(line[j])) ++j;
        out.push_back({Tok::name, std::string(line.substr(i, j - i)), number, col});
        i = j;
        continue;
      }
      throw GrammarSyntaxError(fmt::format("unexpected character '{}'", c), number, col);
    }
  }
  std::size_t last_line = lines.empty() ? 0 : lines.back().number;
  std::size_t last_col = lines.empty() ? 0 : lines.back().text.size() + 1;
  out.push_back({Tok::end, "", last_line, last_col});
  return out;
}

// EBNF syntax tree for one production, lowered right after parsing.
struct Expr;
using Sequence = std::vector<Expr>;

enum class Repeat { none, optional, star, plus };

struct Expr {
  std::variant<Symbol, std::vector<Sequence>> item;  // symbol or parenthesized group
  Repeat repeat = Repeat::none;
};

std::string render_expr(const Expr& e);

std::string render_sequence(const Sequence& seq) {
  std::string out;
  for (const auto& e : seq) {
    if (!out.empty()) out += ' ';
    out += render_expr(e);
  }
  return out;
}

std::string render_expr(const Expr& e) {
  std::string out;
  if (const auto* sym = std::get_if<Symbol>(&e.item)) {
    out = render_symbol(*sym);
  } else {
    const auto& alts = std::get<std::vector<Sequence>>(e.item);
    out = "(";
    for (std::size_t i = 0; i < alts.size(); ++i) {
      if (i) out += " | ";
      out += render_sequence(alts[i]);
    }
    out += ")";
  }
  switch (e.repeat) {
    case Repeat::optional: out += '?'; break;
    case Repeat::star: out += '*'; break;
    case Repeat::plus: out += '+'; break;
    case Repeat::none: break;
  }
  return out;
}

class ProductionParser {
 public:
  explicit ProductionParser(std::vector<GToken> tokens) : toks_(std::move(tokens)) {}

  bool at_end() const { return peek().kind == Tok::end; }

  // lhs ':' alternatives (';' | end)
  std::pair<GToken, std::vector<Sequence>> production() {
    GToken lhs = expect(Tok::name, "expected rule name");
    if (is_token_class_name(lhs.text))
      throw GrammarSyntaxError("token class " + lhs.text + " cannot be a rule name", lhs.line, lhs.column);
    expect(Tok::colon, "expected ':' after rule name");
    auto alts = alternatives();
    if (peek().kind == Tok::semi) {
      advance();
    } else if (peek().kind != Tok::end) {
      // A second production on the same logical line needs a ';'.
      const auto& t = peek();
      throw GrammarSyntaxError("unexpected '" + t.text + "'", t.line, t.column);
    }
    return {lhs, std::move(alts)};
  }

 private:
  const GToken& peek() const { return toks_[pos_]; }
  const GToken& advance() { return toks_[pos_++]; }

  GToken expect(Tok kind, const char* what) {
    const auto& t = peek();
    if (t.kind != kind) throw GrammarSyntaxError(what, t.line, t.column);
    return advance();
  }

  std::vector<Sequence> alternatives() {
    std::vector<Sequence> alts;
    alts.push_back(sequence());
    while (peek().kind == Tok::pipe) {
      advance();
      alts.push_back(sequence());
    }
    return alts;
  }

  Sequence sequence() {
    Sequence seq;
    for (;;) {
      const auto& t = peek();
      if (t.kind == Tok::epsilon) {
        advance();
        continue;
      }
      if (t.kind == Tok::name) {
        // `name :` starts the next production (only legal after ';').
        if (toks_[pos_ + 1].kind == Tok::colon)
          throw GrammarSyntaxError("missing ';' before rule " + t.text, t.line, t.column);
        advance();
        seq.push_back({is_token_class_name(t.text) ? Symbol::token_class(t.text) : Symbol::nonterminal(t.text)});
      } else if (t.kind == Tok::literal) {
        advance();
        seq.push_back({Symbol::literal(t.text)});
      } else if (t.kind == Tok::lparen) {
        advance();
        auto group = alternatives();
        expect(Tok::rparen, "expected ')'");
        seq.push_back({std::move(group)});
      } else {
        break;
      }
      postfix(seq.back());
    }
    return seq;
  }

  void postfix(Expr& e) {
    for (;;) {
      Repeat r;
      switch (peek().kind) {
        case Tok::question: r = Repeat::optional; break;
        case Tok::star: r = Repeat::star; break;
        case Tok::plus: r = Repeat::plus; break;
        default: return;
      }
      advance();
      if (e.repeat != Repeat::none) {
        // `x*?` and friends: wrap the inner construct in a group first.
        Expr inner = std::move(e);
        e = Expr{std::vector<Sequence>{Sequence{std::move(inner)}}};
      }
      e.repeat = r;
    }
  }

  std::vector<GToken> toks_;
  std::size_t pos_ = 0;
};

// Lowers EBNF constructs into fresh nonterminals named after the enclosing lhs.
class Lowering {
 public:
  void add_production(const std::string& lhs, const std::vector<Sequence>& alts) {
    std::vector<RuleAlt> synthesized;
    for (const auto& seq : alts) alts_.push_back({lhs, lower_sequence(lhs, seq, synthesized)});
    for (auto& alt : synthesized) alts_.push_back(std::move(alt));
  }

  std::vector<RuleAlt>& alts() { return alts_; }
  std::map<std::string, std::string>& provenance() { return provenance_; }

 private:
  std::vector<Symbol> lower_sequence(const std::string& base, const Sequence& seq,
                                     std::vector<RuleAlt>& out) {
    std::vector<Symbol> rhs;
    for (const auto& e : seq) rhs.push_back(lower_expr(base, e, out));
    return rhs;
  }

  Symbol lower_expr(const std::string& base, const Expr& e, std::vector<RuleAlt>& out) {
    Symbol inner;
    if (const auto* sym = std::get_if<Symbol>(&e.item)) {
      inner = *sym;
    } else {
      const auto& group = std::get<std::vector<Sequence>>(e.item);
      std::string name = fresh(base, "grp");
      provenance_[name] = render_expr(Expr{group});
      // Reserve the slot so the group's alternatives precede nested helpers.
      std::vector<RuleAlt> nested;
      for (const auto& seq : group) out.push_back({name, lower_sequence(base, seq, nested)});
      for (auto& alt : nested) out.push_back(std::move(alt));
      inner = Symbol::nonterminal(name);
    }
    if (e.repeat == Repeat::none) return inner;

    std::string name;
    switch (e.repeat) {
      case Repeat::optional:
        name = fresh(base, "opt");
        out.push_back({name, {inner}});
        out.push_back({name, {}});
        break;
      case Repeat::star:
        name = fresh(base, "star");
        out.push_back({name, {inner, Symbol::nonterminal(name)}});
        out.push_back({name, {}});
        break;
      case Repeat::plus:
        name = fresh(base, "plus");
        out.push_back({name, {inner}});
        out.push_back({name, {inner, Symbol::nonterminal(name)}});
        break;
      case Repeat::none: break;
    }
    provenance_[name] = render_expr(e);
    return Symbol::nonterminal(name);
  }

  // `s__opt`, `s__opt2`, ... and `s__grp1`, `s__grp2`, ...
  std::string fresh(const std::string& base, const char* kind) {
    std::size_t n = ++counters_[base + "/" + kind];
    if (std::string_view(kind) == "grp") return fmt::format("{}__grp{}", base, n);
    return n == 1 ? fmt::format("{}__{}", base, kind) : fmt::format("{}__{}{}", base, kind, n);
  }

  std::vector<RuleAlt> alts_;
  std::map<std::string, std::string> provenance_;
  std::unordered_map<std::string, std::size_t> counters_;
};

std::vector<std::string> duplicate_warnings(const std::vector<RuleAlt>& alts) {
  std::vector<std::string> out;
  std::set<RuleAlt> seen;
  for (const auto& alt : alts)
    if (!seen.insert(alt).second) out.push_back("duplicate alternative dropped: " + render_alt(alt));
  return out;
}

}  // namespace

Grammar parse_grammar(std::string_view text, bool partial, std::vector<GrammarWarning>* warnings) {
  Lowering lowering;
  std::string start;
  for (const auto& chunk : logical_productions(text)) {
    ProductionParser parser(lex_production(chunk));
    while (!parser.at_end()) {
      auto [lhs, alts] = parser.production();
      if (start.empty()) start = lhs.text;
      lowering.add_production(lhs.text, alts);
    }
  }
  if (warnings)
    for (auto& msg : duplicate_warnings(lowering.alts())) warnings->push_back({0, std::move(msg)});

  Grammar g(start, std::move(lowering.alts()), partial, std::move(lowering.provenance()));
  if (!partial) {
    if (g.empty()) throw GrammarSyntaxError("grammar defines no rules", 1, 1);
    auto undefined = undefined_nonterminals(g);
    if (!undefined.empty())
      throw UndefinedNonterminalError(std::vector<std::string>(undefined.begin(), undefined.end()));
  }
  return g;
}

LenientParse parse_grammar_lenient(std::string_view text) {
  Lowering lowering;
  std::string start;
  std::vector<std::string> dropped;
  for (const auto& chunk : logical_productions(text)) {
    try {
      ProductionParser parser(lex_production(chunk));
      // Parse the whole chunk before committing so a bad tail drops it all.
      std::vector<std::pair<std::string, std::vector<Sequence>>> parsed;
      while (!parser.at_end()) {
        auto [lhs, alts] = parser.production();
        parsed.emplace_back(lhs.text, std::move(alts));
      }
      for (auto& [lhs, alts] : parsed) {
        if (start.empty()) start = lhs;
        lowering.add_production(lhs, alts);
      }
    } catch (const GrammarSyntaxError& e) {
      std::string source;
      for (const auto& line : chunk) {
        if (!source.empty()) source += ' ';
        source += std::string(line.text);
      }
      dropped.push_back(fmt::format("line {}: {} ({})", chunk.front().number, source, e.what()));
    }
  }
  return {Grammar(start, std::move(lowering.alts()), true, std::move(lowering.provenance())),
          std::move(dropped)};
}

std::string render_symbol(const Symbol& symbol) {
  if (symbol.kind != SymbolKind::literal) return symbol.text;
  std::string out = "\"";
  for (char c : symbol.text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string render_alt(const RuleAlt& alt) {
  std::string out = alt.lhs + ":";
  for (const auto& sym : alt.rhs) out += " " + render_symbol(sym);
  return out;
}

std::string render_grammar(const Grammar& g) {
  std::vector<std::string> order = g.defined_names();
  auto it = std::find(order.begin(), order.end(), g.start());
  if (it != order.end()) std::rotate(order.begin(), it, it + 1);

  std::string out;
  for (const auto& name : order) {
    out += name + ":";
    bool first = true;
    for (auto index : g.alts_for(name)) {
      if (!first) out += " |";
      first = false;
      for (const auto& sym : g.alts()[index].rhs) out += " " + render_symbol(sym);
    }
    out += '\n';
  }
  return out;
}

std::set<std::string> undefined_nonterminals(const Grammar& g) {
  std::set<std::string> used;
  for (const auto& alt : g.alts())
    for (const auto& sym : alt.rhs)
      if (sym.kind == SymbolKind::nonterminal) used.insert(sym.text);
  for (const auto& alt : g.alts()) used.erase(alt.lhs);
  return used;
}

Grammar rules_for(const Grammar& g, const std::set<std::string>& names) {
  std::vector<std::string> missing;
  for (const auto& name : names)
    if (!g.defines(name)) missing.push_back(name);
  if (!missing.empty()) throw UnknownRuleError(std::move(missing));

  std::vector<RuleAlt> alts;
  std::map<std::string, std::string> provenance;
  for (const auto& alt : g.alts())
    if (names.count(alt.lhs)) alts.push_back(alt);
  for (const auto& name : names)
    if (auto p = g.provenance().find(name); p != g.provenance().end()) provenance.insert(*p);
  return Grammar(names.empty() ? std::string() : *names.begin(), std::move(alts), true,
                 std::move(provenance));
}

SubsetValidation validate_subset(const Grammar& candidate, const Grammar& reference) {
  std::set<RuleAlt> known(reference.alts().begin(), reference.alts().end());
  std::set<std::string> reference_lhs;
  for (const auto& alt : reference.alts()) reference_lhs.insert(alt.lhs);

  std::vector<RuleAlt> valid;
  std::vector<RejectedAlt> rejected;
  for (const auto& alt : candidate.alts()) {
    if (known.count(alt)) valid.push_back(alt);
    else if (!reference_lhs.count(alt.lhs)) rejected.push_back({alt, RejectReason::lhs_unknown});
    else rejected.push_back({alt, RejectReason::alt_not_in_reference});
  }

  auto defined = [&](const std::string& name) {
    return std::any_of(valid.begin(), valid.end(), [&](const RuleAlt& a) { return a.lhs == name; });
  };
  std::string start = candidate.start();
  if (!defined(start)) {
    if (defined(reference.start())) start = reference.start();
    else if (!valid.empty()) start = valid.front().lhs;
  }

  std::map<std::string, std::string> provenance;
  for (const auto& alt : valid)
    if (auto p = reference.provenance().find(alt.lhs); p != reference.provenance().end())
      provenance.insert(*p);
  return {Grammar(std::move(start), std::move(valid), true, std::move(provenance)), std::move(rejected)};
}

Grammar merge(const Grammar& base, const Grammar& addition) {
  std::vector<RuleAlt> alts = base.alts();
  alts.insert(alts.end(), addition.alts().begin(), addition.alts().end());
  auto provenance = base.provenance();
  provenance.insert(addition.provenance().begin(), addition.provenance().end());
  return Grammar(base.empty() ? addition.start() : base.start(), std::move(alts),
                 base.partial() || addition.partial(), std::move(provenance));
}

std::string_view to_string(RejectReason reason) noexcept {
  switch (reason) {
    case RejectReason::lhs_unknown: return "lhs-unknown";
    case RejectReason::alt_not_in_reference: return "alt-not-in-reference";
  }
  return "unknown";
}

}  // namespace gdlgen
