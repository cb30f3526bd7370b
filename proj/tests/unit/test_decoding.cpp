#include <doctest.h>

#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "gdlgen/decoding.hpp"
#include "gdlgen/earley.hpp"
#include "gdlgen/error.hpp"
#include "gdlgen/minimal_grammar.hpp"
#include "gdlgen/random_expand.hpp"
#include "oracle.hpp"

using namespace gdlgen;

namespace {

// Backend driven by a callback; counts calls per kind.
class FnBackend final : public Backend {
 public:
  using Fn = std::function<std::string(const GenerationRequest&)>;
  explicit FnBackend(Fn fn) : fn_(std::move(fn)) {}
  GenerationResult generate(const GenerationRequest& req, std::string_view) override {
    ++calls[req.kind()];
    ++total;
    return {fn_(req), 0.0, 1};
  }
  std::unique_ptr<Backend> session(std::string_view, std::uint64_t) const override {
    return std::make_unique<FnBackend>(fn_);
  }
  std::string name() const override { return "fn"; }

  std::map<RequestKind, std::size_t> calls;
  std::size_t total = 0;

 private:
  Fn fn_;
};

struct Fixture {
  DecodingConfig config;
  const PromptTemplates& templates = PromptTemplates::builtin();
  DecodingContext ctx(Backend& b) const { return {b, templates, config}; }
};

std::string fenced(const std::string& s) { return "```\n" + s + "\n```"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Grammar& full_gdl() {
  static const Grammar g = parse_grammar(read_file(std::string(GDLGEN_DATA_DIR) + "/grammar/gdl.bnf"));
  return g;
}

const char* kFullSmall = R"g(
game: "(" "game" players ")" | "(" "game" STRING players ")"
players: "(" "players" NUMBER ")" | "(" "players" ")"
board: "(" "board" NUMBER ")"
)g";

}  // namespace

TEST_CASE("config defaults and validation") {
  DecodingConfig c;
  CHECK(c.rule_iter_limit == 20);
  CHECK(c.desc_iter_limit == 10);
  CHECK(c.demo_count == 3);
  CHECK(c.temperature == 0.0);
  c.rule_iter_limit = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("rule decoding: valid closed grammar converges at iteration 0") {
  auto g = parse_grammar(kFullSmall);
  FnBackend b([](const GenerationRequest&) {
    return fenced("game: \"(\" \"game\" players \")\"\nplayers: \"(\" \"players\" \")\"");
  });
  Fixture f;
  auto r = run_rule_decoding(f.ctx(b), g, {}, "q");
  CHECK(r.trace.termination == Termination::converged);
  REQUIRE(r.trace.iterations.size() == 1);
  CHECK(r.grammar.size() == 2);
  CHECK_FALSE(r.grammar.partial());
  CHECK(b.total == 1);
}

TEST_CASE("rule decoding: missing rule repaired at iteration 1") {
  auto g = parse_grammar(kFullSmall);
  FnBackend b([](const GenerationRequest& req) -> std::string {
    if (req.kind() == RequestKind::generate_grammar) return fenced("game: \"(\" \"game\" players \")\"");
    const auto& ctx = std::get<CompleteRulesContext>(req.context);
    CHECK(ctx.candidates.size() == 2);
    CHECK(ctx.valid.size() == 1);
    return fenced("players: \"(\" \"players\" NUMBER \")\"");
  });
  Fixture f;
  auto r = run_rule_decoding(f.ctx(b), g, {}, "q");
  CHECK(r.trace.termination == Termination::converged);
  REQUIRE(r.trace.iterations.size() == 2);
  CHECK(r.trace.iterations[0].undefined == std::vector<std::string>{"players"});
  CHECK(r.trace.iterations[1].undefined.empty());
  CHECK(r.grammar.size() == 2);
  CHECK(r.grammar.contains({"players", {Symbol::literal("("), Symbol::literal("players"),
                                        Symbol::token_class("NUMBER"), Symbol::literal(")")}}));
  CHECK(r.calls.size() == 2);
  CHECK(r.calls[1].kind == RequestKind::complete_rules);
}

TEST_CASE("rule decoding: hallucinated names and invalid alts are rejected") {
  auto g = parse_grammar(kFullSmall);
  FnBackend b([](const GenerationRequest& req) -> std::string {
    if (req.kind() == RequestKind::generate_grammar)
      return fenced(R"g(game: "(" "game" players ")"
game: "(" "game" wizards ")"
players: "(" "players" NUMBER NUMBER ")"
!!)g");
    return fenced(R"g(players: "(" "players" ")")g");
  });
  Fixture f;
  auto r = run_rule_decoding(f.ctx(b), g, {}, "q");
  CHECK(r.trace.termination == Termination::converged);
  // An alternative using an unknown name is never in the full grammar, so it
  // is rejected before pruning sees it.
  CHECK(r.trace.iterations[0].pruned.empty());
  CHECK(r.trace.iterations[0].rejected.size() == 2);
  CHECK(r.trace.notes.size() == 1);
  CHECK(r.grammar.size() == 2);
  CHECK(validate_subset(r.grammar, g).rejected.empty());
}

TEST_CASE("rule decoding: garbage backend terminates closed") {
  Fixture f;
  for (std::size_t limit : {1, 3, 20}) {
    f.config.rule_iter_limit = limit;
    FnBackend b([](const GenerationRequest&) { return std::string("I cannot help with that."); });
    auto r = run_rule_decoding(f.ctx(b), full_gdl(), {}, "q");
    CHECK_FALSE(r.grammar.partial());
    CHECK(undefined_nonterminals(r.grammar).empty());
    CHECK(r.grammar.defines(full_gdl().start()));
    CHECK(validate_subset(r.grammar, full_gdl()).rejected.empty());
    CHECK(r.trace.iterations.size() - 1 <= std::min(limit, full_gdl().defined_names().size()));
    for (std::size_t i = 0; i < r.trace.iterations.size(); ++i) CHECK(r.trace.iterations[i].iteration == i);
  }
}

TEST_CASE("rule decoding: limit closes from the full grammar") {
  auto g = parse_grammar(kFullSmall);
  Fixture f;
  f.config.rule_iter_limit = 1;
  FnBackend b([](const GenerationRequest& req) -> std::string {
    if (req.kind() == RequestKind::generate_grammar) return "";
    return fenced(R"g(game: "(" "game" players ")")g");
  });
  auto r = run_rule_decoding(f.ctx(b), g, {}, "q");
  CHECK(r.trace.termination == Termination::limit);
  CHECK(r.grammar.size() == 3);
  CHECK_FALSE(r.grammar.partial());
}

TEST_CASE("rule decoding: backend failure keeps a closed grammar") {
  auto g = parse_grammar(kFullSmall);
  Fixture f;
  FnBackend b([](const GenerationRequest& req) -> std::string {
    if (req.kind() == RequestKind::generate_grammar) return fenced(R"g(game: "(" "game" players ")")g");
    throw BackendError("down");
  });
  auto r = run_rule_decoding(f.ctx(b), g, {}, "q");
  CHECK(r.trace.termination == Termination::backend_error);
  CHECK_FALSE(r.grammar.partial());
  CHECK(r.calls.back().error == "down");
}

TEST_CASE("rule decoding: a grammar that derives nothing is made productive") {
  auto g = parse_grammar(R"g(game: "(" "game" cond ")"
cond: "(" "not" cond ")" | "(" "and" cond cond ")" | "(" "full" ")")g");
  FnBackend b([](const GenerationRequest&) {
    return fenced(R"g(game: "(" "game" cond ")"
cond: "(" "not" cond ")")g");
  });
  Fixture f;
  auto r = run_rule_decoding(f.ctx(b), g, {}, "q");
  CHECK(r.trace.termination == Termination::converged);
  CHECK(r.grammar.size() == 3);
  CHECK(r.grammar.contains({"cond", {Symbol::literal("("), Symbol::literal("full"), Symbol::literal(")")}}));
  CHECK(r.trace.notes.size() == 1);
  CHECK_NOTHROW(random_expand(r.grammar, 0, 4));
}

TEST_CASE("description decoding: first output parses") {
  auto gy = parse_grammar(R"g(s: "(" "game" ")")g");
  FnBackend b([](const GenerationRequest&) { return fenced("(game)"); });
  Fixture f;
  auto r = run_description_decoding(f.ctx(b), gy, {}, "q");
  CHECK(r.trace.termination == Termination::converged);
  CHECK(r.trace.iterations.size() == 1);
  CHECK(r.description == "(game)");
}

TEST_CASE("description decoding: ( game game ) is repaired at iteration 1") {
  auto gy = parse_grammar(R"g(s: "(" "game" ")")g");
  FnBackend b([](const GenerationRequest& req) -> std::string {
    switch (req.kind()) {
      case RequestKind::generate_description: return "( game game )";
      case RequestKind::select_terminal: {
        const auto& ctx = std::get<SelectTerminalContext>(req.context);
        CHECK(ctx.prefix == "( game");
        REQUIRE(ctx.candidates.size() == 1);
        CHECK(ctx.candidates[0].text == ")");
        return ")";
      }
      case RequestKind::complete_description: return "";
      default: FAIL("unexpected request"); return "";
    }
  });
  Fixture f;
  auto r = run_description_decoding(f.ctx(b), gy, {}, "q");
  CHECK(r.trace.termination == Termination::converged);
  CHECK(r.description == "( game )");
  REQUIRE(r.trace.iterations.size() == 2);
  CHECK(r.trace.iterations[0].valid_len == 2);
  CHECK(r.trace.iterations[0].chosen == ")");
  CHECK_FALSE(r.trace.iterations[0].fallback);
  CHECK(r.trace.iterations[1].complete);
}

TEST_CASE("description decoding: out-of-set answers fall back to the first candidate") {
  auto gy = parse_grammar(R"g(s: "(" "game" NUMBER ")" | "(" "game" "x" ")")g");
  FnBackend b([](const GenerationRequest& req) -> std::string {
    if (req.kind() == RequestKind::select_terminal) return "banana";
    if (req.kind() == RequestKind::complete_description) return ")";
    return "(game";
  });
  Fixture f;
  auto r = run_description_decoding(f.ctx(b), gy, {}, "q");
  CHECK(r.trace.termination == Termination::converged);
  CHECK(r.trace.iterations[0].fallback);
  CHECK(r.trace.iterations[0].proposed == "banana");
  CHECK(r.trace.iterations[0].chosen == "x");
  CHECK(r.description == "( game x )");
}

TEST_CASE("description decoding: class candidates accept any token of the class") {
  std::vector<TerminalExpectation> c{{TerminalExpectation::Kind::literal, ")"},
                                     {TerminalExpectation::Kind::token_class, "NUMBER"}};
  CHECK(is_candidate(c, ")"));
  CHECK(is_candidate(c, "42"));
  CHECK_FALSE(is_candidate(c, "x"));
  CHECK_FALSE(is_candidate(c, "4 2"));
  CHECK_FALSE(is_candidate(c, ""));
  CHECK(fallback_terminal(c) == ")");
  CHECK(fallback_terminal({{TerminalExpectation::Kind::token_class, "STRING"}}) == "\"s\"");
  CHECK(fallback_terminal({}) == "");
}

TEST_CASE("description decoding: lex errors, echoes and trailing junk") {
  auto gy = parse_grammar(R"g(s: "(" "game" ")")g");
  FnBackend b([](const GenerationRequest& req) -> std::string {
    if (req.kind() == RequestKind::generate_description) return "(game \"unterminated";
    if (req.kind() == RequestKind::select_terminal) return "(";
    return "( game ) )";  // echoes the prefix and adds junk
  });
  Fixture f;
  auto r = run_description_decoding(f.ctx(b), gy, {}, "q");
  CHECK(r.trace.iterations[0].lex_error);
  CHECK(r.trace.iterations[0].valid_len == 0);
  CHECK(r.trace.termination == Termination::converged);
  CHECK(recognize(gy, tokenize(r.description)));
}

TEST_CASE("description decoding: limit and backend failure") {
  auto gy = parse_grammar(R"g(s: "(" "game" s ")" | "(" "game" ")")g");
  Fixture f;
  f.config.desc_iter_limit = 3;
  FnBackend stubborn([](const GenerationRequest& req) -> std::string {
    if (req.kind() == RequestKind::select_terminal) return "(";
    return "( game";
  });
  auto r = run_description_decoding(f.ctx(stubborn), gy, {}, "q");
  CHECK(r.trace.termination == Termination::limit);
  CHECK(r.trace.iterations.size() == 4);

  FnBackend broken([](const GenerationRequest& req) -> std::string {
    if (req.kind() == RequestKind::generate_description) return "(game";
    throw BackendError("gone");
  });
  auto e = run_description_decoding(f.ctx(broken), gy, {}, "q");
  CHECK(e.trace.termination == Termination::backend_error);
  CHECK(e.description == "(game");
}

TEST_CASE("pipelines") {
  auto g = parse_grammar(kFullSmall);
  Fixture f;
  PipelineInstance inst{"i", "q", {{"demo query", parse_grammar(R"g(s: "a")g"), "a"}}};
  auto answer = [](const GenerationRequest& req) -> std::string {
    switch (req.kind()) {
      case RequestKind::generate_grammar: return fenced(R"g(game: "(" "game" players ")"
players: "(" "players" NUMBER ")")g");
      case RequestKind::generate_description: return "(game (players 2))";
      default: return "";
    }
  };

  SUBCASE("gdg makes one grammar-free call") {
    FnBackend b(answer);
    auto r = run_pipeline(Method::gdg, f.ctx(b), g, inst, 0);
    CHECK_FALSE(r.grammar);
    CHECK_FALSE(r.rule_trace);
    CHECK(r.calls.size() == 1);
    CHECK(r.calls[0].kind == RequestKind::generate_description);
    CHECK(r.calls[0].prompt.find("Grammar") == std::string::npos);
    CHECK(r.description == "(game (players 2))");
  }
  SUBCASE("ggdg feeds the decoded grammar into the description stage") {
    FnBackend b(answer);
    auto r = run_pipeline(Method::ggdg, f.ctx(b), g, inst, 0);
    REQUIRE(r.grammar);
    CHECK(r.rule_trace->termination == Termination::converged);
    CHECK(r.description_trace->termination == Termination::converged);
    REQUIRE(r.calls.size() == 2);
    CHECK(r.calls.size() == b.total);
    CHECK(r.calls[1].prompt.find(render_grammar(*r.grammar)) != std::string::npos);
    CHECK(r.calls[1].stage == Stage::description_decoding);
  }
  SUBCASE("random is seeded") {
    auto big = parse_grammar(R"g(game: "(" "game" items ")"
items: item | item items
item: "a" | "b" | NUMBER)g");
    FnBackend b([](const GenerationRequest&) { return std::string("nonsense"); });
    auto r1 = run_pipeline(Method::random, f.ctx(b), big, inst, 5);
    auto r2 = run_pipeline(Method::random, f.ctx(b), big, inst, 5);
    CHECK(r1.description == r2.description);
    CHECK(recognize(*r1.grammar, tokenize(r1.description)));
    bool differs = false;
    for (std::uint64_t s = 6; s < 30 && !differs; ++s)
      differs = run_pipeline(Method::random, f.ctx(b), big, inst, s).description != r1.description;
    CHECK(differs);
  }
  SUBCASE("backend error is attributed") {
    FnBackend b([](const GenerationRequest&) -> std::string { throw BackendError("nope"); });
    auto r = run_pipeline(Method::ggdg, f.ctx(b), g, inst, 0);
    CHECK(r.backend_error);
    CHECK(r.error == "nope");
    CHECK_FALSE(r.description_trace);
  }
}

TEST_CASE("ground-truth replay reproduces the fixture") {
  auto desc = read_file(std::string(GDLGEN_DATA_DIR) + "/games/tic_tac_toe.gdl");
  auto ts = tokenize(desc);
  auto gy = extract_minimal(full_gdl(), ts);
  auto text = render_grammar(gy);
  FnBackend b([&](const GenerationRequest& req) -> std::string {
    if (req.kind() == RequestKind::generate_description) return fenced(desc);
    return fenced(text);
  });
  Fixture f;
  auto r = run_pipeline(Method::ggdg, f.ctx(b), full_gdl(), {"tic_tac_toe", "q", {}}, 0);
  REQUIRE(r.grammar);
  CHECK(same_alt_set(*r.grammar, gy));
  CHECK(tokenize(r.description).size() == ts.size());
  CHECK(detokenize(tokenize(r.description)) == detokenize(ts));
  CHECK(check_minimality(*r.grammar, full_gdl(), tokenize(r.description)).empty());
}

// ---------------------------------------------------------------------------
// Properties over random grammars and adversarial backends.

TEST_CASE("property: rule decoding is closed, valid and makes progress") {
  std::mt19937_64 rng(31);
  Fixture f;
  for (int i = 0; i < 200; ++i) {
    auto g = oracle::random_grammar(rng, 6, 3, 3, {"a", "b"});
    auto alts = g.alts();
    std::uint64_t seed = rng();
    FnBackend b([&, seed](const GenerationRequest& req) mutable -> std::string {
      std::mt19937_64 r(seed++);
      // Random subset of the full grammar plus junk.
      std::vector<RuleAlt> pick;
      for (const auto& a : alts)
        if (r() % 3 == 0) pick.push_back(a);
      std::string out = render_grammar(Grammar(g.start(), pick, true));
      if (r() % 2) out += "Z: \"a\" Y\n";
      if (req.kind() == RequestKind::complete_rules && r() % 4 == 0) return std::string("junk");
      return out;
    });
    auto res = run_rule_decoding(f.ctx(b), g, {}, "q");
    INFO(render_grammar(g));
    CHECK_FALSE(res.grammar.partial());
    CHECK(validate_subset(res.grammar, g).rejected.empty());
    CHECK(res.trace.iterations.size() - 1 <= g.defined_names().size());
    if (!oracle::enumerate_language(g, 8).empty()) CHECK_NOTHROW(random_expand(res.grammar, 0, 4));
    for (std::size_t k = 1; k + 1 < res.trace.iterations.size(); ++k) {
      const auto& a = res.trace.iterations[k];
      const auto& c = res.trace.iterations[k + 1];
      CHECK((c.undefined.size() < a.undefined.size() || c.valid_count > a.valid_count));
    }
    CHECK(res.calls.size() == b.total);
  }
}

TEST_CASE("property: converged descriptions are sentences") {
  std::mt19937_64 rng(37);
  Fixture f;
  int converged = 0;
  for (int i = 0; i < 200; ++i) {
    auto g = oracle::random_grammar(rng, 4, 3, 3, {"a", "b", "c"});
    if (oracle::enumerate_language(g, 8).empty()) continue;
    std::string target;
    try {
      target = random_expand(g, rng(), 3);
    } catch (const EmptyLanguageError&) {
      continue;
    }
    // Corrupt the sentence by dropping or inserting one token.
    auto ts = tokenize(target);
    std::string corrupt;
    std::size_t drop = ts.empty() ? 0 : rng() % ts.size();
    for (std::size_t k = 0; k < ts.size(); ++k)
      if (k != drop) corrupt += ts.tokens[k].text + " ";
    corrupt += "c";
    std::uint64_t seed = rng();
    FnBackend b([&, seed](const GenerationRequest& req) mutable -> std::string {
      std::mt19937_64 r(seed++);
      static const char* pool[] = {"a", "b", "c", "zz", ""};
      if (req.kind() == RequestKind::generate_description) return corrupt;
      return pool[r() % 5];
    });
    auto res = run_description_decoding(f.ctx(b), g, {}, "q");
    INFO(render_grammar(g), " start=", corrupt, " final=", res.description);
    CHECK(res.trace.iterations.size() <= f.config.desc_iter_limit + 1);
    CHECK(res.calls.size() == b.total);
    if (res.trace.termination == Termination::converged) {
      ++converged;
      CHECK(recognize(g, tokenize(res.description)));
    }
  }
  CHECK(converged > 50);
}
