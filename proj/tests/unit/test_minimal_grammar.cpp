#include <doctest.h>

#include <random>

#include "gdlgen/earley.hpp"
#include "gdlgen/error.hpp"
#include "gdlgen/minimal_grammar.hpp"
#include "oracle.hpp"

using namespace gdlgen;

TEST_CASE("unused alternative is dropped") {
  auto g = parse_grammar("game: \"(\" \"game\" name \")\"\nname: STRING | NUMBER");
  auto ts = tokenize("(game \"X\")");
  auto gy = extract_minimal(g, ts);
  CHECK(gy.alts_for("name").size() == 1);
  CHECK(gy.contains({"name", {Symbol::token_class("STRING")}}));
  CHECK(gy.start() == "game");
  CHECK_FALSE(gy.partial());

  // Removal oracle: each alternative of gy is needed.
  for (std::size_t i = 0; i < gy.size(); ++i) CHECK_FALSE(recognize_partial(gy.without(i), ts));
}

TEST_CASE("straight-line grammar is already minimal") {
  auto g = parse_grammar("s: \"(\" t \")\"\nt: \"x\" u\nu: NUMBER");
  auto ts = tokenize("( x 3 )");
  CHECK(same_alt_set(extract_minimal(g, ts), g));
  CHECK(check_minimality(g, g, ts).empty());
}

TEST_CASE("check_minimality") {
  auto g = parse_grammar("s: \"a\" | \"b\"");
  auto removable = check_minimality(g, g, tokenize("a"));
  CHECK(removable == std::vector<RuleAlt>{g.alts()[1]});

  auto extracted = extract_minimal(g, tokenize("a"));
  CHECK(check_minimality(extracted, g, tokenize("a")).empty());

  CHECK_THROWS_AS(check_minimality(g.subset({1}), g, tokenize("a")), NotASentenceError);
  auto foreign = parse_grammar("s: \"c\"");
  CHECK_THROWS_AS(check_minimality(foreign, g, tokenize("c")), NotASubsetError);
  CHECK_THROWS_AS(extract_minimal(g, tokenize("c")), NotASentenceError);
}

TEST_CASE("ambiguity can make the derivation non-minimal") {
  // The canonical derivation uses s -> a (first alt), but s -> "x" alone suffices
  // only if reduction finds it; both {s->a, a->"x"} and {s->"x"} are minimal.
  auto g = parse_grammar("s: a | \"x\"\na: \"x\"");
  auto gy = extract_minimal(g, tokenize("x"));
  CHECK(check_minimality(gy, g, tokenize("x")).empty());
}

TEST_CASE("provenance survives for used synthesized names") {
  auto g = parse_grammar(R"g(s: "(" "a"? "b"* ")")g");
  auto gy = extract_minimal(g, tokenize("( a )"));
  CHECK(gy.provenance().count("s__opt") == 1);
  CHECK(gy.provenance().count("s__star") == 1);
  auto gy2 = extract_minimal(g, tokenize("( b )"));
  CHECK(gy2.provenance().count("s__opt") == 1);
}

TEST_CASE("property: extraction is a closed minimal subset that derives the input") {
  std::mt19937_64 rng(211);
  for (int i = 0; i < 150; ++i) {
    auto g = oracle::random_grammar(rng, 4, 3, 3, {"a", "b"});
    for (const auto& s : oracle::enumerate_language(g, 4)) {
      auto ts = oracle::stream_of(s);
      auto gy = extract_minimal(g, ts);
      INFO(render_grammar(g), " input=", s);
      CHECK(undefined_nonterminals(gy).empty());
      CHECK(validate_subset(gy, g).rejected.empty());
      CHECK(oracle::derives(gy, ts));
      for (std::size_t k = 0; k < gy.size(); ++k)
        CHECK_FALSE(oracle::derives(Grammar(gy.start(), gy.without(k).alts(), true), ts));
      // Idempotence.
      CHECK(same_alt_set(extract_minimal(gy, ts), gy));
    }
  }
}
