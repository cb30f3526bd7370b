#include <doctest.h>

#include <random>
#include <set>

#include "gdlgen/earley.hpp"
#include "gdlgen/error.hpp"
#include "gdlgen/random_expand.hpp"
#include "oracle.hpp"

using namespace gdlgen;

TEST_CASE("no choice") {
  auto g = parse_grammar("s: \"a\"");
  for (std::uint64_t seed = 0; seed < 10; ++seed) CHECK(random_expand(g, seed, 5) == "a");
}

TEST_CASE("depth limit bounds recursion") {
  auto g = parse_grammar("s: \"a\" s | \"b\"");
  const std::set<std::string> reachable = {"b", "a b", "a a b", "a a a b"};
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto out = random_expand(g, seed, 3);
    CHECK(reachable.count(out) == 1);
    CHECK(recognize(g, tokenize(out)));
    seen.insert(out);
  }
  CHECK(seen == reachable);
}

TEST_CASE("seeded determinism") {
  auto g = parse_grammar("s: x x x\nx: \"a\" | \"b\" | \"c\" | s");
  CHECK(random_expand(g, 42, 4) == random_expand(g, 42, 4));
}

TEST_CASE("placeholders for token classes") {
  auto g = parse_grammar("s: \"(\" STRING NUMBER IDENTIFIER NAMED_PARAM \")\"");
  auto out = random_expand(g, 1, 3);
  CHECK(out == "( \"s\" 1 id p: )");
  CHECK(recognize(g, tokenize(out)));
}

TEST_CASE("shallowest alternative wins past the limit, not the fewest nonterminals") {
  // `s -> t` has one nonterminal but t only terminates through u; the
  // two-nonterminal alternative reaches terminals sooner.
  auto g = parse_grammar("s: t | v v\nt: u\nu: w\nw: \"x\"\nv: \"y\"");
  CHECK(random_expand(g, 0, 0) == "y y");
}

TEST_CASE("unproductive alternatives are never taken") {
  auto g = parse_grammar("s: \"a\" | loop\nloop: loop \"b\"");
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(random_expand(g, seed, 5) == "a");
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(random_expand(parse_grammar("s: s \"a\""), 0, 3), EmptyLanguageError);
  CHECK_THROWS_AS(random_expand(parse_grammar("s: t", true), 0, 3), UndefinedNonterminalError);
}

TEST_CASE("property: output is a sentence of the grammar") {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    auto g = oracle::random_grammar(rng, 5, 3, 3, {"a", "b", "c"});
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::string out;
      try {
        out = random_expand(g, seed, 4);
      } catch (const EmptyLanguageError&) {
        CHECK(oracle::enumerate_language(g, 6).empty());
        break;
      }
      INFO(render_grammar(g), " out=", out);
      CHECK(oracle::derives(g, tokenize(out)));
      ++checked;
    }
  }
  CHECK(checked > 500);
}
