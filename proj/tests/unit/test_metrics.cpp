#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "gdlgen/error.hpp"
#include "gdlgen/metrics.hpp"

using namespace gdlgen;

namespace {

// Exhaustive LCS over subsequences of the shorter side; independent of the
// DP in the library. Only for short inputs.
std::size_t brute_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& s = a.size() <= b.size() ? a : b;
  const auto& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (mask & (1u << i)) sub.push_back(s[i]);
    if (sub.size() <= best) continue;
    std::size_t j = 0;
    for (const auto& tok : t)
      if (j < sub.size() && tok == sub[j]) ++j;
    if (j == sub.size()) best = sub.size();
  }
  return best;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : " ") + s;
  return out;
}

ConceptVector vec(std::vector<double> values) {
  ConceptVector v;
  for (std::size_t i = 0; i < values.size(); ++i) v.labels.push_back("c" + std::to_string(i));
  v.values = std::move(values);
  return v;
}

InstanceMetrics row(bool compilable, std::optional<bool> functional, double rouge, std::optional<double> ncd = {}) {
  InstanceMetrics m;
  m.id = "x";
  m.compilable = compilable;
  m.functional = functional;
  m.rouge_l = rouge;
  m.ncd = ncd;
  return m;
}

}  // namespace

TEST_CASE("rouge-l examples") {
  CHECK(rouge_l_f1("a b c", "a c") == 80.0);
  CHECK(rouge_l_f1("(game \"X\" (players 2))", "(game \"X\" (players 2))") == 100.0);
  CHECK(rouge_l_f1("a b", "c d") == 0.0);
  CHECK(rouge_l_f1("", "") == 100.0);
  CHECK(rouge_l_f1("a", "") == 0.0);
  CHECK(rouge_l_f1("", "a") == 0.0);
}

TEST_CASE("rouge tokens follow the lexer with a fallback split") {
  CHECK(rouge_tokens("(game \"A B\")") == std::vector<std::string>{"(", "game", "\"A B\"", ")"});
  CHECK(rouge_tokens("(game \"open") == std::vector<std::string>{"(", "game", "\"open"});
}

TEST_CASE("concept distance examples") {
  CHECK(concept_distance(vec({1, 2, 3}), vec({1, 2, 3})) == doctest::Approx(0.0));
  CHECK(concept_distance(vec({1, 0}), vec({0, 1})) == 1.0);
  CHECK(std::abs(concept_distance(vec({1, 0}), vec({1, 1})) - (1.0 - 1.0 / std::sqrt(2.0))) < 1e-9);
  CHECK_THROWS_AS(concept_distance(vec({0, 0}), vec({1, 1})), Error);
  auto other = vec({1, 1});
  other.labels[1] = "different";
  CHECK_THROWS_AS(concept_distance(vec({1, 1}), other), Error);
  CHECK(concept_distance(vec({1, 0}), vec({-1, 0})) == 1.0);  // clamped
}

TEST_CASE("concept vector files") {
  auto v = ConceptVector::from_file(std::string(GDLGEN_DATA_DIR) + "/concepts/hex.json");
  CHECK(v.labels.size() == v.values.size());
  CHECK(ConceptVector::from_json_text(R"({"labels": ["a"], "values": [1]})").values == std::vector<double>{1});
  CHECK_THROWS_AS(ConceptVector::from_json_text(R"({"labels": ["a", "a"], "values": [1, 2]})"), DatasetError);
  CHECK_THROWS_AS(ConceptVector::from_json_text(R"({"labels": ["a"], "values": [1, 2]})"), DatasetError);
  CHECK_THROWS_AS(ConceptVector::from_json_text(R"({"labels": ["a"]})"), DatasetError);
  CHECK_THROWS_AS(ConceptVector::from_file("/nonexistent.json"), DatasetError);
}

TEST_CASE("compilability by parse proxy") {
  auto g = parse_grammar(R"g(game: "(" "game" cond ")"
cond: "(" "=" NUMBER NUMBER ")")g");
  auto ok = compilability(g, "(game (= 1 2))");
  CHECK(ok.pass);
  CHECK(ok.mode == "proxy");
  CHECK_FALSE(compilability(g, "(game (== 1 2))").pass);
  CHECK_FALSE(compilability(g, "").pass);
  CHECK_FALSE(compilability(g, "(game \"open").pass);
}

TEST_CASE("external commands") {
  auto g = parse_grammar(R"g(s: "a")g");
  CHECK(compilability(g, "zzz", std::string("grep -q zzz")).pass);
  auto fail = compilability(g, "a", std::string("grep -q zzz"));
  CHECK_FALSE(fail.pass);
  CHECK(fail.mode == "external");
  auto weird = run_hook("exit 3", "a", std::chrono::seconds(5));
  CHECK_FALSE(weird.pass);
  CHECK_FALSE(weird.note.empty());
  auto slow = run_hook("sleep 5", "a", std::chrono::milliseconds(200));
  CHECK_FALSE(slow.pass);
  CHECK(slow.note.find("timed out") != std::string::npos);
  // Large input to a command that ignores stdin must not block.
  auto r = run_command("true", std::string(1 << 20, 'x'), std::chrono::seconds(5));
  REQUIRE(r.exit_code);
  CHECK(*r.exit_code == 0);
}

TEST_CASE("aggregation examples") {
  auto single = mean_stderr({27});
  CHECK(single.mean == 27.0);
  CHECK(single.stderr_ == 0.0);
  auto flat = mean_stderr({27, 27, 27});
  CHECK(flat.mean == 27.0);
  CHECK(flat.stderr_ == 0.0);
  auto spread = mean_stderr({62, 64, 66});
  CHECK(spread.mean == doctest::Approx(64.0).epsilon(1e-12));
  CHECK(std::abs(spread.stderr_ - 2.0 / std::sqrt(3.0)) < 1e-6);
  CHECK_THROWS_AS(aggregate({}), Error);
}

TEST_CASE("per-seed summaries and NCD rules") {
  // Non-functional instances count as NCD 1.0.
  auto s = summarize_seed({row(true, true, 80, 0.2), row(true, false, 60), row(false, false, 0)});
  CHECK(s.compilability == doctest::Approx(200.0 / 3));
  REQUIRE(s.functionality);
  CHECK(*s.functionality == doctest::Approx(100.0 / 3));
  REQUIRE(s.ncd);
  CHECK(*s.ncd == doctest::Approx((0.2 + 1.0 + 1.0) / 3));
  CHECK(s.rouge_l == doctest::Approx(140.0 / 3));

  auto unknown = summarize_seed({row(true, std::nullopt, 50)});
  CHECK_FALSE(unknown.functionality);
  CHECK_FALSE(unknown.ncd);

  auto report = aggregate({{row(true, std::nullopt, 50)}});
  CHECK_FALSE(report.ncd);
  CHECK_FALSE(report.notes.empty());
}

TEST_CASE("functional implies compilable is enforced") {
  CHECK_THROWS_AS(row(false, true, 0).validate(), Error);
  CHECK_THROWS_AS(summarize_seed({row(false, true, 0)}), Error);
  CHECK_THROWS_AS(aggregate({{row(true, true, 0)}, {row(false, true, 0)}}), Error);
  CHECK_THROWS_AS(row(true, std::nullopt, 0, 0.5).validate(), Error);
  CHECK_NOTHROW(row(true, true, 0, 0.5).validate());
  CHECK_NOTHROW(row(false, false, 0).validate());
}

// ---------------------------------------------------------------------------
// Properties.

TEST_CASE("property: rouge-l against brute-force LCS") {
  std::mt19937_64 rng(41);
  const std::vector<std::string> alphabet{"a", "b", "c", "(", ")"};
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> ref, hyp;
    for (std::size_t k = rng() % 9; k > 0; --k) ref.push_back(alphabet[rng() % alphabet.size()]);
    for (std::size_t k = rng() % 9; k > 0; --k) hyp.push_back(alphabet[rng() % alphabet.size()]);
    double got = rouge_l_f1(join(ref), join(hyp));
    double lcs = static_cast<double>(brute_lcs(ref, hyp));
    double expected;
    if (ref.empty() && hyp.empty()) expected = 100.0;
    else if (ref.empty() || hyp.empty() || lcs == 0) expected = 0.0;
    else {
      double p = lcs / hyp.size(), r = lcs / ref.size();
      expected = 100.0 * 2 * p * r / (p + r);
    }
    INFO(join(ref), " | ", join(hyp));
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got >= 0.0);
    CHECK(got <= 100.0);
    CHECK(got == doctest::Approx(rouge_l_f1(join(hyp), join(ref))).epsilon(1e-12));
    if (!ref.empty()) CHECK(rouge_l_f1(join(ref), join(ref)) == 100.0);
  }
}

TEST_CASE("property: concept distance is symmetric, scale invariant and bounded") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 500; ++i) {
    std::size_t n = 1 + rng() % 6;
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = (rng() % 3 == 0) ? 0.0 : u(rng);
    for (auto& x : b) x = (rng() % 3 == 0) ? 0.0 : u(rng);
    a[0] += 0.5;
    b[n - 1] += 0.5;
    std::vector<double> scaled = a;
    for (auto& x : scaled) x *= 7;
    double d = concept_distance(vec(a), vec(b));
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(d == doctest::Approx(concept_distance(vec(b), vec(a))).epsilon(1e-12));
    CHECK(concept_distance(vec(scaled), vec(b)) == doctest::Approx(d).epsilon(1e-9));
    CHECK(concept_distance(vec(a), vec(a)) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("property: aggregate is permutation invariant") {
  std::mt19937_64 rng(47);
  for (int i = 0; i < 100; ++i) {
    std::vector<std::vector<InstanceMetrics>> seeds(1 + rng() % 4);
    for (auto& rows : seeds)
      for (std::size_t k = 1 + rng() % 5; k > 0; --k) {
        bool comp = rng() % 2;
        bool func = comp && rng() % 2;
        rows.push_back(row(comp, func, static_cast<double>(rng() % 101),
                           func ? std::optional<double>((rng() % 100) / 100.0) : std::nullopt));
      }
    auto a = aggregate(seeds);
    auto shuffled = seeds;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto& rows : shuffled) std::shuffle(rows.begin(), rows.end(), rng);
    auto b = aggregate(shuffled);
    CHECK(a.compilability.mean == doctest::Approx(b.compilability.mean));
    CHECK(a.compilability.stderr_ == doctest::Approx(b.compilability.stderr_));
    CHECK(a.rouge_l.mean == doctest::Approx(b.rouge_l.mean));
    REQUIRE(a.ncd);
    REQUIRE(b.ncd);
    CHECK(a.ncd->mean == doctest::Approx(b.ncd->mean));
    CHECK(a.functionality->stderr_ == doctest::Approx(b.functionality->stderr_));
  }
}
