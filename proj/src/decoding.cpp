#include "gdlgen/decoding.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "gdlgen/earley.hpp"
#include "gdlgen/error.hpp"
#include "gdlgen/lexer.hpp"
#include "gdlgen/random_expand.hpp"

namespace gdlgen {

void DecodingConfig::validate() const {
  if (rule_iter_limit == 0) throw ConfigError("rule_iter_limit must be at least 1");
  if (desc_iter_limit == 0) throw ConfigError("desc_iter_limit must be at least 1");
  if (max_desc_tokens == 0) throw ConfigError("max_desc_tokens must be at least 1");
  if (random_depth_limit == 0) throw ConfigError("random_depth_limit must be at least 1");
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::limit: return "limit";
    case Termination::backend_error: return "backend-error";
  }
  return "?";
}

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::rule_decoding: return "rule-decoding";
    case Stage::description_decoding: return "description-decoding";
    case Stage::random_expansion: return "random-expansion";
  }
  return "?";
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::gdg: return "gdg";
    case Method::ggdg: return "ggdg";
    case Method::random: return "random";
  }
  return "?";
}

std::optional<Method> method_from_string(std::string_view name) noexcept {
  for (auto m : {Method::gdg, Method::ggdg, Method::random})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

std::string fallback_terminal(const std::vector<TerminalExpectation>& candidates) {
  if (candidates.empty()) return "";
  const auto& first = candidates.front();
  return first.kind == TerminalExpectation::Kind::literal ? first.text : placeholder_for(first.text);
}

bool is_candidate(const std::vector<TerminalExpectation>& candidates, std::string_view answer) {
  if (answer.empty()) return false;
  std::optional<Token> token;
  try {
    auto ts = tokenize(answer);
    if (ts.size() == 1) token = ts.tokens[0];
  } catch (const LexError&) {
  }
  return std::any_of(candidates.begin(), candidates.end(), [&](const TerminalExpectation& c) {
    if (c.kind == TerminalExpectation::Kind::literal) return c.text == answer;
    return token && matches(c, *token);
  });
}

namespace {

// Sends one request, records it, and returns the extracted payload; nullopt
// on a hard backend failure.
std::optional<std::string> exchange(const DecodingContext& ctx, std::vector<BackendCall>& calls, Stage stage,
                                    std::size_t iteration, const GenerationRequest& request,
                                    double* latency = nullptr) {
  auto built = build_prompt(request, ctx.templates, ctx.config.prompt_budget);
  BackendCall call{stage, request.kind(), iteration, built.text, {}, {}, 0.0, built.demos_dropped, {}};
  try {
    auto result = ctx.backend.generate(request, built.text);
    call.response = result.text;
    call.payload = extract_payload(request.kind(), result.text);
    call.latency_ms = result.latency_ms;
  } catch (const BackendError& e) {
    call.error = e.what();
  }
  if (latency) *latency += call.latency_ms;
  calls.push_back(call);
  if (!call.error.empty()) return std::nullopt;
  return call.payload;
}

// Pulls full-grammar definitions for every undefined name until closed.
Grammar close_over(Grammar g, const Grammar& g_full) {
  for (;;) {
    auto undefined = undefined_nonterminals(g);
    if (!g.defines(g_full.start())) undefined.insert(g_full.start());
    std::set<std::string> known;
    for (const auto& name : undefined)
      if (g_full.defines(name)) known.insert(name);
    if (known.empty()) return g;
    g = merge(g, rules_for(g_full, known));
  }
}

// Shortest derivation height of every productive name; unproductive names are
// absent.
std::map<std::string, std::size_t> derivation_heights(const Grammar& g) {
  std::map<std::string, std::size_t> height;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& alt : g.alts()) {
      std::size_t h = 1;
      bool ok = true;
      for (const auto& sym : alt.rhs) {
        if (sym.kind != SymbolKind::nonterminal) continue;
        auto it = height.find(sym.text);
        if (it == height.end()) {
          ok = false;
          break;
        }
        h = std::max(h, it->second + 1);
      }
      if (!ok) continue;
      auto it = height.find(alt.lhs);
      if (it == height.end() || h < it->second) {
        height[alt.lhs] = h;
        changed = true;
      }
    }
  }
  return height;
}

// A closed grammar whose start derives nothing gets, for every unproductive
// name, its shallowest alternative from the full grammar. Those alternatives
// only use names of smaller height, so a few rounds make the start productive.
Grammar make_productive(Grammar g, const Grammar& g_full, std::vector<std::string>& notes) {
  const auto full_heights = derivation_heights(g_full);
  std::size_t added = 0;
  while (!derivation_heights(g).count(g_full.start()) && full_heights.count(g_full.start())) {
    auto heights = derivation_heights(g);
    std::vector<RuleAlt> extra;
    for (const auto& name : g.defined_names()) {
      if (heights.count(name) || !full_heights.count(name)) continue;
      const RuleAlt* best = nullptr;
      std::size_t best_h = 0;
      for (auto index : g_full.alts_for(name)) {
        const auto& alt = g_full.alts()[index];
        std::size_t h = 1;
        bool ok = true;
        for (const auto& sym : alt.rhs) {
          if (sym.kind != SymbolKind::nonterminal) continue;
          auto it = full_heights.find(sym.text);
          if (it == full_heights.end()) {
            ok = false;
            break;
          }
          h = std::max(h, it->second + 1);
        }
        if (ok && (!best || h < best_h)) {
          best = &alt;
          best_h = h;
        }
      }
      if (best && !g.contains(*best)) extra.push_back(*best);
    }
    if (extra.empty()) break;
    added += extra.size();
    g = close_over(merge(g, Grammar(g_full.start(), extra, true)), g_full);
  }
  if (added > 0)
    notes.push_back(fmt::format("grammar derived no sentence; added {} shallowest full-grammar alternative(s)", added));
  return g;
}

Grammar finalize(const Grammar& g, const Grammar& g_full) {
  std::map<std::string, std::string> provenance;
  for (const auto& [name, text] : g_full.provenance())
    if (g.defines(name)) provenance.emplace(name, text);
  bool closed = undefined_nonterminals(g).empty() && g.defines(g_full.start());
  return Grammar(g_full.start(), g.alts(), !closed, std::move(provenance));
}

void add_dropped_notes(std::vector<std::string>& notes, std::size_t iteration, const LenientParse& parsed) {
  for (const auto& d : parsed.dropped) notes.push_back(fmt::format("iteration {}: dropped {}", iteration, d));
}

// Removes a leading copy of `prefix` that the model echoed back.
std::string strip_echo(const std::string& prefix, const std::string& completion) {
  try {
    auto p = tokenize(prefix);
    auto c = tokenize(completion);
    if (!p.empty() && c.size() >= p.size() &&
        std::equal(p.tokens.begin(), p.tokens.end(), c.tokens.begin(),
                   [](const Token& a, const Token& b) { return a.text == b.text; })) {
      if (c.size() == p.size()) return "";
      return completion.substr(c.tokens[p.size()].span.begin);
    }
  } catch (const LexError&) {
  }
  return completion;
}

}  // namespace

RuleDecodingResult run_rule_decoding(const DecodingContext& ctx, const Grammar& g_full,
                                     const std::vector<Demonstration>& demos, const std::string& query) {
  ctx.config.validate();
  RuleDecodingResult out;
  auto& trace = out.trace;

  GenerationRequest first{demos, query, GenerateGrammarContext{}, true};
  double latency = 0.0;
  auto payload = exchange(ctx, out.calls, Stage::rule_decoding, 0, first, &latency);
  if (!payload) {
    trace.termination = Termination::backend_error;
    trace.iterations.push_back({0, 0, 0, {}, {}, {}, false, latency});
    auto closed = close_over(Grammar(g_full.start(), {}, true), g_full);
    out.grammar = finalize(make_productive(closed, g_full, trace.notes), g_full);
    return out;
  }
  auto parsed = parse_grammar_lenient(*payload);
  add_dropped_notes(trace.notes, 0, parsed);
  Grammar current = parsed.grammar;

  for (std::size_t it = 0;; ++it) {
    RuleIteration rec;
    rec.iteration = it;
    rec.latency_ms = latency;
    latency = 0.0;
    rec.alt_count = current.size();
    auto checked = validate_subset(current, g_full);
    rec.valid_count = checked.valid.size();
    rec.rejected = checked.rejected;
    Grammar valid(g_full.start(), checked.valid.alts(), true);

    // Names the full grammar cannot define are dropped with every alternative
    // that uses them.
    std::set<std::string> pruned;
    for (bool again = true; again;) {
      again = false;
      std::set<std::string> bad;
      for (const auto& name : undefined_nonterminals(valid))
        if (!g_full.defines(name)) bad.insert(name);
      if (bad.empty()) break;
      pruned.insert(bad.begin(), bad.end());
      std::vector<std::size_t> keep;
      for (std::size_t i = 0; i < valid.size(); ++i) {
        const auto& rhs = valid.alts()[i].rhs;
        bool uses = std::any_of(rhs.begin(), rhs.end(), [&](const Symbol& s) {
          return s.kind == SymbolKind::nonterminal && bad.count(s.text);
        });
        if (!uses) keep.push_back(i);
      }
      valid = valid.subset(keep);
      again = true;
    }
    rec.pruned.assign(pruned.begin(), pruned.end());

    auto undefined = undefined_nonterminals(valid);
    if (!valid.defines(g_full.start())) undefined.insert(g_full.start());
    rec.undefined.assign(undefined.begin(), undefined.end());

    if (undefined.empty()) {
      trace.iterations.push_back(std::move(rec));
      trace.termination = Termination::converged;
      out.grammar = finalize(make_productive(valid, g_full, trace.notes), g_full);
      return out;
    }
    if (it >= ctx.config.rule_iter_limit) {
      trace.iterations.push_back(std::move(rec));
      trace.termination = Termination::limit;
      trace.notes.push_back(fmt::format("limit reached; closed {} undefined name(s) from the full grammar",
                                        undefined.size()));
      out.grammar = finalize(make_productive(close_over(valid, g_full), g_full, trace.notes), g_full);
      return out;
    }

    auto candidates = rules_for(g_full, undefined);
    GenerationRequest repair{demos, query, CompleteRulesContext{valid, candidates}, true};
    auto answer = exchange(ctx, out.calls, Stage::rule_decoding, it + 1, repair, &latency);
    if (!answer) {
      trace.iterations.push_back(std::move(rec));
      trace.termination = Termination::backend_error;
      out.grammar = finalize(make_productive(close_over(valid, g_full), g_full, trace.notes), g_full);
      return out;
    }
    auto completion_parse = parse_grammar_lenient(*answer);
    add_dropped_notes(trace.notes, it + 1, completion_parse);
    Grammar completion = validate_subset(completion_parse.grammar, candidates).valid;
    if (completion.empty()) {
      completion = candidates;
      rec.fallback = true;
    }
    current = merge(valid, completion);
    trace.iterations.push_back(std::move(rec));
  }
}

DescriptionDecodingResult run_description_decoding(const DecodingContext& ctx, const Grammar& gy,
                                                   const std::vector<Demonstration>& demos,
                                                   const std::string& query) {
  ctx.config.validate();
  DescriptionDecodingResult out;
  auto& trace = out.trace;

  GenerationRequest first{demos, query, GenerateDescriptionContext{gy}, true};
  double latency = 0.0;
  auto initial = exchange(ctx, out.calls, Stage::description_decoding, 0, first, &latency);
  if (!initial) {
    trace.termination = Termination::backend_error;
    DescriptionIteration rec;
    rec.latency_ms = latency;
    trace.iterations.push_back(rec);
    return out;
  }
  std::string y = *initial;

  for (std::size_t it = 0;; ++it) {
    DescriptionIteration rec;
    rec.iteration = it;
    rec.latency_ms = latency;
    latency = 0.0;

    TokenStream ts;
    try {
      ts = tokenize(y);
      rec.length = ts.size();
    } catch (const LexError& e) {
      rec.lex_error = true;
      trace.notes.push_back(fmt::format("iteration {}: lex error: {}", it, e.what()));
    }
    auto pa = parse_prefix(gy, rec.lex_error ? TokenStream{} : ts);
    if (rec.lex_error) pa.status = PrefixStatus::prefix;
    rec.valid_len = pa.valid_len;
    rec.candidate_count = pa.candidates.size();
    rec.complete = pa.status == PrefixStatus::complete;

    if (rec.complete) {
      trace.iterations.push_back(std::move(rec));
      trace.termination = Termination::converged;
      out.description = y;
      return out;
    }
    if (it >= ctx.config.desc_iter_limit) {
      trace.iterations.push_back(std::move(rec));
      trace.termination = Termination::limit;
      out.description = y;
      return out;
    }

    std::string head = detokenize(ts, pa.valid_len);
    if (pa.candidates.empty()) {
      // Nothing can follow the valid prefix. Either it is already a sentence
      // with trailing junk, or the grammar derives nothing.
      if (recognize(gy, tokenize(head))) {
        trace.notes.push_back(fmt::format("iteration {}: truncated trailing tokens after a complete sentence", it));
        y = head;
        trace.iterations.push_back(std::move(rec));
        continue;
      }
      trace.notes.push_back(fmt::format("iteration {}: grammar admits no continuation", it));
      trace.iterations.push_back(std::move(rec));
      trace.termination = Termination::limit;
      out.description = y;
      return out;
    }

    GenerationRequest select{demos, query, SelectTerminalContext{gy, head, pa.candidates}, true};
    auto omega = exchange(ctx, out.calls, Stage::description_decoding, it + 1, select, &latency);
    if (!omega) {
      trace.iterations.push_back(std::move(rec));
      trace.termination = Termination::backend_error;
      out.description = y;
      return out;
    }
    rec.proposed = *omega;
    if (is_candidate(pa.candidates, *omega)) {
      rec.chosen = *omega;
    } else {
      rec.chosen = fallback_terminal(pa.candidates);
      rec.fallback = true;
    }
    std::string prefix = head.empty() ? rec.chosen : head + " " + rec.chosen;

    GenerationRequest complete{demos, query, CompleteDescriptionContext{gy, prefix}, true};
    auto rest = exchange(ctx, out.calls, Stage::description_decoding, it + 1, complete, &latency);
    if (!rest) {
      trace.iterations.push_back(std::move(rec));
      trace.termination = Termination::backend_error;
      out.description = y;
      return out;
    }
    auto completion = strip_echo(prefix, *rest);
    y = completion.empty() ? prefix : prefix + " " + completion;
    trace.iterations.push_back(std::move(rec));
  }
}

PipelineResult run_pipeline(Method method, const DecodingContext& ctx, const Grammar& g_full,
                            const PipelineInstance& instance, std::uint64_t seed) {
  PipelineResult out;
  if (method == Method::gdg) {
    GenerationRequest req{instance.demos, instance.query, GenerateDescriptionContext{}, false};
    auto payload = exchange(ctx, out.calls, Stage::description_decoding, 0, req);
    if (!payload) {
      out.backend_error = true;
      out.error = out.calls.back().error;
      return out;
    }
    out.description = *payload;
    return out;
  }

  auto rules = run_rule_decoding(ctx, g_full, instance.demos, instance.query);
  out.grammar = rules.grammar;
  out.rule_trace = rules.trace;
  out.calls = std::move(rules.calls);
  if (rules.trace.termination == Termination::backend_error) {
    out.backend_error = true;
    out.error = out.calls.back().error;
    return out;
  }

  if (method == Method::ggdg) {
    auto desc = run_description_decoding(ctx, *out.grammar, instance.demos, instance.query);
    out.description = desc.description;
    out.description_trace = desc.trace;
    out.calls.insert(out.calls.end(), desc.calls.begin(), desc.calls.end());
    if (desc.trace.termination == Termination::backend_error) {
      out.backend_error = true;
      out.error = out.calls.back().error;
    }
    return out;
  }

  try {
    out.description = random_expand(*out.grammar, stable_hash(instance.id, seed), ctx.config.random_depth_limit);
  } catch (const EmptyLanguageError& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace gdlgen
