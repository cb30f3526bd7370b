#include "gdlgen/trace_json.hpp"

namespace gdlgen {

namespace {

ordered_json stat(const MeanStderr& s) { return {{"mean", s.mean}, {"stderr", s.stderr_}}; }

template <class T>
ordered_json optional_value(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

ordered_json to_json(const PrefixAnalysis& pa) {
  ordered_json candidates = ordered_json::array();
  for (const auto& c : pa.candidates) {
    if (c.kind == TerminalExpectation::Kind::literal) candidates.push_back({{"kind", "literal"}, {"text", c.text}});
    else candidates.push_back({{"kind", "class"}, {"name", c.text}});
  }
  return {{"status", pa.status == PrefixStatus::complete ? "complete" : "prefix"},
          {"valid_len", pa.valid_len},
          {"candidates", candidates}};
}

ordered_json to_json(const RuleTrace& trace) {
  ordered_json iterations = ordered_json::array();
  for (const auto& r : trace.iterations) {
    ordered_json rejected = ordered_json::array();
    for (const auto& x : r.rejected) rejected.push_back({{"alt", render_alt(x.alt)}, {"reason", to_string(x.reason)}});
    iterations.push_back({{"iteration", r.iteration},
                          {"alts", r.alt_count},
                          {"valid", r.valid_count},
                          {"rejected", rejected},
                          {"undefined", r.undefined},
                          {"pruned", r.pruned},
                          {"fallback", r.fallback},
                          {"latency_ms", r.latency_ms}});
  }
  return {{"termination", to_string(trace.termination)}, {"iterations", iterations}, {"notes", trace.notes}};
}

ordered_json to_json(const DescriptionTrace& trace) {
  ordered_json iterations = ordered_json::array();
  for (const auto& r : trace.iterations) {
    iterations.push_back({{"iteration", r.iteration},
                          {"valid_len", r.valid_len},
                          {"candidates", r.candidate_count},
                          {"complete", r.complete},
                          {"lex_error", r.lex_error},
                          {"proposed", r.proposed},
                          {"chosen", r.chosen},
                          {"fallback", r.fallback},
                          {"length", r.length},
                          {"latency_ms", r.latency_ms}});
  }
  return {{"termination", to_string(trace.termination)}, {"iterations", iterations}, {"notes", trace.notes}};
}

ordered_json to_json(const BackendCall& call) {
  ordered_json j{{"stage", to_string(call.stage)},
                 {"kind", to_string(call.kind)},
                 {"iteration", call.iteration},
                 {"demos_dropped", call.demos_dropped},
                 {"latency_ms", call.latency_ms},
                 {"prompt", call.prompt},
                 {"response", call.response},
                 {"payload", call.payload}};
  if (!call.error.empty()) j["error"] = call.error;
  return j;
}

ordered_json to_json(const PipelineResult& result, Method method, const std::string& template_version) {
  ordered_json calls = ordered_json::array();
  for (const auto& c : result.calls) calls.push_back(to_json(c));
  ordered_json j{{"method", to_string(method)}, {"template_version", template_version}};
  j["rule_decoding"] = result.rule_trace ? to_json(*result.rule_trace) : ordered_json(nullptr);
  j["description_decoding"] = result.description_trace ? to_json(*result.description_trace) : ordered_json(nullptr);
  j["backend_error"] = result.backend_error;
  if (!result.error.empty()) j["error"] = result.error;
  j["calls"] = calls;
  return j;
}

ordered_json to_json(const InstanceMetrics& row) {
  return {{"id", row.id},
          {"compilable", row.compilable},
          {"compile_mode", row.compile_mode},
          {"functional", optional_value(row.functional)},
          {"rouge_l", row.rouge_l},
          {"ncd", optional_value(row.ncd)},
          {"raw_concept_distance", optional_value(row.raw_concept_distance)},
          {"notes", row.notes}};
}

ordered_json to_json(const SeedSummary& s) {
  return {{"instances", s.instances},
          {"compilability", s.compilability},
          {"functionality", optional_value(s.functionality)},
          {"rouge_l", s.rouge_l},
          {"ncd", optional_value(s.ncd)},
          {"raw_concept_distance", optional_value(s.raw_concept_distance)}};
}

ordered_json to_json(const AggregateReport& r) {
  ordered_json per_seed = ordered_json::array();
  for (const auto& s : r.per_seed) per_seed.push_back(to_json(s));
  return {{"seeds", r.seeds},
          {"compilability", stat(r.compilability)},
          {"functionality", r.functionality ? stat(*r.functionality) : ordered_json(nullptr)},
          {"rouge_l", stat(r.rouge_l)},
          {"ncd", r.ncd ? stat(*r.ncd) : ordered_json(nullptr)},
          {"raw_concept_distance", r.raw_concept_distance ? stat(*r.raw_concept_distance) : ordered_json(nullptr)},
          {"per_seed", per_seed},
          {"notes", r.notes}};
}

}  // namespace gdlgen
