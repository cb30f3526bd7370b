#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gdlgen/grammar.hpp"

namespace gdlgen {

// Token texts used for ROUGE: lexer tokens, or whitespace/paren splitting when
// the text does not lex.
std::vector<std::string> rouge_tokens(std::string_view text);

// Sentence-level ROUGE-L F1 over rouge_tokens, scaled to [0, 100]. Both empty
// gives 100; exactly one empty gives 0.
double rouge_l_f1(std::string_view reference, std::string_view hypothesis);

struct ConceptVector {
  std::vector<std::string> labels;
  std::vector<double> values;

  // Parses {"labels": [...], "values": [...]}. Throws DatasetError on
  // mismatched lengths, duplicate labels or non-finite values.
  static ConceptVector from_json_text(std::string_view text);
  static ConceptVector from_file(const std::string& path);
};

// Cosine distance clamped to [0, 1]. Throws Error on label mismatch or a zero
// vector.
double concept_distance(const ConceptVector& a, const ConceptVector& b);

struct CommandResult {
  std::optional<int> exit_code;  // absent if killed or timed out
  bool timed_out = false;
  std::string error;
};

// Runs `command` through /bin/sh with `input` on stdin; output is discarded.
CommandResult run_command(const std::string& command, std::string_view input, std::chrono::milliseconds timeout);

struct Verdict {
  bool pass = false;
  std::string mode;  // "proxy" or "external"
  std::string note;
};

// Without a command: the description lexes and is a sentence of g_full.
// With a command: exit 0 passes, exit 1 fails, anything else fails with a note.
Verdict compilability(const Grammar& g_full, std::string_view description,
                      const std::optional<std::string>& external_cmd = std::nullopt,
                      std::chrono::milliseconds timeout = std::chrono::seconds(60));

// Runs a pass/fail hook; used for functionality.
Verdict run_hook(const std::string& command, std::string_view description, std::chrono::milliseconds timeout);

struct InstanceMetrics {
  std::string id;
  bool compilable = false;
  std::string compile_mode = "proxy";
  std::optional<bool> functional;  // unknown without a functionality hook
  double rouge_l = 0.0;
  std::optional<double> ncd;
  // Concept distance computed while functionality is unknown; reported
  // separately and never folded into the NCD aggregate.
  std::optional<double> raw_concept_distance;
  std::vector<std::string> notes;

  // Throws Error when functional is true but compilable is false, or when
  // ncd is set while functionality is unresolved.
  void validate() const;
};

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Mean and sample standard deviation over sqrt(n); 0 error for n = 1.
MeanStderr mean_stderr(const std::vector<double>& values);

struct SeedSummary {
  std::size_t instances = 0;
  double compilability = 0.0;                // percent
  std::optional<double> functionality;       // percent, when resolved for every instance
  double rouge_l = 0.0;                      // mean
  std::optional<double> ncd;                 // mean, when resolved for every instance
  std::optional<double> raw_concept_distance;
};

// Per-seed means. Non-functional instances count as NCD 1.0.
SeedSummary summarize_seed(const std::vector<InstanceMetrics>& rows);

struct AggregateReport {
  std::size_t seeds = 0;
  std::vector<SeedSummary> per_seed;
  MeanStderr compilability;
  std::optional<MeanStderr> functionality;
  MeanStderr rouge_l;
  std::optional<MeanStderr> ncd;
  std::optional<MeanStderr> raw_concept_distance;
  std::vector<std::string> notes;
};

// Cross-seed aggregation of per-seed summaries. Throws Error with no seeds.
AggregateReport aggregate(const std::vector<std::vector<InstanceMetrics>>& seeds);

}  // namespace gdlgen
