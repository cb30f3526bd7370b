#pragma once

#include <json.hpp>

#include "gdlgen/decoding.hpp"
#include "gdlgen/earley.hpp"
#include "gdlgen/metrics.hpp"

namespace gdlgen {

// JSON views used for traces, reports and CLI output. Object keys keep
// insertion order so files are byte-stable.
using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const PrefixAnalysis& pa);
ordered_json to_json(const RuleTrace& trace);
ordered_json to_json(const DescriptionTrace& trace);
ordered_json to_json(const BackendCall& call);
ordered_json to_json(const PipelineResult& result, Method method, const std::string& template_version);
ordered_json to_json(const InstanceMetrics& row);
ordered_json to_json(const SeedSummary& summary);
ordered_json to_json(const AggregateReport& report);

}  // namespace gdlgen
