#include "gdlgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gdlgen/earley.hpp"
#include "gdlgen/error.hpp"
#include "gdlgen/lexer.hpp"

namespace gdlgen {

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> out;
  try {
    for (auto& t : tokenize(text).tokens) out.push_back(std::move(t.text));
    return out;
  } catch (const LexError&) {
  }
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '(' || c == ')' || c == '{' || c == '}') {
      flush();
      out.emplace_back(1, c);
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

double rouge_l_f1(std::string_view reference, std::string_view hypothesis) {
  auto ref = rouge_tokens(reference);
  auto hyp = rouge_tokens(hypothesis);
  if (ref.empty() && hyp.empty()) return 100.0;
  if (ref.empty() || hyp.empty()) return 0.0;

  std::vector<std::size_t> prev(hyp.size() + 1, 0), cur(hyp.size() + 1, 0);
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    for (std::size_t j = 1; j <= hyp.size(); ++j)
      cur[j] = ref[i - 1] == hyp[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  const auto lcs = static_cast<double>(prev[hyp.size()]);
  if (lcs == 0) return 0.0;
  // 2PR/(P+R) with P = L/|hyp| and R = L/|ref| simplifies to 2L/(|ref|+|hyp|).
  return 200.0 * lcs / static_cast<double>(ref.size() + hyp.size());
}

ConceptVector ConceptVector::from_json_text(std::string_view text) {
  ConceptVector v;
  try {
    auto j = nlohmann::json::parse(text);
    v.labels = j.at("labels").get<std::vector<std::string>>();
    v.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(fmt::format("invalid concept vector: {}", e.what()));
  }
  if (v.labels.size() != v.values.size())
    throw DatasetError(fmt::format("concept vector has {} labels but {} values", v.labels.size(), v.values.size()));
  if (std::set<std::string>(v.labels.begin(), v.labels.end()).size() != v.labels.size())
    throw DatasetError("concept vector has duplicate labels");
  for (double x : v.values)
    if (!std::isfinite(x)) throw DatasetError("concept vector has a non-finite value");
  return v;
}

ConceptVector ConceptVector::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(fmt::format("cannot open concept vector {}", path));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json_text(buf.str());
  } catch (const DatasetError& e) {
    throw DatasetError(fmt::format("{}: {}", path, e.what()));
  }
}

double concept_distance(const ConceptVector& a, const ConceptVector& b) {
  if (a.labels != b.labels) throw Error("concept vectors have different labels");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) throw Error("cosine distance is undefined for a zero vector");
  double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(d, 0.0, 1.0);
}

Verdict compilability(const Grammar& g_full, std::string_view description,
                      const std::optional<std::string>& external_cmd, std::chrono::milliseconds timeout) {
  if (external_cmd) {
    auto v = run_hook(*external_cmd, description, timeout);
    return v;
  }
  Verdict v{false, "proxy", {}};
  try {
    auto ts = tokenize(description);
    v.pass = !ts.empty() && recognize(g_full, ts);
  } catch (const LexError& e) {
    v.note = fmt::format("lex error: {}", e.what());
  }
  return v;
}

Verdict run_hook(const std::string& command, std::string_view description, std::chrono::milliseconds timeout) {
  Verdict v{false, "external", {}};
  auto r = run_command(command, description, timeout);
  if (r.timed_out) {
    v.note = "hook timed out";
  } else if (!r.error.empty()) {
    v.note = r.error;
  } else if (!r.exit_code) {
    v.note = "hook terminated by a signal";
  } else if (*r.exit_code == 0) {
    v.pass = true;
  } else if (*r.exit_code != 1) {
    v.note = fmt::format("hook exited with status {}", *r.exit_code);
  }
  return v;
}

void InstanceMetrics::validate() const {
  if (functional.value_or(false) && !compilable)
    throw Error(fmt::format("instance {}: functional but not compilable", id));
  if (ncd && !functional) throw Error(fmt::format("instance {}: ncd set while functionality is unknown", id));
}

MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr out;
  if (values.empty()) return out;
  const auto n = static_cast<double>(values.size());
  for (double x : values) out.mean += x;
  out.mean /= n;
  if (values.size() < 2) return out;
  double ss = 0;
  for (double x : values) ss += (x - out.mean) * (x - out.mean);
  out.stderr_ = std::sqrt(ss / (n - 1)) / std::sqrt(n);
  return out;
}

SeedSummary summarize_seed(const std::vector<InstanceMetrics>& rows) {
  SeedSummary s;
  s.instances = rows.size();
  if (rows.empty()) return s;
  const auto n = static_cast<double>(rows.size());
  double compiled = 0, functional = 0, rouge = 0, ncd = 0, raw = 0;
  bool all_resolved = true, all_ncd = true;
  std::size_t raw_count = 0;
  for (const auto& r : rows) {
    r.validate();
    compiled += r.compilable ? 1 : 0;
    rouge += r.rouge_l;
    if (!r.functional) {
      all_resolved = false;
    } else {
      functional += *r.functional ? 1 : 0;
    }
    if (r.functional && !*r.functional) ncd += 1.0;
    else if (r.ncd) ncd += *r.ncd;
    else all_ncd = false;
    if (r.raw_concept_distance) {
      raw += *r.raw_concept_distance;
      ++raw_count;
    }
  }
  s.compilability = 100.0 * compiled / n;
  s.rouge_l = rouge / n;
  if (all_resolved) s.functionality = 100.0 * functional / n;
  if (all_resolved && all_ncd) s.ncd = ncd / n;
  if (raw_count > 0) s.raw_concept_distance = raw / static_cast<double>(raw_count);
  return s;
}

AggregateReport aggregate(const std::vector<std::vector<InstanceMetrics>>& seeds) {
  if (seeds.empty()) throw Error("aggregate needs at least one seed");
  AggregateReport out;
  out.seeds = seeds.size();
  std::vector<double> comp, func, rouge, ncd, raw;
  bool func_ok = true, ncd_ok = true, raw_ok = true;
  for (const auto& rows : seeds) {
    auto s = summarize_seed(rows);
    comp.push_back(s.compilability);
    rouge.push_back(s.rouge_l);
    if (s.functionality) func.push_back(*s.functionality);
    else func_ok = false;
    if (s.ncd) ncd.push_back(*s.ncd);
    else ncd_ok = false;
    if (s.raw_concept_distance) raw.push_back(*s.raw_concept_distance);
    else raw_ok = false;
    out.per_seed.push_back(s);
  }
  out.compilability = mean_stderr(comp);
  out.rouge_l = mean_stderr(rouge);
  if (func_ok) out.functionality = mean_stderr(func);
  else out.notes.push_back("functionality unknown for some seeds; functionality and NCD omitted");
  if (ncd_ok) out.ncd = mean_stderr(ncd);
  else if (func_ok) out.notes.push_back("concept vectors missing for some functional instances; NCD omitted");
  if (raw_ok) out.raw_concept_distance = mean_stderr(raw);
  return out;
}

}  // namespace gdlgen
