#include "gdlgen/cli.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gdlgen/config.hpp"
#include "gdlgen/dataset.hpp"
#include "gdlgen/decoding.hpp"
#include "gdlgen/earley.hpp"
#include "gdlgen/error.hpp"
#include "gdlgen/lexer.hpp"
#include "gdlgen/metrics.hpp"
#include "gdlgen/minimal_grammar.hpp"
#include "gdlgen/trace_json.hpp"

namespace gdlgen {

namespace {

namespace fs = std::filesystem;

// Input problems the user can fix; mapped to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read {}", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
}

Grammar load_grammar(const std::string& path, bool partial = false) {
  auto text = read_file(path);
  try {
    return parse_grammar(text, partial);
  } catch (const GrammarSyntaxError& e) {
    throw InputError(fmt::format("{}:{}:{}: {}", path, e.line(), e.column(), e.what()));
  } catch (const UndefinedNonterminalError& e) {
    throw InputError(fmt::format("{}: {}", path, e.what()));
  }
}

TokenStream load_description(const std::string& path) {
  auto text = read_file(path);
  try {
    return tokenize(text);
  } catch (const LexError& e) {
    throw InputError(fmt::format("{}: offset {}: {}", path, e.begin(), e.what()));
  }
}

bool is_input_error(const std::exception& e) {
  return dynamic_cast<const InputError*>(&e) || dynamic_cast<const GrammarSyntaxError*>(&e) ||
         dynamic_cast<const UndefinedNonterminalError*>(&e) || dynamic_cast<const UnknownRuleError*>(&e) ||
         dynamic_cast<const LexError*>(&e) || dynamic_cast<const NotASentenceError*>(&e) ||
         dynamic_cast<const NotASubsetError*>(&e) || dynamic_cast<const DatasetError*>(&e) ||
         dynamic_cast<const ConfigError*>(&e);
}

// ---------------------------------------------------------------------------

int cmd_grammar_extract(const std::string& grammar_path, const std::string& description_path,
                        const std::string& check_path, std::ostream& out) {
  auto g = load_grammar(grammar_path);
  auto ts = load_description(description_path);
  if (!check_path.empty()) {
    auto gy = load_grammar(check_path);
    auto removable = check_minimality(gy, g, ts);
    ordered_json j{{"removable", ordered_json::array()}};
    for (const auto& alt : removable) j["removable"].push_back(render_alt(alt));
    out << j.dump(2) << '\n';
    return removable.empty() ? 0 : 1;
  }
  out << render_grammar(extract_minimal(g, ts));
  return 0;
}

int cmd_prefix(const std::string& grammar_path, const std::string& description_path, std::ostream& out) {
  auto g = load_grammar(grammar_path);
  auto ts = load_description(description_path);
  out << to_json(parse_prefix(g, ts)).dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct InstanceOutcome {
  std::string id;
  bool skipped = false;
  std::string note;
  PipelineResult result;
};

int cmd_generate(const std::string& config_path, const std::string& dataset_path, const std::string& method_name,
                 std::uint64_t seed, const std::string& out_dir, std::size_t jobs, std::ostream& err) {
  auto method = method_from_string(method_name);
  if (!method) throw InputError(fmt::format("unknown method '{}'", method_name));
  auto config = RunConfig::from_file(config_path);
  if (config.grammar_path.empty()) throw ConfigError("config needs a 'grammar' path");
  auto g_full = load_grammar(config.grammar_path);
  auto templates = config.templates();
  auto examples = filter_by_length(load_dataset(dataset_path), config.max_tokens);
  check_against(examples, g_full);
  auto backend = make_backend(config);

  // Minimal grammars for demonstrations, computed once.
  std::vector<Demonstration> demos;
  demos.reserve(examples.size());
  for (const auto& e : examples) {
    try {
      demos.push_back(to_demonstration(e, g_full));
    } catch (const NotASentenceError&) {
      throw DatasetError(fmt::format("example '{}': description is not derivable from the full grammar", e.id));
    }
  }
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < examples.size(); ++i) index_of[examples[i].id] = i;

  fs::create_directories(out_dir);
  std::vector<InstanceOutcome> outcomes(examples.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next++;
      if (i >= examples.size()) return;
      const auto& test = examples[i];
      auto& o = outcomes[i];
      o.id = test.id;
      try {
        PipelineInstance inst{test.id, test.query, {}};
        try {
          auto chosen = select_demonstrations(examples, test, config.decoding.demo_count, config.demo_mode,
                                              stable_hash(test.id, seed));
          for (const auto& d : chosen) inst.demos.push_back(demos[index_of.at(d.id)]);
        } catch (const DatasetError& e) {
          o.skipped = true;
          o.note = e.what();
          continue;
        }
        auto session = backend->session(test.id, seed);
        DecodingContext ctx{*session, templates, config.decoding};
        o.result = run_pipeline(*method, ctx, g_full, inst, seed);

        auto dir = fs::path(out_dir) / test.id;
        fs::create_directories(dir);
        write_file(dir / "description.gdl", o.result.description + "\n");
        if (o.result.grammar) write_file(dir / "grammar.bnf", render_grammar(*o.result.grammar));
        else fs::remove(dir / "grammar.bnf");
        write_file(dir / "trace.json", to_json(o.result, *method, templates.version).dump(2) + "\n");
        if (o.result.backend_error) {
          std::lock_guard lock(err_mutex);
          err << fmt::format("{}: backend error: {}\n", test.id, o.result.error);
        }
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!failure) failure = std::current_exception();
        next = examples.size();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::max<std::size_t>(1, jobs); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  bool any_backend_error = false;
  ordered_json instances = ordered_json::array();
  for (const auto& o : outcomes) {
    ordered_json j{{"id", o.id}, {"skipped", o.skipped}};
    if (o.skipped) {
      j["note"] = o.note;
    } else {
      const auto& r = o.result;
      j["rule_termination"] = r.rule_trace ? ordered_json(to_string(r.rule_trace->termination)) : ordered_json(nullptr);
      j["description_termination"] =
          r.description_trace ? ordered_json(to_string(r.description_trace->termination)) : ordered_json(nullptr);
      j["backend_calls"] = r.calls.size();
      j["backend_error"] = r.backend_error;
      any_backend_error = any_backend_error || r.backend_error;
    }
    instances.push_back(j);
  }
  ordered_json run{{"method", to_string(*method)},
                   {"seed", seed},
                   {"template_version", templates.version},
                   {"backend", config.backend.type},
                   {"grammar", config.grammar_path},
                   {"dataset", dataset_path},
                   {"rule_iter_limit", config.decoding.rule_iter_limit},
                   {"desc_iter_limit", config.decoding.desc_iter_limit},
                   {"demo_count", config.decoding.demo_count},
                   {"demo_mode", config.demo_mode == DemoMode::same ? "same" : "cross"},
                   {"instances", instances}};
  write_file(fs::path(out_dir) / "run.json", run.dump(2) + "\n");
  return any_backend_error ? 1 : 0;
}

// ---------------------------------------------------------------------------

struct EvaluateOptions {
  std::vector<std::string> runs;
  std::string dataset;
  std::string grammar;
  std::string concepts;
  std::string functional_cmd;
  std::string compile_cmd;
  std::size_t timeout_s = 60;
};

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out) {
  auto examples = load_dataset(opt.dataset);
  std::map<std::string, const Example*> by_id;
  for (const auto& e : examples) by_id[e.id] = &e;
  const auto timeout = std::chrono::milliseconds(opt.timeout_s * 1000);
  std::optional<std::string> compile_cmd;
  if (!opt.compile_cmd.empty()) compile_cmd = opt.compile_cmd;

  std::vector<std::string> notes;
  if (opt.concepts.empty()) notes.push_back("no concepts directory; NCD omitted");

  std::map<std::string, Grammar> grammars;
  ordered_json runs = ordered_json::array();
  std::vector<std::vector<InstanceMetrics>> seeds;
  for (const auto& run_dir : opt.runs) {
    auto run_file = fs::path(run_dir) / "run.json";
    if (!fs::is_regular_file(run_file)) throw InputError(fmt::format("{} is not a run directory", run_dir));
    ordered_json run;
    try {
      run = ordered_json::parse(read_file(run_file.string()));
      if (!run.at("instances").is_array()) throw InputError("instances must be an array");
    } catch (const ordered_json::exception& e) {
      throw InputError(fmt::format("{}: {}", run_file.string(), e.what()));
    }

    std::string grammar_path = opt.grammar;
    if (grammar_path.empty() && run.contains("grammar") && run["grammar"].is_string())
      grammar_path = run["grammar"].get<std::string>();
    if (grammar_path.empty()) throw InputError("no grammar given and the run does not record one");
    if (!grammars.count(grammar_path)) grammars.emplace(grammar_path, load_grammar(grammar_path));
    const auto& g_full = grammars.at(grammar_path);

    std::vector<InstanceMetrics> rows;
    ordered_json row_json = ordered_json::array();
    for (const auto& inst : run["instances"]) {
      if (!inst.contains("id") || !inst["id"].is_string())
        throw InputError(fmt::format("{}: instance without id", run_file.string()));
      if (inst.value("skipped", false)) continue;
      auto id = inst["id"].get<std::string>();
      auto ex = by_id.find(id);
      if (ex == by_id.end()) throw InputError(fmt::format("{}: instance '{}' is not in the dataset", run_dir, id));
      auto desc_path = fs::path(run_dir) / id / "description.gdl";
      if (!fs::is_regular_file(desc_path)) throw InputError(fmt::format("missing {}", desc_path.string()));
      auto predicted = read_file(desc_path.string());
      if (!predicted.empty() && predicted.back() == '\n') predicted.pop_back();

      InstanceMetrics m;
      m.id = id;
      auto compiled = compilability(g_full, predicted, compile_cmd, timeout);
      m.compilable = compiled.pass;
      m.compile_mode = compiled.mode;
      if (!compiled.note.empty()) m.notes.push_back(compiled.note);
      if (!opt.functional_cmd.empty()) {
        if (m.compilable) {
          auto f = run_hook(opt.functional_cmd, predicted, timeout);
          m.functional = f.pass;
          if (!f.note.empty()) m.notes.push_back("functionality: " + f.note);
        } else {
          m.functional = false;
        }
      }
      m.rouge_l = rouge_l_f1(ex->second->description, predicted);

      if (!opt.concepts.empty()) {
        auto truth = fs::path(opt.concepts) / (id + ".json");
        auto pred = fs::path(run_dir) / id / "concepts.json";
        std::optional<double> distance;
        if (m.functional && !*m.functional) {
          m.ncd = 1.0;
        } else if (fs::is_regular_file(truth) && fs::is_regular_file(pred)) {
          try {
            distance = concept_distance(ConceptVector::from_file(truth.string()), ConceptVector::from_file(pred.string()));
          } catch (const Error& e) {
            m.notes.push_back(fmt::format("concept distance: {}", e.what()));
          }
        } else {
          m.notes.push_back("concept vector missing");
        }
        if (distance) {
          if (m.functional) m.ncd = distance;
          else m.raw_concept_distance = distance;
        }
      }
      m.validate();
      row_json.push_back(to_json(m));
      rows.push_back(std::move(m));
    }
    runs.push_back({{"run", run_dir}, {"instances", row_json}, {"summary", to_json(summarize_seed(rows))}});
    seeds.push_back(std::move(rows));
  }

  auto agg = aggregate(seeds);
  for (const auto& n : agg.notes)
    if (std::find(notes.begin(), notes.end(), n) == notes.end()) notes.push_back(n);
  ordered_json report{{"runs", runs}, {"aggregate", to_json(agg)}, {"notes", notes}};
  auto text = report.dump(2) + "\n";
  for (const auto& run_dir : opt.runs) write_file(fs::path(run_dir) / "report.json", text);
  out << text;
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grammar-guided game description generation tools", "gdlgen"};
  app.require_subcommand(1);

  std::string grammar_path, description_path, check_path;
  auto* extract = app.add_subcommand("grammar-extract", "Print the minimal grammar deriving a description");
  extract->add_option("grammar", grammar_path, "Full grammar file")->required();
  extract->add_option("description", description_path, "Game description file")->required();
  extract->add_option("--check", check_path, "Report alternatives of this grammar that are not needed");

  auto* prefix = app.add_subcommand("prefix", "Longest valid prefix and next-terminal candidates as JSON");
  prefix->add_option("grammar", grammar_path, "Closed grammar file")->required();
  prefix->add_option("description", description_path, "Game description file")->required();

  std::string config_path, dataset_path, method, out_dir;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  auto* generate = app.add_subcommand("generate", "Run a generation method over a dataset");
  generate->add_option("--config", config_path, "Run configuration JSON")->required();
  generate->add_option("--dataset", dataset_path, "Dataset JSONL")->required();
  generate->add_option("--method", method, "gdg, ggdg or random")
      ->required()
      ->check(CLI::IsMember({"gdg", "ggdg", "random"}));
  generate->add_option("--seed", seed, "Seed for demonstrations and sampling");
  generate->add_option("--out", out_dir, "Output directory")->required();
  generate->add_option("--jobs", jobs, "Concurrent instances")->check(CLI::PositiveNumber);

  EvaluateOptions eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score run directories against a dataset");
  evaluate->add_option("--run", eval.runs, "Run directory; repeat once per seed")->required();
  evaluate->add_option("--dataset", eval.dataset, "Dataset JSONL")->required();
  evaluate->add_option("--grammar", eval.grammar, "Full grammar (default: the one recorded in run.json)");
  evaluate->add_option("--concepts", eval.concepts, "Directory of ground-truth concept vectors <id>.json");
  evaluate->add_option("--functional-cmd", eval.functional_cmd, "Functionality hook; description on stdin");
  evaluate->add_option("--compile-cmd", eval.compile_cmd, "Compilability hook; replaces the parse proxy");
  evaluate->add_option("--timeout-s", eval.timeout_s, "Hook timeout in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*extract) return cmd_grammar_extract(grammar_path, description_path, check_path, out);
    if (*prefix) return cmd_prefix(grammar_path, description_path, out);
    if (*generate) return cmd_generate(config_path, dataset_path, method, seed, out_dir, jobs, err);
    if (*evaluate) return cmd_evaluate(eval, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return is_input_error(e) ? 2 : 1;
  }
  return 2;
}

}  // namespace gdlgen
