#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynaopt/analysis.hpp"
#include "dynaopt/bench.hpp"
#include "dynaopt/interpreter.hpp"
#include "dynaopt/program.hpp"
#include "dynaopt/search.hpp"
#include "dynaopt/transforms.hpp"

namespace {

using namespace dynaopt;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_out(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << text;
}

// Program source: a file path, or `bench:NAME` for an embedded benchmark
// (which also supplies fixture facts for verification).
struct LoadedProgram {
  Program program;
  std::string fixture_facts;
  SemiringTag semiring = SemiringTag::SumProduct;
  bool from_bench = false;
};

LoadedProgram load_source(const std::string& src) {
  LoadedProgram lp;
  if (src.rfind("bench:", 0) == 0) {
    BenchmarkCase c = load_benchmark(src.substr(6));
    lp.program = c.parse();
    lp.fixture_facts = c.fixture_facts;
    lp.semiring = c.semiring;
    lp.from_bench = true;
  } else {
    lp.program = parse_program(read_file(src));
    lp.semiring = Semiring::for_program(lp.program).tag;
  }
  return lp;
}

uint64_t env_seed() {
  const char* s = std::getenv("DYNA_OPT_SEED");
  return s ? std::strtoull(s, nullptr, 10) : 0;
}

TransformAction parse_action(const Program& p, const std::string& spec) {
  auto fail = [&] { throw std::runtime_error("bad action syntax: " + spec); };
  auto c1 = spec.find(':');
  std::string kind = spec.substr(0, c1);
  TransformAction a;
  if (kind == "eliminate" || kind == "macrofold") {
    if (c1 == std::string::npos) fail();
    a.rule_index = std::stoi(spec.substr(c1 + 1));
    a.kind = kind == "eliminate" ? TransformAction::Kind::Eliminate
                                 : TransformAction::Kind::MacroFold;
    return a;
  }
  if (c1 == std::string::npos) fail();
  auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos) fail();
  a.rule_index = std::stoi(spec.substr(c1 + 1, c2 - c1 - 1));
  std::string arg = spec.substr(c2 + 1);
  if (kind == "fold") {
    a.kind = TransformAction::Kind::Fold;
    a.var = arg;
    if (a.rule_index < 0 || a.rule_index >= static_cast<int>(p.rules.size()))
      throw std::runtime_error("rule index out of range: " + spec);
    for (const auto& ev : elimvar(p.rules[a.rule_index]))
      if (ev.var == arg) a.subgoals = ev.subgoals;
    if (a.subgoals.empty())
      throw std::runtime_error("variable " + arg + " is not eliminable in rule " +
                               std::to_string(a.rule_index));
  } else if (kind == "unfold") {
    a.kind = TransformAction::Kind::Unfold;
    a.subgoal = std::stoi(arg);
  } else {
    fail();
  }
  return a;
}

int cmd_analyze(const std::string& src, const std::string& out) {
  LoadedProgram lp = load_source(src);
  write_out(out, analyze_json(lp.program));
  return 0;
}

int cmd_transform(const std::string& src, const std::string& action, const std::string& out) {
  LoadedProgram lp = load_source(src);
  TransformAction a = parse_action(lp.program, action);
  int before = program_degree(lp.program);
  Program result;
  std::vector<std::string> warnings;
  switch (a.kind) {
    case TransformAction::Kind::Fold:
      result = fold(lp.program, a.rule_index, a.subgoals);
      break;
    case TransformAction::Kind::Unfold:
      result = unfold(lp.program, a.rule_index, a.subgoal, &warnings);
      break;
    case TransformAction::Kind::Eliminate: {
      auto r = eliminate(lp.program, a.rule_index);
      if (!r) throw std::runtime_error("eliminate is not applicable to rule " +
                                       std::to_string(a.rule_index));
      result = *r;
      break;
    }
    case TransformAction::Kind::MacroFold:
      result = macro_fold(lp.program, a.rule_index);
      break;
    default:
      throw std::runtime_error("bad action");
  }
  result = dead_rule_elimination(result);
  std::string text = render_program(result);
  text += "% degree: " + std::to_string(before) + " -> " +
          std::to_string(program_degree(result)) + "\n";
  for (const auto& w : warnings) text += "% warning: " + w + "\n";
  write_out(out, text);
  return 0;
}

int cmd_optimize(const std::string& src, const std::string& method, int beam, int rollouts,
                 double explore_c, uint64_t seed, int max_depth, bool todo, bool macro,
                 const std::string& verify, const std::string& facts_path,
                 const std::string& out) {
  LoadedProgram lp = load_source(src);
  SearchConfig cfg;
  cfg.use_todo = todo;
  cfg.use_macro = macro;
  cfg.max_depth = max_depth;
  cfg.seed = seed;
  int d0 = program_degree(lp.program);
  double C = explore_c > 0 ? explore_c : static_cast<double>(d0);

  SearchResult res;
  if (method == "beam")
    res = beam_search(lp.program, beam, cfg);
  else if (method == "mcts")
    res = mcts(lp.program, C, rollouts, cfg);
  else if (method == "exhaustive")
    res = exhaustive_search(lp.program, max_depth, cfg);
  else
    throw CLI::ValidationError("--method", "must be beam, mcts, or exhaustive");

  std::string verify_note = "skipped";
  if (verify != "off") {
    Semiring s = Semiring::from_tag(lp.semiring);
    std::string facts_text = facts_path.empty() ? lp.fixture_facts : read_file(facts_path);
    if (verify == "fixtures" && facts_text.empty()) {
      verify_note = "no fixture facts available; verification skipped";
    } else {
      if (!facts_text.empty()) {
        Valuation inputs = parse_facts(facts_text);
        Valuation a = evaluate(lp.program, s, inputs);
        Valuation b = evaluate(res.best_program, s, inputs);
        std::string why;
        if (!valuations_match(a, b, s, &why))
          throw std::runtime_error("verification failed on fixture inputs: " + why);
        verify_note = "fixtures ok";
      }
      if (verify == "random") {
        auto verdict = equivalence_check(lp.program, res.best_program, s, 20, seed);
        if (!verdict.pass)
          throw std::runtime_error("randomized verification failed: " + verdict.message);
        verify_note = verify_note == "fixtures ok" ? "fixtures+random ok" : "random ok";
      }
    }
  }

  nlohmann::json j;
  j["initial_degree"] = d0;
  j["best_degree"] = res.best_degree;
  j["best_key"] = res.best_key;
  j["trace"] = res.trace;
  j["states_expanded"] = res.states_expanded;
  j["method"] = method;
  j["seed"] = seed;
  j["verify"] = verify_note;
  std::string text = render_program(res.best_program) + j.dump(2) + "\n";
  write_out(out, text);
  return 0;
}

int cmd_eval(const std::string& src, const std::string& facts_path, const std::string& semiring,
             const std::string& out) {
  LoadedProgram lp = load_source(src);
  SemiringTag tag = lp.semiring;
  if (!semiring.empty()) {
    auto t = Semiring::tag_from_name(semiring);
    if (!t) throw CLI::ValidationError("--semiring", "unknown semiring: " + semiring);
    tag = *t;
  }
  Semiring s = Semiring::from_tag(tag);
  if (!s.compatible_with(lp.program.agg))
    throw std::runtime_error("semiring " + s.name() + " does not match the program aggregator");
  std::string facts_text =
      facts_path.empty() ? lp.fixture_facts : read_file(facts_path);
  Valuation outputs = evaluate(lp.program, s, parse_facts(facts_text));
  write_out(out, valuation_json(outputs));
  return 0;
}

int cmd_bench(const std::string& suite, int variants, uint64_t seed, int beam, int rollouts,
              const std::string& out) {
  if (suite == "unit") {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& name : benchmark_names()) {
      BenchmarkCase c = load_benchmark(name);
      Program p = c.parse();
      SearchConfig cfg;
      cfg.seed = seed;
      int d0 = program_degree(p);
      SearchResult rb = beam_search(p, beam, cfg);
      SearchResult rm = mcts(p, d0, rollouts, cfg);
      j.push_back({{"benchmark", name},
                   {"initial_degree", d0},
                   {"optimal_degree", c.optimal_degree},
                   {"beam_degree", rb.best_degree},
                   {"mcts_degree", rm.best_degree}});
    }
    write_out(out, j.dump(2));
    return 0;
  }
  std::vector<MethodSpec> methods;
  if (suite == "stress") {
    methods.push_back({"beam-" + std::to_string(beam), "beam", beam, true, true});
  } else if (suite == "ablation") {
    for (bool todo : {true, false})
      for (bool macro : {true, false}) {
        std::string flags = std::string(todo ? "+todo" : "-todo") + (macro ? "+macro" : "-macro");
        methods.push_back({"beam-" + std::to_string(beam) + flags, "beam", beam, todo, macro});
        methods.push_back({"mcts-" + std::to_string(rollouts) + flags, "mcts", rollouts, todo,
                           macro});
      }
  } else {
    throw CLI::ValidationError("--suite", "must be unit, stress, or ablation");
  }
  ExperimentReport report = run_experiment(methods, variants, seed);
  write_out(out, report_json(report));
  std::cerr << report_table(report);
  return 0;
}

int cmd_stress(const std::string& name, uint64_t seed, const std::string& out) {
  StressVariant v = generate_stress_variant(load_benchmark(name), seed);
  if (v.ungenerable) {
    write_out(out, "% ungenerable: greedy folding recovers the optimum for every sampled variant\n");
    return 1;
  }
  std::string text = render_program(v.program);
  for (const auto& t : v.transform_trace) text += "% applied: " + t + "\n";
  write_out(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyna-opt: degree optimizer for semiring-weighted deduction programs"};
  app.require_subcommand(1);

  std::string src, facts, out, action, semiring;
  std::string method = "beam", verify = "fixtures", todo = "on", macro = "on";
  std::string suite = "stress", bench_name;
  int beam = 10, rollouts = 100, max_depth = 100, variants = 10;
  double explore_c = 0.0;  // 0 -> degree of the initial program
  uint64_t seed = env_seed();

  auto* a_analyze = app.add_subcommand("analyze", "degree report as JSON");
  a_analyze->add_option("program", src)->required();
  a_analyze->add_option("--out", out);

  auto* a_transform = app.add_subcommand("transform", "apply a single transform");
  a_transform->add_option("program", src)->required();
  a_transform->add_option("action", action, "fold:I:V | unfold:I:K | eliminate:I | macrofold:I")
      ->required();
  a_transform->add_option("--out", out);

  auto* a_opt = app.add_subcommand("optimize", "search for a lower-degree equivalent program");
  a_opt->add_option("program", src)->required();
  a_opt->add_option("--method", method, "beam | mcts | exhaustive");
  a_opt->add_option("--beam", beam);
  a_opt->add_option("--rollouts", rollouts);
  a_opt->add_option("--explore-c", explore_c);
  a_opt->add_option("--seed", seed);
  a_opt->add_option("--max-depth", max_depth);
  a_opt->add_option("--todo", todo, "on | off");
  a_opt->add_option("--macro", macro, "on | off");
  a_opt->add_option("--verify", verify, "off | fixtures | random");
  a_opt->add_option("--facts", facts, "fixture facts file for verification");
  a_opt->add_option("--out", out);

  auto* a_eval = app.add_subcommand("eval", "evaluate a program on a facts file");
  a_eval->add_option("program", src)->required();
  a_eval->add_option("facts", facts);
  a_eval->add_option("--semiring", semiring, "sumprod | maxprod | minprod | boolean");
  a_eval->add_option("--out", out);

  auto* a_bench = app.add_subcommand("bench", "benchmark suites and experiment reports");
  a_bench->add_option("--suite", suite, "unit | stress | ablation");
  a_bench->add_option("--variants", variants);
  a_bench->add_option("--seed", seed);
  a_bench->add_option("--beam", beam);
  a_bench->add_option("--rollouts", rollouts);
  a_bench->add_option("--out", out);

  auto* a_stress = app.add_subcommand("stress", "generate one stress variant");
  a_stress->add_option("benchmark", bench_name)->required();
  a_stress->add_option("--seed", seed);
  a_stress->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto onoff = [](const std::string& v) { return v != "off"; };
  try {
    if (*a_analyze) return cmd_analyze(src, out);
    if (*a_transform) return cmd_transform(src, action, out);
    if (*a_opt)
      return cmd_optimize(src, method, beam, rollouts, explore_c, seed, max_depth, onoff(todo),
                          onoff(macro), verify, facts, out);
    if (*a_eval) return cmd_eval(src, facts, semiring, out);
    if (*a_bench) return cmd_bench(suite, variants, seed, beam, rollouts, out);
    if (*a_stress) return cmd_stress(bench_name, seed, out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
