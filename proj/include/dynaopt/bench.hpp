#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynaopt/interpreter.hpp"
#include "dynaopt/program.hpp"

namespace dynaopt {

struct BenchmarkCase {
  std::string name;
  std::string program_text;
  int initial_degree = 0;
  int optimal_degree = 0;
  std::string fixture_facts;  // `term = value.` lines
  SemiringTag semiring = SemiringTag::SumProduct;

  Program parse() const { return parse_program(program_text); }
  Valuation fixture() const { return parse_facts(fixture_facts); }
};

const std::vector<std::string>& benchmark_names();
BenchmarkCase load_benchmark(const std::string& name);  // throws on unknown name

struct StressVariant {
  std::string base;
  uint64_t seed = 0;
  bool ungenerable = false;
  Program program;
  std::vector<std::string> transform_trace;
};

// Random fold/unfold sequence of length 2..10; rejected (and retried, up to
// 200 times) while the variant's degree is already optimal or greedy folding
// recovers the optimum.
StressVariant generate_stress_variant(const BenchmarkCase& c, uint64_t seed);

struct MethodSpec {
  std::string label;
  std::string kind = "beam";  // "beam" or "mcts"
  int budget = 100;           // beam width or rollout count
  bool use_todo = true;
  bool use_macro = true;
};

struct CellResult {
  std::string benchmark;
  std::string method;
  int variants = 0;
  int generable = 0;
  int optimal = 0;
  double avg_rel_degree = 0.0;  // over generable variants
  double seconds = 0.0;
  std::vector<std::string> notes;
};

struct ExperimentReport {
  std::vector<CellResult> cells;
  double overall_percent_optimal(const std::string& method) const;
  double overall_avg_rel_degree(const std::string& method) const;
};

ExperimentReport run_experiment(const std::vector<MethodSpec>& methods, int variants_per_case,
                                uint64_t seed);

std::string report_json(const ExperimentReport& r);
std::string report_table(const ExperimentReport& r);

}  // namespace dynaopt
