#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "dynaopt/analysis.hpp"
#include "dynaopt/bench.hpp"
#include "dynaopt/interpreter.hpp"
#include "dynaopt/transforms.hpp"

using namespace dynaopt;

TEST_CASE("corpus metadata is consistent") {
  CHECK(benchmark_names().size() == 15);
  for (const auto& name : benchmark_names()) {
    CAPTURE(name);
    BenchmarkCase c = load_benchmark(name);
    Program p = c.parse();
    CHECK(program_degree(dead_rule_elimination(p)) == c.initial_degree);
    CHECK(c.optimal_degree <= c.initial_degree);
    CHECK(c.optimal_degree >= 1);
    CHECK(Semiring::from_tag(c.semiring).compatible_with(p.agg));
    CHECK(!c.fixture().empty());
  }
  CHECK_THROWS_AS(load_benchmark("nope"), std::invalid_argument);
}

TEST_CASE("every fixture produces a nonempty output valuation") {
  for (const auto& name : benchmark_names()) {
    CAPTURE(name);
    BenchmarkCase c = load_benchmark(name);
    Valuation out = evaluate(c.parse(), Semiring::from_tag(c.semiring), c.fixture());
    CHECK(!out.empty());
  }
}

TEST_CASE("stress variants are harder than greedy folding") {
  for (const auto& name : {"cky3", "hmm", "semi-markov", "split-head", "path", "chain-expect"}) {
    BenchmarkCase c = load_benchmark(name);
    for (uint64_t seed : {0, 1, 2}) {
      CAPTURE(name);
      CAPTURE(seed);
      StressVariant v = generate_stress_variant(c, seed);
      if (v.ungenerable) continue;  // allowed, but the properties below must hold otherwise
      CHECK(!v.transform_trace.empty());
      CHECK(program_degree(v.program) > c.optimal_degree);
      CHECK(program_degree(greedy_fold_only(v.program)) > c.optimal_degree);
      // fold/unfold sequences preserve the fixture semantics
      Semiring s = Semiring::from_tag(c.semiring);
      std::string why;
      CHECK_MESSAGE(valuations_match(evaluate(c.parse(), s, c.fixture()),
                                     evaluate(v.program, s, c.fixture()), s, &why),
                    name, ": ", why);
    }
  }
}

TEST_CASE("stress variants are deterministic in the seed") {
  BenchmarkCase c = load_benchmark("cky3");
  StressVariant a = generate_stress_variant(c, 11);
  StressVariant b = generate_stress_variant(c, 11);
  CHECK(a.ungenerable == b.ungenerable);
  CHECK(a.transform_trace == b.transform_trace);
  if (!a.ungenerable) CHECK(canonicalize(a.program) == canonicalize(b.program));
}

TEST_CASE("experiment report aggregation and serialization") {
  ExperimentReport r;
  r.cells.push_back({"a", "beam-10", 2, 2, 2, 1.0, 0.1, {}});
  r.cells.push_back({"b", "beam-10", 2, 1, 0, 0.5, 0.2, {"seed 3: ungenerable"}});
  r.cells.push_back({"a", "mcts-100", 2, 2, 1, 0.75, 0.3, {}});
  CHECK(r.overall_percent_optimal("beam-10") == doctest::Approx(100.0 * 2 / 3));
  CHECK(r.overall_avg_rel_degree("beam-10") == doctest::Approx((1.0 * 2 + 0.5) / 3));
  CHECK(r.overall_percent_optimal("mcts-100") == doctest::Approx(50.0));

  auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["cells"].size() == 3);
  CHECK(j["cells"][0]["benchmark"] == "a");
  CHECK(j["overall"].size() == 2);
  CHECK(j["overall"][0]["method"] == "beam-10");

  std::string table = report_table(r);
  CHECK(table.find("beam-10") != std::string::npos);
  CHECK(table.find("overall") != std::string::npos);
}
