#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "dynaopt/analysis.hpp"
#include "dynaopt/bench.hpp"

using namespace dynaopt;

TEST_CASE("rule and program degree") {
  Program p = load_benchmark("cky3").parse();
  CHECK(rule_degree(p.rules[0]) == 6);
  CHECK(rule_degree(p.rules[3]) == 1);  // z += beta(root,0,N) * len(N).
  CHECK(program_degree(p) == 6);
  CHECK(tie_break_key(p) == std::vector<int>{6, 4, 4, 1});
}

TEST_CASE("degree ignores rules killed by dead-rule elimination") {
  Program p = parse_program(R"(
    goal += a(X).
    junk(P,Q,R,S) += nosuch(P,Q,R,S).
    a(X) += in(X).
    input in(_). output goal.
  )");
  CHECK(program_degree(p) == 1);
}

TEST_CASE("eliminable variables of the cky3 binary rule") {
  Program p = load_benchmark("cky3").parse();
  // beta(X,I,K) += gamma(X,Y,Z) * beta(Y,I,J) * beta(Z,J,K).
  auto evs = elimvar(p.rules[0]);
  REQUIRE(evs.size() == 3);  // name-sorted: J, Y, Z
  CHECK(evs[0].var == "J");
  CHECK(evs[0].subgoals == std::vector<int>{1, 2});
  CHECK(evs[1].var == "Y");
  CHECK(evs[1].subgoals == std::vector<int>{0, 1});
  CHECK(evs[2].var == "Z");
  CHECK(evs[2].subgoals == std::vector<int>{0, 2});
}

TEST_CASE("head variables and full-body variables are not eliminable") {
  Program p = parse_program("h(X) += a(X,Y) * b(Y) * c(Y).\ninput a(_,_). input b(_). input c(_). output h(_).");
  auto evs = elimvar(p.rules[0]);
  REQUIRE(evs.size() == 0);  // X in head; Y occurs in every factor
  Program q = parse_program("h(X) += a(X,Y) * b(Y) * c(X).\ninput a(_,_). input b(_). input c(_). output h(_).");
  auto evq = elimvar(q.rules[0]);
  REQUIRE(evq.size() == 1);
  CHECK(evq[0].var == "Y");
  CHECK(evq[0].subgoals == std::vector<int>{0, 1});
}

TEST_CASE("relative degree") {
  CHECK(relative_degree(6, 5, 5) == doctest::Approx(1.0));
  CHECK(relative_degree(6, 6, 5) == doctest::Approx(0.0));
  CHECK(relative_degree(10, 6, 2) == doctest::Approx(0.5));
  CHECK(relative_degree(5, 5, 5) == doctest::Approx(1.0));  // nothing to improve
  CHECK_THROWS_AS(relative_degree(4, 1, 2), std::invalid_argument);  // below optimum
  CHECK_THROWS_AS(relative_degree(4, 5, 2), std::invalid_argument);  // above start
}

TEST_CASE("analyze json shape") {
  Program p = load_benchmark("cky3").parse();
  auto j = nlohmann::json::parse(analyze_json(p));
  CHECK(j["degree"] == 6);
  CHECK(j["tie_break_key"] == nlohmann::json({6, 4, 4, 1}));
  REQUIRE(j["rules"].size() == 4);
  CHECK(j["rules"][0]["eliminable"].size() == 3);
  CHECK(j["rules"][0]["index"] == 0);
}

TEST_CASE("corpus initial degrees match the embedded metadata") {
  for (const auto& name : benchmark_names()) {
    CAPTURE(name);
    BenchmarkCase c = load_benchmark(name);
    CHECK(program_degree(c.parse()) == c.initial_degree);
  }
}
