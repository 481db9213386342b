#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dynaopt/analysis.hpp"
#include "dynaopt/bench.hpp"
#include "dynaopt/search.hpp"

using namespace dynaopt;

namespace {

const char* kChain4 = R"(
z += w(Y1,Y2) * w(Y2,Y3) * w(Y3,Y4).
input w(_,_). output z.
)";

const char* kToy = R"(
f(X) += u(X,Y) * v(Y).
goal += f(X) * s(X).
input u(_,_); v(_); s(_).
output goal.
)";

}  // namespace

TEST_CASE("lower confidence bound") {
  CHECK(lcb(10, 2, 2, 0) == doctest::Approx(5.0));
  CHECK(std::isinf(lcb(99, 0, 10, 1)));
  CHECK(lcb(99, 0, 10, 1) < 0);
  CHECK(lcb(5, 1, 3, 2) == doctest::Approx(5 - 2 * std::sqrt(std::log(3.0))));
  CHECK(lcb(12, 4, 4, 1) == doctest::Approx(3 - std::sqrt(std::log(4.0) / 4)));
}

TEST_CASE("action enumeration and transitions") {
  Program p = load_benchmark("cky3").parse();
  SearchConfig cfg;
  cfg.use_macro = false;
  SearchState s0 = initial_state(p, cfg);
  auto actions = enumerate_actions(s0, cfg);
  // top rule is the degree-6 binary rule: skip + 3 folds (J, Y, Z) +
  // 2 unfolds (the beta subgoals); eliminate is blocked (recursive head)
  REQUIRE(!actions.empty());
  CHECK(actions[0].kind == TransformAction::Kind::Skip);
  int folds = 0, unfolds = 0, elims = 0;
  for (const auto& a : actions) {
    folds += a.kind == TransformAction::Kind::Fold;
    unfolds += a.kind == TransformAction::Kind::Unfold;
    elims += a.kind == TransformAction::Kind::Eliminate;
  }
  CHECK(folds == 3);
  CHECK(unfolds == 2);
  CHECK(elims == 0);

  SearchState s1 = transition(s0, actions[0], cfg);
  CHECK(s1.todo.size() == s0.todo.size() - 1);
  CHECK(canonicalize(s1.program) == canonicalize(s0.program));
  CHECK(s1.depth == s0.depth + 1);

  SearchState drained = s0;
  while (!drained.todo.empty()) {
    auto as = enumerate_actions(drained, cfg);
    drained = transition(drained, as[0], cfg);
  }
  CHECK(enumerate_actions(drained, cfg).empty());  // empty todo is terminal
}

TEST_CASE("macro flag replaces individual folds with one action") {
  Program p = load_benchmark("cky3").parse();
  SearchConfig cfg;
  SearchState s0 = initial_state(p, cfg);
  int folds = 0, macros = 0;
  for (const auto& a : enumerate_actions(s0, cfg)) {
    folds += a.kind == TransformAction::Kind::Fold;
    macros += a.kind == TransformAction::Kind::MacroFold;
  }
  CHECK(folds == 0);
  CHECK(macros == 1);
}

TEST_CASE("state key distinguishes todo position but not rule naming") {
  Program p = load_benchmark("cky3").parse();
  SearchConfig cfg;
  SearchState s0 = initial_state(p, cfg);
  auto actions = enumerate_actions(s0, cfg);
  SearchState skipped = transition(s0, actions[0], cfg);
  CHECK(state_key(s0, cfg) != state_key(skipped, cfg));  // program equal, todo differs

  SearchConfig off = cfg;
  off.use_todo = false;
  SearchState a = initial_state(p, off);
  CHECK(state_key(a, off) == canonicalize(p));
}

TEST_CASE("beam and mcts match the exhaustive oracle on tiny programs") {
  struct Tiny {
    const char* name;
    std::string text;
  };
  std::vector<Tiny> cases = {
      {"chain-4", kChain4},
      {"path", load_benchmark("path").program_text},
      {"toy", kToy},
  };
  for (const auto& t : cases) {
    Program p = parse_program(t.text);
    SearchConfig cfg;
    cfg.max_depth = 6;
    SearchResult oracle = exhaustive_search(p, 6, cfg);
    for (uint64_t seed = 0; seed < 10; ++seed) {
      CAPTURE(t.name);
      CAPTURE(seed);
      cfg.seed = seed;
      CHECK(beam_search(p, 10000, cfg).best_degree == oracle.best_degree);
      CHECK(mcts(p, program_degree(p), 10000, cfg).best_degree == oracle.best_degree);
    }
  }
}

TEST_CASE("exhaustive search dominates beam search") {
  Program p = parse_program(kToy);
  SearchConfig cfg;
  cfg.max_depth = 5;
  SearchResult oracle = exhaustive_search(p, 5, cfg);
  for (int b : {1, 2, 5, 50}) {
    CHECK(oracle.best_degree <= beam_search(p, b, cfg).best_degree);
  }
}

TEST_CASE("determinism under seed") {
  Program p = load_benchmark("hmm").parse();
  SearchConfig cfg;
  cfg.seed = 17;
  SearchResult a = mcts(p, program_degree(p), 50, cfg);
  SearchResult b = mcts(p, program_degree(p), 50, cfg);
  CHECK(a.trace == b.trace);
  CHECK(a.best_degree == b.best_degree);
  CHECK(canonicalize(a.best_program) == canonicalize(b.best_program));

  SearchResult c = beam_search(p, 10, cfg);
  SearchResult d = beam_search(p, 10, cfg);
  CHECK(c.trace == d.trace);
  CHECK(canonicalize(c.best_program) == canonicalize(d.best_program));
}

TEST_CASE("depth bound is respected") {
  Program p = load_benchmark("cky3").parse();
  SearchConfig cfg;
  cfg.max_depth = 2;
  SearchResult r = beam_search(p, 5, cfg);
  CHECK(r.trace.size() <= 2);
}

TEST_CASE("replaying the trace reproduces the best program") {
  Program p = load_benchmark("cky3").parse();
  SearchConfig cfg;
  SearchResult r = beam_search(p, 10, cfg);
  SearchState s = initial_state(p, cfg);
  for (const auto& step : r.trace) {
    auto actions = enumerate_actions(s, cfg);
    bool applied = false;
    for (const auto& a : actions) {
      if (a.describe() == step) {
        s = transition(s, a, cfg);
        applied = true;
        break;
      }
    }
    REQUIRE_MESSAGE(applied, "trace step not reproducible: ", step);
  }
  CHECK(canonicalize(s.program) == canonicalize(r.best_program));
}

TEST_CASE("todo-off mode exposes actions over all rules") {
  Program p = load_benchmark("cky3").parse();
  SearchConfig on, off;
  off.use_todo = false;
  auto a_on = enumerate_actions(initial_state(p, on), on);
  auto a_off = enumerate_actions(initial_state(p, off), off);
  CHECK(a_off.size() > a_on.size());
  for (const auto& a : a_off) CHECK(a.kind != TransformAction::Kind::Skip);
}
