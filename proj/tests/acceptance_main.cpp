// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "derivation_oracle.hpp"
#include "dynaopt/analysis.hpp"
#include "dynaopt/bench.hpp"
#include "dynaopt/interpreter.hpp"
#include "dynaopt/search.hpp"
#include "dynaopt/transforms.hpp"
#include "test_util.hpp"

using namespace dynaopt;

namespace {

int g_failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", n, detail.c_str());
  if (!ok) ++g_failures;
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Expected per-benchmark degrees, frozen independently of the corpus metadata.
const std::map<std::string, std::pair<int, int>> kDegrees = {
    {"chain-10", {10, 2}},
    {"chain-20", {20, 2}},
    {"bilexical-unlabeled", {5, 4}},
    {"bilexical-labeled", {8, 7}},
    {"split-head", {4, 3}},
    {"cky3", {6, 5}},
    {"cky4", {7, 6}},
    {"cky+grammar", {6, 3}},
    {"itg", {9, 8}},
    {"edit", {6, 4}},
    {"bar-hillel", {10, 8}},
    {"chain-expect", {3, 3}},
    {"hmm", {5, 4}},
    {"semi-markov", {4, 3}},
    {"path", {2, 2}},
};

// Per-transform semantic soundness gate shared by criteria 1 and 3.
struct SoundnessGate {
  int checked = 0;
  int violations = 0;
  std::string first_violation;

  std::set<std::string> seen;                               // (before, action) pairs
  std::map<std::string, Valuation> eval_memo;               // canonical program -> outputs
  std::map<std::string, std::string> eval_fail;             // canonical program -> error

  const Valuation* eval_cached(const Program& p, const std::string& key, const Semiring& s,
                               const Valuation& inputs, std::string* err) {
    auto bad = eval_fail.find(key);
    if (bad != eval_fail.end()) {
      *err = bad->second;
      return nullptr;
    }
    auto it = eval_memo.find(key);
    if (it == eval_memo.end()) {
      try {
        it = eval_memo.emplace(key, evaluate(p, s, inputs)).first;
      } catch (const EvalError& e) {
        eval_fail.emplace(key, e.what());
        *err = e.what();
        return nullptr;
      }
    }
    return &it->second;
  }

  void check(const BenchmarkCase& c, const Semiring& s, const Valuation& inputs,
             const Program& before, const Program& after, const std::string& action) {
    std::string kb = canonicalize(before);
    if (!seen.insert(kb + "\x1f" + action).second) return;
    ++checked;
    std::string err;
    const Valuation* vb = eval_cached(before, kb, s, inputs, &err);
    const Valuation* va = vb ? eval_cached(after, canonicalize(after), s, inputs, &err) : nullptr;
    std::string why;
    if (!vb || !va || !valuations_match(*vb, *va, s, &why)) {
      ++violations;
      if (first_violation.empty())
        first_violation = c.name + " " + action + ": " + (why.empty() ? err : why);
    }
  }
};

void criteria_1_and_3() {
  SoundnessGate gate;
  bool all_optimal = true;
  double worst_case_s = 0;
  std::string detail1;
  for (const auto& name : benchmark_names()) {
    BenchmarkCase c = load_benchmark(name);
    Program p0 = c.parse();
    Semiring s = Semiring::from_tag(c.semiring);
    Valuation inputs = c.fixture();
    SearchConfig cfg;
    cfg.on_transform = [&](const Program& b, const Program& a, const std::string& act) {
      gate.check(c, s, inputs, b, a, act);
    };

    auto run = [&](const std::string& label, int got, double secs) {
      worst_case_s = std::max(worst_case_s, secs);
      if (got != c.optimal_degree || secs > 60.0) {
        all_optimal = false;
        if (detail1.empty()) {
          std::ostringstream os;
          os << name << " " << label << ": degree " << got << " (want " << c.optimal_degree
             << ") in " << secs << "s";
          detail1 = os.str();
        }
      }
    };

    auto t0 = std::chrono::steady_clock::now();
    cfg.seed = 0;
    run("beam B=10", beam_search(p0, 10, cfg).best_degree, seconds_since(t0));
    for (uint64_t seed : {0, 1, 2}) {
      cfg.seed = seed;
      t0 = std::chrono::steady_clock::now();
      int got = mcts(p0, program_degree(p0), 100, cfg).best_degree;
      run("mcts R=100 seed " + std::to_string(seed), got, seconds_since(t0));
    }
  }
  if (detail1.empty()) {
    std::ostringstream os;
    os << "beam B=10 and mcts R=100 (3 seeds) reach the optimal degree on all 15 benchmarks"
       << ", slowest case " << worst_case_s << "s";
    detail1 = os.str();
  }
  report(1, all_optimal, detail1);

  std::ostringstream os2;
  if (kDegrees.size() != benchmark_names().size()) {
    report(2, false, "corpus size mismatch");
  } else {
    bool ok2 = true;
    std::string bad;
    for (const auto& [name, d] : kDegrees) {
      int got = program_degree(dead_rule_elimination(load_benchmark(name).parse()));
      if (got != d.first) {
        ok2 = false;
        bad = name + ": degree " + std::to_string(got) + " != " + std::to_string(d.first);
        break;
      }
    }
    report(2, ok2, ok2 ? "analyze reports the expected initial degree on all 15 benchmarks" : bad);
  }

  std::ostringstream os3;
  os3 << gate.checked << " distinct transforms checked on fixtures, " << gate.violations
      << " violation(s)";
  if (gate.violations) os3 << "; first: " << gate.first_violation;
  report(3, gate.violations == 0 && gate.checked > 0, os3.str());
}

void criterion_4() {
  bool ok = true;
  std::string bad;
  auto need = [&](bool cond, const char* what) {
    if (!cond && ok) {
      ok = false;
      bad = what;
    }
  };

  Program cky = parse_program(R"(
    beta(X,I,K) += beta(Y,I,J) * beta(Z,J,K) * gamma(X,Y,Z).
    beta(X,I,K) += gamma(X,Y) * word(Y,I,K).
    z += beta(root,0,N) * len(N).
    input gamma(_,_,_); gamma(_,_); word(_,_,_); len(_).
    output z.
  )");
  Program folded = fold(cky, 0, {0, 2});  // fold Y out of the binary rule
  need(program_degree(cky) == 6 && program_degree(folded) == 5 &&
           testutil::alpha_equiv(folded, R"(
    beta(X,I,K) += gen_999(I,J,X,Z) * beta(Z,J,K).
    gen_999(I,J,X,Z) += beta(Y,I,J) * gamma(X,Y,Z).
    beta(X,I,K) += gamma(X,Y) * word(Y,I,K).
    z += beta(root,0,N) * len(N).
    input gamma(_,_,_); gamma(_,_); word(_,_,_); len(_).
    output z.
  )"),
       "fold of the CKY binary rule");

  Program trace = parse_program(R"(
    a(I,K) += b(I,J) * c(J,K).
    trace += a(L,L).
    input b(_,_); c(_,_).
    output trace.
  )");
  Program unfolded = dead_rule_elimination(unfold(trace, 1, 0));
  need(program_degree(trace) == 3 && program_degree(unfolded) == 2 &&
           testutil::alpha_equiv(
               unfolded, "trace += b(L,J) * c(J,L).\ninput b(_,_); c(_,_).\noutput trace."),
       "unfold of the trace program");

  Program felim = parse_program(R"(
    f(I) += 1.
    f(I) += g(I) * m(I,J).
    goal += f(I) * h(I).
    input g(_); m(_,_); h(_).
    output goal.
  )");
  auto elim = eliminate(felim, 0);
  need(elim.has_value() && testutil::alpha_equiv(*elim, R"(
    f(I) += g(I) * m(I,J).
    goal += f(I) * h(I).
    goal += 1 * h(I).
    input g(_); m(_,_); h(_).
    output goal.
  )"),
       "eliminate of the non-range-restricted rule");

  Program lin = parse_program(
      "goal += f(X) * g(X,Y) * f(Y).\nf(X) += in(X).\ninput in(_); g(_,_). output goal.");
  Program linr = linearize(lin, Term::compound("f", {Term::var("W")}));
  need(testutil::alpha_equiv(linr, R"(
    goal += f(X) * g(X,Y) * gen_999(Y).
    gen_999(Y) += f(Y).
    f(X) += in(X).
    input in(_); g(_,_). output goal.
  )"),
       "linearize of the repeated-subgoal rule");

  report(4, ok, ok ? "fold/unfold/eliminate/linearize worked examples reproduced up to renaming"
                   : bad);
}

void criterion_5() {
  const char* kChain4 = R"(
    z += w(Y1,Y2) * w(Y2,Y3) * w(Y3,Y4).
    input w(_,_). output z.
  )";
  const char* kToy = R"(
    f(X) += u(X,Y) * v(Y).
    goal += f(X) * s(X).
    input u(_,_); v(_); s(_). output goal.
  )";
  struct Tiny {
    std::string name;
    std::string text;
  };
  std::vector<Tiny> cases = {{"chain-4", kChain4},
                             {"path", load_benchmark("path").program_text},
                             {"toy", kToy}};
  bool ok = true;
  std::string bad;
  for (const auto& t : cases) {
    Program p = parse_program(t.text);
    SearchConfig cfg;
    cfg.max_depth = 6;
    int oracle = exhaustive_search(p, 6, cfg).best_degree;
    for (uint64_t seed = 0; seed < 10 && ok; ++seed) {
      cfg.seed = seed;
      int b = beam_search(p, 10000, cfg).best_degree;
      int m = mcts(p, program_degree(p), 10000, cfg).best_degree;
      if (b != oracle || m != oracle) {
        ok = false;
        bad = t.name + " seed " + std::to_string(seed) + ": beam " + std::to_string(b) +
              ", mcts " + std::to_string(m) + ", exhaustive " + std::to_string(oracle);
      }
    }
  }
  report(5, ok, ok ? "beam B=10^4 and mcts R=10^4 match the exhaustive oracle on 3 tiny programs"
                     ", 10 seeds each"
                   : bad);
}

void criteria_6_and_7() {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport r = run_experiment({{"beam-100", "beam", 100, true, true}}, 10, 20260825);
  double secs = seconds_since(t0);
  double rel = r.overall_avg_rel_degree("beam-100");
  double pct = r.overall_percent_optimal("beam-100");

  // Variants are a pure function of (case, seed), so a second run over the same
  // seed exercises the identical variant set with macro folding switched off.
  ExperimentReport rn =
      run_experiment({{"beam-100-nomacro", "beam", 100, true, false}}, 10, 20260825);
  double pct_nomacro = rn.overall_percent_optimal("beam-100-nomacro");

  std::ostringstream os6;
  os6 << "stress suite (10 variants/benchmark, beam B=100): avg rel degree " << rel
      << " (need >= 0.85), % optimal " << pct << " (need >= 75), " << secs
      << "s (need <= 1800)";
  report(6, rel >= 0.85 && pct >= 75.0 && secs <= 1800.0, os6.str());

  std::ostringstream os7;
  os7 << "macro folding % optimal " << pct << " vs " << pct_nomacro
      << " without, same variants and seeds";
  report(7, pct >= pct_nomacro, os7.str());
}

void criterion_8() {
  bool ok = true;
  std::string bad;
  for (const auto& name : benchmark_names()) {
    BenchmarkCase c = load_benchmark(name);
    Program p = c.parse();
    Semiring s = Semiring::from_tag(c.semiring);
    Valuation got = evaluate(p, s, c.fixture());
    Valuation expect = oracle::enumerate_derivations(p, s, c.fixture());
    std::string why;
    if (!valuations_match(expect, got, s, &why) && ok) {
      ok = false;
      bad = name + ": " + why;
    }
  }
  auto z_of = [](const char* name) {
    BenchmarkCase c = load_benchmark(name);
    Valuation out = evaluate(c.parse(), Semiring::from_tag(c.semiring), c.fixture());
    return out.at(Term::atom("z"));
  };
  if (ok && std::abs(z_of("chain-10") - 2.0) > 1e-9) {
    ok = false;
    bad = "chain-10 z != 2.0";
  }
  if (ok && std::abs(z_of("cky3") - 1.0) > 1e-9) {
    ok = false;
    bad = "cky3 z != 1.0";
  }
  report(8, ok,
         ok ? "evaluate matches the derivation enumerator on all 15 fixtures; chain z=2.0, "
              "cky3 z=1.0"
            : bad);
}

Term rand_term(std::mt19937_64& rng, int depth) {
  switch (rng() % (depth > 0 ? 5 : 3)) {
    case 0:
      return Term::var(std::string(1, "XYZW"[rng() % 4]));
    case 1:
      return Term::atom(std::string(1, "ab"[rng() % 2]));
    case 2:
      return Term::number(static_cast<double>(rng() % 3));
    default: {
      std::vector<Term> args;
      int n = 1 + static_cast<int>(rng() % 3);
      for (int i = 0; i < n; ++i) args.push_back(rand_term(rng, depth - 1));
      return Term::compound(std::string(1, "fgh"[rng() % 3]), std::move(args));
    }
  }
}

void criterion_9() {
  auto f = [](std::vector<Term> a) { return Term::compound("f", std::move(a)); };
  auto g = [](std::vector<Term> a) { return Term::compound("g", std::move(a)); };
  Term X = Term::var("X"), Y = Term::var("Y"), Z = Term::var("Z");

  bool ok = true;
  auto mgu = unify(f({Y, Z}), f({g({X}), Term::number(4)}));
  ok = ok && mgu.has_value() && *mgu->lookup("Y") == g({X}) &&
       *mgu->lookup("Z") == Term::number(4);
  ok = ok && !unify(f({X, g({X})}), f({Term::number(3), g({Term::number(4)})})).has_value();
  ok = ok && !unify(X, f({X})).has_value();          // occurs check
  ok = ok && !unify(f({X, X}), f({Y, g({Y})})).has_value();
  ok = ok && !unify(f({X}), g({X})).has_value();     // functor clash

  std::mt19937_64 rng(424242);
  int successes = 0, trials = 10000;
  for (int i = 0; i < trials && ok; ++i) {
    Term a = rand_term(rng, 2);
    Term b = rand_term(rng, 2);
    auto ab = unify(a, b);
    auto ba = unify(b, a);
    if (ab.has_value() != ba.has_value()) ok = false;
    if (!ab) continue;
    ++successes;
    Term ta = ab->apply(a);
    if (!(ta == ab->apply(b)) || !(ta == ab->apply(ta))) ok = false;
  }
  ok = ok && successes > 100;
  std::ostringstream os;
  os << "unification worked examples plus " << trials << " randomized mgu checks ("
     << successes << " unifiable pairs)";
  report(9, ok, os.str());
}

}  // namespace

int main() {
  criteria_1_and_3();
  criterion_4();
  criterion_5();
  criteria_6_and_7();
  criterion_8();
  criterion_9();
  return g_failures == 0 ? 0 : 1;
}
