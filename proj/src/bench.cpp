#include "dynaopt/bench.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "dynaopt/analysis.hpp"
#include "dynaopt/search.hpp"
#include "dynaopt/transforms.hpp"

namespace dynaopt {

namespace {

const char* kChain10 = R"(
z += w(Y1,Y2) * w(Y2,Y3) * w(Y3,Y4) * w(Y4,Y5) * w(Y5,Y6) * w(Y6,Y7) * w(Y7,Y8) * w(Y8,Y9) * w(Y9,Y10).
input w(_,_).
output z.
)";

const char* kChain20 = R"(
z += w(Y1,Y2) * w(Y2,Y3) * w(Y3,Y4) * w(Y4,Y5) * w(Y5,Y6) * w(Y6,Y7) * w(Y7,Y8) * w(Y8,Y9) * w(Y9,Y10) * w(Y10,Y11) * w(Y11,Y12) * w(Y12,Y13) * w(Y13,Y14) * w(Y14,Y15) * w(Y15,Y16) * w(Y16,Y17) * w(Y17,Y18) * w(Y18,Y19) * w(Y19,Y20).
input w(_,_).
output z.
)";

// Complete 2-node graph (self-loops included), every edge 0.5:
// 2^N paths of N-1 edges, so z = 2^N * 0.5^(N-1) = 2.0 for any N.
const char* kChainFixture = R"(
w(0,0) = 0.5.
w(0,1) = 0.5.
w(1,0) = 0.5.
w(1,1) = 0.5.
)";

// Single self-loop: the 20-step join over the complete 2-node graph would
// enumerate ~2M partials in the unfolded program, which is too slow for the
// per-transform soundness gate.  Here z = 0.5^19 exactly (dyadic).
const char* kChain20Fixture = R"(
w(0,0) = 0.5.
)";

const char* kBilexUnlabeled = R"(
phrase(I,H,K) += phrase(I,H,J) * phrase(J,H',K) * score(H,H',left).
phrase(I,H',K) += phrase(I,H,J) * phrase(J,H',K) * score(H,H',right).
phrase(I,I,K) += word(I,I,K).
goal += phrase(0,_,N) * len(N).
input word(_,_,_); len(_); score(_,_,_).
output goal.
)";

const char* kBilexUnlabeledFixture = R"(
word(0,0,1) = 1.
word(1,1,2) = 1.
score(0,1,left) = 0.5.
score(0,1,right) = 0.25.
len(2) = 1.
)";

const char* kBilexLabeled = R"(
rconstit(X,H,I,K) += rewrite(X,H) * word(H,I,K).
rconstit(X,H,I,K) += rewrite(X,H,Y,H,Z,H') * rconstit(Y,H,I,J) * constit(Z,H',J,K).
constit(X,H,I,K) += rconstit(X,H,I,K).
constit(X,H,I,K) += rewrite(X,H,Y,H',Z,H) * constit(Y,H',I,J) * constit(Z,H,J,K).
goal += constit(s,H,0,N) * len(N).
input word(_,_,_); len(_); rewrite(_,_); rewrite(_,_,_,_,_,_).
output goal.
)";

const char* kBilexLabeledFixture = R"(
word(a,0,1) = 1.
word(b,1,2) = 1.
rewrite(x,a) = 1.
rewrite(y,b) = 1.
rewrite(s,a,x,a,y,b) = 0.5.
rewrite(s2,b,x,a,y,b) = 0.5.
len(2) = 1.
)";

const char* kSplitHead = R"(
goal += x(0,_,N) * len(N).
l(I,K) += word(left,I,K).
r(I,K) += word(right,I,K).
l(I,K) += x(I,V,J) * l(J,K) * score(left,V,K).
r(I,K) += r(I,J) * x(J,V,K) * score(right,V,I).
x(I,J,K) += l(I,J) * r(J,K).
input word(_,_,_); score(_,_,_); len(_).
output goal.
)";

const char* kSplitHeadFixture = R"(
word(left,0,1) = 1.
word(right,1,2) = 1.
word(left,2,3) = 0.5.
word(right,3,4) = 0.5.
score(left,1,3) = 0.5.
score(right,3,1) = 0.5.
len(2) = 1.
len(4) = 0.5.
)";

const char* kCky3 = R"(
beta(X,I,K) += gamma(X,Y,Z) * beta(Y,I,J) * beta(Z,J,K).
beta(X,I,K) += gamma(X,Y) * beta(Y,I,K).
beta(X,I,K) += gamma(X,Y) * word(Y,I,K).
z += beta(root,0,N) * len(N).
input word(_,_,_); len(_); gamma(_,_,_); gamma(_,_).
output z.
)";

// Grammar root -> np vp, np -> "papa", vp -> vp0 (unary), vp0 -> "jumped";
// the single parse of the 2-word sentence gives z = 1.0 exactly.
const char* kCky3Fixture = R"(
gamma(root,np,vp) = 1.
gamma(np,papa) = 1.
gamma(vp,vp0) = 1.
gamma(vp0,jumped) = 1.
word(papa,0,1) = 1.
word(jumped,1,2) = 1.
len(2) = 1.
)";

// cky3 plus 4-ary productions in the partially binarized form of the
// O(n^4) parser: the bridge item carries the grammar symbol joined with
// its first child.
const char* kCky4 = R"(
beta(X,I,K) += gamma(X,Y,Z) * beta(Y,I,J) * beta(Z,J,K).
beta(X,I,K) += gamma(X,Y) * beta(Y,I,K).
beta(X,I,K) += gamma(X,Y) * word(Y,I,K).
beta(X,I1,I4) += tmp4(X,Y2,Y3,I1,I2) * beta(Y2,I2,I3) * beta(Y3,I3,I4).
tmp4(X,Y2,Y3,I1,I2) += gamma(X,Y1,Y2,Y3) * beta(Y1,I1,I2).
z += beta(root,0,N) * len(N).
input word(_,_,_); len(_); gamma(_,_,_); gamma(_,_); gamma(_,_,_,_).
output z.
)";

const char* kCky4Fixture = R"(
gamma(root,np,vp) = 1.
gamma(np,papa) = 1.
gamma(vp,vp0) = 1.
gamma(vp0,jumped) = 1.
gamma(root,np,vp,nc) = 0.5.
gamma(nc,wc) = 1.
word(papa,0,1) = 1.
word(jumped,1,2) = 1.
word(wc,2,3) = 1.
len(2) = 1.
len(3) = 0.5.
)";

const char* kCkyGrammar = R"(
beta(X,I,K) += gamma(X,Y,Z) * beta(Y,I,J) * beta(Z,J,K).
beta(X,I,K) += gamma(X,Y) * beta(Y,I,K).
beta(X,I,K) += gamma(X,Y) * word(Y,I,K).
z += beta("S",0,N) * len(N).
gamma("S","NP","VP") += 1.0.
gamma("NP","Det","N") += 1.0.
gamma("NP","NP","PP") += 1.0.
gamma("VP","V","NP") += 1.0.
gamma("VP","V") += 1.0.
gamma("VP","VP","PP") += 1.0.
gamma("PP","P","NP") += 1.0.
gamma("<.>",".") += 1.0.
gamma("NP","Papa") += 1.0.
gamma("N","caviar") += 1.0.
gamma("N","spoon") += 1.0.
gamma("N","fork") += 1.0.
gamma("N","telescope") += 1.0.
gamma("N","boy") += 1.0.
gamma("N","girl") += 1.0.
gamma("N","baby") += 1.0.
gamma("N","man") += 1.0.
gamma("N","woman") += 1.0.
gamma("N","moon") += 1.0.
gamma("N","cat") += 1.0.
gamma("V","ate") += 1.0.
gamma("V","saw") += 1.0.
gamma("V","fed") += 1.0.
gamma("V","said") += 1.0.
gamma("V","jumped") += 1.0.
gamma("P","with") += 1.0.
gamma("P","over") += 1.0.
gamma("P","under") += 1.0.
gamma("P","above") += 1.0.
gamma("P","below") += 1.0.
gamma("P","on") += 1.0.
gamma("P","in") += 1.0.
input word(_,_,_); len(_).
output z.
)";

const char* kCkyGrammarFixture = R"(
word("Papa",0,1) = 1.
word("jumped",1,2) = 1.
len(2) = 1.
)";

const char* kItg = R"(
constit(A,I,K,I',K') += word(X,I,K) * word'(X',I',K') * transduce(A,X,X').
constit(A,I,K,I',K') += constit(B,I,J,I',J') * constit(C,J,K,J',K') * rewrites(A,B,C).
constit(A,I,K,I',K') += constit(B,J,K,I',J') * constit(C,I,J,J',K') * rewrites_inv(A,B,C).
goal += constit("A",0,M,0,N) * len(M,N).
input word(_,_,_); word'(_,_,_); transduce(_,_,_); rewrites(_,_,_); rewrites_inv(_,_,_); len(_,_).
output goal.
)";

const char* kItgFixture = R"(
word(x,0,1) = 1.
word(y,1,2) = 1.
word'(x',0,1) = 1.
word'(y',1,2) = 1.
transduce(b,x,x') = 0.5.
transduce(c,y,y') = 0.5.
transduce(b2,y,x') = 0.5.
transduce(c2,x,y') = 0.5.
rewrites("A",b,c) = 1.
rewrites_inv("A",b2,c2) = 1.
len(2,2) = 1.
)";

const char* kEdit = R"(
align(0,0) min= 1.
align(J,J') min= align(I,I') * word(W,I,J) * word'(W',I',J') * score(W,W').
align(I,J') min= align(I,I') * word'(W',I',J') * score(eps,W').
align(J,I') min= align(I,I') * word(W,I,J) * score(W,eps).
goal min= align(N,N') * len(N) * len'(N').
input word(_,_,_); word'(_,_,_); score(_,_); len(_); len'(_).
output goal.
)";

const char* kEditFixture = R"(
word(a,0,1) = 1.
word'(b,0,1) = 1.
score(a,b) = 0.5.
score(eps,b) = 0.25.
score(a,eps) = 0.25.
len(1) = 1.
len'(1) = 1.
)";

const char* kBarHillel = R"(
goal += beta(0,_,root,_,N) * len(N).
beta(I,A,X,D,K) += beta(I,A,Y,B,J) * beta(J,C,Z,D,K) * gamma(X,Y,Z) * bigram(B,C).
beta(I,X,X,X,K) += tag(X,W) * word(W,I,K).
input len(_); word(_,_,_); bigram(_,_); gamma(_,_,_); tag(_,_).
output goal.
)";

const char* kBarHillelFixture = R"(
tag(x,wa) = 1.
tag(y,wb) = 1.
word(wa,0,1) = 1.
word(wb,1,2) = 1.
gamma(root,x,y) = 1.
bigram(x,y) = 0.5.
len(2) = 1.
)";

const char* kChainExpect = R"(
alpha(S) += start(S).
alpha(S') += alpha(S) * w(S,S').
beta(S) += end(S).
beta(S) += w(S,S') * beta(S').
z += alpha(S) * end(S).
fbar(R) += alpha(S) * w(S,S') * beta(S') * r(S,S',R).
input w(_,_); r(_,_,_); start(_); end(_).
output fbar(_); z.
)";

const char* kChainExpectFixture = R"(
start(a) = 1.
w(a,b) = 0.5.
w(b,c) = 0.5.
end(c) = 1.
r(a,b,f1) = 0.5.
r(b,c,f1) = 0.25.
r(a,b,f2) = 1.
)";

const char* kHmm = R"(
v(0,start) += 1.
v(T',Y') += v(T,Y) * emission(Y,X) * transition(Y,Y') * obs(T,X,T').
goal += v(N,stop) * len(N).
input obs(_,_,_); len(_); emission(_,_); transition(_,_).
output goal.
)";

const char* kHmmFixture = R"(
obs(0,o1,1) = 1.
obs(1,o2,2) = 1.
emission(start,o1) = 0.5.
transition(start,s1) = 0.75.
emission(s1,o2) = 0.5.
transition(s1,stop) = 0.75.
len(2) = 1.
)";

const char* kSemiMarkov = R"(
beta(start,0) += 1.
beta(Y,J) += beta(X,I) * transition(X,Y) * chunk(Y,I,J).
goal += beta(_,N) * len(N).
input transition(_,_); chunk(_,_,_); len(_).
output goal.
)";

const char* kSemiMarkovFixture = R"(
transition(start,s1) = 0.5.
chunk(s1,0,2) = 0.5.
chunk(s1,0,3) = 0.25.
transition(s1,s2) = 0.5.
chunk(s2,2,3) = 0.5.
len(3) = 1.
)";

const char* kPath = R"(
v(S) max= start(S).
v(S') max= v(S) * w(S,S').
goal max= v(S) * stop(S).
input w(_,_); start(_); stop(_).
output goal.
)";

const char* kPathFixture = R"(
start(a) = 1.
w(a,b) = 0.5.
w(b,c) = 0.5.
w(a,c) = 0.125.
stop(c) = 1.
)";

// Renames each rule's variables to V1,V2,... by first occurrence.  The fresh
// names minted by fold/unfold depend on a process-global counter; without this
// normalization the candidate ordering below (elimvar sorts by variable name)
// would not be a function of the seed alone.
Term rename_vars(const Term& t, std::map<std::string, std::string>& m) {
  switch (t.kind()) {
    case TermKind::Variable: {
      auto it = m.find(t.name());
      if (it == m.end())
        it = m.emplace(t.name(), "V" + std::to_string(m.size() + 1)).first;
      return Term::var(it->second);
    }
    case TermKind::Number:
    case TermKind::String:
      return t;
    default: {
      if (t.args().empty()) return t;
      std::vector<Term> args;
      for (const auto& a : t.args()) args.push_back(rename_vars(a, m));
      return Term::compound(t.functor(), std::move(args));
    }
  }
}

Program normalize_variant(Program p) {
  for (auto& r : p.rules) {
    std::map<std::string, std::string> m;
    r.head = rename_vars(r.head, m);
    for (auto& b : r.body) b = rename_vars(b, m);
  }
  return p;
}

std::vector<BenchmarkCase> make_corpus() {
  return {
      {"chain-10", kChain10, 10, 2, kChainFixture, SemiringTag::SumProduct},
      {"chain-20", kChain20, 20, 2, kChain20Fixture, SemiringTag::SumProduct},
      {"bilexical-unlabeled", kBilexUnlabeled, 5, 4, kBilexUnlabeledFixture,
       SemiringTag::SumProduct},
      {"bilexical-labeled", kBilexLabeled, 8, 7, kBilexLabeledFixture, SemiringTag::SumProduct},
      {"split-head", kSplitHead, 4, 3, kSplitHeadFixture, SemiringTag::SumProduct},
      {"cky3", kCky3, 6, 5, kCky3Fixture, SemiringTag::SumProduct},
      {"cky4", kCky4, 7, 6, kCky4Fixture, SemiringTag::SumProduct},
      {"cky+grammar", kCkyGrammar, 6, 3, kCkyGrammarFixture, SemiringTag::SumProduct},
      {"itg", kItg, 9, 8, kItgFixture, SemiringTag::SumProduct},
      {"edit", kEdit, 6, 4, kEditFixture, SemiringTag::MinProduct},
      {"bar-hillel", kBarHillel, 10, 8, kBarHillelFixture, SemiringTag::SumProduct},
      {"chain-expect", kChainExpect, 3, 3, kChainExpectFixture, SemiringTag::SumProduct},
      {"hmm", kHmm, 5, 4, kHmmFixture, SemiringTag::SumProduct},
      {"semi-markov", kSemiMarkov, 4, 3, kSemiMarkovFixture, SemiringTag::SumProduct},
      {"path", kPath, 2, 2, kPathFixture, SemiringTag::MaxProduct},
  };
}

const std::vector<BenchmarkCase>& corpus() {
  static const std::vector<BenchmarkCase> c = make_corpus();
  return c;
}

}  // namespace

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : corpus()) n.push_back(c.name);
    return n;
  }();
  return names;
}

BenchmarkCase load_benchmark(const std::string& name) {
  for (const auto& c : corpus())
    if (c.name == name) return c;
  throw std::invalid_argument("unknown benchmark: " + name);
}

StressVariant generate_stress_variant(const BenchmarkCase& c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Program base = normalize_variant(dead_rule_elimination(c.parse()));
  const int d_opt = c.optimal_degree;

  // Keep variants desk-scale: unfolding mutually recursive rules can blow up
  // the program combinatorially (hundreds of rules, degree in the dozens),
  // which defeats the point of a search benchmark.  Oversized steps are
  // redrawn, never kept.
  const int max_degree = program_degree(base);
  const size_t max_rules = base.rules.size() + 10;

  for (int attempt = 0; attempt < 200; ++attempt) {
    Program p = base;
    std::vector<std::string> trace;
    int steps = 2 + static_cast<int>(rng() % 9);
    for (int s = 0; s < steps; ++s) {
      // Legal fold (per eliminable variable) and unfold actions over all rules.
      struct Cand {
        bool is_fold;
        int rule;
        std::vector<int> alpha;
        std::string var;
        int subgoal;
      };
      std::vector<Cand> cands;
      for (int ri = 0; ri < static_cast<int>(p.rules.size()); ++ri) {
        for (const auto& ev : elimvar(p.rules[ri]))
          cands.push_back({true, ri, ev.subgoals, ev.var, -1});
        for (int k = 0; k < static_cast<int>(p.rules[ri].body.size()); ++k)
          if (can_unfold(p, ri, k)) cands.push_back({false, ri, {}, "", k});
      }
      if (cands.empty()) break;
      std::vector<const Cand*> folds, unfolds;
      for (const auto& cand : cands)
        (cand.is_fold ? folds : unfolds).push_back(&cand);
      bool applied = false;
      for (int draw = 0; draw < 5 && !applied; ++draw) {
        // Pick the action kind first: unfold candidates vastly outnumber fold
        // candidates on larger programs, and a uniform draw over all of them
        // would make nearly every scramble unfold-heavy.
        const std::vector<const Cand*>& pool =
            folds.empty() ? unfolds : (unfolds.empty() || rng() % 2 == 0 ? folds : unfolds);
        const Cand& a = *pool[rng() % pool.size()];
        Program q;
        std::string step;
        if (a.is_fold) {
          q = fold(p, a.rule, a.alpha);
          step = "fold:" + std::to_string(a.rule) + ":" + a.var;
        } else {
          q = unfold(p, a.rule, a.subgoal);
          step = "unfold:" + std::to_string(a.rule) + ":" + std::to_string(a.subgoal);
        }
        q = normalize_variant(dead_rule_elimination(q));
        if (program_degree(q) > max_degree || q.rules.size() > max_rules) continue;
        p = std::move(q);
        trace.push_back(std::move(step));
        applied = true;
      }
      if (!applied) break;
    }
    if (program_degree(p) == d_opt) continue;
    // Reject variants that end up costlier than the original: the point is an
    // inefficient-but-comparable starting point, not a harder program.
    if (program_degree(p) > program_degree(base)) continue;
    if (program_degree(greedy_fold_only(p)) <= d_opt) continue;
    StressVariant v;
    v.base = c.name;
    v.seed = seed;
    v.program = std::move(p);
    v.transform_trace = std::move(trace);
    return v;
  }
  StressVariant v;
  v.base = c.name;
  v.seed = seed;
  v.ungenerable = true;
  return v;
}

double ExperimentReport::overall_percent_optimal(const std::string& method) const {
  int total = 0, opt = 0;
  for (const auto& c : cells)
    if (c.method == method) {
      total += c.generable;
      opt += c.optimal;
    }
  return total == 0 ? 0.0 : 100.0 * opt / total;
}

double ExperimentReport::overall_avg_rel_degree(const std::string& method) const {
  double sum = 0;
  int total = 0;
  for (const auto& c : cells)
    if (c.method == method) {
      sum += c.avg_rel_degree * c.generable;
      total += c.generable;
    }
  return total == 0 ? 0.0 : sum / total;
}

ExperimentReport run_experiment(const std::vector<MethodSpec>& methods, int variants_per_case,
                                uint64_t seed) {
  ExperimentReport report;
  for (const auto& c : corpus()) {
    std::vector<StressVariant> variants;
    for (int i = 0; i < variants_per_case; ++i)
      variants.push_back(generate_stress_variant(c, seed + 1000003 * i + std::hash<std::string>{}(c.name)));
    for (const auto& m : methods) {
      CellResult cell;
      cell.benchmark = c.name;
      cell.method = m.label;
      cell.variants = variants_per_case;
      double rel_sum = 0;
      auto t0 = std::chrono::steady_clock::now();
      for (const auto& v : variants) {
        if (v.ungenerable) {
          cell.notes.push_back("seed " + std::to_string(v.seed) + ": ungenerable");
          continue;
        }
        ++cell.generable;
        SearchConfig cfg;
        cfg.use_todo = m.use_todo;
        cfg.use_macro = m.use_macro;
        cfg.seed = seed ^ v.seed;
        int d_start = program_degree(v.program);
        SearchResult res;
        if (m.kind == "mcts")
          res = mcts(v.program, d_start, m.budget, cfg);
        else
          res = beam_search(v.program, m.budget, cfg);
        int d_found = std::min(res.best_degree, d_start);
        rel_sum += relative_degree(d_start, d_found, c.optimal_degree);
        if (d_found <= c.optimal_degree) ++cell.optimal;
      }
      cell.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (cell.generable > 0) cell.avg_rel_degree = rel_sum / cell.generable;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::string report_json(const ExperimentReport& r) {
  nlohmann::json j;
  j["cells"] = nlohmann::json::array();
  std::vector<std::string> methods;
  for (const auto& c : r.cells) {
    j["cells"].push_back({{"benchmark", c.benchmark},
                          {"method", c.method},
                          {"variants", c.variants},
                          {"generable", c.generable},
                          {"optimal", c.optimal},
                          {"avg_rel_degree", c.avg_rel_degree},
                          {"seconds", c.seconds},
                          {"notes", c.notes}});
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);
  }
  j["overall"] = nlohmann::json::array();
  for (const auto& m : methods)
    j["overall"].push_back({{"method", m},
                            {"percent_optimal", r.overall_percent_optimal(m)},
                            {"avg_rel_degree", r.overall_avg_rel_degree(m)}});
  return j.dump(2);
}

std::string report_table(const ExperimentReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %-24s %9s %9s %12s %9s\n", "benchmark", "method",
                "generable", "optimal", "avg rel deg", "seconds");
  out += buf;
  for (const auto& c : r.cells) {
    std::snprintf(buf, sizeof buf, "%-22s %-24s %6d/%-2d %9d %12.3f %9.2f\n",
                  c.benchmark.c_str(), c.method.c_str(), c.generable, c.variants, c.optimal,
                  c.avg_rel_degree, c.seconds);
    out += buf;
  }
  std::vector<std::string> methods;
  for (const auto& c : r.cells)
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);
  for (const auto& m : methods) {
    std::snprintf(buf, sizeof buf, "overall %-30s  %% optimal %6.1f  avg rel degree %6.3f\n",
                  m.c_str(), r.overall_percent_optimal(m), r.overall_avg_rel_degree(m));
    out += buf;
  }
  return out;
}

}  // namespace dynaopt
