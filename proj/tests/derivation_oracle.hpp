#pragma once

// Brute-force derivation-tree enumerator used as an independent oracle for
// the interpreter.  A derivation of a ground item is a rule instance plus a
// derivation of every non-input subgoal; its weight is the ⊗-product of the
// leaf fact values (and numeric literals).  The item's value is the ⊕-sum
// over structurally distinct derivation trees.  Saturates bottom-up with a
// round cap, so cyclic programs are truncated at bounded derivation height
// (fixture weights are damped enough that the truncated tail is below the
// comparison tolerance).

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dynaopt/interpreter.hpp"
#include "dynaopt/program.hpp"

namespace oracle {

using namespace dynaopt;

struct DerivSet {
  std::map<std::string, double> trees;  // repr -> weight
};

inline std::string leaf_repr(const Term& t) { return "." + t.str_repr(); }

// Enumerates all (Subst, tree reprs, weight) completions of body[k..] against
// the current derivation table.
struct Enumerator {
  const Program& p;
  const Semiring& s;
  const std::map<Term, DerivSet>& table;

  void complete(const std::vector<Term>& body, size_t k, const Subst& theta,
                const std::string& children, double w,
                const std::function<void(const Subst&, const std::string&, double)>& emit) {
    if (k == body.size()) {
      emit(theta, children, w);
      return;
    }
    Term goal = theta.apply(body[k]);
    if (goal.is_number()) {
      complete(body, k + 1, theta, children + "," + goal.str_repr(),
               s.multiply(w, goal.value()), emit);
      return;
    }
    for (const auto& [item, ds] : table) {
      auto mgu = unify(goal, item);
      if (!mgu) continue;
      Subst theta2 = theta;
      bool ok = true;
      for (const auto& [v, t] : mgu->bindings())
        if (!theta2.bind(v, t)) ok = false;
      if (!ok) continue;
      for (const auto& [repr, dw] : ds.trees)
        complete(body, k + 1, theta2, children + "," + repr, s.multiply(w, dw), emit);
    }
  }
};

inline Valuation enumerate_derivations(const Program& p, const Semiring& s,
                                       const Valuation& inputs, int round_cap = 50,
                                       size_t per_item_cap = 200000) {
  std::map<Term, DerivSet> table;
  for (const auto& [t, v] : inputs) table[t].trees[leaf_repr(t)] = v;

  for (int round = 0; round < round_cap; ++round) {
    bool grew = false;
    std::map<Term, DerivSet> next = table;
    for (const auto& r : p.rules) {
      Enumerator e{p, s, table};
      e.complete(r.body, 0, Subst{}, "", s.one(),
                 [&](const Subst& theta, const std::string& children, double w) {
                   Term head = theta.apply(r.head);
                   if (!head.ground()) return;
                   auto& ds = next[head];
                   if (ds.trees.size() >= per_item_cap) return;
                   std::string repr = std::to_string(r.uid) + "(" + children + ")";
                   if (ds.trees.emplace(repr, w).second) grew = true;
                 });
    }
    table = std::move(next);
    if (!grew) break;
  }

  Valuation out;
  for (const auto& [item, ds] : table) {
    if (!matches_any_pattern(item, p.outputs)) continue;
    double acc = s.zero();
    for (const auto& [repr, w] : ds.trees) acc = s.combine(acc, w);
    out[item] = acc;
  }
  return out;
}

}  // namespace oracle
