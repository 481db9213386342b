#include "dynaopt/transforms.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <queue>
#include <set>
#include <stdexcept>

#include "dynaopt/analysis.hpp"

namespace dynaopt {

namespace {

void vars_in_order(const Term& t, std::vector<std::string>& out, std::set<std::string>& seen) {
  if (t.is_var()) {
    if (seen.insert(t.name()).second) out.push_back(t.name());
    return;
  }
  for (const auto& a : t.args()) vars_in_order(a, out, seen);
}

std::vector<std::string> rule_vars_in_order(const Rule& r) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  vars_in_order(r.head, out, seen);
  for (const auto& b : r.body) vars_in_order(b, out, seen);
  return out;
}

Term rename_functors(const Term& t, const std::map<std::string, std::string>& m) {
  if (t.kind() == TermKind::Atom || t.is_compound()) {
    std::string f = t.name();
    auto it = m.find(f);
    if (it != m.end()) f = it->second;
    if (!t.is_compound()) return Term::atom(std::move(f));
    std::vector<Term> args;
    args.reserve(t.args().size());
    for (const auto& a : t.args()) args.push_back(rename_functors(a, m));
    return Term::compound(std::move(f), std::move(args));
  }
  return t;
}

Rule map_rule(const Rule& r, const std::map<std::string, std::string>& var_map,
              const std::map<std::string, std::string>& fun_map) {
  Rule out;
  out.uid = r.uid;
  out.head = rename_functors(rename_vars(r.head, var_map), fun_map);
  for (const auto& b : r.body)
    out.body.push_back(rename_functors(rename_vars(b, var_map), fun_map));
  return out;
}

}  // namespace

Program fold(const Program& p, int i, const std::vector<int>& alpha_in) {
  if (i < 0 || i >= static_cast<int>(p.rules.size()))
    throw std::invalid_argument("fold: rule index out of range");
  const Rule& r = p.rules[i];
  std::vector<int> alpha = alpha_in;
  std::sort(alpha.begin(), alpha.end());
  alpha.erase(std::unique(alpha.begin(), alpha.end()), alpha.end());
  if (alpha.empty()) throw std::invalid_argument("fold: empty subgoal set");
  if (alpha.front() < 0 || alpha.back() >= static_cast<int>(r.body.size()))
    throw std::invalid_argument("fold: subgoal index out of range");
  if (alpha.size() == r.body.size())
    throw std::invalid_argument("fold: cannot fold the entire body");

  std::set<int> in_alpha(alpha.begin(), alpha.end());
  std::set<std::string> vars_alpha, vars_rest;
  for (size_t k = 0; k < r.body.size(); ++k)
    collect_vars(r.body[k], in_alpha.count(static_cast<int>(k)) ? vars_alpha : vars_rest);
  std::set<std::string> keep = vars_rest;
  collect_vars(r.head, keep);

  // The new item carries the variables shared between the folded subgoals and
  // the rest of the rule (incl. the head); the others are summed out.
  std::vector<Term> shared;
  for (const auto& v : vars_alpha)
    if (keep.count(v)) shared.push_back(Term::var(v));

  std::string name = gensym();
  Term gen_item = shared.empty() ? Term::atom(name) : Term::compound(name, shared);

  Rule rewritten;
  rewritten.uid = r.uid;
  rewritten.head = r.head;
  rewritten.body.push_back(gen_item);
  for (size_t k = 0; k < r.body.size(); ++k)
    if (!in_alpha.count(static_cast<int>(k))) rewritten.body.push_back(r.body[k]);

  Rule definition;
  definition.uid = next_rule_uid();
  definition.head = gen_item;
  for (int k : alpha) definition.body.push_back(r.body[k]);

  Program out = p;
  out.rules[i] = std::move(rewritten);
  out.rules.push_back(std::move(definition));
  return out;
}

bool can_unfold(const Program& p, int i, int k) {
  if (i < 0 || i >= static_cast<int>(p.rules.size())) return false;
  const Rule& r = p.rules[i];
  if (k < 0 || k >= static_cast<int>(r.body.size())) return false;
  const Term& b = r.body[k];
  if (b.is_number()) return false;
  if (matches_any_pattern(b, p.inputs)) return false;
  return true;
}

Program unfold(const Program& p, int i, int k, std::vector<std::string>* warnings) {
  if (i < 0 || i >= static_cast<int>(p.rules.size()))
    throw std::invalid_argument("unfold: rule index out of range");
  const Rule r = p.rules[i];
  if (k < 0 || k >= static_cast<int>(r.body.size()))
    throw std::invalid_argument("unfold: subgoal index out of range");
  if (r.body[k].is_number())
    throw std::invalid_argument("unfold: cannot unfold a numeric literal");
  if (matches_any_pattern(r.body[k], p.inputs))
    throw std::invalid_argument("unfold: subgoal matches an input declaration");

  Program out;
  out.inputs = p.inputs;
  out.outputs = p.outputs;
  out.agg = p.agg;
  for (int j = 0; j < static_cast<int>(p.rules.size()); ++j)
    if (j != i) out.rules.push_back(p.rules[j]);

  bool matched = false;
  for (const Rule& s : p.rules) {
    Rule sf = fresh_rule(s);  // standardize apart (covers self-recursion)
    auto theta = unify(r.body[k], sf.head);
    if (!theta) continue;
    matched = true;
    Rule spec;
    spec.uid = next_rule_uid();
    spec.head = theta->apply(r.head);
    for (int j = 0; j < k; ++j) spec.body.push_back(theta->apply(r.body[j]));
    for (const auto& b : sf.body) spec.body.push_back(theta->apply(b));
    for (int j = k + 1; j < static_cast<int>(r.body.size()); ++j)
      spec.body.push_back(theta->apply(r.body[j]));
    out.rules.push_back(std::move(spec));
  }
  if (!matched && warnings)
    warnings->push_back("subgoal " + r.body[k].str_repr() +
                        " matches no rule head; rule deleted (item is identically zero)");
  return out;
}

Program linearize(const Program& p, const Term& z) {
  Program out = p;
  std::vector<Rule> bridges;
  for (auto& r : out.rules) {
    std::vector<int> kept;
    for (int k = 0; k < static_cast<int>(r.body.size()); ++k) {
      if (r.body[k].is_number()) continue;
      if (!unify(r.body[k], fresh(z))) continue;
      bool dup = false;
      for (int j : kept)
        if (unify(r.body[j], r.body[k])) {  // shared variables bind jointly
          dup = true;
          break;
        }
      if (!dup) {
        kept.push_back(k);
        continue;
      }
      std::vector<std::string> names;
      std::set<std::string> seen;
      vars_in_order(r.body[k], names, seen);
      std::vector<Term> args;
      for (const auto& n : names) args.push_back(Term::var(n));
      std::string name = gensym();
      Term gen_item = args.empty() ? Term::atom(name) : Term::compound(name, args);
      Rule bridge;
      bridge.uid = next_rule_uid();
      bridge.head = gen_item;
      bridge.body.push_back(r.body[k]);
      bridges.push_back(std::move(bridge));
      r.body[k] = gen_item;
    }
  }
  for (auto& b : bridges) out.rules.push_back(std::move(b));
  return out;
}

std::optional<Program> eliminate(const Program& p, int i) {
  if (i < 0 || i >= static_cast<int>(p.rules.size()))
    throw std::invalid_argument("eliminate: rule index out of range");
  const Rule target = p.rules[i];
  if (matches_any_pattern(target.head, p.outputs)) return std::nullopt;
  // Directly recursive rules cannot be eliminated (splicing never terminates
  // the item's dependence on itself).
  for (const auto& b : target.body)
    if (b.functor() == target.head.functor() && b.arity() == target.head.arity())
      return std::nullopt;

  Program lin = linearize(p, target.head);

  // After linearize each rule may keep at most one subgoal matching the head;
  // two mutually non-unifiable matches would lose a cross term on splicing.
  std::vector<int> match_at(lin.rules.size(), -1);
  for (int j = 0; j < static_cast<int>(lin.rules.size()); ++j) {
    if (j == i) continue;
    int count = 0;
    for (int k = 0; k < static_cast<int>(lin.rules[j].body.size()); ++k) {
      const Term& b = lin.rules[j].body[k];
      if (b.is_number()) continue;
      if (unify(b, fresh_rule(target).head)) {
        ++count;
        match_at[j] = k;
      }
    }
    if (count > 1) return std::nullopt;
  }

  Program out;
  out.inputs = lin.inputs;
  out.outputs = lin.outputs;
  out.agg = lin.agg;
  std::vector<Rule> copies;
  for (int j = 0; j < static_cast<int>(lin.rules.size()); ++j) {
    if (j == i) continue;
    const Rule& r = lin.rules[j];
    out.rules.push_back(r);
    if (match_at[j] < 0) continue;
    Rule s = fresh_rule(target);
    auto theta = unify(r.body[match_at[j]], s.head);
    if (!theta) continue;
    Rule spec;
    spec.uid = next_rule_uid();
    spec.head = theta->apply(r.head);
    for (int k = 0; k < static_cast<int>(r.body.size()); ++k) {
      if (k == match_at[j]) {
        for (const auto& b : s.body) spec.body.push_back(theta->apply(b));
      } else {
        spec.body.push_back(theta->apply(r.body[k]));
      }
    }
    copies.push_back(std::move(spec));
  }
  for (auto& c : copies) out.rules.push_back(std::move(c));
  return out;
}

namespace {

int fold_new_rule_degree(const Rule& r, const std::vector<int>& alpha) {
  std::set<std::string> vs;
  for (int k : alpha) collect_vars(r.body[k], vs);
  return static_cast<int>(vs.size());
}

}  // namespace

Program greedy_fold_only(const Program& p) {
  Program out = p;
  for (size_t i = 0; i < out.rules.size(); ++i) {
    for (;;) {
      auto evs = elimvar(out.rules[i]);
      if (evs.empty()) break;
      const EliminableVar* best = &evs[0];
      int best_deg = fold_new_rule_degree(out.rules[i], evs[0].subgoals);
      for (size_t k = 1; k < evs.size(); ++k) {
        int d = fold_new_rule_degree(out.rules[i], evs[k].subgoals);
        if (d < best_deg) {  // ties resolved by variable name order (evs sorted)
          best = &evs[k];
          best_deg = d;
        }
      }
      out = fold(out, static_cast<int>(i), best->subgoals);
    }
  }
  return out;
}

namespace {

std::mutex g_macro_mutex;
std::map<std::string, std::vector<Rule>> g_macro_memo;  // canonical space
std::atomic<uint64_t> g_macro_hits{0};

std::vector<int> degree_key(const Program& pr) {
  std::vector<int> key;
  key.reserve(pr.rules.size());
  for (const auto& r : pr.rules) key.push_back(rule_degree(r));
  std::sort(key.begin(), key.end(), std::greater<int>());
  return key;
}

// Best-first search over variable-elimination (fold) orders starting from the
// singleton program [rc], deduplicated by canonical form.  Exhaustive for
// small rules; wide rules are bounded by a hard state cap plus a patience
// budget (expansions since the incumbent last improved).
std::vector<Rule> macro_search(const Rule& rc, Aggregator agg) {
  Program start;
  start.agg = agg;
  start.rules = {rc};

  Program best = start;
  std::vector<int> best_key = degree_key(start);
  std::set<std::string> seen{canonicalize(start)};

  using Entry = std::pair<std::vector<int>, Program>;
  auto worse = [](const Entry& a, const Entry& b) { return a.first < b.first; };
  std::multiset<Entry, decltype(worse)> frontier(worse);  // begin() = best
  frontier.insert({best_key, start});

  constexpr size_t kStateCap = 20000;     // visited-state budget
  constexpr size_t kFrontierCap = 4000;  // live frontier bound (memory)
  constexpr size_t kPatience = 3000;
  size_t since_improve = 0;

  while (!frontier.empty() && seen.size() < kStateCap && since_improve < kPatience) {
    Program cur = frontier.begin()->second;
    frontier.erase(frontier.begin());
    ++since_improve;
    for (int j = 0; j < static_cast<int>(cur.rules.size()); ++j) {
      for (const auto& ev : elimvar(cur.rules[j])) {
        Program nxt = fold(cur, j, ev.subgoals);
        std::string key = canonicalize(nxt);
        if (!seen.insert(key).second) continue;
        std::vector<int> dk = degree_key(nxt);
        if (dk < best_key) {
          best_key = dk;
          best = nxt;
          since_improve = 0;
        }
        frontier.insert({std::move(dk), std::move(nxt)});
        if (frontier.size() > kFrontierCap) frontier.erase(std::prev(frontier.end()));
      }
    }
  }
  return best.rules;
}

}  // namespace

Program macro_fold(const Program& p, int i) {
  if (i < 0 || i >= static_cast<int>(p.rules.size()))
    throw std::invalid_argument("macro_fold: rule index out of range");
  const Rule& r = p.rules[i];
  std::string key = canonical_rule_key(r);

  // Rename r into canonical space: variables V1.. and pre-existing generated
  // functors g1.. by first occurrence (matching canonical_rule_key's order).
  std::map<std::string, std::string> var_fwd, var_back, gen_fwd, gen_back;
  for (const auto& v : rule_vars_in_order(r)) {
    std::string cv = "V" + std::to_string(var_fwd.size() + 1);
    var_fwd[v] = cv;
    var_back[cv] = v;
  }
  std::function<void(const Term&)> scan_gens = [&](const Term& t) {
    if (t.kind() == TermKind::Atom || t.is_compound()) {
      if (is_gensym_name(t.name()) && !gen_fwd.count(t.name())) {
        std::string cg = "g" + std::to_string(gen_fwd.size() + 1);
        gen_back[cg] = t.name();
        gen_fwd[t.name()] = cg;
      }
      for (const auto& a : t.args()) scan_gens(a);
    }
  };
  scan_gens(r.head);
  for (const auto& b : r.body) scan_gens(b);
  Rule rc = map_rule(r, var_fwd, gen_fwd);
  rc.uid = 0;

  std::vector<Rule> canon_result;
  bool hit = false;
  {
    std::lock_guard<std::mutex> lock(g_macro_mutex);
    auto it = g_macro_memo.find(key);
    if (it != g_macro_memo.end()) {
      canon_result = it->second;
      hit = true;
    }
  }
  if (hit) {
    ++g_macro_hits;
  } else {
    canon_result = macro_search(rc, p.agg);
    // Normalize the gensyms created during the search to ng1.. so the memo
    // entry is stable; pre-existing g1.. names pass through.
    std::map<std::string, std::string> norm;
    std::function<void(const Term&)> scan_new = [&](const Term& t) {
      if (t.kind() == TermKind::Atom || t.is_compound()) {
        if (is_gensym_name(t.name()) && !norm.count(t.name()))
          norm[t.name()] = "ng" + std::to_string(norm.size() + 1);
        for (const auto& a : t.args()) scan_new(a);
      }
    };
    for (const auto& cr : canon_result) {
      scan_new(cr.head);
      for (const auto& b : cr.body) scan_new(b);
    }
    for (auto& cr : canon_result) cr = map_rule(cr, {}, norm);
    std::lock_guard<std::mutex> lock(g_macro_mutex);
    g_macro_memo.emplace(key, canon_result);
  }

  // Instantiate: canonical variables and pre-existing gens map back to the
  // caller's names; fresh gensyms replace the ng* placeholders.
  std::map<std::string, std::string> fun_back = gen_back;
  std::function<void(const Term&)> alloc_ng = [&](const Term& t) {
    if (t.kind() == TermKind::Atom || t.is_compound()) {
      const std::string& f = t.name();
      if (f.rfind("ng", 0) == 0 && !fun_back.count(f)) fun_back[f] = gensym();
      for (const auto& a : t.args()) alloc_ng(a);
    }
  };
  for (const auto& cr : canon_result) {
    alloc_ng(cr.head);
    for (const auto& b : cr.body) alloc_ng(b);
  }

  Program out;
  out.inputs = p.inputs;
  out.outputs = p.outputs;
  out.agg = p.agg;
  for (int j = 0; j < static_cast<int>(p.rules.size()); ++j)
    if (j != i) out.rules.push_back(p.rules[j]);
  for (const auto& cr : canon_result) {
    Rule inst = map_rule(cr, var_back, fun_back);
    inst.uid = next_rule_uid();
    out.rules.push_back(std::move(inst));
  }
  return out;
}

uint64_t macro_fold_cache_hits() { return g_macro_hits.load(); }

void macro_fold_cache_clear() {
  std::lock_guard<std::mutex> lock(g_macro_mutex);
  g_macro_memo.clear();
  g_macro_hits = 0;
}

}  // namespace dynaopt
