#include "dynaopt/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "dynaopt/analysis.hpp"
#include "dynaopt/transforms.hpp"

namespace dynaopt {

std::string TransformAction::describe() const {
  switch (kind) {
    case Kind::Fold:
      return "fold:" + std::to_string(rule_index) + ":" + var;
    case Kind::Unfold:
      return "unfold:" + std::to_string(rule_index) + ":" + std::to_string(subgoal);
    case Kind::Eliminate:
      return "eliminate:" + std::to_string(rule_index);
    case Kind::MacroFold:
      return "macrofold:" + std::to_string(rule_index);
    case Kind::Skip:
      return "skip";
  }
  return "skip";
}

SearchState initial_state(const Program& p0, const SearchConfig& cfg) {
  SearchState s;
  s.program = dead_rule_elimination(p0);
  if (cfg.use_todo) {
    // Canonical processing order: costliest rules first (they determine the
    // program degree), ties broken by canonical rule key.
    std::vector<const Rule*> order;
    for (const auto& r : s.program.rules) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](const Rule* a, const Rule* b) {
      int da = rule_degree(*a), db = rule_degree(*b);
      if (da != db) return da > db;
      return canonical_rule_key(*a) < canonical_rule_key(*b);
    });
    for (const Rule* r : order) s.todo.push_back(r->uid);
  }
  return s;
}

std::string state_key(const SearchState& s, const SearchConfig& cfg) {
  std::string key = canonicalize(s.program);
  if (cfg.use_todo) {
    key += "\n@todo";
    std::map<uint64_t, const Rule*> by_uid;
    for (const auto& r : s.program.rules) by_uid[r.uid] = &r;
    for (uint64_t uid : s.todo) {
      auto it = by_uid.find(uid);
      if (it != by_uid.end()) key += "\n" + canonical_rule_key(*it->second);
    }
  }
  return key;
}

namespace {

std::vector<int> cost_of(const Program& p) { return tie_break_key(p); }

int degree_of_key(const std::vector<int>& key) { return key.empty() ? 0 : key.front(); }

void actions_for_rule(const Program& p, int idx, const SearchConfig& cfg,
                      std::vector<TransformAction>& out) {
  const Rule& r = p.rules[idx];
  auto evs = elimvar(r);
  if (cfg.use_macro) {
    if (!evs.empty()) {
      TransformAction a;
      a.kind = TransformAction::Kind::MacroFold;
      a.rule_index = idx;
      out.push_back(std::move(a));
    }
  } else {
    for (const auto& ev : evs) {
      TransformAction a;
      a.kind = TransformAction::Kind::Fold;
      a.rule_index = idx;
      a.var = ev.var;
      a.subgoals = ev.subgoals;
      out.push_back(std::move(a));
    }
  }
  for (int k = 0; k < static_cast<int>(r.body.size()); ++k) {
    if (!can_unfold(p, idx, k)) continue;
    TransformAction a;
    a.kind = TransformAction::Kind::Unfold;
    a.rule_index = idx;
    a.subgoal = k;
    out.push_back(std::move(a));
  }
  bool recursive = false;
  for (const auto& b : r.body)
    if (b.functor() == r.head.functor() && b.arity() == r.head.arity()) recursive = true;
  if (!recursive && !matches_any_pattern(r.head, p.outputs) && eliminate(p, idx).has_value()) {
    TransformAction a;
    a.kind = TransformAction::Kind::Eliminate;
    a.rule_index = idx;
    out.push_back(std::move(a));
  }
}

int rule_index_of_uid(const Program& p, uint64_t uid) {
  for (int i = 0; i < static_cast<int>(p.rules.size()); ++i)
    if (p.rules[i].uid == uid) return i;
  return -1;
}

}  // namespace

std::vector<TransformAction> enumerate_actions(const SearchState& s, const SearchConfig& cfg) {
  std::vector<TransformAction> out;
  if (s.depth >= cfg.max_depth) return out;
  if (cfg.use_todo) {
    if (s.todo.empty()) return out;
    int idx = rule_index_of_uid(s.program, s.todo.front());
    if (idx < 0) return out;  // defensive: transition keeps todo consistent
    TransformAction skip;
    skip.kind = TransformAction::Kind::Skip;
    skip.rule_index = idx;
    out.push_back(std::move(skip));
    actions_for_rule(s.program, idx, cfg, out);
  } else {
    for (int i = 0; i < static_cast<int>(s.program.rules.size()); ++i)
      actions_for_rule(s.program, i, cfg, out);
  }
  return out;
}

SearchState transition(const SearchState& s, const TransformAction& a, const SearchConfig& cfg) {
  SearchState out;
  out.depth = s.depth + 1;
  if (a.kind == TransformAction::Kind::Skip) {
    out.program = s.program;
    out.todo = s.todo;
    if (!out.todo.empty()) out.todo.pop_front();
    return out;
  }

  Program applied;
  switch (a.kind) {
    case TransformAction::Kind::Fold:
      applied = fold(s.program, a.rule_index, a.subgoals);
      break;
    case TransformAction::Kind::Unfold:
      applied = unfold(s.program, a.rule_index, a.subgoal);
      break;
    case TransformAction::Kind::Eliminate: {
      auto r = eliminate(s.program, a.rule_index);
      if (!r) throw std::invalid_argument("eliminate action is not applicable");
      applied = std::move(*r);
      break;
    }
    case TransformAction::Kind::MacroFold:
      applied = macro_fold(s.program, a.rule_index);
      break;
    case TransformAction::Kind::Skip:
      break;
  }
  out.program = dead_rule_elimination(applied);
  if (cfg.on_transform) cfg.on_transform(s.program, out.program, a.describe());

  if (cfg.use_todo) {
    std::set<uint64_t> old_uids, live_uids;
    for (const auto& r : s.program.rules) old_uids.insert(r.uid);
    for (const auto& r : out.program.rules) live_uids.insert(r.uid);
    const uint64_t front = s.todo.empty() ? 0 : s.todo.front();
    for (uint64_t uid : s.todo)
      if (uid != front && live_uids.count(uid)) out.todo.push_back(uid);
    // the transformed rule is re-queued at the bottom: the search moves on and
    // may revisit it after the rest of the list has been processed
    if (!s.todo.empty() && live_uids.count(front)) out.todo.push_back(front);
    std::set<uint64_t> in_todo(out.todo.begin(), out.todo.end());
    for (const auto& r : out.program.rules)
      if (!old_uids.count(r.uid) && !in_todo.count(r.uid)) out.todo.push_back(r.uid);
  }
  return out;
}

namespace {

struct Node {
  SearchState st;
  std::vector<std::string> trace;
  std::vector<int> cost;
  std::string key;
};

SearchResult result_from(const Node& best, size_t expanded) {
  SearchResult res;
  res.best_program = best.st.program;
  res.best_key = best.cost;
  res.best_degree = degree_of_key(best.cost);
  res.trace = best.trace;
  res.states_expanded = expanded;
  return res;
}

bool better(const Node& a, const Node& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  return a.key < b.key;
}

}  // namespace

SearchResult beam_search(const Program& p0, int B, const SearchConfig& cfg) {
  if (B < 1) throw std::invalid_argument("beam width must be >= 1");
  Node start;
  start.st = initial_state(p0, cfg);
  start.cost = cost_of(start.st.program);
  start.key = state_key(start.st, cfg);
  Node best = start;
  size_t expanded = 0;
  std::set<std::string> done;
  std::vector<Node> layer{std::move(start)};

  while (!layer.empty()) {
    std::map<std::string, Node> next;
    for (const auto& node : layer) {
      auto actions = enumerate_actions(node.st, cfg);
      if (actions.empty()) continue;
      ++expanded;
      done.insert(node.key);
      for (const auto& a : actions) {
        SearchState t = transition(node.st, a, cfg);
        Node n;
        n.key = state_key(t, cfg);
        if (done.count(n.key) || next.count(n.key)) continue;
        n.st = std::move(t);
        n.trace = node.trace;
        n.trace.push_back(a.describe());
        n.cost = cost_of(n.st.program);
        if (better(n, best)) best = n;
        next.emplace(n.key, std::move(n));
      }
    }
    std::vector<Node> pool;
    pool.reserve(next.size());
    for (auto& [k, n] : next) pool.push_back(std::move(n));
    std::sort(pool.begin(), pool.end(), better);
    if (static_cast<int>(pool.size()) > B) pool.resize(B);
    layer = std::move(pool);
  }
  return result_from(best, expanded);
}

double lcb(double total_cost, uint64_t n_sa, uint64_t n_s, double C) {
  if (n_sa == 0) return -std::numeric_limits<double>::infinity();
  return total_cost / n_sa - C * std::sqrt(std::log(static_cast<double>(n_s)) / n_sa);
}

namespace {

struct ActionStat {
  double total = 0.0;
  uint64_t n = 0;
};

struct StateStat {
  uint64_t n = 0;
  std::map<std::string, ActionStat> acts;
};

std::string action_stat_key(const Program& p, const TransformAction& a) {
  const Rule& r = p.rules[a.rule_index];
  std::string rk = canonical_rule_key(r);
  switch (a.kind) {
    case TransformAction::Kind::Fold: {
      auto evs = elimvar(r);
      int ord = 0;
      for (int i = 0; i < static_cast<int>(evs.size()); ++i)
        if (evs[i].var == a.var) ord = i;
      return "F|" + std::to_string(ord) + "|" + rk;
    }
    case TransformAction::Kind::Unfold:
      return "U|" + std::to_string(a.subgoal) + "|" + rk;
    case TransformAction::Kind::Eliminate:
      return "E|" + rk;
    case TransformAction::Kind::MacroFold:
      return "M|" + rk;
    case TransformAction::Kind::Skip:
      return "S|" + rk;
  }
  return "S|" + rk;
}

class Mcts {
 public:
  Mcts(const Program& p0, double C, const SearchConfig& cfg)
      : cfg_(cfg), C_(C), rng_(cfg.seed) {
    s0_ = initial_state(p0, cfg_);
    best_.st = s0_;
    best_.cost = cost_of(s0_.program);
    best_.key = state_key(s0_, cfg_);
  }

  SearchResult run(int R) {
    for (int i = 0; i < R; ++i) rollout();
    deploy();
    return result_from(best_, expanded_);
  }

 private:
  void consider(const SearchState& s, const std::vector<std::string>& trace) {
    Node n;
    n.cost = cost_of(s.program);
    n.key = state_key(s, cfg_);
    if (n.cost < best_.cost || (n.cost == best_.cost && n.key < best_.key)) {
      n.st = s;
      n.trace = trace;
      best_ = std::move(n);
    }
  }

  // Uniformly random fold-type actions until none remain; seeds statistics
  // for every state it passes through.
  void initial_policy(SearchState s, std::vector<std::string>& trace,
                      std::vector<std::pair<std::string, std::string>>& path, int& min_deg) {
    for (;;) {
      auto actions = enumerate_actions(s, cfg_);
      if (actions.empty()) return;
      std::vector<const TransformAction*> folds;
      const TransformAction* skip = nullptr;
      for (const auto& a : actions) {
        if (a.kind == TransformAction::Kind::Fold ||
            a.kind == TransformAction::Kind::MacroFold)
          folds.push_back(&a);
        else if (a.kind == TransformAction::Kind::Skip)
          skip = &a;
      }
      const TransformAction* pick = nullptr;
      if (!folds.empty())
        pick = folds[rng_() % folds.size()];
      else if (skip)
        pick = skip;
      else
        return;  // no fold actions anywhere: the policy is done
      path.emplace_back(state_key(s, cfg_), action_stat_key(s.program, *pick));
      SearchState t = transition(s, *pick, cfg_);
      ++expanded_;
      trace.push_back(pick->describe());
      min_deg = std::min(min_deg, degree_of_key(cost_of(t.program)));
      consider(t, trace);
      s = std::move(t);
    }
  }

  void rollout() {
    SearchState s = s0_;
    std::vector<std::string> trace;
    std::vector<std::pair<std::string, std::string>> path;
    int min_deg = degree_of_key(cost_of(s.program));
    consider(s, trace);
    for (;;) {
      auto actions = enumerate_actions(s, cfg_);
      if (actions.empty()) break;
      std::string skey = state_key(s, cfg_);
      auto it = stats_.find(skey);
      if (it == stats_.end() || it->second.n == 0) {
        initial_policy(std::move(s), trace, path, min_deg);
        break;
      }
      const StateStat& st = it->second;
      const TransformAction* pick = nullptr;
      double pick_lcb = std::numeric_limits<double>::infinity();
      for (const auto& a : actions) {
        std::string akey = action_stat_key(s.program, a);
        auto ai = st.acts.find(akey);
        double v = ai == st.acts.end() ? lcb(0, 0, st.n, C_)
                                       : lcb(ai->second.total, ai->second.n, st.n, C_);
        if (v < pick_lcb) {
          pick_lcb = v;
          pick = &a;
        }
      }
      path.emplace_back(skey, action_stat_key(s.program, *pick));
      SearchState t = transition(s, *pick, cfg_);
      ++expanded_;
      trace.push_back(pick->describe());
      min_deg = std::min(min_deg, degree_of_key(cost_of(t.program)));
      consider(t, trace);
      s = std::move(t);
    }
    for (const auto& [skey, akey] : path) {
      StateStat& st = stats_[skey];
      st.n += 1;
      ActionStat& as = st.acts[akey];
      as.n += 1;
      as.total += min_deg;
    }
  }

  void deploy() {
    SearchState s = s0_;
    std::vector<std::string> trace;
    for (;;) {
      auto actions = enumerate_actions(s, cfg_);
      if (actions.empty()) return;
      auto it = stats_.find(state_key(s, cfg_));
      if (it == stats_.end() || it->second.n == 0) {
        std::vector<std::pair<std::string, std::string>> path;
        int min_deg = degree_of_key(cost_of(s.program));
        initial_policy(std::move(s), trace, path, min_deg);
        return;
      }
      const StateStat& st = it->second;
      const TransformAction* pick = nullptr;
      uint64_t pick_n = 0;
      for (const auto& a : actions) {
        auto ai = st.acts.find(action_stat_key(s.program, a));
        uint64_t n = ai == st.acts.end() ? 0 : ai->second.n;
        if (!pick || n > pick_n) {
          pick = &a;
          pick_n = n;
        }
      }
      SearchState t = transition(s, *pick, cfg_);
      ++expanded_;
      trace.push_back(pick->describe());
      consider(t, trace);
      s = std::move(t);
    }
  }

  SearchConfig cfg_;
  double C_;
  std::mt19937_64 rng_;
  SearchState s0_;
  Node best_;
  size_t expanded_ = 0;
  std::unordered_map<std::string, StateStat> stats_;
};

}  // namespace

SearchResult mcts(const Program& p0, double C, int R, const SearchConfig& cfg) {
  if (R < 1) throw std::invalid_argument("rollout budget must be >= 1");
  return Mcts(p0, C, cfg).run(R);
}

SearchResult exhaustive_search(const Program& p0, int depth_limit, const SearchConfig& cfg_in) {
  SearchConfig cfg = cfg_in;
  cfg.max_depth = depth_limit;
  Node start;
  start.st = initial_state(p0, cfg);
  start.cost = cost_of(start.st.program);
  start.key = state_key(start.st, cfg);
  Node best = start;
  std::set<std::string> seen{start.key};
  std::deque<Node> frontier{std::move(start)};
  size_t expanded = 0;

  while (!frontier.empty()) {
    Node node = std::move(frontier.front());
    frontier.pop_front();
    auto actions = enumerate_actions(node.st, cfg);
    if (actions.empty()) continue;
    ++expanded;
    for (const auto& a : actions) {
      SearchState t = transition(node.st, a, cfg);
      Node n;
      n.key = state_key(t, cfg);
      if (!seen.insert(n.key).second) continue;
      if (seen.size() > cfg.state_cap)
        throw std::runtime_error("exhaustive_search: state cap exceeded");
      n.st = std::move(t);
      n.trace = node.trace;
      n.trace.push_back(a.describe());
      n.cost = cost_of(n.st.program);
      if (better(n, best)) best = n;
      frontier.push_back(std::move(n));
    }
  }
  return result_from(best, expanded);
}

}  // namespace dynaopt
