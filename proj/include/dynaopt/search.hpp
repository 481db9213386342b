#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dynaopt/program.hpp"

namespace dynaopt {

struct TransformAction {
  enum class Kind { Fold, Unfold, Eliminate, MacroFold, Skip };
  Kind kind = Kind::Skip;
  int rule_index = -1;
  std::string var;            // Fold: eliminated variable
  std::vector<int> subgoals;  // Fold: vtof of that variable
  int subgoal = -1;           // Unfold: inlined subgoal

  std::string describe() const;  // CLI action syntax (fold:I:V, unfold:I:K, ...)
};

struct SearchConfig {
  bool use_todo = true;
  bool use_macro = true;
  int max_depth = 100;
  uint64_t seed = 0;
  size_t state_cap = 1000000;  // exhaustive_search guard
  // Observer invoked on every applied transform (not Skip); used by the
  // soundness gate in the tests.
  std::function<void(const Program& before, const Program& after, const std::string& action)>
      on_transform;
};

struct SearchState {
  Program program;
  std::deque<uint64_t> todo;  // rule uids, top at front (empty when todo is off)
  int depth = 0;
};

SearchState initial_state(const Program& p0, const SearchConfig& cfg);

// Identity for statistics sharing and deduplication.
std::string state_key(const SearchState& s, const SearchConfig& cfg);

// Empty list <=> terminal state.
std::vector<TransformAction> enumerate_actions(const SearchState& s, const SearchConfig& cfg);

SearchState transition(const SearchState& s, const TransformAction& a, const SearchConfig& cfg);

struct SearchResult {
  Program best_program;
  int best_degree = 0;
  std::vector<int> best_key;
  std::vector<std::string> trace;  // actions from the initial state to best_program
  size_t states_expanded = 0;
};

SearchResult beam_search(const Program& p0, int B, const SearchConfig& cfg);

// UCB1-style lower-confidence bound; -inf when n_sa == 0 so novel actions are
// always explored.
double lcb(double total_cost, uint64_t n_sa, uint64_t n_s, double C);

SearchResult mcts(const Program& p0, double C, int R, const SearchConfig& cfg);

// Full BFS with canonical-state deduplication; the optimality oracle for
// tiny programs.  Throws std::runtime_error past cfg.state_cap states.
SearchResult exhaustive_search(const Program& p0, int depth_limit, const SearchConfig& cfg);

}  // namespace dynaopt
