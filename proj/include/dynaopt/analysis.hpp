#pragma once

#include <string>
#include <vector>

#include "dynaopt/program.hpp"

namespace dynaopt {

// |vars(r)| over head and body; numeric literals contribute nothing.
int rule_degree(const Rule& r);

// Max rule degree over the rules surviving dead_rule_elimination.
int program_degree(const Program& p);

struct EliminableVar {
  std::string var;
  std::vector<int> subgoals;  // indices of body factors containing var
};

// Variables of r absent from the head and from at least one body factor,
// sorted by name, each with its occurrence set (vtof).
std::vector<EliminableVar> elimvar(const Rule& r);

// Live-rule degrees in non-increasing order; programs compare
// lexicographically, smaller is better.
std::vector<int> tie_break_key(const Program& p);

// (d_start - d_found) / (d_start - d_opt); 1.0 when d_start == d_opt.
double relative_degree(int d_start, int d_found, int d_opt);

// JSON report for the `analyze` command.
std::string analyze_json(const Program& p);

}  // namespace dynaopt
