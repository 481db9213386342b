#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynaopt/term.hpp"

namespace dynaopt {

enum class Aggregator { Sum, Max, Min };

std::string aggregator_symbol(Aggregator a);

// h ⊕= b1 * ... * bK.  Numeric literals are Number terms in the body.
struct Rule {
  Term head;
  std::vector<Term> body;
  uint64_t uid = 0;  // stable identity across transforms, for the to-do list

  bool operator==(const Rule& o) const { return head == o.head && body == o.body; }
};

struct Program {
  std::vector<Rule> rules;
  std::vector<Term> inputs;   // declaration patterns; arity is what matters
  std::vector<Term> outputs;
  Aggregator agg = Aggregator::Sum;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line, int col);
  int line, col;
};

Program parse_program(const std::string& text);

// Parses a single term (no trailing '.'); used by the facts-file reader.
Term parse_term_text(const std::string& text);
std::string render_program(const Program& p);
std::string render_rule(const Rule& r, Aggregator agg);

std::set<std::string> rule_vars(const Rule& r);
bool is_range_restricted(const Rule& r);

// Fresh uid for rules created by transforms.
uint64_t next_rule_uid();

// Copy of r with all variables renamed to never-before-used names.
Rule fresh_rule(const Rule& r);

// Does ground-ish term t's predicate match any declaration pattern?
// Patterns are matched by unification (they are usually all-wildcard).
bool matches_any_pattern(const Term& t, const std::vector<Term>& patterns);

// Drops rules that cannot fire (unreachable from inputs in the predicate
// graph) or cannot contribute to an output.  Predicate-level analysis:
// arguments are ignored, only functor/arity connectivity counts.
Program dead_rule_elimination(const Program& p);

// Canonical textual key invariant under per-rule variable renaming,
// rule reordering, and renaming of generated (gen_N) functors.
std::string canonicalize(const Program& p);

// Canonical form of a single rule (variables numbered by first occurrence);
// used as the macro-fold memo key.
std::string canonical_rule_key(const Rule& r);

}  // namespace dynaopt
