#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynaopt/program.hpp"

namespace dynaopt {

// Extracts the subgoals at indices `alpha` of rule i into a fresh gen_* item.
// The rewritten rule keeps its uid; the new defining rule is appended.
// Throws std::invalid_argument if alpha is empty, out of range, or the
// whole body (degenerate fold).
Program fold(const Program& p, int i, const std::vector<int>& alpha);

// Legality check mirrored by the search action enumerator.
bool can_unfold(const Program& p, int i, int k);

// Inlines the definitions of subgoal k of rule i.  Rule i is removed and one
// specialized copy per matching defining rule is appended.  If no rule head
// matches, rule i is deleted (the subgoal is identically zero) and a warning
// is pushed to `warnings` when provided.  Throws on precondition violations
// (numeric literal or input-matching subgoal).
Program unfold(const Program& p, int i, int k, std::vector<std::string>* warnings = nullptr);

// Removes rule i and splices its body into every consumer (which is kept, as
// it still aggregates the other definitions of the item).  Runs linearize on
// the rule's head first.  Returns nullopt when the action must be rejected:
// head matches an output pattern, the rule is directly recursive, or some
// rule still has two subgoals matching the head after linearize (splicing
// would drop a cross term).
std::optional<Program> eliminate(const Program& p, int i);

// Rewrites rules so no rule keeps two subgoals that unify with z and with
// each other; later duplicates go through fresh gen_* bridge items.
Program linearize(const Program& p, const Term& z);

// Folds every rule to a local fixpoint, always eliminating the variable whose
// fold yields the smallest new-rule degree (ties by variable name).
Program greedy_fold_only(const Program& p);

// Exhaustive fold-only optimization of rule i in isolation, memoized by the
// rule's canonical form.  Replaces rule i with the optimized rule set.
Program macro_fold(const Program& p, int i);

// Observability for the memoization contract.
uint64_t macro_fold_cache_hits();
void macro_fold_cache_clear();

}  // namespace dynaopt
