#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "dynaopt/program.hpp"

namespace dynaopt {

enum class SemiringTag { SumProduct, MaxProduct, MinProduct, Boolean };

struct Semiring {
  SemiringTag tag = SemiringTag::SumProduct;

  double zero() const;
  double one() const;
  double combine(double a, double b) const;   // ⊕
  double multiply(double a, double b) const;  // ⊗

  static Semiring from_tag(SemiringTag t) { return Semiring{t}; }
  // Default pairing: += → sum_product, max= → max_product, min= → min_product.
  static Semiring for_program(const Program& p);
  static std::optional<SemiringTag> tag_from_name(const std::string& name);
  std::string name() const;
  // Is this semiring usable with the program's aggregator?
  bool compatible_with(Aggregator a) const;
};

// Ground item -> value; absent items have the semiring's zero.
using Valuation = std::map<Term, double>;

struct EvalError : std::runtime_error {
  enum class Kind { NotRangeRestricted, Divergence, BadInput };
  EvalError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

// Naive bottom-up evaluation to fixpoint; returns only items matching the
// output declarations.  Throws EvalError on non-range-restricted rules,
// undeclared input facts, or failure to converge within `cap` iterations.
Valuation evaluate(const Program& p, const Semiring& s, const Valuation& inputs, int cap = 1000);

struct EquivVerdict {
  bool pass = false;
  std::string message;
  std::string witness;  // facts text of the first failing input valuation
};

// Seeded randomized equivalence on `trials` random input valuations.
// Divergent trials are resampled with damped weights (at most 3 times).
EquivVerdict equivalence_check(const Program& p1, const Program& p2, const Semiring& s,
                               int trials, uint64_t seed);

// Random input valuation over the numeric constant domain {0,1,2} per
// argument position; damp_level > 0 shifts weights toward convergence.
Valuation random_inputs(const Program& p, const Semiring& s, std::mt19937_64& rng,
                        int damp_level = 0);

// One fact per line: `term = value.`
Valuation parse_facts(const std::string& text);
std::string render_facts(const Valuation& v);
std::string valuation_json(const Valuation& v);

// Output-valuation comparison used by both equivalence_check and the tests:
// exact for max/min/boolean, 1e-9 relative for sum_product.
bool valuations_match(const Valuation& a, const Valuation& b, const Semiring& s,
                      std::string* why = nullptr);

}  // namespace dynaopt
