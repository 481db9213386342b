#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dynaopt {

enum class TermKind { Variable, Atom, Number, String, Compound };

// Immutable symbolic term: a variable, an atomic constant (atom, number,
// or quoted string), or a compound functor application.
class Term {
 public:
  Term() : kind_(TermKind::Atom), name_("nil") {}

  static Term var(std::string name);
  static Term atom(std::string name);
  static Term number(double value);
  static Term str(std::string value);
  static Term compound(std::string functor, std::vector<Term> args);

  TermKind kind() const { return kind_; }
  bool is_var() const { return kind_ == TermKind::Variable; }
  bool is_number() const { return kind_ == TermKind::Number; }
  bool is_compound() const { return kind_ == TermKind::Compound; }

  // Variable name, atom name, functor, or string payload.
  const std::string& name() const { return name_; }
  double value() const { return value_; }
  const std::vector<Term>& args() const { return args_; }

  // Predicate name and arity for atoms/compounds ("" for vars/numbers/strings).
  std::string functor() const;
  int arity() const { return static_cast<int>(args_.size()); }

  bool ground() const;

  bool operator==(const Term& o) const;
  bool operator!=(const Term& o) const { return !(*this == o); }
  bool operator<(const Term& o) const;

  std::string str_repr() const;  // concrete syntax

 private:
  TermKind kind_;
  std::string name_;
  double value_ = 0.0;
  std::vector<Term> args_;
};

// Idempotent substitution: variable name -> term, fully resolved so that
// applying twice equals applying once.
class Subst {
 public:
  // Binds v to t (resolving t against the current bindings first).
  // Returns false on an occurs-check violation.
  bool bind(const std::string& var, const Term& t);

  Term apply(const Term& t) const;
  const Term* lookup(const std::string& var) const;
  bool empty() const { return bind_.empty(); }
  size_t size() const { return bind_.size(); }
  const std::map<std::string, Term>& bindings() const { return bind_; }

 private:
  std::map<std::string, Term> bind_;
};

// Most general unifier of a and b, or nullopt if none exists.
// Occurs-check violations are failures, not errors.
std::optional<Subst> unify(const Term& a, const Term& b);

void collect_vars(const Term& t, std::set<std::string>& out);
std::set<std::string> vars(const Term& t);

// Session-global counters behind fresh() and gensym().  Thread-safe.
Term fresh(const Term& t);
Term rename_vars(const Term& t, const std::map<std::string, std::string>& m);
std::map<std::string, std::string> fresh_renaming(const std::set<std::string>& names);

std::string gensym();
bool is_gensym_name(const std::string& functor);

// Parser hooks: keep the fresh/gensym counters ahead of any identifier
// seen in user text, so generated names never collide.
void note_seen_variable(const std::string& name);
void note_seen_functor(const std::string& name);

std::string format_number(double v);

}  // namespace dynaopt
