#include "dynaopt/term.hpp"

#include <atomic>
#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dynaopt {

namespace {
std::atomic<uint64_t> g_var_counter{0};
std::atomic<uint64_t> g_gen_counter{0};

void bump_at_least(std::atomic<uint64_t>& ctr, uint64_t n) {
  uint64_t cur = ctr.load();
  while (cur < n && !ctr.compare_exchange_weak(cur, n)) {
  }
}

// Numeric suffix after the last '_', if the whole tail is digits.
std::optional<uint64_t> underscore_suffix(const std::string& s) {
  auto pos = s.rfind('_');
  if (pos == std::string::npos || pos + 1 >= s.size()) return std::nullopt;
  uint64_t n = 0;
  auto [p, ec] = std::from_chars(s.data() + pos + 1, s.data() + s.size(), n);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return n;
}
}  // namespace

Term Term::var(std::string name) {
  Term t;
  t.kind_ = TermKind::Variable;
  t.name_ = std::move(name);
  return t;
}

Term Term::atom(std::string name) {
  Term t;
  t.kind_ = TermKind::Atom;
  t.name_ = std::move(name);
  return t;
}

Term Term::number(double value) {
  Term t;
  t.kind_ = TermKind::Number;
  t.name_.clear();
  t.value_ = value;
  return t;
}

Term Term::str(std::string value) {
  Term t;
  t.kind_ = TermKind::String;
  t.name_ = std::move(value);
  return t;
}

Term Term::compound(std::string functor, std::vector<Term> args) {
  assert(!args.empty());
  Term t;
  t.kind_ = TermKind::Compound;
  t.name_ = std::move(functor);
  t.args_ = std::move(args);
  return t;
}

std::string Term::functor() const {
  if (kind_ == TermKind::Atom || kind_ == TermKind::Compound) return name_;
  return "";
}

bool Term::ground() const {
  if (is_var()) return false;
  for (const auto& a : args_)
    if (!a.ground()) return false;
  return true;
}

bool Term::operator==(const Term& o) const {
  if (kind_ != o.kind_) return false;
  if (kind_ == TermKind::Number) return value_ == o.value_;
  if (name_ != o.name_) return false;
  return args_ == o.args_;
}

bool Term::operator<(const Term& o) const {
  if (kind_ != o.kind_) return kind_ < o.kind_;
  if (kind_ == TermKind::Number) return value_ < o.value_;
  if (name_ != o.name_) return name_ < o.name_;
  return args_ < o.args_;
}

std::string format_number(double v) {
  if (v == static_cast<int64_t>(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

std::string Term::str_repr() const {
  switch (kind_) {
    case TermKind::Variable:
    case TermKind::Atom:
      return name_;
    case TermKind::Number:
      return format_number(value_);
    case TermKind::String: {
      std::string out = "\"";
      for (char c : name_) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      out += '"';
      return out;
    }
    case TermKind::Compound: {
      std::string out = name_;
      out += '(';
      for (size_t i = 0; i < args_.size(); ++i) {
        if (i) out += ',';
        out += args_[i].str_repr();
      }
      out += ')';
      return out;
    }
  }
  return "";
}

bool Subst::bind(const std::string& var, const Term& t) {
  Term resolved = apply(t);
  if (resolved.is_var() && resolved.name() == var) return true;
  if (vars(resolved).count(var)) return false;  // occurs check
  // Keep the map idempotent: substitute the new binding into existing RHSs.
  Subst one;
  one.bind_.emplace(var, resolved);
  for (auto& [v, rhs] : bind_) rhs = one.apply(rhs);
  bind_[var] = std::move(resolved);
  return true;
}

Term Subst::apply(const Term& t) const {
  switch (t.kind()) {
    case TermKind::Variable: {
      auto it = bind_.find(t.name());
      return it == bind_.end() ? t : it->second;
    }
    case TermKind::Compound: {
      std::vector<Term> args;
      args.reserve(t.args().size());
      for (const auto& a : t.args()) args.push_back(apply(a));
      return Term::compound(t.name(), std::move(args));
    }
    default:
      return t;
  }
}

const Term* Subst::lookup(const std::string& var) const {
  auto it = bind_.find(var);
  return it == bind_.end() ? nullptr : &it->second;
}

std::optional<Subst> unify(const Term& a, const Term& b) {
  Subst theta;
  std::vector<std::pair<Term, Term>> work{{a, b}};
  while (!work.empty()) {
    auto [s, t] = work.back();
    work.pop_back();
    Term x = theta.apply(s);
    Term y = theta.apply(t);
    if (x == y) continue;
    if (x.is_var()) {
      if (!theta.bind(x.name(), y)) return std::nullopt;
      continue;
    }
    if (y.is_var()) {
      if (!theta.bind(y.name(), x)) return std::nullopt;
      continue;
    }
    if (x.kind() != y.kind()) return std::nullopt;
    if (x.is_compound()) {
      if (x.name() != y.name() || x.args().size() != y.args().size()) return std::nullopt;
      for (size_t i = 0; i < x.args().size(); ++i) work.emplace_back(x.args()[i], y.args()[i]);
      continue;
    }
    return std::nullopt;  // distinct constants
  }
  return theta;
}

void collect_vars(const Term& t, std::set<std::string>& out) {
  if (t.is_var()) {
    out.insert(t.name());
    return;
  }
  for (const auto& a : t.args()) collect_vars(a, out);
}

std::set<std::string> vars(const Term& t) {
  std::set<std::string> out;
  collect_vars(t, out);
  return out;
}

Term rename_vars(const Term& t, const std::map<std::string, std::string>& m) {
  switch (t.kind()) {
    case TermKind::Variable: {
      auto it = m.find(t.name());
      return it == m.end() ? t : Term::var(it->second);
    }
    case TermKind::Compound: {
      std::vector<Term> args;
      args.reserve(t.args().size());
      for (const auto& a : t.args()) args.push_back(rename_vars(a, m));
      return Term::compound(t.name(), std::move(args));
    }
    default:
      return t;
  }
}

std::map<std::string, std::string> fresh_renaming(const std::set<std::string>& names) {
  std::map<std::string, std::string> m;
  for (const auto& n : names) {
    std::string base = n;
    if (auto suf = underscore_suffix(base)) {
      (void)suf;
      base = base.substr(0, base.rfind('_'));
      if (base.empty()) base = "Anon";
    }
    m[n] = base + "_" + std::to_string(++g_var_counter);
  }
  return m;
}

Term fresh(const Term& t) { return rename_vars(t, fresh_renaming(vars(t))); }

std::string gensym() { return "gen_" + std::to_string(++g_gen_counter); }

bool is_gensym_name(const std::string& functor) {
  if (functor.rfind("gen_", 0) != 0 || functor.size() <= 4) return false;
  for (size_t i = 4; i < functor.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(functor[i]))) return false;
  return true;
}

void note_seen_variable(const std::string& name) {
  if (auto n = underscore_suffix(name)) bump_at_least(g_var_counter, *n);
}

void note_seen_functor(const std::string& name) {
  if (is_gensym_name(name)) bump_at_least(g_gen_counter, std::stoull(name.substr(4)));
}

}  // namespace dynaopt
