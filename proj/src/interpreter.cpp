#include "dynaopt/interpreter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace dynaopt {

double Semiring::zero() const {
  switch (tag) {
    case SemiringTag::SumProduct:
    case SemiringTag::MaxProduct:
    case SemiringTag::Boolean:
      return 0.0;
    case SemiringTag::MinProduct:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double Semiring::one() const { return 1.0; }

double Semiring::combine(double a, double b) const {
  switch (tag) {
    case SemiringTag::SumProduct: return a + b;
    case SemiringTag::MaxProduct: return std::max(a, b);
    case SemiringTag::MinProduct: return std::min(a, b);
    case SemiringTag::Boolean: return std::max(a, b);
  }
  return a + b;
}

double Semiring::multiply(double a, double b) const {
  if (tag == SemiringTag::Boolean) return std::min(a, b);
  return a * b;
}

Semiring Semiring::for_program(const Program& p) {
  switch (p.agg) {
    case Aggregator::Sum: return Semiring{SemiringTag::SumProduct};
    case Aggregator::Max: return Semiring{SemiringTag::MaxProduct};
    case Aggregator::Min: return Semiring{SemiringTag::MinProduct};
  }
  return Semiring{SemiringTag::SumProduct};
}

std::optional<SemiringTag> Semiring::tag_from_name(const std::string& name) {
  if (name == "sumprod" || name == "sum_product") return SemiringTag::SumProduct;
  if (name == "maxprod" || name == "max_product") return SemiringTag::MaxProduct;
  if (name == "minprod" || name == "min_product") return SemiringTag::MinProduct;
  if (name == "boolean" || name == "bool") return SemiringTag::Boolean;
  return std::nullopt;
}

std::string Semiring::name() const {
  switch (tag) {
    case SemiringTag::SumProduct: return "sum_product";
    case SemiringTag::MaxProduct: return "max_product";
    case SemiringTag::MinProduct: return "min_product";
    case SemiringTag::Boolean: return "boolean";
  }
  return "sum_product";
}

bool Semiring::compatible_with(Aggregator a) const {
  switch (tag) {
    case SemiringTag::SumProduct:
    case SemiringTag::Boolean:
      return a == Aggregator::Sum;
    case SemiringTag::MaxProduct:
      return a == Aggregator::Max;
    case SemiringTag::MinProduct:
      return a == Aggregator::Min;
  }
  return false;
}

namespace {

struct PredKey {
  std::string functor;
  int arity;
  bool operator<(const PredKey& o) const {
    return functor != o.functor ? functor < o.functor : arity < o.arity;
  }
};

using Index = std::map<PredKey, std::vector<const std::pair<const Term, double>*>>;

Index index_of(const Valuation& v) {
  Index idx;
  for (const auto& kv : v) idx[{kv.first.functor(), kv.first.arity()}].push_back(&kv);
  return idx;
}

// All ground instantiations of r against `chart`, aggregated into `into`.
void fire_rule(const Rule& r, const Semiring& s, const Index& idx, Valuation& into) {
  struct Partial {
    Subst theta;
    double weight;
  };
  std::vector<Partial> partials{{Subst{}, s.one()}};
  for (const auto& b : r.body) {
    if (b.is_number()) {
      for (auto& p : partials) p.weight = s.multiply(p.weight, b.value());
      continue;
    }
    std::vector<Partial> next;
    auto it = idx.find({b.functor(), b.arity()});
    if (it == idx.end()) return;  // no facts for this predicate: rule cannot fire
    for (const auto& p : partials) {
      Term goal = p.theta.apply(b);
      for (const auto* fact : it->second) {
        auto mgu = unify(goal, fact->first);
        if (!mgu) continue;
        Subst merged = p.theta;
        bool ok = true;
        for (const auto& [v, t] : mgu->bindings())
          if (!merged.bind(v, t)) {
            ok = false;
            break;
          }
        if (!ok) continue;
        next.push_back({std::move(merged), s.multiply(p.weight, fact->second)});
      }
    }
    partials = std::move(next);
    if (partials.empty()) return;
  }
  for (const auto& p : partials) {
    Term head = p.theta.apply(r.head);
    auto [it2, inserted] = into.emplace(head, p.weight);
    if (!inserted) it2->second = s.combine(it2->second, p.weight);
  }
}

bool charts_equal(const Valuation& a, const Valuation& b, const Semiring& s) {
  if (s.tag != SemiringTag::SumProduct) return a == b;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first != ib->first) {
      // An item present on one side only must be ~zero.
      if (ia->first < ib->first) {
        if (std::abs(ia->second) > 1e-12) return false;
        ++ia;
      } else {
        if (std::abs(ib->second) > 1e-12) return false;
        ++ib;
      }
      continue;
    }
    if (std::abs(ia->second - ib->second) > 1e-12) return false;
    ++ia;
    ++ib;
  }
  for (; ia != a.end(); ++ia)
    if (std::abs(ia->second) > 1e-12) return false;
  for (; ib != b.end(); ++ib)
    if (std::abs(ib->second) > 1e-12) return false;
  return true;
}

}  // namespace

Valuation evaluate(const Program& p, const Semiring& s, const Valuation& inputs, int cap) {
  for (const auto& r : p.rules)
    if (!is_range_restricted(r))
      throw EvalError(EvalError::Kind::NotRangeRestricted,
                      "rule is not range-restricted: " + render_rule(r, p.agg));
  for (const auto& [item, value] : inputs) {
    (void)value;
    if (!matches_any_pattern(item, p.inputs))
      throw EvalError(EvalError::Kind::BadInput,
                      "input fact matches no input declaration: " + item.str_repr());
  }

  Valuation chart = inputs;
  for (int iter = 0; iter < cap; ++iter) {
    Index idx = index_of(chart);
    Valuation derived = inputs;  // input values are fixed contributions
    for (const auto& r : p.rules) fire_rule(r, s, idx, derived);
    if (charts_equal(chart, derived, s)) {
      Valuation out;
      for (const auto& [item, value] : derived)
        if (matches_any_pattern(item, p.outputs)) out.emplace(item, value);
      return out;
    }
    chart = std::move(derived);
  }
  throw EvalError(EvalError::Kind::Divergence,
                  "no fixpoint within " + std::to_string(cap) + " iterations");
}

Valuation random_inputs(const Program& p, const Semiring& s, std::mt19937_64& rng,
                        int damp_level) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto draw_value = [&]() -> double {
    switch (s.tag) {
      case SemiringTag::SumProduct: {
        double v = 0.5 - 0.5 * coin(rng);  // (0, 0.5]
        for (int d = 0; d < damp_level; ++d) v *= 0.25;
        return v;
      }
      case SemiringTag::MaxProduct: {
        // Dyadic values keep products of modest depth exactly representable.
        static const double vals[] = {0.25, 0.5, 0.75, 1.0};
        return vals[rng() % 4];
      }
      case SemiringTag::MinProduct: {
        if (damp_level > 0) {
          static const double vals[] = {1.0, 1.25, 1.5, 1.75};  // [1,2): paths cost more
          return vals[rng() % 4];
        }
        static const double vals[] = {0.25, 0.5, 0.75, 1.0};
        return vals[rng() % 4];
      }
      case SemiringTag::Boolean:
        return 1.0;
    }
    return 1.0;
  };

  Valuation v;
  for (const auto& pat : p.inputs) {
    int n = pat.arity();
    std::vector<int> digits(n, 0);
    for (;;) {
      Term fact;
      if (n == 0) {
        fact = Term::atom(pat.functor());
      } else {
        std::vector<Term> args;
        for (int d : digits) args.push_back(Term::number(d));
        fact = Term::compound(pat.functor(), std::move(args));
      }
      if (coin(rng) < 0.5) {
        double val = draw_value();
        auto [it, inserted] = v.emplace(fact, val);
        if (!inserted) it->second = val;
      }
      int carry = n - 1;
      while (carry >= 0 && ++digits[carry] == 3) digits[carry--] = 0;
      if (carry < 0) break;
      if (n == 0) break;
    }
  }
  return v;
}

bool valuations_match(const Valuation& a, const Valuation& b, const Semiring& s,
                      std::string* why) {
  std::set<Term> keys;
  for (const auto& kv : a) keys.insert(kv.first);
  for (const auto& kv : b) keys.insert(kv.first);
  for (const auto& k : keys) {
    auto ia = a.find(k);
    auto ib = b.find(k);
    double va = ia == a.end() ? s.zero() : ia->second;
    double vb = ib == b.end() ? s.zero() : ib->second;
    bool ok;
    if (s.tag == SemiringTag::SumProduct) {
      ok = std::abs(va - vb) <= 1e-9 * std::max({1.0, std::abs(va), std::abs(vb)});
    } else {
      ok = va == vb;
    }
    if (!ok) {
      if (why) {
        std::ostringstream os;
        os << k.str_repr() << ": " << va << " vs " << vb;
        *why = os.str();
      }
      return false;
    }
  }
  return true;
}

EquivVerdict equivalence_check(const Program& p1, const Program& p2, const Semiring& s,
                               int trials, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    Valuation inputs;
    Valuation out1, out2;
    bool done = false;
    for (int attempt = 0; attempt <= 3 && !done; ++attempt) {
      inputs = random_inputs(p1, s, rng, attempt);
      try {
        out1 = evaluate(p1, s, inputs);
        out2 = evaluate(p2, s, inputs);
        done = true;
      } catch (const EvalError& e) {
        if (e.kind != EvalError::Kind::Divergence || attempt == 3)
          return {false, std::string("trial ") + std::to_string(t) + ": " + e.what(),
                  render_facts(inputs)};
      }
    }
    std::string why;
    if (!valuations_match(out1, out2, s, &why))
      return {false, "trial " + std::to_string(t) + ": output mismatch at " + why,
              render_facts(inputs)};
  }
  return {true, "equivalent on " + std::to_string(trials) + " random input valuations", ""};
}

Valuation parse_facts(const std::string& text) {
  Valuation v;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto cut = line.find('%');
    if (cut != std::string::npos) line = line.substr(0, cut);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected `term = value.`", lineno, 1);
    std::string lhs = line.substr(0, eq);
    std::string rhs = line.substr(eq + 1);
    auto dot = rhs.find_last_of('.');
    // strip the statement terminator (the last '.' not part of the number)
    auto end = rhs.find_last_not_of(" \t\r");
    if (end == std::string::npos || rhs[end] != '.')
      throw ParseError("expected trailing '.'", lineno, static_cast<int>(line.size()));
    rhs = rhs.substr(0, end);
    (void)dot;
    Term item = parse_term_text(lhs);
    if (!item.ground())
      throw ParseError("fact must be ground: " + item.str_repr(), lineno, 1);
    size_t pos = 0;
    double value = std::stod(rhs, &pos);
    if (rhs.find_first_not_of(" \t\r", pos) != std::string::npos)
      throw ParseError("trailing text after value (one fact per line)", lineno,
                       static_cast<int>(eq + pos + 2));
    v[item] = value;
  }
  return v;
}

std::string render_facts(const Valuation& v) {
  std::string out;
  for (const auto& [item, value] : v)
    out += item.str_repr() + " = " + format_number(value) + ".\n";
  return out;
}

std::string valuation_json(const Valuation& v) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [item, value] : v) j[item.str_repr()] = value;
  return j.dump(2);
}

}  // namespace dynaopt
