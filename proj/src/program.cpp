#include "dynaopt/program.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

namespace dynaopt {

std::string aggregator_symbol(Aggregator a) {
  switch (a) {
    case Aggregator::Sum: return "+=";
    case Aggregator::Max: return "max=";
    case Aggregator::Min: return "min=";
  }
  return "+=";
}

ParseError::ParseError(const std::string& msg, int line, int col)
    : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " +
                         std::to_string(col)),
      line(line),
      col(col) {}

namespace {

std::atomic<uint64_t> g_rule_uid{0};

enum class Tok { Atom, Variable, Number, String, Aggr, LParen, RParen, Comma, Semi, Dot, Star, End };

struct Token {
  Tok kind;
  std::string text;
  double num = 0.0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= s_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = s_[pos_];
    if (c == '(') return simple(t, Tok::LParen);
    if (c == ')') return simple(t, Tok::RParen);
    if (c == ',') return simple(t, Tok::Comma);
    if (c == ';') return simple(t, Tok::Semi);
    if (c == '*') return simple(t, Tok::Star);
    if (c == '.') {
      // '.' inside a number is consumed by the number lexer; here it ends a statement.
      return simple(t, Tok::Dot);
    }
    if (c == '+' && peek(1) == '=') {
      advance();
      advance();
      t.kind = Tok::Aggr;
      t.text = "+=";
      return t;
    }
    if (c == '"') return lex_string(t);
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1)))))
      return lex_number(t);
    if (c == '_' || std::isalpha(static_cast<unsigned char>(c))) return lex_ident(t);
    throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
  }

 private:
  char peek(size_t k) const { return pos_ + k < s_.size() ? s_[pos_ + k] : '\0'; }

  void advance() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '%') {
        while (pos_ < s_.size() && s_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token simple(Token& t, Tok k) {
    t.kind = k;
    t.text = s_[pos_];
    advance();
    return t;
  }

  Token lex_string(Token& t) {
    advance();  // opening quote
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && (peek(1) == '"' || peek(1) == '\\')) advance();
      out += s_[pos_];
      advance();
    }
    if (pos_ >= s_.size()) throw ParseError("unterminated string", t.line, t.col);
    advance();  // closing quote
    t.kind = Tok::String;
    t.text = std::move(out);
    return t;
  }

  Token lex_number(Token& t) {
    size_t start = pos_;
    if (s_[pos_] == '-') advance();
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) advance();
    if (pos_ < s_.size() && s_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(peek(1)))) {
      advance();
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) advance();
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      size_t save = pos_;
      int save_line = line_, save_col = col_;
      advance();
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) advance();
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) advance();
      } else {
        pos_ = save;
        line_ = save_line;
        col_ = save_col;
      }
    }
    t.kind = Tok::Number;
    t.text = s_.substr(start, pos_ - start);
    t.num = std::strtod(t.text.c_str(), nullptr);
    return t;
  }

  Token lex_ident(Token& t) {
    size_t start = pos_;
    advance();
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'')
        advance();
      else
        break;
    }
    std::string name = s_.substr(start, pos_ - start);
    if ((name == "max" || name == "min") && pos_ < s_.size() && s_[pos_] == '=') {
      advance();
      t.kind = Tok::Aggr;
      t.text = name + "=";
      return t;
    }
    t.kind = std::isupper(static_cast<unsigned char>(name[0])) || name[0] == '_'
                 ? Tok::Variable
                 : Tok::Atom;
    t.text = std::move(name);
    return t;
  }

  const std::string& s_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) { shift(); }

  Program run() {
    Program p;
    bool agg_set = false;
    while (cur_.kind != Tok::End) {
      if (cur_.kind == Tok::Atom && (cur_.text == "input" || cur_.text == "output") &&
          !decl_is_rule_head()) {
        parse_decl(p);
        continue;
      }
      Rule r = parse_rule(p, agg_set);
      r.uid = next_rule_uid();
      p.rules.push_back(std::move(r));
    }
    return p;
  }

 private:
  void shift() { cur_ = lex_.next(); }

  void expect(Tok k, const char* what) {
    if (cur_.kind != k) throw ParseError(std::string("expected ") + what, cur_.line, cur_.col);
    shift();
  }

  // "input"/"output" followed by an aggregator is a rule whose head is the
  // atom itself (unlikely but legal); peeking one token disambiguates.
  bool decl_is_rule_head() {
    return false;  // corpus never uses input/output as item names; keywords win
  }

  void parse_decl(Program& p) {
    bool is_input = cur_.text == "input";
    shift();
    auto& dst = is_input ? p.inputs : p.outputs;
    dst.push_back(parse_term());
    while (cur_.kind == Tok::Semi) {
      shift();
      dst.push_back(parse_term());
    }
    expect(Tok::Dot, "'.'");
  }

  Rule parse_rule(Program& p, bool& agg_set) {
    int line = cur_.line, col = cur_.col;
    Rule r;
    r.head = parse_term();
    if (r.head.is_var() || r.head.is_number() || r.head.kind() == TermKind::String)
      throw ParseError("rule head must be an item", line, col);
    if (cur_.kind != Tok::Aggr)
      throw ParseError("expected aggregator ('+=', 'max=', 'min=')", cur_.line, cur_.col);
    Aggregator a = cur_.text == "+=" ? Aggregator::Sum
                   : cur_.text == "max=" ? Aggregator::Max
                                         : Aggregator::Min;
    if (!agg_set) {
      p.agg = a;
      agg_set = true;
    } else if (a != p.agg) {
      throw ParseError("mixed aggregators: program already uses '" +
                           aggregator_symbol(p.agg) + "'",
                       cur_.line, cur_.col);
    }
    shift();
    r.body.push_back(parse_factor());
    while (cur_.kind == Tok::Star) {
      shift();
      r.body.push_back(parse_factor());
    }
    expect(Tok::Dot, "'.'");
    return r;
  }

  Term parse_factor() { return parse_term(); }

  Term parse_term() {
    switch (cur_.kind) {
      case Tok::Variable: {
        std::string name = cur_.text;
        shift();
        if (name == "_") {
          auto m = fresh_renaming({"Anon"});
          return Term::var(m.at("Anon"));
        }
        note_seen_variable(name);
        return Term::var(name);
      }
      case Tok::Number: {
        double v = cur_.num;
        shift();
        return Term::number(v);
      }
      case Tok::String: {
        std::string v = cur_.text;
        shift();
        return Term::str(std::move(v));
      }
      case Tok::Atom: {
        std::string functor = cur_.text;
        note_seen_functor(functor);
        shift();
        if (cur_.kind != Tok::LParen) return Term::atom(std::move(functor));
        shift();
        std::vector<Term> args{parse_term()};
        while (cur_.kind == Tok::Comma) {
          shift();
          args.push_back(parse_term());
        }
        expect(Tok::RParen, "')'");
        return Term::compound(std::move(functor), std::move(args));
      }
      default:
        throw ParseError("expected a term", cur_.line, cur_.col);
    }
  }

 public:
  Term parse_single_term() {
    Term t = parse_term();
    if (cur_.kind != Tok::End) throw ParseError("trailing input after term", cur_.line, cur_.col);
    return t;
  }

  Lexer lex_;
  Token cur_;
};

std::string render_pattern(const Term& t) {
  if (!t.is_compound()) return t.str_repr();
  std::string out = t.name();
  out += '(';
  for (int i = 0; i < t.arity(); ++i) {
    if (i) out += ',';
    out += t.args()[i].is_var() ? "_" : t.args()[i].str_repr();
  }
  out += ')';
  return out;
}

std::string render_decl(const char* kw, const std::vector<Term>& pats) {
  std::string out = kw;
  out += ' ';
  for (size_t i = 0; i < pats.size(); ++i) {
    if (i) out += "; ";
    out += render_pattern(pats[i]);
  }
  out += ".";
  return out;
}

struct PredKey {
  std::string functor;
  int arity;
  bool operator<(const PredKey& o) const {
    return functor != o.functor ? functor < o.functor : arity < o.arity;
  }
};

PredKey pred_of(const Term& t) { return {t.functor(), t.arity()}; }

}  // namespace

uint64_t next_rule_uid() { return ++g_rule_uid; }

Program parse_program(const std::string& text) { return Parser(text).run(); }

Term parse_term_text(const std::string& text) { return Parser(text).parse_single_term(); }

std::string render_rule(const Rule& r, Aggregator agg) {
  std::string out = r.head.str_repr();
  out += ' ';
  out += aggregator_symbol(agg);
  out += ' ';
  for (size_t i = 0; i < r.body.size(); ++i) {
    if (i) out += " * ";
    out += r.body[i].str_repr();
  }
  out += '.';
  return out;
}

std::string render_program(const Program& p) {
  std::string out;
  if (!p.inputs.empty()) out += render_decl("input", p.inputs) + "\n";
  if (!p.outputs.empty()) out += render_decl("output", p.outputs) + "\n";
  for (const auto& r : p.rules) out += render_rule(r, p.agg) + "\n";
  return out;
}

std::set<std::string> rule_vars(const Rule& r) {
  std::set<std::string> out;
  collect_vars(r.head, out);
  for (const auto& b : r.body) collect_vars(b, out);
  return out;
}

bool is_range_restricted(const Rule& r) {
  std::set<std::string> bv;
  for (const auto& b : r.body) collect_vars(b, bv);
  for (const auto& v : vars(r.head))
    if (!bv.count(v)) return false;
  return true;
}

Rule fresh_rule(const Rule& r) {
  auto m = fresh_renaming(rule_vars(r));
  Rule out;
  out.uid = r.uid;
  out.head = rename_vars(r.head, m);
  for (const auto& b : r.body) out.body.push_back(rename_vars(b, m));
  return out;
}

bool matches_any_pattern(const Term& t, const std::vector<Term>& patterns) {
  for (const auto& pat : patterns)
    if (pat.functor() == t.functor() && pat.arity() == t.arity()) return true;
  return false;
}

Program dead_rule_elimination(const Program& p) {
  // Forward pass: which predicates are derivable from the inputs?
  std::set<PredKey> derivable;
  for (const auto& pat : p.inputs) derivable.insert(pred_of(pat));
  std::vector<bool> fireable(p.rules.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < p.rules.size(); ++i) {
      if (fireable[i]) continue;
      bool ok = true;
      for (const auto& b : p.rules[i].body) {
        if (b.is_number()) continue;
        if (!derivable.count(pred_of(b))) {
          ok = false;
          break;
        }
      }
      if (ok) {
        fireable[i] = true;
        changed = true;
        derivable.insert(pred_of(p.rules[i].head));
      }
    }
  }
  // Backward pass: which predicates feed an output, through fireable rules?
  std::set<PredKey> useful;
  for (const auto& pat : p.outputs) useful.insert(pred_of(pat));
  changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < p.rules.size(); ++i) {
      if (!fireable[i] || !useful.count(pred_of(p.rules[i].head))) continue;
      for (const auto& b : p.rules[i].body) {
        if (b.is_number()) continue;
        if (useful.insert(pred_of(b)).second) changed = true;
      }
    }
  }
  Program out;
  out.inputs = p.inputs;
  out.outputs = p.outputs;
  out.agg = p.agg;
  for (size_t i = 0; i < p.rules.size(); ++i)
    if (fireable[i] && useful.count(pred_of(p.rules[i].head))) out.rules.push_back(p.rules[i]);
  return out;
}

namespace {

// Renders r with variables numbered by first occurrence and, when gen_map is
// non-null, generated functors renamed through it (erased to "G" when erasing).
std::string rule_key_impl(const Rule& r, std::map<std::string, std::string>* var_map,
                          std::map<std::string, std::string>* gen_map, bool erase_gens) {
  std::map<std::string, std::string> local_vars;
  auto& vm = var_map ? *var_map : local_vars;
  // Recursive renderer.
  std::function<std::string(const Term&)> rec = [&](const Term& t) -> std::string {
    switch (t.kind()) {
      case TermKind::Variable: {
        auto it = vm.find(t.name());
        if (it == vm.end())
          it = vm.emplace(t.name(), "V" + std::to_string(vm.size() + 1)).first;
        return it->second;
      }
      case TermKind::Number:
        return format_number(t.value());
      case TermKind::String:
        return Term::str(t.name()).str_repr();
      case TermKind::Atom:
      case TermKind::Compound: {
        std::string f = t.name();
        if (is_gensym_name(f)) {
          if (erase_gens) {
            f = "G";
          } else if (gen_map) {
            auto it = gen_map->find(f);
            if (it == gen_map->end())
              it = gen_map->emplace(f, "g" + std::to_string(gen_map->size() + 1)).first;
            f = it->second;
          }
        }
        if (!t.is_compound()) return f;
        std::string out = f + "(";
        for (int i = 0; i < t.arity(); ++i) {
          if (i) out += ',';
          out += rec(t.args()[i]);
        }
        out += ')';
        return out;
      }
    }
    return "";
  };
  std::string out = rec(r.head);
  out += " := ";
  for (size_t i = 0; i < r.body.size(); ++i) {
    if (i) out += " * ";
    out += rec(r.body[i]);
  }
  return out;
}

}  // namespace

std::string canonical_rule_key(const Rule& r) {
  std::map<std::string, std::string> gens;
  return rule_key_impl(r, nullptr, &gens, false);
}

std::string canonicalize(const Program& p) {
  // Order rules by a rename-invariant key: gen functors erased, variables
  // numbered per rule by first occurrence.
  std::vector<size_t> order(p.rules.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::string> erased(p.rules.size());
  for (size_t i = 0; i < p.rules.size(); ++i)
    erased[i] = rule_key_impl(p.rules[i], nullptr, nullptr, true);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return erased[a] < erased[b]; });
  // Assign canonical gen names by first occurrence in sorted order, then
  // render each rule with per-rule canonical variables.
  std::map<std::string, std::string> gens;
  std::vector<std::string> lines;
  lines.reserve(p.rules.size());
  for (size_t i : order) lines.push_back(rule_key_impl(p.rules[i], nullptr, &gens, false));
  std::sort(lines.begin(), lines.end());

  std::vector<std::string> decls;
  for (const auto& t : p.inputs) decls.push_back("in " + t.functor() + "/" + std::to_string(t.arity()));
  for (const auto& t : p.outputs) decls.push_back("out " + t.functor() + "/" + std::to_string(t.arity()));
  std::sort(decls.begin(), decls.end());

  std::string out = aggregator_symbol(p.agg);
  for (const auto& d : decls) out += "\n" + d;
  for (const auto& l : lines) out += "\n" + l;
  return out;
}

}  // namespace dynaopt
