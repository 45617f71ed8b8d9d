#pragma once

// Verification-condition discharge: quantifier elimination by Skolemization
// and instantiation, ground equational rewriting, abstraction of
// uninterpreted terms, Fourier-Motzkin over linear integer constraints, and
// a bounded countermodel search whose results are confirmed against the
// original formula. Also an exhaustive small-model oracle and SMT-LIB export.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nhl/error.hpp"
#include "nhl/eval.hpp"
#include "nhl/kb.hpp"
#include "nhl/syntax.hpp"
#include "nhl/term.hpp"
#include "nhl/vc.hpp"

namespace nhl {

class UnsupportedQuantifierShape : public Error {
 public:
  using Error::Error;
};

class RewriteBudgetExceeded : public Error {
 public:
  RewriteBudgetExceeded() : Error("ground rewriting exceeded its budget") {}
};

class CostExceeded : public Error {
 public:
  using Error::Error;
};

/// Raised by the arithmetic procedure when a size cap is hit.
class ProverLimit : public Error {
 public:
  using Error::Error;
};

struct ProverOptions {
  int bound = 64;                // refutation search range [-bound, bound]
  long refute_budget = 300000;   // candidate assignments tried
  long case_budget = 20000;      // disjunctive cases explored
  size_t constraint_cap = 4000;  // live constraints during elimination
  long rewrite_budget = 1000;
};

/// Per-call supply of fresh witness, abstraction and atom names.
struct FreshNames {
  int witness = 0;
  int num = 0;
  int atom = 0;
  Term next_witness() { return mk::witness("@c" + std::to_string(++witness)); }
  std::string next_num() { return "$v" + std::to_string(++num); }
  std::string next_atom() { return "$p" + std::to_string(++atom); }
};

// ---------------------------------------------------------------------------
// Quantifiers

namespace detail {

inline Term skolemize(const Term& t, bool positive, bool under_instantiation, FreshNames& names,
                      std::vector<Term>& skolems) {
  if (auto q = as_quantifier(t)) {
    bool skolemizable = q->universal == positive;
    if (skolemizable) {
      if (under_instantiation) {
        throw UnsupportedQuantifierShape(
            "a quantifier that needs a witness occurs inside one that needs instantiation");
      }
      Term c = names.next_witness();
      skolems.push_back(c);
      return skolemize(substitute(q->body, q->var, c), positive, false, names, skolems);
    }
    Term body = skolemize(q->body, positive, true, names, skolems);
    return Term::app(t.fn(), Term::abs(q->var, Type::entity(), body));
  }
  if (auto n = as_not(t)) return mk::neg(skolemize(*n, !positive, under_instantiation, names, skolems));
  if (auto b = as_binop(t)) {
    const auto& [op, l, r] = *b;
    if (op == sym::kAnd || op == sym::kOr || op == sym::kImplies) {
      Term nl = skolemize(l, op == sym::kImplies ? !positive : positive, under_instantiation, names,
                          skolems);
      Term nr = skolemize(r, positive, under_instantiation, names, skolems);
      return mk::binop(op, nl, nr);
    }
  }
  bool nested = false;
  for_each_subterm(t, [&](const Term& s) { nested = nested || as_quantifier(s).has_value(); });
  if (nested) throw UnsupportedQuantifierShape("quantifier inside an atom: " + print_term(t));
  return t;
}

inline Term instantiate(const Term& t, const std::vector<Term>& ground) {
  if (auto q = as_quantifier(t)) {
    std::vector<Term> parts;
    for (const auto& g : ground) parts.push_back(instantiate(substitute(q->body, q->var, g), ground));
    return q->universal ? mk::conj_all(parts) : mk::disj_all(parts);
  }
  if (auto n = as_not(t)) return mk::neg(instantiate(*n, ground));
  if (auto b = as_binop(t)) {
    const auto& [op, l, r] = *b;
    if (op == sym::kAnd || op == sym::kOr || op == sym::kImplies) {
      return mk::binop(op, instantiate(l, ground), instantiate(r, ground));
    }
  }
  return t;
}

inline void add_unique(std::vector<Term>& v, const Term& t) {
  if (std::none_of(v.begin(), v.end(), [&](const Term& o) { return alpha_eq(o, t); })) v.push_back(t);
}

}  // namespace detail

/// Replaces witness-needing quantifiers (universal in positive position,
/// existential in negative position) by fresh constants, then expands the
/// remaining quantifiers over the ground Entity terms: the new constants,
/// ground Entity terms already present, and post(c) for each new constant c
/// when `post` occurs in the formula.
inline Term skolemize_and_instantiate(const Term& formula, FreshNames& names) {
  std::vector<Term> skolems;
  Term f = detail::skolemize(formula, true, false, names, skolems);
  bool quantified = false;
  for_each_subterm(f, [&](const Term& s) { quantified = quantified || as_quantifier(s).has_value(); });
  if (!quantified) return f;
  std::vector<Term> ground;
  for (const auto& c : skolems) detail::add_unique(ground, c);
  for_each_subterm(f, [&](const Term& s) {
    if (s.type().is(BaseType::Entity) && is_closed(s)) detail::add_unique(ground, s);
  });
  if (constants_of(f).count(std::string(sym::kPost))) {
    for (const auto& c : skolems) detail::add_unique(ground, mk::post(c));
  }
  if (ground.empty()) ground.push_back(names.next_witness());
  return detail::instantiate(f, ground);
}

inline Term skolemize_and_instantiate(const Term& formula) {
  FreshNames names;
  return skolemize_and_instantiate(formula, names);
}

// ---------------------------------------------------------------------------
// Ground equalities

namespace detail {

/// Contains an application of, or is, a symbol outside linear arithmetic.
inline bool uninterpreted(const Term& t) {
  bool found = false;
  for_each_subterm(t, [&](const Term& s) {
    if (s.is_const() && !s.is_literal() && !sym::is_logical(s.name()) &&
        !sym::is_program_var(s.name()) && !sym::is_abstraction(s.name())) {
      found = true;
    }
  });
  return found;
}

inline void hypotheses(const Term& f, std::vector<Term>& hyps, Term& conclusion) {
  if (auto b = as_binop(f); b && std::get<0>(*b) == sym::kImplies) {
    for (const auto& h : conjuncts(std::get<1>(*b))) hyps.push_back(h);
    hypotheses(std::get<2>(*b), hyps, conclusion);
  } else {
    conclusion = f;
  }
}

/// Orders candidate class representatives: interpreted terms first, then by
/// size, then by printed form.
inline std::tuple<bool, size_t, std::string> rep_key(const Term& t) {
  return {uninterpreted(t), term_size(t), print_term(t)};
}

struct GroundFact {
  Term lhs;
  Term rhs;
};

inline Term rewrite_once(const Term& t, const std::map<std::string, Term>& rules, long& count,
                         long budget) {
  if (is_closed(t)) {
    auto it = rules.find(canonical_key(t));
    if (it != rules.end()) {
      if (++count > budget) throw RewriteBudgetExceeded();
      return it->second;
    }
  }
  if (t.is_app()) {
    Term f = rewrite_once(t.fn(), rules, count, budget);
    Term a = rewrite_once(t.arg(), rules, count, budget);
    if (f.same(t.fn()) && a.same(t.arg())) return t;
    return Term::app(f, a);
  }
  return t;
}

inline Term rewrite_fix(Term t, const std::map<std::string, Term>& rules, long& count, long budget) {
  for (;;) {
    Term n = rewrite_once(t, rules, count, budget);
    if (n.same(t)) return t;
    t = n;
  }
}

}  // namespace detail

/// Oriented ground facts from the equational hypotheses of `formula`. Each
/// equivalence class of terms rewrites to its preferred representative.
inline std::vector<detail::GroundFact> ground_facts(const Term& formula) {
  std::vector<Term> hyps;
  Term conclusion = formula;
  detail::hypotheses(formula, hyps, conclusion);
  std::map<std::string, Term> terms;
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> find = [&](const std::string& k) {
    auto it = parent.find(k);
    if (it == parent.end() || it->second == k) return k;
    return it->second = find(it->second);
  };
  std::vector<std::string> order;
  for (const auto& h : hyps) {
    auto b = as_binop(h);
    if (!b || std::get<0>(*b) != sym::kEq || !is_closed(h)) continue;
    const Term& l = std::get<1>(*b);
    const Term& r = std::get<2>(*b);
    if (!detail::uninterpreted(l) && !detail::uninterpreted(r)) continue;
    std::string kl = canonical_key(l), kr = canonical_key(r);
    for (const auto& [k, t] : {std::pair{kl, l}, std::pair{kr, r}}) {
      if (terms.emplace(k, t).second) {
        parent[k] = k;
        order.push_back(k);
      }
    }
    std::string a = find(kl), c = find(kr);
    if (a != c) parent[a] = c;
  }
  std::map<std::string, std::string> rep;
  for (const auto& k : order) {
    std::string root = find(k);
    auto it = rep.find(root);
    if (it == rep.end() || detail::rep_key(terms.at(k)) < detail::rep_key(terms.at(it->second))) {
      rep[root] = k;
    }
  }
  std::vector<detail::GroundFact> facts;
  for (const auto& k : order) {
    const std::string& r = rep.at(find(k));
    if (r != k) facts.push_back({terms.at(k), terms.at(r)});
  }
  return facts;
}

/// Rewrites with the ground facts to a fixpoint. The equational hypotheses
/// themselves are left in place so no information is lost.
inline Term saturate_equalities(const Term& formula, long budget = 1000) {
  auto facts = ground_facts(formula);
  if (facts.empty()) return formula;
  std::map<std::string, Term> rules;
  for (const auto& f : facts) rules.emplace(canonical_key(f.lhs), f.rhs);
  long count = 0;
  std::function<Term(const Term&)> go = [&](const Term& f) -> Term {
    if (auto b = as_binop(f); b && std::get<0>(*b) == sym::kImplies) {
      std::vector<Term> hs;
      for (const auto& h : conjuncts(std::get<1>(*b))) {
        auto e = as_binop(h);
        bool fact = e && std::get<0>(*e) == sym::kEq && is_closed(h) &&
                    (detail::uninterpreted(std::get<1>(*e)) || detail::uninterpreted(std::get<2>(*e)));
        hs.push_back(fact ? h : detail::rewrite_fix(h, rules, count, budget));
      }
      return mk::imp(mk::conj_all(hs), go(std::get<2>(*b)));
    }
    return detail::rewrite_fix(f, rules, count, budget);
  };
  return go(formula);
}

// ---------------------------------------------------------------------------
// Abstraction

struct Abstraction {
  Term formula;
  /// Abstraction constant name -> the ground term it stands for.
  std::vector<std::pair<std::string, Term>> mapping;

  const Term* term_for(const std::string& name) const {
    for (const auto& [n, t] : mapping) {
      if (n == name) return &t;
    }
    return nullptr;
  }
};

namespace detail {

struct Abstractor {
  FreshNames& names;
  std::map<std::string, std::string> by_key;
  std::vector<std::pair<std::string, Term>> mapping;

  Term fresh_for(const Term& t) {
    std::string key = canonical_key(t);
    auto it = by_key.find(key);
    std::string name;
    if (it != by_key.end()) {
      name = it->second;
    } else {
      name = t.type().is(BaseType::Bool) ? names.next_atom() : names.next_num();
      by_key.emplace(key, name);
      mapping.emplace_back(name, t);
    }
    return Term::constant(name, t.type());
  }

  Term num(const Term& t) {
    if (t.is_literal()) return t;
    if (t.is_const() && (sym::is_program_var(t.name()) || sym::is_abstraction(t.name()))) return t;
    if (auto b = as_binop(t)) {
      const auto& [op, l, r] = *b;
      bool linear = op == sym::kPlus || op == sym::kMinus ||
                    (op == sym::kTimes && (l.is_literal() || r.is_literal()));
      if (linear) {
        Term nl = num(l);
        return mk::binop(op, nl, num(r));
      }
    }
    return fresh_for(t);
  }

  Term boolean(const Term& t) {
    if (t.is_const(sym::kTrue) || t.is_const(sym::kFalse)) return t;
    if (t.is_const() && sym::is_abstract_atom(t.name())) return t;
    if (auto n = as_not(t)) return mk::neg(boolean(*n));
    if (auto b = as_binop(t)) {
      const auto& [op, l, r] = *b;
      if (sym::is_connective(op)) {
        Term nl = boolean(l);
        return mk::binop(op, nl, boolean(r));
      }
      if (sym::is_comparison(op)) {
        Term nl = num(l);
        return mk::binop(op, nl, num(r));
      }
    }
    return fresh_for(t);
  }
};

}  // namespace detail

/// Replaces every maximal non-arithmetic Num term by a fresh integer constant
/// `$vN` and every non-arithmetic Bool atom by a fresh `$pN`. Equal terms get
/// equal names. Products of two non-literals count as non-arithmetic.
inline Abstraction abstract_uninterpreted(const Term& formula, FreshNames& names) {
  detail::Abstractor a{names, {}, {}};
  Term out = a.boolean(formula);
  return {out, std::move(a.mapping)};
}

inline Abstraction abstract_uninterpreted(const Term& formula) {
  FreshNames names;
  return abstract_uninterpreted(formula, names);
}

// ---------------------------------------------------------------------------
// Linear integer arithmetic

namespace lia {

/// sum(coef * var) + constant
struct Linear {
  std::map<std::string, Int> coef;
  Int k = 0;

  Linear& add(const Linear& o, const Int& m) {
    for (const auto& [v, c] : o.coef) {
      Int& slot = coef[v];
      slot += c * m;
      if (slot == 0) coef.erase(v);
    }
    k += o.k * m;
    return *this;
  }
  Linear scaled(const Int& m) const {
    Linear out;
    out.add(*this, m);
    return out;
  }
  Int coef_of(const std::string& v) const {
    auto it = coef.find(v);
    return it == coef.end() ? Int(0) : it->second;
  }
};

/// `e <= 0` or `e = 0`.
struct Constraint {
  Linear e;
  bool equality = false;
};

inline std::optional<Linear> linear(const Term& t) {
  Linear out;
  if (t.is_literal()) {
    out.k = t.value();
    return out;
  }
  if (t.is_const() && (sym::is_program_var(t.name()) || sym::is_abstraction(t.name()))) {
    out.coef[t.name()] = 1;
    return out;
  }
  auto b = as_binop(t);
  if (!b) return std::nullopt;
  const auto& [op, l, r] = *b;
  auto L = linear(l), R = linear(r);
  if (!L || !R) return std::nullopt;
  if (op == sym::kPlus) return L->add(*R, 1);
  if (op == sym::kMinus) return L->add(*R, -1);
  if (op == sym::kTimes) {
    if (L->coef.empty()) return R->scaled(L->k);
    if (R->coef.empty()) return L->scaled(R->k);
  }
  return std::nullopt;
}

/// Negation normal form over linear constraints and Boolean atoms.
struct Nnf {
  enum class Kind { And, Or, Cons, Atom, True, False } kind = Kind::True;
  std::vector<Nnf> kids;
  Constraint c;
  std::string atom;
  bool sign = true;

  static Nnf of(Kind k) {
    Nnf n;
    n.kind = k;
    return n;
  }
  static Nnf le(Linear e) {
    Nnf n = of(Kind::Cons);
    n.c = {std::move(e), false};
    return n;
  }
};

inline Nnf to_nnf(const Term& t, bool positive) {
  using K = Nnf::Kind;
  if (t.is_const(sym::kTrue)) return Nnf::of(positive ? K::True : K::False);
  if (t.is_const(sym::kFalse)) return Nnf::of(positive ? K::False : K::True);
  if (t.is_const() && sym::is_abstract_atom(t.name())) {
    Nnf n = Nnf::of(K::Atom);
    n.atom = t.name();
    n.sign = positive;
    return n;
  }
  if (auto n = as_not(t)) return to_nnf(*n, !positive);
  auto b = as_binop(t);
  if (!b) throw ProverLimit("not an arithmetic formula: " + print_term(t));
  const auto& [op, l, r] = *b;
  if (sym::is_connective(op)) {
    Nnf left = to_nnf(l, op == sym::kImplies ? !positive : positive);
    Nnf right = to_nnf(r, positive);
    bool conj = (op == sym::kAnd) == positive;
    if (op == sym::kImplies) conj = !positive;
    Nnf out = Nnf::of(conj ? K::And : K::Or);
    for (Nnf* side : {&left, &right}) {
      if (side->kind == out.kind) {
        for (auto& k : side->kids) out.kids.push_back(std::move(k));
      } else {
        out.kids.push_back(std::move(*side));
      }
    }
    return out;
  }
  auto L = linear(l), R = linear(r);
  if (!L || !R) throw ProverLimit("non-linear term in " + print_term(t));
  Linear d = L->add(*R, -1);  // l - r
  Linear nd = d.scaled(-1);
  auto plus1 = [](Linear e) {
    e.k += 1;
    return e;
  };
  std::string o = op;
  if (!positive) {
    if (o == sym::kEq) {
      Nnf out = Nnf::of(K::Or);
      out.kids = {Nnf::le(plus1(d)), Nnf::le(plus1(nd))};
      return out;
    }
    o = o == sym::kGt ? "le" : o == sym::kGe ? "lt" : o == sym::kLt ? "ge" : "gt";
  }
  if (o == sym::kEq) {
    Nnf n = Nnf::of(K::Cons);
    n.c = {d, true};
    return n;
  }
  if (o == sym::kLe) return Nnf::le(d);
  if (o == sym::kLt) return Nnf::le(plus1(d));
  if (o == sym::kGe) return Nnf::le(nd);
  return Nnf::le(plus1(nd));  // gt
}

inline Int gcd_of(const Linear& e) {
  Int g = 0;
  for (const auto& [v, c] : e.coef) g = boost::multiprecision::gcd(g, abs(c));
  return g;
}

inline Int ceil_div(const Int& a, const Int& b) {  // b > 0
  Int q = a / b;
  if (a % b != 0 && a > 0) q += 1;
  return q;
}

/// Divides by the coefficient gcd, rounding inequality constants up (a sound
/// integer cut). Returns false when the constraint is unsatisfiable.
inline bool tighten(Constraint& c, bool& trivial) {
  trivial = false;
  Int g = gcd_of(c.e);
  if (g == 0) {
    trivial = true;
    return c.equality ? c.e.k == 0 : c.e.k <= 0;
  }
  if (c.equality) {
    if (c.e.k % g != 0) return false;
    for (auto& [v, x] : c.e.coef) x /= g;
    c.e.k /= g;
  } else {
    for (auto& [v, x] : c.e.coef) x /= g;
    c.e.k = ceil_div(c.e.k, g);
  }
  return true;
}

/// False when the conjunction has no integer solution; true when the
/// elimination could not refute it.
inline bool satisfiable(std::vector<Constraint> cs, size_t cap) {
  std::vector<Constraint> work;
  auto normalize_all = [&](std::vector<Constraint>& in) {
    std::vector<Constraint> out;
    std::set<std::string> seen;
    for (auto& c : in) {
      bool trivial = false;
      if (!tighten(c, trivial)) return false;
      if (trivial) continue;
      std::string key = c.equality ? "=" : "<";
      for (const auto& [v, x] : c.e.coef) key += v + ":" + x.str() + ",";
      key += "|" + c.e.k.str();
      if (seen.insert(key).second) out.push_back(std::move(c));
    }
    in = std::move(out);
    return true;
  };
  if (!normalize_all(cs)) return false;

  // Equalities first: each one removes a variable from everything else.
  for (;;) {
    auto it = std::find_if(cs.begin(), cs.end(), [](const Constraint& c) { return c.equality; });
    if (it == cs.end()) break;
    Constraint eq = *it;
    cs.erase(it);
    auto pivot = std::min_element(eq.e.coef.begin(), eq.e.coef.end(), [](const auto& a, const auto& b) {
      return abs(a.second) < abs(b.second);
    });
    std::string x = pivot->first;
    if (pivot->second < 0) eq.e = eq.e.scaled(-1);
    Int c = eq.e.coef_of(x);
    for (auto& o : cs) {
      Int d = o.e.coef_of(x);
      if (d == 0) continue;
      Linear n = o.e.scaled(c);
      n.add(eq.e, -d);
      o.e = std::move(n);
    }
    if (!normalize_all(cs)) return false;
  }

  for (;;) {
    if (cs.empty()) return true;
    if (cs.size() > cap) throw ProverLimit("too many linear constraints");
    std::map<std::string, std::pair<long, long>> counts;
    for (const auto& c : cs) {
      for (const auto& [v, x] : c.e.coef) (x > 0 ? counts[v].first : counts[v].second)++;
    }
    // Eliminate the variable producing the fewest new constraints.
    std::string best;
    long best_cost = 0;
    for (const auto& [v, pn] : counts) {
      long cost = pn.first * pn.second - pn.first - pn.second;
      if (best.empty() || cost < best_cost) {
        best = v;
        best_cost = cost;
      }
    }
    std::vector<Constraint> pos, neg, rest;
    for (auto& c : cs) {
      Int a = c.e.coef_of(best);
      (a > 0 ? pos : a < 0 ? neg : rest).push_back(std::move(c));
    }
    for (const auto& p : pos) {
      for (const auto& n : neg) {
        Int a = p.e.coef_of(best), b = -n.e.coef_of(best);
        Linear comb = p.e.scaled(b);
        comb.add(n.e, a);
        rest.push_back({std::move(comb), false});
      }
    }
    cs = std::move(rest);
    if (!normalize_all(cs)) return false;
  }
}

inline Constraint negated(const Constraint& c) {  // inequality only
  Linear e = c.e.scaled(-1);
  e.k += 1;
  return {std::move(e), false};
}

struct Search {
  size_t cap;
  long budget;
  long cases = 0;

  struct State {
    std::vector<Constraint> cube;
    std::map<std::string, bool> atoms;
    std::vector<const Nnf*> pending;  // open disjunctions
  };

  bool consistent_with(const State& s, const Constraint& c) {
    auto cube = s.cube;
    cube.push_back(c);
    return satisfiable(std::move(cube), cap);
  }

  /// Moves conjunctive structure into the state. False on a direct conflict.
  static bool absorb(State& s, std::vector<const Nnf*> todo) {
    while (!todo.empty()) {
      const Nnf* n = todo.back();
      todo.pop_back();
      switch (n->kind) {
        case Nnf::Kind::True: break;
        case Nnf::Kind::False: return false;
        case Nnf::Kind::And:
          for (auto it = n->kids.rbegin(); it != n->kids.rend(); ++it) todo.push_back(&*it);
          break;
        case Nnf::Kind::Cons: s.cube.push_back(n->c); break;
        case Nnf::Kind::Atom: {
          auto [it, fresh] = s.atoms.emplace(n->atom, n->sign);
          if (!fresh && it->second != n->sign) return false;
          break;
        }
        case Nnf::Kind::Or: s.pending.push_back(n); break;
      }
    }
    return true;
  }

  /// True when some branch of the state is not refuted.
  bool open(State s) {
    for (;;) {
      if (++cases > budget) throw ProverLimit("too many disjunctive cases");
      if (!satisfiable(s.cube, cap)) return false;
      if (s.pending.empty()) return true;
      // Drop satisfied disjunctions, commit to those with one live branch.
      std::vector<const Nnf*> keep, units;
      std::vector<std::vector<const Nnf*>> live_of;
      for (const Nnf* o : s.pending) {
        std::vector<const Nnf*> live;
        bool satisfied = false;
        for (const auto& k : o->kids) {
          if (k.kind == Nnf::Kind::False) continue;
          if (k.kind == Nnf::Kind::True) {
            satisfied = true;
            break;
          }
          if (k.kind == Nnf::Kind::Atom) {
            auto it = s.atoms.find(k.atom);
            if (it != s.atoms.end()) {
              if (it->second == k.sign) {
                satisfied = true;
                break;
              }
              continue;
            }
          }
          if (k.kind == Nnf::Kind::Cons) {
            if (!consistent_with(s, k.c)) continue;
            if (!k.c.equality && !consistent_with(s, negated(k.c))) {
              satisfied = true;
              break;
            }
          }
          live.push_back(&k);
        }
        if (satisfied) continue;
        if (live.empty()) return false;
        if (live.size() == 1) {
          units.push_back(live[0]);
        } else {
          keep.push_back(o);
          live_of.push_back(std::move(live));
        }
      }
      s.pending = keep;
      if (!units.empty()) {
        if (!absorb(s, units)) return false;
        continue;
      }
      if (s.pending.empty()) return true;
      // Branch on the disjunction with the fewest live alternatives.
      size_t best = 0;
      for (size_t i = 1; i < live_of.size(); ++i) {
        if (live_of[i].size() < live_of[best].size()) best = i;
      }
      s.pending.erase(s.pending.begin() + static_cast<long>(best));
      for (const Nnf* k : live_of[best]) {
        State branch = s;
        if (absorb(branch, {k}) && open(std::move(branch))) return true;
      }
      return false;
    }
  }
};

/// True when the quantifier-free formula is valid over the integers; false
/// when validity could not be established.
inline bool valid(const Term& f, const ProverOptions& opts = {}) {
  Nnf neg = to_nnf(f, false);
  Search s{opts.constraint_cap, opts.case_budget};
  Search::State st;
  if (!Search::absorb(st, {&neg})) return true;
  return !s.open(std::move(st));
}

}  // namespace lia

// ---------------------------------------------------------------------------
// Countermodels

namespace detail {

inline bool is_abstract_symbol(const std::string& n) { return sym::is_abstraction(n); }

/// Builds a finite structure from an assignment to the abstracted formula:
/// one entity per ground Entity term, post following the ground terms, and
/// function tables read off the abstraction variables. Returns nullopt when
/// the assignment is not functionally consistent.
inline std::optional<Interpretation> structure_for(const Abstraction& abs,
                                                   const std::vector<Term>& entity_terms,
                                                   const std::map<std::string, Int>& nums,
                                                   const std::map<std::string, bool>& atoms) {
  Interpretation m;
  std::map<std::string, int> id;
  for (const auto& t : entity_terms) {
    std::string k = canonical_key(t);
    if (!id.count(k)) {
      int n = static_cast<int>(id.size());
      id.emplace(k, n);
    }
  }
  m.domain_size = std::max<int>(1, static_cast<int>(id.size()));
  m.post.assign(m.domain_size, 0);
  for (int e = 0; e < m.domain_size; ++e) m.post[e] = e;
  for (const auto& t : entity_terms) {
    if (t.is_const()) m.entities[t.name()] = id.at(canonical_key(t));
    if (t.is_app() && t.fn().is_const(sym::kPost)) {
      m.post[id.at(canonical_key(t.arg()))] = id.at(canonical_key(t));
    }
  }
  for (const auto& [n, v] : nums) m.nums[n] = v;
  for (const auto& [n, v] : atoms) m.bools[n] = v;

  std::vector<std::pair<std::string, Term>> ordered = abs.mapping;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return term_size(a.second) < term_size(b.second); });
  for (const auto& [name, t] : ordered) {
    bool is_num = t.type().is(BaseType::Num);
    if (is_num && !nums.count(name)) continue;
    if (!is_num && !atoms.count(name)) continue;
    if (t.is_const()) {
      if (is_num) m.nums[t.name()] = nums.at(name);
      else m.bools[t.name()] = atoms.at(name);
      continue;
    }
    if (!t.is_app() || !t.fn().is_const()) continue;
    const std::string& f = t.fn().name();
    const Type& dom = t.fn().type().domain();
    if (dom.is(BaseType::Entity)) {
      auto it = id.find(canonical_key(t.arg()));
      if (it == id.end()) return std::nullopt;
      int e = it->second;
      if (is_num) {
        auto& table = m.num_funs[f];
        table.resize(m.domain_size, 0);
        table[e] = nums.at(name);
      } else {
        auto& table = m.preds[f];
        table.resize(m.domain_size, false);
        table[e] = atoms.at(name);
      }
    } else if (dom.is(BaseType::Num) && is_num) {
      Int x;
      try {
        x = evaluate(t.arg(), m).num;
      } catch (const Error&) {
        return std::nullopt;
      }
      auto& table = m.arith_funs[f];
      auto [it, fresh] = table.emplace(x, nums.at(name));
      if (!fresh && it->second != nums.at(name)) return std::nullopt;
    }
  }
  return m;
}

/// Completes `m` with defaults for every symbol of `formula`, copies tables
/// along the knowledge-base equalities, and checks the subsumption axioms.
inline bool complete_structure(Interpretation& m, const Term& formula, const KnowledgeBase& kb) {
  std::map<std::string, Type> symbols;
  for_each_subterm(formula, [&](const Term& s) {
    if (s.is_const() && !s.is_literal()) symbols.emplace(s.name(), s.type());
  });
  for (const auto& [from, to] : kb.rewrites()) {
    if (m.num_funs.count(to)) m.num_funs[from] = m.num_funs[to];
    if (m.preds.count(to)) m.preds[from] = m.preds[to];
  }
  for (const auto& [n, t] : symbols) {
    if (sym::is_logical(n) || n == sym::kPost) continue;
    if (t.is(BaseType::Num)) m.nums.emplace(n, 0);
    else if (t.is(BaseType::Bool)) m.bools.emplace(n, false);
    else if (t.is(BaseType::Entity)) m.entities.emplace(n, 0);
    else if (t == Type::arrow(Type::entity(), Type::num())) {
      std::string src = kb.canonical(n);
      auto table = m.num_funs.count(src) ? m.num_funs[src] : std::vector<Int>{};
      table.resize(m.domain_size, 0);
      m.num_funs[n] = table;
    } else if (t == Type::arrow(Type::entity(), Type::boolean())) {
      std::string src = kb.canonical(n);
      auto table = m.preds.count(src) ? m.preds[src] : std::vector<bool>{};
      table.resize(m.domain_size, false);
      m.preds[n] = table;
    }
  }
  for (auto& [n, table] : m.num_funs) table.resize(m.domain_size, 0);
  for (auto& [n, table] : m.preds) table.resize(m.domain_size, false);
  for (const auto& a : kb.axioms()) {
    for (int e = 0; e < m.domain_size; ++e) {
      auto val = [&](const std::string& p) -> std::optional<bool> {
        auto it = m.preds.find(p);
        if (it == m.preds.end()) return std::nullopt;
        return static_cast<bool>(it->second[e]);
      };
      if (a.kind == Axiom::Kind::Isa) {
        auto x = val(a.first), y = val(a.second);
        if (x.value_or(false) && !y.value_or(false)) return false;
      } else {
        auto f = m.num_funs.find(a.first), g = m.num_funs.find(a.second);
        if (f != m.num_funs.end() && g != m.num_funs.end() && f->second[e] != g->second[e]) return false;
        auto x = val(a.first), y = val(a.second);
        if (x && y && *x != *y) return false;
      }
    }
  }
  return true;
}

/// Values 0, 1, -1, 2, -2, ... with |v| <= r.
inline std::vector<Int> values_upto(int r) {
  std::vector<Int> out{0};
  for (int i = 1; i <= r; ++i) {
    out.push_back(i);
    out.push_back(-i);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Decision

/// Full discharge pipeline for one verification condition.
inline Verdict decide(const Vc& vc, const KnowledgeBase& kb, const ProverOptions& opts = {}) {
  try {
    if (!vc.formula.type().is(BaseType::Bool) || !is_closed(vc.formula)) {
      return Verdict::unknown("formula is not a closed Bool term");
    }
    FreshNames names;
    Term f1 = apply_kb(vc.formula, kb);
    Term f2 = skolemize_and_instantiate(f1, names);
    Term f3 = saturate_equalities(f2, opts.rewrite_budget);
    Term f4 = fold_constants(f3);
    Abstraction abstraction = abstract_uninterpreted(f4, names);
    if (lia::valid(abstraction.formula, opts)) return Verdict::valid();

    // Countermodel search over the abstract variables.
    std::vector<std::string> num_vars, atom_vars;
    std::set<std::string> seen;
    for_each_subterm(abstraction.formula, [&](const Term& s) {
      if (!s.is_const() || s.is_literal() || !seen.insert(s.name()).second) return;
      if (sym::is_abstract_atom(s.name())) atom_vars.push_back(s.name());
      else if (sym::is_program_var(s.name()) || sym::is_abstraction(s.name())) num_vars.push_back(s.name());
    });
    std::stable_sort(num_vars.begin(), num_vars.end(), [](const std::string& a, const std::string& b) {
      return sym::is_program_var(a) && !sym::is_program_var(b);
    });
    if (atom_vars.size() > 12) return Verdict::unknown("too many abstracted atoms to search");

    std::vector<Term> entity_terms;
    for_each_subterm(f4, [&](const Term& s) {
      if (s.type().is(BaseType::Entity) && is_closed(s)) detail::add_unique(entity_terms, s);
    });
    std::sort(entity_terms.begin(), entity_terms.end(),
              [](const Term& a, const Term& b) { return term_size(a) < term_size(b); });

    long tried = 0;
    std::map<std::string, Int> nums;
    std::optional<Verdict> found;
    auto check = [&]() -> bool {
      size_t m = atom_vars.size();
      for (unsigned long bits = 0; bits < (1ul << m); ++bits) {
        if (++tried > opts.refute_budget) return true;
        std::map<std::string, bool> atoms;
        for (size_t i = 0; i < m; ++i) atoms[atom_vars[i]] = (bits >> i) & 1;
        Interpretation am;
        am.nums = nums;
        am.bools = atoms;
        if (holds(abstraction.formula, am)) continue;
        auto model = detail::structure_for(abstraction, entity_terms, nums, atoms);
        if (!model) continue;
        if (!detail::complete_structure(*model, vc.formula, kb)) continue;
        bool falsified = false;
        try {
          falsified = !holds(vc.formula, *model);
        } catch (const OutsideInterpretation&) {
          continue;
        }
        if (!falsified) continue;
        std::vector<std::pair<std::string, std::string>> shown;
        for (const auto& v : num_vars) {
          if (sym::is_program_var(v)) shown.emplace_back(v, nums.at(v).str());
        }
        for (const auto& [name, t] : abstraction.mapping) {
          if (nums.count(name)) shown.emplace_back(print_term(t), nums.at(name).str());
          else if (atoms.count(name)) shown.emplace_back(print_term(t), atoms.at(name) ? "true" : "false");
        }
        found = Verdict::invalid(std::move(shown));
        return true;
      }
      return false;
    };
    // Assignments in order of increasing radius.
    std::function<bool(size_t, int, bool)> walk = [&](size_t i, int r, bool hit) -> bool {
      if (i == num_vars.size()) return hit ? check() : false;
      for (const auto& v : detail::values_upto(r)) {
        bool at_edge = abs(v) == r;
        if (i + 1 == num_vars.size() && !hit && !at_edge) continue;
        nums[num_vars[i]] = v;
        if (walk(i + 1, r, hit || at_edge)) return true;
      }
      return false;
    };
    if (num_vars.empty()) {
      check();
    } else {
      for (int r = 0; r <= opts.bound && !found && tried <= opts.refute_budget; ++r) {
        if (walk(0, r, false)) break;
      }
    }
    if (found) return *found;
    return Verdict::unknown("no proof and no countermodel within bound " + std::to_string(opts.bound));
  } catch (const UnsupportedQuantifierShape& e) {
    return Verdict::unknown(std::string("unsupported quantifier shape: ") + e.what());
  } catch (const RewriteBudgetExceeded& e) {
    return Verdict::unknown(e.what());
  } catch (const ProverLimit& e) {
    return Verdict::unknown(e.what());
  } catch (const Error& e) {
    return Verdict::unknown(e.what());
  }
}

inline Verdict decide(const Vc& vc) { return decide(vc, KnowledgeBase{}); }

// ---------------------------------------------------------------------------
// Exhaustive small-model oracle

namespace detail {

struct Slot {
  enum class Kind { Num, Bool, Entity, NumFun, Pred, EntityFun, ArithFun } kind;
  std::string name;
};

}  // namespace detail

/// Evaluates `formula` in every structure with at most `domain_size`
/// entities, post and other Entity -> Entity functions arbitrary, Entity ->
/// Num functions and Num constants ranging over [-num_bound, num_bound], and
/// Num -> Num functions tabulated on that range. Valid means no
/// countermodel within these bounds.
inline Verdict brute_force(const Term& formula, int num_bound, int domain_size,
                           long budget = 5000000) {
  using detail::Slot;
  std::vector<Slot> slots;
  std::set<std::string> seen;
  const Type e = Type::entity(), n = Type::num(), b = Type::boolean();
  for_each_subterm(formula, [&](const Term& s) {
    if (!s.is_const() || s.is_literal() || sym::is_logical(s.name())) return;
    if (!seen.insert(s.name()).second) return;
    const Type& t = s.type();
    Slot::Kind k;
    if (t.is(BaseType::Num)) k = Slot::Kind::Num;
    else if (t.is(BaseType::Bool)) k = Slot::Kind::Bool;
    else if (t.is(BaseType::Entity)) k = Slot::Kind::Entity;
    else if (t == Type::arrow(e, n)) k = Slot::Kind::NumFun;
    else if (t == Type::arrow(e, b)) k = Slot::Kind::Pred;
    else if (t == Type::arrow(e, e)) k = Slot::Kind::EntityFun;
    else if (t == Type::arrow(n, n)) k = Slot::Kind::ArithFun;
    else throw Error("brute force cannot enumerate '" + s.name() + "' of type " + t.str());
    slots.push_back({k, s.name()});
  });
  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& c) {
    return sym::is_program_var(a.name) && !sym::is_program_var(c.name);
  });
  const long width = 2L * num_bound + 1;

  // Digits of the odometer for a domain of size d.
  auto radices = [&](int d) {
    std::vector<long> out;
    for (const auto& s : slots) {
      long count = 0;
      switch (s.kind) {
        case Slot::Kind::Num: count = width; break;
        case Slot::Kind::Bool: count = 2; break;
        case Slot::Kind::Entity: count = d; break;
        case Slot::Kind::NumFun:
          for (int i = 0; i < d; ++i) out.push_back(width);
          continue;
        case Slot::Kind::Pred:
          for (int i = 0; i < d; ++i) out.push_back(2);
          continue;
        case Slot::Kind::EntityFun:
          for (int i = 0; i < d; ++i) out.push_back(d);
          continue;
        case Slot::Kind::ArithFun:
          for (long i = 0; i < width; ++i) out.push_back(width);
          continue;
      }
      out.push_back(count);
    }
    return out;
  };
  double total = 0;
  for (int d = 1; d <= domain_size; ++d) {
    double c = 1;
    for (long r : radices(d)) c *= static_cast<double>(r);
    total += c;
  }
  if (total > static_cast<double>(budget)) {
    throw CostExceeded("brute force needs " + std::to_string(static_cast<long long>(total)) +
                       " evaluations, budget is " + std::to_string(budget));
  }

  bool incomplete = false;
  for (int d = 1; d <= domain_size; ++d) {
    std::vector<long> rad = radices(d);
    std::vector<long> digit(rad.size(), 0);
    for (;;) {
      Interpretation m;
      m.domain_size = d;
      m.post.assign(d, 0);
      for (int i = 0; i < d; ++i) m.post[i] = i;
      size_t p = 0;
      auto num_at = [&](long v) { return Int(v - num_bound); };
      for (const auto& s : slots) {
        switch (s.kind) {
          case Slot::Kind::Num: m.nums[s.name] = num_at(digit[p++]); break;
          case Slot::Kind::Bool: m.bools[s.name] = digit[p++] == 1; break;
          case Slot::Kind::Entity: m.entities[s.name] = static_cast<int>(digit[p++]); break;
          case Slot::Kind::NumFun: {
            auto& t = m.num_funs[s.name];
            for (int i = 0; i < d; ++i) t.push_back(num_at(digit[p++]));
            break;
          }
          case Slot::Kind::Pred: {
            auto& t = m.preds[s.name];
            for (int i = 0; i < d; ++i) t.push_back(digit[p++] == 1);
            break;
          }
          case Slot::Kind::EntityFun: {
            std::vector<int> t;
            for (int i = 0; i < d; ++i) t.push_back(static_cast<int>(digit[p++]));
            if (s.name == sym::kPost) m.post = t;
            else m.entity_funs[s.name] = t;
            break;
          }
          case Slot::Kind::ArithFun: {
            auto& t = m.arith_funs[s.name];
            for (long i = 0; i < width; ++i) t[num_at(i)] = num_at(digit[p++]);
            break;
          }
        }
      }
      bool ok = true;
      try {
        ok = holds(formula, m);
      } catch (const OutsideInterpretation&) {
        incomplete = true;
      }
      if (!ok) {
        std::vector<std::pair<std::string, std::string>> shown;
        for (const auto& s : slots) {
          switch (s.kind) {
            case Slot::Kind::Num: shown.emplace_back(s.name, m.nums[s.name].str()); break;
            case Slot::Kind::Bool: shown.emplace_back(s.name, m.bools[s.name] ? "true" : "false"); break;
            case Slot::Kind::Entity: shown.emplace_back(s.name, "e" + std::to_string(m.entities[s.name])); break;
            case Slot::Kind::NumFun:
              for (int i = 0; i < d; ++i) {
                shown.emplace_back(s.name + "(e" + std::to_string(i) + ")", m.num_funs[s.name][i].str());
              }
              break;
            case Slot::Kind::Pred:
              for (int i = 0; i < d; ++i) {
                shown.emplace_back(s.name + "(e" + std::to_string(i) + ")",
                                   m.preds[s.name][i] ? "true" : "false");
              }
              break;
            case Slot::Kind::EntityFun: {
              const auto& t = s.name == sym::kPost ? m.post : m.entity_funs[s.name];
              for (int i = 0; i < d; ++i) {
                shown.emplace_back(s.name + "(e" + std::to_string(i) + ")", "e" + std::to_string(t[i]));
              }
              break;
            }
            case Slot::Kind::ArithFun:
              for (const auto& [x, y] : m.arith_funs[s.name]) {
                shown.emplace_back(s.name + "(" + x.str() + ")", y.str());
              }
              break;
          }
        }
        return Verdict::invalid(std::move(shown));
      }
      size_t i = 0;
      while (i < rad.size() && ++digit[i] == rad[i]) digit[i++] = 0;
      if (i == rad.size()) break;
    }
  }
  if (incomplete) return Verdict::unknown("some structures were outside the tabulated range");
  Verdict v = Verdict::valid();
  v.reason = "within bounds";
  return v;
}

// ---------------------------------------------------------------------------
// SMT-LIB export

namespace detail {

inline std::string smt_symbol(const std::string& n) {
  bool simple = !n.empty() && !std::isdigit(static_cast<unsigned char>(n[0])) && n[0] != '@' &&
                std::all_of(n.begin(), n.end(), [](char c) {
                  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
                });
  return simple ? n : "|" + n + "|";
}

inline std::string smt_sort(const Type& t) {
  if (t.is(BaseType::Num)) return "Int";
  if (t.is(BaseType::Bool)) return "Bool";
  if (t.is(BaseType::Entity)) return "Entity";
  throw Error("no SMT-LIB sort for " + t.str());
}

inline const char* smt_op(const std::string& op) {
  static const std::map<std::string, const char*> table = {
      {"and", "and"}, {"or", "or"}, {"implies", "=>"}, {"not", "not"}, {"eq", "="},
      {"gt", ">"},    {"lt", "<"},  {"ge", ">="},      {"le", "<="},   {"plus", "+"},
      {"minus", "-"}, {"times", "*"}};
  auto it = table.find(op);
  return it == table.end() ? nullptr : it->second;
}

inline std::string smt_term(const Term& t) {
  switch (t.kind()) {
    case TermKind::Var: return smt_symbol(t.name());
    case TermKind::Const:
      if (t.is_literal()) return t.value() < 0 ? "(- " + Int(-t.value()).str() + ")" : t.value().str();
      return smt_symbol(t.name());
    case TermKind::Abs: throw Error("unapplied abstraction in SMT-LIB export");
    case TermKind::App: break;
  }
  if (auto q = as_quantifier(t)) {
    return std::string("(") + (q->universal ? "forall" : "exists") + " ((" + smt_symbol(q->var) +
           " Entity)) " + smt_term(q->body) + ")";
  }
  Spine sp = spine(t);
  std::string head;
  if (sp.head.is_const()) {
    const char* op = smt_op(sp.head.name());
    head = op ? op : smt_symbol(sp.head.name());
  } else {
    throw Error("higher-order application in SMT-LIB export");
  }
  std::string out = "(" + head;
  for (const auto& a : sp.args) out += " " + smt_term(a);
  return out + ")";
}

}  // namespace detail

/// SMT-LIB v2 script whose unsatisfiability is the validity of the VC.
inline std::string export_smtlib(const Vc& vc) {
  std::vector<std::pair<std::string, Type>> decls;
  std::set<std::string> seen;
  for_each_subterm(vc.formula, [&](const Term& s) {
    if (!s.is_const() || s.is_literal() || sym::is_logical(s.name())) return;
    if (seen.insert(s.name()).second) decls.emplace_back(s.name(), s.type());
  });
  std::ostringstream out;
  out << "; " << vc.provenance.str() << "\n";
  out << "(set-logic AUFLIA)\n";
  out << "(declare-sort Entity 0)\n";
  for (const auto& [name, type] : decls) {
    std::vector<Type> args;
    Type t = type;
    while (t.is_arrow()) {
      args.push_back(t.domain());
      t = t.codomain();
    }
    out << "(declare-fun " << detail::smt_symbol(name) << " (";
    for (size_t i = 0; i < args.size(); ++i) out << (i ? " " : "") << detail::smt_sort(args[i]);
    out << ") " << detail::smt_sort(t) << ")\n";
  }
  out << "(assert (not " << detail::smt_term(vc.formula) << "))\n";
  out << "(check-sat)\n";
  return out.str();
}

}  // namespace nhl
