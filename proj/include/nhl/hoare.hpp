#pragma once

// Relating logical forms to program variables, building Hoare triples from
// specification forms, and generating verification conditions by weakest
// preconditions.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nhl/error.hpp"
#include "nhl/imp.hpp"
#include "nhl/spec_form.hpp"
#include "nhl/syntax.hpp"
#include "nhl/term.hpp"
#include "nhl/vc.hpp"

namespace nhl {

class VacuousProjection : public Error {
 public:
  VacuousProjection()
      : Error("invariant projection kept no conjunct over program variables") {}
};

class ResidualSymbols : public Error {
 public:
  explicit ResidualSymbols(const std::string& sym)
      : Error("invariant projection left logical-form symbol '" + sym + "'") {}
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// LFPL relations

struct Binding {
  Term body;  // Num-typed term over the logical variables
  std::string program_var;
};

/// Existentially closed conjunction of `body_i = _v_i` linking logical-form
/// functions to program variables.
class LfplRelation {
 public:
  LfplRelation() = default;

  /// Validates the invariants: Entity-typed logical variables, Num bodies
  /// whose free variables are logical variables, each program variable bound
  /// at most once.
  LfplRelation(std::vector<std::string> logical_vars, std::vector<Binding> bindings)
      : vars_(std::move(logical_vars)), bindings_(std::move(bindings)) {
    std::set<std::string> seen;
    std::set<std::string> vars(vars_.begin(), vars_.end());
    if (vars.size() != vars_.size()) throw InvalidSpec("duplicate logical variable in relation");
    for (const auto& b : bindings_) {
      if (!sym::is_program_var(b.program_var)) {
        throw InvalidSpec("relation target '" + b.program_var + "' is not a program variable");
      }
      if (!seen.insert(b.program_var).second) {
        throw InvalidSpec("program variable '" + b.program_var + "' bound more than once");
      }
      if (!b.body.type().is(BaseType::Num)) {
        throw TypeMismatch("relation body " + print_term(b.body) + " is not of type Num");
      }
      for (const auto& [n, t] : free_vars(b.body)) {
        if (!vars.count(n)) {
          throw InvalidSpec("variable '" + n + "' in relation is not a logical variable");
        }
        if (!t.is(BaseType::Entity)) {
          throw TypeMismatch("logical variable '" + n + "' must have type Entity");
        }
      }
    }
  }

  const std::vector<std::string>& logical_vars() const { return vars_; }
  const std::vector<Binding>& bindings() const { return bindings_; }
  bool empty() const { return bindings_.empty(); }

 private:
  std::vector<std::string> vars_;
  std::vector<Binding> bindings_;
};

namespace detail {
inline void free_vars_in_order(const Term& t, std::set<std::string>& bound,
                               std::vector<std::string>& out) {
  switch (t.kind()) {
    case TermKind::Var:
      if (!bound.count(t.name()) && std::find(out.begin(), out.end(), t.name()) == out.end()) {
        out.push_back(t.name());
      }
      return;
    case TermKind::Const: return;
    case TermKind::Abs: {
      bool fresh = bound.insert(t.name()).second;
      free_vars_in_order(t.body(), bound, out);
      if (fresh) bound.erase(t.name());
      return;
    }
    case TermKind::App:
      free_vars_in_order(t.fn(), bound, out);
      free_vars_in_order(t.arg(), bound, out);
      return;
  }
}
}  // namespace detail

/// Parses a relation file: one `term = _var` binding per line, `#` comments.
/// Logical variables are the free variables in order of first appearance.
inline LfplRelation load_relation(const std::string& text, const Signature& sig) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<Binding> bindings;
  std::vector<std::string> vars;
  std::set<std::string> bound;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Term eq = [&] {
      try {
        return parse_term(line, sig);
      } catch (const SyntaxError& e) {
        throw SyntaxError(std::string("relation: ") + e.what(), lineno);
      } catch (const Error& e) {
        throw Error("relation line " + std::to_string(lineno) + ": " + e.what());
      }
    }();
    auto b = as_binop(eq);
    if (!b || std::get<0>(*b) != sym::kEq || !std::get<2>(*b).is_const() ||
        !sym::is_program_var(std::get<2>(*b).name())) {
      throw SyntaxError("relation binding must have the form `term = _var`", lineno);
    }
    detail::free_vars_in_order(std::get<1>(*b), bound, vars);
    bindings.push_back({std::get<1>(*b), std::get<2>(*b).name()});
  }
  return LfplRelation(std::move(vars), std::move(bindings));
}

/// Replaces every logical variable x by post(x) in every binding body.
inline LfplRelation prime(const LfplRelation& r) {
  std::vector<Binding> out;
  for (const auto& b : r.bindings()) {
    Term body = b.body;
    for (const auto& v : r.logical_vars()) {
      body = substitute(body, v, mk::post(Term::var(v, Type::entity())));
    }
    out.push_back({body, b.program_var});
  }
  return LfplRelation(r.logical_vars(), std::move(out));
}

/// `exists x1. ... exists xn. b1 = _v1 && ... && bk = _vk`; `true` if empty.
inline Term relation_formula(const LfplRelation& r) {
  if (r.empty()) return mk::truth(true);
  std::vector<Term> eqs;
  for (const auto& b : r.bindings()) eqs.push_back(mk::eq(b.body, mk::program_var(b.program_var)));
  Term body = mk::conj_all(eqs);
  const auto& vars = r.logical_vars();
  for (auto it = vars.rbegin(); it != vars.rend(); ++it) body = mk::exists(*it, body);
  return body;
}

// ---------------------------------------------------------------------------
// Invariant projection

namespace detail {

inline bool projectable_constant(const std::string& n) {
  return sym::is_program_var(n) || sym::is_comparison(n) || sym::is_arithmetic(n) ||
         sym::is_connective(n) || sym::is_bool_literal(n);
}

inline void instantiate_universals(const Term& t, const std::vector<Term>& witnesses,
                                   std::vector<Term>& out) {
  if (auto q = as_quantifier(t); q && q->universal) {
    for (const auto& w : witnesses) {
      instantiate_universals(normalize(Term::app(t.arg(), w)), witnesses, out);
    }
    return;
  }
  out.push_back(t);
}

}  // namespace detail

/// The program-variable assertion implied by a logical form under a
/// relation: universals of L are instantiated at one witness per logical
/// variable, relation bodies over the witnesses are rewritten to their program
/// variables, and only conjuncts free of logical-form symbols are kept.
inline Term project_invariant(const Term& l, const LfplRelation& r) {
  if (r.empty()) throw InvalidSpec("invariant projection needs a non-empty relation");
  std::vector<Term> witnesses;
  std::vector<std::pair<std::string, Term>> subst;
  for (const auto& v : r.logical_vars()) {
    Term w = mk::witness("@" + v);
    witnesses.push_back(w);
    subst.emplace_back(v, w);
  }
  std::vector<std::pair<Term, Term>> rewrites;
  for (const auto& b : r.bindings()) {
    Term ground = b.body;
    for (const auto& [v, w] : subst) ground = substitute(ground, v, w);
    rewrites.emplace_back(ground, mk::program_var(b.program_var));
  }

  std::vector<Term> instances;
  for (const auto& c : conjuncts(l)) detail::instantiate_universals(c, witnesses, instances);

  std::vector<Term> kept;
  for (Term c : instances) {
    for (const auto& [from, to] : rewrites) c = replace_subterm(c, from, to);
    if (!is_closed(c)) continue;
    std::set<std::string> consts = constants_of(c);
    bool ok = std::all_of(consts.begin(), consts.end(), detail::projectable_constant);
    if (!ok) continue;
    if (std::none_of(kept.begin(), kept.end(), [&](const Term& k) { return alpha_eq(k, c); })) {
      kept.push_back(c);
    }
  }
  if (kept.empty()) throw VacuousProjection();
  Term result = mk::conj_all(kept);
  for (const auto& n : constants_of(result)) {
    if (is_domain_symbol(n) || n == sym::kPost || sym::is_witness(n)) throw ResidualSymbols(n);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Triples

struct HoareTriple {
  Term pre;
  imp::Stmt program;
  Term post;
};

inline bool mentions_post(const Term& t) { return constants_of(t).count(std::string(sym::kPost)) != 0; }

/// Checks the component-term invariants of a specification form: closed,
/// Bool-typed, and no after-state in the condition of a conditional
/// imperative.
inline void validate_spec(const SpecForm& spec) {
  for (const auto& p : spec.parts()) {
    if (!p.type().is(BaseType::Bool)) {
      throw InvalidSpec("logical form " + print_term(p) + " is not of type Bool");
    }
    if (!is_closed(p)) throw InvalidSpec("logical form " + print_term(p) + " is not closed");
  }
  if (spec.kind() == SpecForm::Kind::ConditionalImperative && mentions_post(spec.condition())) {
    throw InvalidSpec("the condition of a conditional imperative may not refer to the after-state");
  }
}

/// Assembles the triple for a specification form:
///   Invariant(L)               {I} S {I},  I = project_invariant(L, R)
///   Imperative(L)              {L && R} S {L && R'}
///   ConditionalImperative(E,L) {L && R && E} S {L && R'}
///   PrePost(L, L')             {L && R} S {L' && R'}
inline HoareTriple build_triple(const SpecForm& spec, const LfplRelation& r,
                                const imp::Stmt& program) {
  validate_spec(spec);
  Term rel = relation_formula(r);
  Term rel_after = relation_formula(prime(r));
  switch (spec.kind()) {
    case SpecForm::Kind::Invariant: {
      Term inv = project_invariant(spec.form(), r);
      return {inv, program, inv};
    }
    case SpecForm::Kind::Imperative:
      return {mk::conj(spec.form(), rel), program, mk::conj(spec.form(), rel_after)};
    case SpecForm::Kind::ConditionalImperative:
      return {mk::conj(mk::conj(spec.form(), rel), spec.condition()), program,
              mk::conj(spec.form(), rel_after)};
    case SpecForm::Kind::PrePost:
      return {mk::conj(spec.form(), rel), program, mk::conj(spec.after(), rel_after)};
  }
  throw InternalError("unreachable spec kind");
}

// ---------------------------------------------------------------------------
// Weakest preconditions

struct WpResult {
  Term pre;
  std::vector<Vc> side;  // loop VCs, ordered by loop id
};

namespace detail {

inline Term wp(const imp::Stmt& s, const Term& q, std::vector<Vc>& side) {
  using K = imp::Stmt::Kind;
  switch (s.kind) {
    case K::Skip: return q;
    case K::Assign: return replace_const(q, s.var, imp::embed(s.expr));
    case K::Seq: {
      Term acc = q;
      for (auto it = s.body.rbegin(); it != s.body.rend(); ++it) acc = wp(*it, acc, side);
      return acc;
    }
    case K::If: {
      Term c = imp::embed(s.expr);
      Term t = wp(s.body[0], q, side);
      Term e = wp(s.body[1], q, side);
      return mk::conj(mk::imp(c, t), mk::imp(mk::neg(c), e));
    }
    case K::While: {
      Term inv = imp::embed(s.invariant);
      Term c = imp::embed(s.expr);
      Term body_pre = wp(s.body[0], inv, side);
      side.push_back({mk::imp(mk::conj(inv, c), body_pre), Provenance::preservation(s.loop_id), {}});
      side.push_back({mk::imp(mk::conj(inv, mk::neg(c)), q), Provenance::exit(s.loop_id), {}});
      return inv;
    }
  }
  throw InternalError("unreachable statement kind");
}

inline bool has_unnumbered_loop(const imp::Stmt& s) {
  if (s.kind == imp::Stmt::Kind::While && s.loop_id == 0) return true;
  return std::any_of(s.body.begin(), s.body.end(), has_unnumbered_loop);
}

}  // namespace detail

/// wp(S, Q) with the side conditions of every loop (preservation, then exit,
/// by loop id).
inline WpResult wp(const imp::Stmt& stmt, const Term& q) {
  imp::Stmt s = stmt;
  if (detail::has_unnumbered_loop(s)) imp::assign_loop_ids(s);
  std::vector<Vc> side;
  Term pre = detail::wp(s, q, side);
  std::stable_sort(side.begin(), side.end(), [](const Vc& a, const Vc& b) {
    if (a.provenance.loop_id != b.provenance.loop_id) {
      return a.provenance.loop_id < b.provenance.loop_id;
    }
    return a.provenance.kind < b.provenance.kind;
  });
  return {pre, std::move(side)};
}

/// Main VC `pre => wp(S, post)` followed by the loop VCs.
inline std::vector<Vc> generate_vcs(const HoareTriple& triple) {
  WpResult w = wp(triple.program, triple.post);
  std::vector<Vc> out;
  out.push_back({mk::imp(triple.pre, w.pre), Provenance::main(), {}});
  for (auto& v : w.side) out.push_back(std::move(v));
  return out;
}

}  // namespace nhl
