#pragma once

// Simply-typed lambda terms with logical and arithmetic constants.
//
// Terms are immutable and shared; every constructor checks types, so a Term
// that exists is well typed with respect to the types carried by its leaves.
// `typecheck` additionally checks the leaves against a Signature.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "nhl/error.hpp"

namespace nhl {

using Int = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Types

enum class BaseType { Entity, Num, Bool };

class Type {
 public:
  static Type entity() { return Type(BaseType::Entity); }
  static Type num() { return Type(BaseType::Num); }
  static Type boolean() { return Type(BaseType::Bool); }
  static Type arrow(Type domain, Type codomain);

  bool is_arrow() const { return arrow_ != nullptr; }
  bool is(BaseType b) const { return !is_arrow() && base_ == b; }
  BaseType base() const { return base_; }
  const Type& domain() const;
  const Type& codomain() const;

  std::string str() const;

  friend bool operator==(const Type& a, const Type& b);
  friend bool operator!=(const Type& a, const Type& b) { return !(a == b); }
  friend bool operator<(const Type& a, const Type& b) { return a.str() < b.str(); }

 private:
  struct Arrow;
  explicit Type(BaseType b) : base_(b) {}
  BaseType base_ = BaseType::Entity;
  std::shared_ptr<const Arrow> arrow_;
};

struct Type::Arrow {
  Type domain;
  Type codomain;
};

inline Type Type::arrow(Type domain, Type codomain) {
  Type t(BaseType::Entity);
  t.arrow_ = std::make_shared<const Arrow>(Arrow{std::move(domain), std::move(codomain)});
  return t;
}

inline const Type& Type::domain() const {
  if (!arrow_) throw TypeMismatch("domain() of non-arrow type " + str());
  return arrow_->domain;
}

inline const Type& Type::codomain() const {
  if (!arrow_) throw TypeMismatch("codomain() of non-arrow type " + str());
  return arrow_->codomain;
}

inline bool operator==(const Type& a, const Type& b) {
  if (a.is_arrow() != b.is_arrow()) return false;
  if (!a.is_arrow()) return a.base_ == b.base_;
  return a.arrow_ == b.arrow_ ||
         (a.domain() == b.domain() && a.codomain() == b.codomain());
}

inline std::string Type::str() const {
  if (!is_arrow()) {
    switch (base_) {
      case BaseType::Entity: return "Entity";
      case BaseType::Num: return "Num";
      case BaseType::Bool: return "Bool";
    }
  }
  std::string d = domain().str();
  if (domain().is_arrow()) d = "(" + d + ")";
  return d + " -> " + codomain().str();
}

/// Builds `a1 -> a2 -> ... -> result`.
inline Type curried(const std::vector<Type>& args, Type result) {
  for (auto it = args.rbegin(); it != args.rend(); ++it) result = Type::arrow(*it, result);
  return result;
}

// ---------------------------------------------------------------------------
// Constant names

namespace sym {
inline constexpr std::string_view kForall = "forall";
inline constexpr std::string_view kExists = "exists";
inline constexpr std::string_view kAnd = "and";
inline constexpr std::string_view kOr = "or";
inline constexpr std::string_view kImplies = "implies";
inline constexpr std::string_view kNot = "not";
inline constexpr std::string_view kEq = "eq";
inline constexpr std::string_view kGt = "gt";
inline constexpr std::string_view kLt = "lt";
inline constexpr std::string_view kGe = "ge";
inline constexpr std::string_view kLe = "le";
inline constexpr std::string_view kPlus = "plus";
inline constexpr std::string_view kMinus = "minus";
inline constexpr std::string_view kTimes = "times";
inline constexpr std::string_view kPost = "post";
inline constexpr std::string_view kTrue = "true";
inline constexpr std::string_view kFalse = "false";

inline bool is_comparison(std::string_view n) {
  return n == kEq || n == kGt || n == kLt || n == kGe || n == kLe;
}
inline bool is_arithmetic(std::string_view n) {
  return n == kPlus || n == kMinus || n == kTimes;
}
inline bool is_connective(std::string_view n) {
  return n == kAnd || n == kOr || n == kImplies || n == kNot;
}
inline bool is_quantifier(std::string_view n) { return n == kForall || n == kExists; }
inline bool is_bool_literal(std::string_view n) { return n == kTrue || n == kFalse; }

/// Constants of the logic itself, as opposed to domain symbols.
inline bool is_logical(std::string_view n) {
  return is_comparison(n) || is_arithmetic(n) || is_connective(n) || is_quantifier(n) ||
         is_bool_literal(n);
}

/// `_balance`: program variable, always of type Num.
inline bool is_program_var(std::string_view n) { return n.size() > 1 && n[0] == '_'; }
/// `@c1`: witness (Skolem) constant, always of type Entity.
inline bool is_witness(std::string_view n) { return n.size() > 1 && n[0] == '@'; }
/// `$v1`: abstraction variable introduced by the prover, always Num.
inline bool is_abstraction(std::string_view n) { return n.size() > 1 && n[0] == '$'; }
/// `$p1`: abstracted boolean atom.
inline bool is_abstract_atom(std::string_view n) {
  return n.size() > 2 && n[0] == '$' && n[1] == 'p';
}
}  // namespace sym

// ---------------------------------------------------------------------------
// Terms

enum class TermKind { Var, Const, Abs, App };

struct TermNode;

class Term {
 public:
  static Term var(std::string name, Type type);
  static Term constant(std::string name, Type type);
  static Term literal(const Int& value);
  static Term boolean(bool value);
  static Term abs(std::string var, Type var_type, Term body);
  /// Throws TypeMismatch unless `fn` is an arrow whose domain is `arg`'s type.
  static Term app(Term fn, Term arg);

  TermKind kind() const;
  bool is_var() const { return kind() == TermKind::Var; }
  bool is_const() const { return kind() == TermKind::Const; }
  bool is_abs() const { return kind() == TermKind::Abs; }
  bool is_app() const { return kind() == TermKind::App; }
  bool is_literal() const;
  bool is_const(std::string_view name) const;

  /// Var/Const name, or the bound variable of an abstraction.
  const std::string& name() const;
  const Type& type() const;
  const Type& binder_type() const;
  const Term& body() const;
  const Term& fn() const;
  const Term& arg() const;
  const Int& value() const;

  /// Pointer identity; cheap pre-check before structural comparisons.
  bool same(const Term& other) const { return node_ == other.node_; }

 private:
  explicit Term(std::shared_ptr<const TermNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const TermNode> node_;
};

struct TermNode {
  TermKind kind;
  std::string name;
  Type type;
  Type binder_type;
  std::optional<Term> left;   // abs body, app function
  std::optional<Term> right;  // app argument
  std::optional<Int> literal;
};

inline Term Term::var(std::string name, Type type) {
  return Term(std::make_shared<const TermNode>(
      TermNode{TermKind::Var, std::move(name), type, type, std::nullopt, std::nullopt, std::nullopt}));
}

inline Term Term::constant(std::string name, Type type) {
  return Term(std::make_shared<const TermNode>(
      TermNode{TermKind::Const, std::move(name), type, type, std::nullopt, std::nullopt, std::nullopt}));
}

inline Term Term::literal(const Int& value) {
  return Term(std::make_shared<const TermNode>(TermNode{TermKind::Const, value.str(), Type::num(),
                                                        Type::num(), std::nullopt, std::nullopt,
                                                        value}));
}

inline Term Term::boolean(bool value) {
  return constant(std::string(value ? sym::kTrue : sym::kFalse), Type::boolean());
}

inline Term Term::abs(std::string var, Type var_type, Term body) {
  Type t = Type::arrow(var_type, body.type());
  return Term(std::make_shared<const TermNode>(
      TermNode{TermKind::Abs, std::move(var), t, var_type, std::move(body), std::nullopt, std::nullopt}));
}

inline Term Term::app(Term fn, Term arg) {
  if (!fn.type().is_arrow()) {
    throw TypeMismatch("cannot apply term of non-function type " + fn.type().str());
  }
  if (fn.type().domain() != arg.type()) {
    throw TypeMismatch("argument of type " + arg.type().str() + " given where " +
                       fn.type().domain().str() + " expected");
  }
  Type t = fn.type().codomain();
  return Term(std::make_shared<const TermNode>(
      TermNode{TermKind::App, std::string(), t, t, std::move(fn), std::move(arg), std::nullopt}));
}

inline TermKind Term::kind() const { return node_->kind; }
inline bool Term::is_literal() const { return node_->literal.has_value(); }
inline bool Term::is_const(std::string_view name) const {
  return is_const() && node_->name == name;
}
inline const std::string& Term::name() const { return node_->name; }
inline const Type& Term::type() const { return node_->type; }
inline const Type& Term::binder_type() const { return node_->binder_type; }
inline const Term& Term::body() const { return *node_->left; }
inline const Term& Term::fn() const { return *node_->left; }
inline const Term& Term::arg() const { return *node_->right; }
inline const Int& Term::value() const { return *node_->literal; }

// ---------------------------------------------------------------------------
// Signature

/// Constant name -> type. Program variables (`_x`), witnesses (`@c`) and
/// abstraction variables (`$v`) are typed by their prefix and need no entry.
class Signature {
 public:
  /// The logical constants plus `post`.
  static Signature builtin();

  /// Adds a domain symbol. Redeclaring with the same type is a no-op;
  /// a different type throws TypeMismatch.
  void declare(const std::string& name, const Type& type);
  std::optional<Type> lookup(const std::string& name) const;
  bool declares(const std::string& name) const { return table_.count(name) != 0; }

  /// Domain symbols in declaration-independent (name) order.
  std::vector<std::pair<std::string, Type>> domain_symbols() const;

 private:
  std::map<std::string, Type> table_;
};

inline Signature Signature::builtin() {
  Signature s;
  const Type e = Type::entity(), n = Type::num(), b = Type::boolean();
  const Type pred = Type::arrow(e, b);
  const Type quant = Type::arrow(pred, b);
  const Type bool2 = curried({b, b}, b);
  const Type cmp = curried({n, n}, b);
  const Type arith = curried({n, n}, n);
  s.table_.emplace(sym::kForall, quant);
  s.table_.emplace(sym::kExists, quant);
  s.table_.emplace(sym::kAnd, bool2);
  s.table_.emplace(sym::kOr, bool2);
  s.table_.emplace(sym::kImplies, bool2);
  s.table_.emplace(sym::kNot, Type::arrow(b, b));
  for (auto c : {sym::kEq, sym::kGt, sym::kLt, sym::kGe, sym::kLe}) s.table_.emplace(c, cmp);
  for (auto c : {sym::kPlus, sym::kMinus, sym::kTimes}) s.table_.emplace(c, arith);
  s.table_.emplace(sym::kTrue, b);
  s.table_.emplace(sym::kFalse, b);
  s.table_.emplace(sym::kPost, Type::arrow(e, e));
  return s;
}

inline void Signature::declare(const std::string& name, const Type& type) {
  if (sym::is_program_var(name) || sym::is_witness(name) || sym::is_abstraction(name)) {
    throw TypeMismatch("'" + name + "' is a reserved name and cannot be declared");
  }
  auto it = table_.find(name);
  if (it != table_.end()) {
    if (it->second != type) {
      throw TypeMismatch("constant '" + name + "' already declared with type " +
                         it->second.str() + ", not " + type.str());
    }
    return;
  }
  table_.emplace(name, type);
}

inline std::optional<Type> Signature::lookup(const std::string& name) const {
  if (sym::is_program_var(name)) return Type::num();
  if (sym::is_witness(name)) return Type::entity();
  if (sym::is_abstract_atom(name)) return Type::boolean();
  if (sym::is_abstraction(name)) return Type::num();
  auto it = table_.find(name);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

inline std::vector<std::pair<std::string, Type>> Signature::domain_symbols() const {
  std::vector<std::pair<std::string, Type>> out;
  for (const auto& [name, type] : table_) {
    if (!sym::is_logical(name) && name != sym::kPost) out.emplace_back(name, type);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Builders

namespace mk {

inline Term builtin(std::string_view name) {
  static const Signature sig = Signature::builtin();
  return Term::constant(std::string(name), *sig.lookup(std::string(name)));
}

inline Term lit(const Int& v) { return Term::literal(v); }
inline Term truth(bool v) { return Term::boolean(v); }
inline Term program_var(const std::string& name) { return Term::constant(name, Type::num()); }
inline Term witness(const std::string& name) { return Term::constant(name, Type::entity()); }

inline Term apply(Term fn, const std::vector<Term>& args) {
  for (const auto& a : args) fn = Term::app(std::move(fn), a);
  return fn;
}

inline Term binop(std::string_view op, const Term& a, const Term& b) {
  return apply(builtin(op), {a, b});
}
inline Term conj(const Term& a, const Term& b) { return binop(sym::kAnd, a, b); }
inline Term disj(const Term& a, const Term& b) { return binop(sym::kOr, a, b); }
inline Term imp(const Term& a, const Term& b) { return binop(sym::kImplies, a, b); }
inline Term neg(const Term& a) { return Term::app(builtin(sym::kNot), a); }
inline Term eq(const Term& a, const Term& b) { return binop(sym::kEq, a, b); }
inline Term post(const Term& e) { return Term::app(builtin(sym::kPost), e); }

inline Term forall(const std::string& var, const Term& body) {
  return Term::app(builtin(sym::kForall), Term::abs(var, Type::entity(), body));
}
inline Term exists(const std::string& var, const Term& body) {
  return Term::app(builtin(sym::kExists), Term::abs(var, Type::entity(), body));
}

/// Left-nested conjunction; `true` for an empty list.
inline Term conj_all(const std::vector<Term>& parts) {
  if (parts.empty()) return truth(true);
  Term acc = parts.front();
  for (size_t i = 1; i < parts.size(); ++i) acc = conj(acc, parts[i]);
  return acc;
}

inline Term disj_all(const std::vector<Term>& parts) {
  if (parts.empty()) return truth(false);
  Term acc = parts.front();
  for (size_t i = 1; i < parts.size(); ++i) acc = disj(acc, parts[i]);
  return acc;
}

}  // namespace mk

// ---------------------------------------------------------------------------
// Views

/// Head constant and arguments of a spine `c a1 ... an`; nullopt when the
/// head is not a constant.
struct Spine {
  Term head;
  std::vector<Term> args;
};

inline Spine spine(const Term& t) {
  std::vector<Term> args;
  Term cur = t;
  while (cur.is_app()) {
    args.push_back(cur.arg());
    cur = cur.fn();
  }
  std::reverse(args.begin(), args.end());
  return Spine{cur, std::move(args)};
}

/// `op a b` for a builtin binary constant `op`.
inline std::optional<std::tuple<std::string, Term, Term>> as_binop(const Term& t) {
  if (!t.is_app() || !t.fn().is_app()) return std::nullopt;
  const Term& head = t.fn().fn();
  if (!head.is_const()) return std::nullopt;
  const std::string& n = head.name();
  if (!(sym::is_comparison(n) || sym::is_arithmetic(n) ||
        (sym::is_connective(n) && n != sym::kNot))) {
    return std::nullopt;
  }
  return std::make_tuple(n, t.fn().arg(), t.arg());
}

inline bool is_binop(const Term& t, std::string_view op) {
  auto b = as_binop(t);
  return b && std::get<0>(*b) == op;
}

inline std::optional<Term> as_not(const Term& t) {
  if (t.is_app() && t.fn().is_const(sym::kNot)) return t.arg();
  return std::nullopt;
}

struct Quantified {
  bool universal;
  std::string var;
  Term body;
};

/// `forall (lam x. body)` or `exists (lam x. body)`.
inline std::optional<Quantified> as_quantifier(const Term& t) {
  if (!t.is_app() || !t.fn().is_const() || !t.arg().is_abs()) return std::nullopt;
  const std::string& n = t.fn().name();
  if (!sym::is_quantifier(n)) return std::nullopt;
  return Quantified{n == sym::kForall, t.arg().name(), t.arg().body()};
}

/// Flattens nested `and` into its conjuncts, left to right.
inline void flatten_conj(const Term& t, std::vector<Term>& out) {
  if (auto b = as_binop(t); b && std::get<0>(*b) == sym::kAnd) {
    flatten_conj(std::get<1>(*b), out);
    flatten_conj(std::get<2>(*b), out);
  } else {
    out.push_back(t);
  }
}

inline std::vector<Term> conjuncts(const Term& t) {
  std::vector<Term> out;
  flatten_conj(t, out);
  return out;
}

// ---------------------------------------------------------------------------
// Core operations

/// Returns the type of `term`, checking every constant against `sig`.
inline Type typecheck(const Term& term, const Signature& sig) {
  switch (term.kind()) {
    case TermKind::Var:
      return term.type();
    case TermKind::Const: {
      if (term.is_literal()) return term.type();
      auto declared = sig.lookup(term.name());
      if (!declared) throw UnknownConstant(term.name());
      if (*declared != term.type()) {
        throw TypeMismatch("constant '" + term.name() + "' used at type " + term.type().str() +
                           " but declared " + declared->str());
      }
      return term.type();
    }
    case TermKind::Abs:
      typecheck(term.body(), sig);
      return term.type();
    case TermKind::App: {
      Type f = typecheck(term.fn(), sig);
      Type a = typecheck(term.arg(), sig);
      if (!f.is_arrow()) throw TypeMismatch("application of non-function type " + f.str());
      if (f.domain() != a) {
        throw TypeMismatch("argument type " + a.str() + " does not match " + f.domain().str());
      }
      return f.codomain();
    }
  }
  return term.type();
}

using VarSet = std::map<std::string, Type>;

namespace detail {
inline void collect_free(const Term& t, std::set<std::string>& bound, VarSet& out) {
  switch (t.kind()) {
    case TermKind::Var:
      if (!bound.count(t.name())) out.emplace(t.name(), t.type());
      return;
    case TermKind::Const:
      return;
    case TermKind::Abs: {
      bool fresh = bound.insert(t.name()).second;
      collect_free(t.body(), bound, out);
      if (fresh) bound.erase(t.name());
      return;
    }
    case TermKind::App:
      collect_free(t.fn(), bound, out);
      collect_free(t.arg(), bound, out);
      return;
  }
}

inline bool occurs_free(const Term& t, const std::string& name) {
  switch (t.kind()) {
    case TermKind::Var: return t.name() == name;
    case TermKind::Const: return false;
    case TermKind::Abs: return t.name() != name && occurs_free(t.body(), name);
    case TermKind::App: return occurs_free(t.fn(), name) || occurs_free(t.arg(), name);
  }
  return false;
}

inline void collect_names(const Term& t, std::set<std::string>& out) {
  switch (t.kind()) {
    case TermKind::Var:
    case TermKind::Abs:
      out.insert(t.name());
      if (t.is_abs()) collect_names(t.body(), out);
      return;
    case TermKind::Const:
      return;
    case TermKind::App:
      collect_names(t.fn(), out);
      collect_names(t.arg(), out);
      return;
  }
}
}  // namespace detail

/// Free variables with their types.
inline VarSet free_vars(const Term& term) {
  std::set<std::string> bound;
  VarSet out;
  detail::collect_free(term, bound, out);
  return out;
}

inline bool is_closed(const Term& term) { return free_vars(term).empty(); }

/// Appends primes to `base` until it avoids `taken`.
inline std::string fresh_name(const std::string& base, const std::set<std::string>& taken) {
  std::string n = base + "'";
  while (taken.count(n)) n += "'";
  return n;
}

namespace detail {

// Generic capture-avoiding replacement: `hit` decides whether a Var/Const
// leaf is replaced. Only free variables of `repl` can be captured.
inline Term replace(const Term& t, const std::function<bool(const Term&)>& hit,
                    const Term& repl, const VarSet& repl_free, const std::string* var_name) {
  switch (t.kind()) {
    case TermKind::Var:
    case TermKind::Const:
      return hit(t) ? repl : t;
    case TermKind::App: {
      Term f = replace(t.fn(), hit, repl, repl_free, var_name);
      Term a = replace(t.arg(), hit, repl, repl_free, var_name);
      if (f.same(t.fn()) && a.same(t.arg())) return t;
      return Term::app(f, a);
    }
    case TermKind::Abs: {
      if (var_name && t.name() == *var_name) return t;  // shadowed
      if (repl_free.count(t.name())) {
        // Rename the binder only if the replacement would actually land in
        // its scope.
        bool needed = var_name ? occurs_free(t.body(), *var_name) : true;
        if (needed) {
          std::set<std::string> taken;
          collect_names(t.body(), taken);
          for (const auto& [n, ty] : repl_free) taken.insert(n);
          if (var_name) taken.insert(*var_name);
          std::string renamed = fresh_name(t.name(), taken);
          Term body = replace(t.body(),
                              [&](const Term& leaf) {
                                return leaf.is_var() && leaf.name() == t.name();
                              },
                              Term::var(renamed, t.binder_type()), {}, &t.name());
          Term nb = replace(body, hit, repl, repl_free, var_name);
          return Term::abs(renamed, t.binder_type(), nb);
        }
      }
      Term nb = replace(t.body(), hit, repl, repl_free, var_name);
      if (nb.same(t.body())) return t;
      return Term::abs(t.name(), t.binder_type(), nb);
    }
  }
  return t;
}

}  // namespace detail

/// Capture-avoiding substitution of `replacement` for free occurrences of the
/// variable `var`.
inline Term substitute(const Term& term, const std::string& var, const Term& replacement) {
  VarSet fv = free_vars(term);
  if (auto it = fv.find(var); it != fv.end() && it->second != replacement.type()) {
    throw TypeMismatch("cannot substitute " + replacement.type().str() + " for variable '" + var +
                       "' of type " + it->second.str());
  }
  VarSet rf = free_vars(replacement);
  return detail::replace(
      term, [&](const Term& leaf) { return leaf.is_var() && leaf.name() == var; }, replacement,
      rf, &var);
}

/// Replaces every occurrence of the constant `name` (e.g. a program
/// variable) by `replacement`.
inline Term replace_const(const Term& term, const std::string& name, const Term& replacement) {
  VarSet rf = free_vars(replacement);
  return detail::replace(
      term,
      [&](const Term& leaf) {
        if (!leaf.is_const() || leaf.is_literal() || leaf.name() != name) return false;
        if (leaf.type() != replacement.type()) {
          throw TypeMismatch("cannot replace constant '" + name + "' of type " +
                             leaf.type().str() + " by " + replacement.type().str());
        }
        return true;
      },
      replacement, rf, nullptr);
}

/// Replaces every occurrence of the subterm `target` (compared structurally)
/// by `replacement`. Intended for ground terms.
bool alpha_eq(const Term& a, const Term& b);

inline Term replace_subterm(const Term& term, const Term& target, const Term& replacement) {
  if (alpha_eq(term, target)) return replacement;
  switch (term.kind()) {
    case TermKind::App: {
      Term f = replace_subterm(term.fn(), target, replacement);
      Term a = replace_subterm(term.arg(), target, replacement);
      if (f.same(term.fn()) && a.same(term.arg())) return term;
      return Term::app(f, a);
    }
    case TermKind::Abs: {
      Term b = replace_subterm(term.body(), target, replacement);
      if (b.same(term.body())) return term;
      return Term::abs(term.name(), term.binder_type(), b);
    }
    default:
      return term;
  }
}

inline constexpr long kNormalizeBudget = 100000;

namespace detail {
inline Term normalize(const Term& t, long& steps) {
  switch (t.kind()) {
    case TermKind::Var:
    case TermKind::Const:
      return t;
    case TermKind::Abs: {
      Term b = normalize(t.body(), steps);
      if (b.same(t.body())) return t;
      return Term::abs(t.name(), t.binder_type(), b);
    }
    case TermKind::App: {
      Term f = normalize(t.fn(), steps);
      if (f.is_abs()) {
        if (++steps > kNormalizeBudget) {
          throw InternalError("beta-normalization exceeded " + std::to_string(kNormalizeBudget) +
                              " steps");
        }
        return normalize(substitute(f.body(), f.name(), t.arg()), steps);
      }
      Term a = normalize(t.arg(), steps);
      if (f.same(t.fn()) && a.same(t.arg())) return t;
      return Term::app(f, a);
    }
  }
  return t;
}
}  // namespace detail

/// Beta-normal form.
inline Term normalize(const Term& term) {
  long steps = 0;
  return detail::normalize(term, steps);
}

/// Replaces applications of arithmetic and comparison operators to two
/// numeric literals by their value. No other rewriting happens.
inline Term fold_constants(const Term& term) {
  switch (term.kind()) {
    case TermKind::Var:
    case TermKind::Const:
      return term;
    case TermKind::Abs: {
      Term b = fold_constants(term.body());
      if (b.same(term.body())) return term;
      return Term::abs(term.name(), term.binder_type(), b);
    }
    case TermKind::App: {
      Term f = fold_constants(term.fn());
      Term a = fold_constants(term.arg());
      Term rebuilt = (f.same(term.fn()) && a.same(term.arg())) ? term : Term::app(f, a);
      auto b = as_binop(rebuilt);
      if (!b) return rebuilt;
      const auto& [op, l, r] = *b;
      if (!l.is_literal() || !r.is_literal()) return rebuilt;
      const Int& x = l.value();
      const Int& y = r.value();
      if (op == sym::kPlus) return Term::literal(x + y);
      if (op == sym::kMinus) return Term::literal(x - y);
      if (op == sym::kTimes) return Term::literal(x * y);
      if (op == sym::kEq) return Term::boolean(x == y);
      if (op == sym::kGt) return Term::boolean(x > y);
      if (op == sym::kLt) return Term::boolean(x < y);
      if (op == sym::kGe) return Term::boolean(x >= y);
      if (op == sym::kLe) return Term::boolean(x <= y);
      return rebuilt;
    }
  }
  return term;
}

namespace detail {
inline bool alpha_eq(const Term& a, const Term& b, std::vector<std::pair<std::string, std::string>>& env) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TermKind::Var: {
      for (auto it = env.rbegin(); it != env.rend(); ++it) {
        bool la = it->first == a.name();
        bool lb = it->second == b.name();
        if (la || lb) return la && lb;
      }
      return a.name() == b.name() && a.type() == b.type();
    }
    case TermKind::Const:
      return a.name() == b.name() && a.type() == b.type();
    case TermKind::Abs: {
      if (a.binder_type() != b.binder_type()) return false;
      env.emplace_back(a.name(), b.name());
      bool r = alpha_eq(a.body(), b.body(), env);
      env.pop_back();
      return r;
    }
    case TermKind::App:
      return alpha_eq(a.fn(), b.fn(), env) && alpha_eq(a.arg(), b.arg(), env);
  }
  return false;
}
}  // namespace detail

/// Equality up to consistent renaming of bound variables.
inline bool alpha_eq(const Term& a, const Term& b) {
  if (a.same(b)) return true;
  std::vector<std::pair<std::string, std::string>> env;
  return detail::alpha_eq(a, b, env);
}

namespace detail {
inline void canonical_key(const Term& t, std::vector<std::string>& bound, std::string& out) {
  switch (t.kind()) {
    case TermKind::Var: {
      for (size_t i = bound.size(); i-- > 0;) {
        if (bound[i] == t.name()) {
          out += "#" + std::to_string(bound.size() - 1 - i);
          return;
        }
      }
      out += "v:" + t.name() + ":" + t.type().str();
      return;
    }
    case TermKind::Const:
      out += "c:" + t.name() + ":" + t.type().str();
      return;
    case TermKind::Abs:
      out += "(L " + t.binder_type().str() + " ";
      bound.push_back(t.name());
      canonical_key(t.body(), bound, out);
      bound.pop_back();
      out += ")";
      return;
    case TermKind::App:
      out += "(";
      canonical_key(t.fn(), bound, out);
      out += " ";
      canonical_key(t.arg(), bound, out);
      out += ")";
      return;
  }
}
}  // namespace detail

/// A string that is equal for two terms iff they are alpha-equal.
inline std::string canonical_key(const Term& t) {
  std::vector<std::string> bound;
  std::string out;
  detail::canonical_key(t, bound, out);
  return out;
}

inline size_t term_size(const Term& t) {
  switch (t.kind()) {
    case TermKind::Var:
    case TermKind::Const: return 1;
    case TermKind::Abs: return 1 + term_size(t.body());
    case TermKind::App: return 1 + term_size(t.fn()) + term_size(t.arg());
  }
  return 1;
}

/// Names of non-literal constants occurring in `t`.
inline void collect_constants(const Term& t, std::set<std::string>& out) {
  switch (t.kind()) {
    case TermKind::Var: return;
    case TermKind::Const:
      if (!t.is_literal()) out.insert(t.name());
      return;
    case TermKind::Abs: collect_constants(t.body(), out); return;
    case TermKind::App:
      collect_constants(t.fn(), out);
      collect_constants(t.arg(), out);
      return;
  }
}

inline std::set<std::string> constants_of(const Term& t) {
  std::set<std::string> out;
  collect_constants(t, out);
  return out;
}

/// Visits every subterm in pre-order, left to right.
inline void for_each_subterm(const Term& t, const std::function<void(const Term&)>& fn) {
  fn(t);
  if (t.is_abs()) {
    for_each_subterm(t.body(), fn);
  } else if (t.is_app()) {
    for_each_subterm(t.fn(), fn);
    for_each_subterm(t.arg(), fn);
  }
}

/// A symbol that is neither logical, `post`, nor a program/witness/abstraction
/// constant: the vocabulary of logical forms (`balance`, `valueof`, ...).
inline bool is_domain_symbol(const std::string& name) {
  return !sym::is_logical(name) && name != sym::kPost && !sym::is_program_var(name) &&
         !sym::is_witness(name) && !sym::is_abstraction(name);
}

}  // namespace nhl
