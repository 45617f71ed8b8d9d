#pragma once

// Evaluation of closed formulas in finite interpretations. Used by the
// bounded model search, by countermodel confirmation, and by tests as an
// independent oracle.

#include <map>
#include <string>
#include <vector>

#include "nhl/error.hpp"
#include "nhl/term.hpp"

namespace nhl {

/// Raised when evaluation needs a value the interpretation does not define
/// (for example a Num -> Num function outside its tabulated range).
class OutsideInterpretation : public Error {
 public:
  using Error::Error;
};

struct Value {
  enum class Kind { Num, Bool, Entity } kind = Kind::Num;
  Int num;
  bool truth = false;
  int entity = 0;

  static Value of_num(Int v) {
    Value x;
    x.kind = Kind::Num;
    x.num = std::move(v);
    return x;
  }
  static Value of_bool(bool b) {
    Value x;
    x.kind = Kind::Bool;
    x.truth = b;
    return x;
  }
  static Value of_entity(int e) {
    Value x;
    x.kind = Kind::Entity;
    x.entity = e;
    return x;
  }
  std::string str() const {
    switch (kind) {
      case Kind::Num: return num.str();
      case Kind::Bool: return truth ? "true" : "false";
      case Kind::Entity: return "e" + std::to_string(entity);
    }
    return "?";
  }
};

/// A finite first-order structure over entities 0..domain_size-1.
struct Interpretation {
  int domain_size = 1;
  std::vector<int> post;                                 // Entity -> Entity
  std::map<std::string, std::vector<Int>> num_funs;      // Entity -> Num
  std::map<std::string, std::vector<bool>> preds;        // Entity -> Bool
  std::map<std::string, std::vector<int>> entity_funs;   // Entity -> Entity (besides post)
  std::map<std::string, std::map<Int, Int>> arith_funs;  // Num -> Num, tabulated
  std::map<std::string, Int> nums;                       // program vars, abstraction vars
  std::map<std::string, bool> bools;                     // abstracted atoms, Bool constants
  std::map<std::string, int> entities;                   // witnesses, Entity constants
};

namespace detail {

struct EvalEnv {
  std::vector<std::pair<std::string, Value>> frames;
  const Value* find(const std::string& n) const {
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
      if (it->first == n) return &it->second;
    }
    return nullptr;
  }
};

inline Value eval(const Term& t, const Interpretation& m, EvalEnv& env);

inline Int eval_num(const Term& t, const Interpretation& m, EvalEnv& env) {
  Value v = eval(t, m, env);
  if (v.kind != Value::Kind::Num) throw TypeMismatch("expected a number: " + v.str());
  return v.num;
}

inline bool eval_bool(const Term& t, const Interpretation& m, EvalEnv& env) {
  Value v = eval(t, m, env);
  if (v.kind != Value::Kind::Bool) throw TypeMismatch("expected a truth value: " + v.str());
  return v.truth;
}

inline int eval_entity(const Term& t, const Interpretation& m, EvalEnv& env) {
  Value v = eval(t, m, env);
  if (v.kind != Value::Kind::Entity) throw TypeMismatch("expected an entity: " + v.str());
  return v.entity;
}

inline Value eval_const(const Term& c, const Interpretation& m) {
  if (c.is_literal()) return Value::of_num(c.value());
  const std::string& n = c.name();
  if (n == sym::kTrue) return Value::of_bool(true);
  if (n == sym::kFalse) return Value::of_bool(false);
  if (c.type().is(BaseType::Num)) {
    auto it = m.nums.find(n);
    if (it == m.nums.end()) throw OutsideInterpretation("no value for '" + n + "'");
    return Value::of_num(it->second);
  }
  if (c.type().is(BaseType::Bool)) {
    auto it = m.bools.find(n);
    if (it == m.bools.end()) throw OutsideInterpretation("no value for '" + n + "'");
    return Value::of_bool(it->second);
  }
  if (c.type().is(BaseType::Entity)) {
    auto it = m.entities.find(n);
    if (it == m.entities.end()) throw OutsideInterpretation("no value for '" + n + "'");
    return Value::of_entity(it->second);
  }
  throw OutsideInterpretation("cannot evaluate unapplied constant '" + n + "'");
}

inline Value eval_apply(const std::string& f, const Type& ftype, const Term& a,
                        const Interpretation& m, EvalEnv& env) {
  if (f == sym::kNot) return Value::of_bool(!eval_bool(a, m, env));
  if (ftype.domain().is(BaseType::Entity)) {
    int e = eval_entity(a, m, env);
    if (f == sym::kPost) {
      if (e >= static_cast<int>(m.post.size())) throw OutsideInterpretation("post undefined");
      return Value::of_entity(m.post[e]);
    }
    if (auto it = m.num_funs.find(f); it != m.num_funs.end()) return Value::of_num(it->second.at(e));
    if (auto it = m.preds.find(f); it != m.preds.end()) return Value::of_bool(it->second.at(e));
    if (auto it = m.entity_funs.find(f); it != m.entity_funs.end()) {
      return Value::of_entity(it->second.at(e));
    }
  } else if (ftype.domain().is(BaseType::Num)) {
    Int x = eval_num(a, m, env);
    if (auto it = m.arith_funs.find(f); it != m.arith_funs.end()) {
      auto jt = it->second.find(x);
      if (jt == it->second.end()) {
        throw OutsideInterpretation("'" + f + "' is not tabulated at " + x.str());
      }
      return Value::of_num(jt->second);
    }
  }
  throw OutsideInterpretation("no interpretation for '" + f + "'");
}

inline Value eval(const Term& t, const Interpretation& m, EvalEnv& env) {
  switch (t.kind()) {
    case TermKind::Var: {
      const Value* v = env.find(t.name());
      if (!v) throw Error("unbound variable '" + t.name() + "' during evaluation");
      return *v;
    }
    case TermKind::Const: return eval_const(t, m);
    case TermKind::Abs: throw OutsideInterpretation("cannot evaluate a function value");
    case TermKind::App: break;
  }
  if (auto q = as_quantifier(t)) {
    for (int e = 0; e < m.domain_size; ++e) {
      env.frames.emplace_back(q->var, Value::of_entity(e));
      bool v = eval_bool(q->body, m, env);
      env.frames.pop_back();
      if (v != q->universal) return Value::of_bool(v);
    }
    return Value::of_bool(q->universal);
  }
  if (auto b = as_binop(t)) {
    const auto& [op, l, r] = *b;
    if (op == sym::kAnd) return Value::of_bool(eval_bool(l, m, env) && eval_bool(r, m, env));
    if (op == sym::kOr) return Value::of_bool(eval_bool(l, m, env) || eval_bool(r, m, env));
    if (op == sym::kImplies) return Value::of_bool(!eval_bool(l, m, env) || eval_bool(r, m, env));
    Int x = eval_num(l, m, env);
    Int y = eval_num(r, m, env);
    if (op == sym::kPlus) return Value::of_num(x + y);
    if (op == sym::kMinus) return Value::of_num(x - y);
    if (op == sym::kTimes) return Value::of_num(x * y);
    if (op == sym::kEq) return Value::of_bool(x == y);
    if (op == sym::kGt) return Value::of_bool(x > y);
    if (op == sym::kLt) return Value::of_bool(x < y);
    if (op == sym::kGe) return Value::of_bool(x >= y);
    if (op == sym::kLe) return Value::of_bool(x <= y);
  }
  if (t.fn().is_const()) return eval_apply(t.fn().name(), t.fn().type(), t.arg(), m, env);
  if (t.fn().is_abs()) return eval(normalize(t), m, env);
  throw OutsideInterpretation("unsupported application shape");
}

}  // namespace detail

/// Value of a closed term in `m`.
inline Value evaluate(const Term& t, const Interpretation& m) {
  detail::EvalEnv env;
  return detail::eval(t, m, env);
}

/// Truth of a closed Bool formula in `m`.
inline bool holds(const Term& t, const Interpretation& m) {
  detail::EvalEnv env;
  return detail::eval_bool(t, m, env);
}

/// Truth of a ground formula over program variables only.
inline bool holds_in_state(const Term& t, const std::map<std::string, Int>& state) {
  Interpretation m;
  m.nums = state;
  return holds(t, m);
}

}  // namespace nhl
