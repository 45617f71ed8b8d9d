#pragma once

// Canonical plain-text syntax for terms:
//
//   forall x. balance(x) > 0
//   exists x. balance(post(x)) = _balance
//   lam f:Entity -> Num. forall x. f(post(x)) = f(x) + 1
//
// Connectives `=>`, `||`, `&&`, `!`; comparisons `= < <= > >=` (and `!=` as
// sugar for `!(a = b)`); arithmetic `+ - *`. Binder annotations are optional:
// the parser infers types, defaulting unconstrained ones to Entity.
// print_term(parse_term(s)) is a fixed point and parse_term(print_term(t)) is
// alpha-equal to t.

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nhl/term.hpp"

namespace nhl {

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline int binop_level(const std::string& op) {
  if (op == sym::kImplies) return 1;
  if (op == sym::kOr) return 2;
  if (op == sym::kAnd) return 3;
  if (sym::is_comparison(op)) return 5;
  if (op == sym::kPlus || op == sym::kMinus) return 6;
  if (op == sym::kTimes) return 7;
  return 9;
}

inline const char* binop_symbol(const std::string& op) {
  if (op == sym::kImplies) return "=>";
  if (op == sym::kOr) return "||";
  if (op == sym::kAnd) return "&&";
  if (op == sym::kEq) return "=";
  if (op == sym::kGt) return ">";
  if (op == sym::kLt) return "<";
  if (op == sym::kGe) return ">=";
  if (op == sym::kLe) return "<=";
  if (op == sym::kPlus) return "+";
  if (op == sym::kMinus) return "-";
  if (op == sym::kTimes) return "*";
  return "?";
}

inline std::string paren_if(bool p, std::string s) { return p ? "(" + s + ")" : s; }

inline std::string print(const Term& t, int ctx);

inline std::string print_binder(const char* keyword, const std::string& var, const Type& type,
                                const Term& body, bool annotate) {
  std::string s = std::string(keyword) + " " + var;
  if (annotate) s += ":" + type.str();
  return s + ". " + print(body, 0);
}

inline std::string print(const Term& t, int ctx) {
  switch (t.kind()) {
    case TermKind::Var:
      return t.name();
    case TermKind::Const:
      if (t.is_literal() && t.value() < 0) return paren_if(ctx > 8, t.name());
      return t.name();
    case TermKind::Abs:
      return paren_if(ctx > 0, print_binder("lam", t.name(), t.binder_type(), t.body(),
                                            !t.binder_type().is(BaseType::Entity)));
    case TermKind::App:
      break;
  }
  if (auto q = as_quantifier(t)) {
    const Term& abs = t.arg();
    return paren_if(ctx > 0, print_binder(q->universal ? "forall" : "exists", abs.name(),
                                          abs.binder_type(), abs.body(), false));
  }
  if (auto b = as_binop(t)) {
    const auto& [op, l, r] = *b;
    int lvl = binop_level(op);
    int lctx = lvl, rctx = lvl + 1;
    if (op == sym::kImplies) {
      lctx = lvl + 1;
      rctx = lvl;
    } else if (sym::is_comparison(op)) {
      lctx = rctx = lvl + 1;
    }
    return paren_if(ctx > lvl, print(l, lctx) + " " + binop_symbol(op) + " " + print(r, rctx));
  }
  if (auto n = as_not(t)) {
    std::string inner = print(*n, 9);
    return paren_if(ctx > 4, "!" + inner);
  }
  Spine sp = spine(t);
  std::string head = print(sp.head, 9);
  std::string out = head + "(";
  for (size_t i = 0; i < sp.args.size(); ++i) {
    if (i) out += ", ";
    out += print(sp.args[i], 0);
  }
  return out + ")";
}

}  // namespace detail

inline std::string print_term(const Term& t) { return detail::print(t, 0); }

// ---------------------------------------------------------------------------
// Parsing

struct ParseOptions {
  /// Unknown applied identifiers become new constants with inferred types
  /// (recorded into `declared`) instead of raising UnknownConstant.
  bool declare_unknown = false;
  /// Types for free variables known in advance (e.g. rule placeholders).
  std::map<std::string, Type> free_var_types;
  /// When set, the whole term must have this type.
  std::optional<Type> expected;
  /// Raise UnresolvedType instead of defaulting undetermined types to Entity.
  bool strict = false;
  /// When set, receives the resolved type of every free variable.
  std::map<std::string, Type>* free_types_out = nullptr;
};

/// A type the parser could not determine (strict mode only).
class UnresolvedType : public Error {
 public:
  using Error::Error;
};

namespace detail {

struct Tok {
  enum Kind { Ident, Number, Sym, End } kind;
  std::string text;
  int column;
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '@' || c == '$' ||
         c == '#';
}
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline std::vector<Tok> lex_term(const std::string& s) {
  std::vector<Tok> out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    int col = static_cast<int>(i) + 1;
    if (ident_start(c)) {
      size_t j = i + 1;
      while (j < s.size() && ident_char(s[j])) ++j;
      while (j < s.size() && s[j] == '\'') ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i), col});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Tok::Number, s.substr(i, j - i), col});
      i = j;
      continue;
    }
    static const char* two[] = {"=>", "->", "||", "&&", "!=", "<=", ">=", "=="};
    bool matched = false;
    for (const char* op : two) {
      if (s.compare(i, 2, op) == 0) {
        out.push_back({Tok::Sym, op, col});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string("()<>=+-*!,.:").find(c) != std::string::npos) {
      out.push_back({Tok::Sym, std::string(1, c), col});
      ++i;
      continue;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", 1, col);
  }
  out.push_back({Tok::End, "", static_cast<int>(s.size()) + 1});
  return out;
}

// Untyped syntax tree produced by the parser and typed by inference.
struct Raw {
  enum Kind { Ident, Literal, Binder, Apply, Op, Not } kind;
  std::string name;  // identifier, binder keyword, or builtin op
  std::string var;   // binder variable
  std::optional<Type> annotation;
  Int value;
  std::vector<std::shared_ptr<Raw>> kids;
  int column = 0;
};
using RawPtr = std::shared_ptr<Raw>;

class TermParser {
 public:
  explicit TermParser(const std::string& text) : toks_(lex_term(text)) {}

  RawPtr parse_all() {
    RawPtr r = expr();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return r;
  }

  Type parse_type_all() {
    Type t = parse_type();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return t;
  }

  Type parse_type() {
    Type left = type_atom();
    if (accept("->")) return Type::arrow(left, parse_type());
    return left;
  }

 private:
  const Tok& peek() const { return toks_[pos_]; }
  bool at(const std::string& s) const {
    return peek().kind == Tok::Sym && peek().text == s;
  }
  bool accept(const std::string& s) {
    if (at(s)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(const std::string& s) {
    if (!accept(s)) fail("expected '" + s + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg, 1, peek().column);
  }

  static RawPtr node(Raw::Kind k, int col) {
    auto r = std::make_shared<Raw>();
    r->kind = k;
    r->column = col;
    return r;
  }
  static RawPtr op(const std::string& name, RawPtr a, RawPtr b, int col) {
    RawPtr r = node(Raw::Op, col);
    r->name = name;
    r->kids = {std::move(a), std::move(b)};
    return r;
  }

  Type type_atom() {
    if (accept("(")) {
      Type t = parse_type();
      expect(")");
      return t;
    }
    if (peek().kind == Tok::Ident) {
      std::string n = peek().text;
      ++pos_;
      if (n == "Entity") return Type::entity();
      if (n == "Num") return Type::num();
      if (n == "Bool") return Type::boolean();
      fail("unknown type '" + n + "'");
    }
    fail("expected a type");
  }

  bool at_binder() const {
    return peek().kind == Tok::Ident &&
           (peek().text == "forall" || peek().text == "exists" || peek().text == "lam") &&
           toks_[pos_ + 1].kind == Tok::Ident;
  }

  RawPtr expr() {
    if (at_binder()) return binder();
    return implication();
  }

  RawPtr binder() {
    int col = peek().column;
    std::string kw = peek().text;
    ++pos_;
    if (peek().kind != Tok::Ident) fail("expected a bound variable");
    RawPtr r = node(Raw::Binder, col);
    r->name = kw;
    r->var = peek().text;
    ++pos_;
    if (accept(":")) r->annotation = parse_type();
    expect(".");
    r->kids = {expr()};
    return r;
  }

  RawPtr implication() {
    RawPtr l = disjunction();
    int col = peek().column;
    if (accept("=>")) return op(std::string(sym::kImplies), l, at_binder() ? binder() : implication(), col);
    return l;
  }

  RawPtr disjunction() {
    RawPtr l = conjunction();
    while (at("||")) {
      int col = peek().column;
      ++pos_;
      l = op(std::string(sym::kOr), l, at_binder() ? binder() : conjunction(), col);
    }
    return l;
  }

  RawPtr conjunction() {
    RawPtr l = negation();
    while (at("&&")) {
      int col = peek().column;
      ++pos_;
      l = op(std::string(sym::kAnd), l, at_binder() ? binder() : negation(), col);
    }
    return l;
  }

  RawPtr negation() {
    if (at("!")) {
      int col = peek().column;
      ++pos_;
      RawPtr r = node(Raw::Not, col);
      r->kids = {at_binder() ? binder() : negation()};
      return r;
    }
    return comparison();
  }

  RawPtr comparison() {
    RawPtr l = sum();
    int col = peek().column;
    static const std::map<std::string, std::string_view> ops = {
        {"=", sym::kEq}, {"==", sym::kEq}, {">", sym::kGt}, {"<", sym::kLt},
        {">=", sym::kGe}, {"<=", sym::kLe}};
    if (peek().kind == Tok::Sym) {
      if (auto it = ops.find(peek().text); it != ops.end()) {
        ++pos_;
        return op(std::string(it->second), l, sum(), col);
      }
      if (peek().text == "!=") {
        ++pos_;
        RawPtr r = node(Raw::Not, col);
        r->kids = {op(std::string(sym::kEq), l, sum(), col)};
        return r;
      }
    }
    return l;
  }

  RawPtr sum() {
    RawPtr l = product();
    while (at("+") || at("-")) {
      int col = peek().column;
      std::string o = at("+") ? std::string(sym::kPlus) : std::string(sym::kMinus);
      ++pos_;
      l = op(o, l, product(), col);
    }
    return l;
  }

  RawPtr product() {
    RawPtr l = unary();
    while (at("*")) {
      int col = peek().column;
      ++pos_;
      l = op(std::string(sym::kTimes), l, unary(), col);
    }
    return l;
  }

  RawPtr unary() {
    if (at("-")) {
      int col = peek().column;
      ++pos_;
      if (peek().kind != Tok::Number) fail("unary minus applies only to numerals");
      RawPtr r = node(Raw::Literal, col);
      r->value = -Int(peek().text);
      ++pos_;
      return r;
    }
    return postfix();
  }

  RawPtr postfix() {
    RawPtr head = atom();
    while (at("(")) {
      int col = peek().column;
      ++pos_;
      RawPtr r = node(Raw::Apply, col);
      r->kids.push_back(head);
      if (!at(")")) {
        r->kids.push_back(expr());
        while (accept(",")) r->kids.push_back(expr());
      }
      expect(")");
      head = r;
    }
    return head;
  }

  RawPtr atom() {
    const Tok& t = peek();
    if (t.kind == Tok::Number) {
      RawPtr r = node(Raw::Literal, t.column);
      r->value = Int(t.text);
      ++pos_;
      return r;
    }
    if (at_binder()) return binder();
    if (t.kind == Tok::Ident) {
      RawPtr r = node(Raw::Ident, t.column);
      r->name = t.text;
      ++pos_;
      return r;
    }
    if (accept("(")) {
      RawPtr r = expr();
      expect(")");
      return r;
    }
    fail(t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'");
  }

  std::vector<Tok> toks_;
  size_t pos_ = 0;
};

// Monotypes with unification variables.
struct MType {
  int meta = -1;  // >= 0: unification variable
  BaseType base = BaseType::Entity;
  std::shared_ptr<MType> dom, cod;
};
using MTypePtr = std::shared_ptr<MType>;

class Inference {
 public:
  Inference(const Signature& sig, const ParseOptions& opts) : sig_(sig), opts_(opts) {
    for (const auto& [n, t] : opts.free_var_types) free_.emplace(n, from_type(t));
  }

  Term run(const RawPtr& raw, Signature* declare_into) {
    std::vector<std::pair<std::string, MTypePtr>> scope;
    Typed typed = infer(raw, scope);
    if (opts_.expected) unify(typed.type, from_type(*opts_.expected), raw.get());
    std::vector<std::pair<std::string, Type>> decls;
    for (const auto& [name, mt] : new_consts_) decls.emplace_back(name, resolve(mt));
    if (opts_.free_types_out) {
      for (const auto& [name, mt] : free_) opts_.free_types_out->insert_or_assign(name, resolve(mt));
    }
    Term out = build(typed);
    if (declare_into) {
      for (const auto& [name, t] : decls) declare_into->declare(name, t);
    }
    return out;
  }

 private:
  struct Typed {
    const Raw* raw;
    MTypePtr type;
    // For identifiers: how it resolved.
    enum Res { Bound, Free, Const, NewConst, None } res = None;
    std::vector<Typed> kids;
    MTypePtr binder_type;
  };

  MTypePtr fresh() {
    auto m = std::make_shared<MType>();
    m->meta = next_meta_++;
    return m;
  }
  static MTypePtr base(BaseType b) {
    auto m = std::make_shared<MType>();
    m->base = b;
    return m;
  }
  static MTypePtr arrow(MTypePtr d, MTypePtr c) {
    auto m = std::make_shared<MType>();
    m->dom = std::move(d);
    m->cod = std::move(c);
    return m;
  }
  static MTypePtr from_type(const Type& t) {
    if (t.is_arrow()) return arrow(from_type(t.domain()), from_type(t.codomain()));
    return base(t.base());
  }

  MTypePtr find(MTypePtr t) {
    while (t->meta >= 0) {
      auto it = binding_.find(t->meta);
      if (it == binding_.end()) break;
      t = it->second;
    }
    return t;
  }

  bool occurs(int meta, MTypePtr t) {
    t = find(t);
    if (t->meta >= 0) return t->meta == meta;
    if (t->dom) return occurs(meta, t->dom) || occurs(meta, t->cod);
    return false;
  }

  std::string show(MTypePtr t) {
    t = find(t);
    if (t->meta >= 0) return "?" + std::to_string(t->meta);
    if (!t->dom) return Type(base_type(t->base)).str();
    std::string d = show(t->dom);
    if (find(t->dom)->dom) d = "(" + d + ")";
    return d + " -> " + show(t->cod);
  }
  static Type base_type(BaseType b) {
    switch (b) {
      case BaseType::Entity: return Type::entity();
      case BaseType::Num: return Type::num();
      case BaseType::Bool: return Type::boolean();
    }
    return Type::entity();
  }

  void unify(MTypePtr a, MTypePtr b, const Raw* at) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a->meta >= 0) {
      if (b->meta == a->meta) return;
      if (occurs(a->meta, b)) mismatch(a, b, at);
      binding_[a->meta] = b;
      return;
    }
    if (b->meta >= 0) {
      unify(b, a, at);
      return;
    }
    if (static_cast<bool>(a->dom) != static_cast<bool>(b->dom)) mismatch(a, b, at);
    if (a->dom) {
      unify(a->dom, b->dom, at);
      unify(a->cod, b->cod, at);
      return;
    }
    if (a->base != b->base) mismatch(a, b, at);
  }

  [[noreturn]] void mismatch(MTypePtr a, MTypePtr b, const Raw* at) {
    std::string where = at ? " at column " + std::to_string(at->column) : "";
    throw TypeMismatch("cannot unify " + show(a) + " with " + show(b) + where);
  }

  Typed infer(const RawPtr& r, std::vector<std::pair<std::string, MTypePtr>>& scope) {
    Typed out{r.get(), nullptr};
    switch (r->kind) {
      case Raw::Literal:
        out.type = base(BaseType::Num);
        return out;
      case Raw::Ident:
        return ident(r, scope, false);
      case Raw::Binder: {
        MTypePtr bt = r->annotation ? from_type(*r->annotation) : fresh();
        if (r->name != "lam") unify(bt, base(BaseType::Entity), r.get());
        scope.emplace_back(r->var, bt);
        Typed body = infer(r->kids[0], scope);
        scope.pop_back();
        if (r->name == "lam") {
          out.type = arrow(bt, body.type);
        } else {
          unify(body.type, base(BaseType::Bool), r.get());
          out.type = base(BaseType::Bool);
        }
        out.binder_type = bt;
        out.kids.push_back(std::move(body));
        return out;
      }
      case Raw::Op: {
        Typed l = infer(r->kids[0], scope);
        Typed rr = infer(r->kids[1], scope);
        MTypePtr opt = from_type(*Signature::builtin().lookup(r->name));
        unify(opt->dom, l.type, r.get());
        unify(opt->cod->dom, rr.type, r.get());
        out.type = opt->cod->cod;
        out.kids = {std::move(l), std::move(rr)};
        return out;
      }
      case Raw::Not: {
        Typed e = infer(r->kids[0], scope);
        unify(e.type, base(BaseType::Bool), r.get());
        out.type = base(BaseType::Bool);
        out.kids.push_back(std::move(e));
        return out;
      }
      case Raw::Apply: {
        const RawPtr& h = r->kids[0];
        Typed head = h->kind == Raw::Ident ? ident(h, scope, true) : infer(h, scope);
        MTypePtr t = head.type;
        out.kids.push_back(std::move(head));
        for (size_t i = 1; i < r->kids.size(); ++i) {
          Typed a = infer(r->kids[i], scope);
          MTypePtr result = fresh();
          unify(t, arrow(a.type, result), r.get());
          t = result;
          out.kids.push_back(std::move(a));
        }
        out.type = t;
        return out;
      }
    }
    return out;
  }

  Typed ident(const RawPtr& r, std::vector<std::pair<std::string, MTypePtr>>& scope, bool applied) {
    Typed out{r.get(), nullptr};
    const std::string& n = r->name;
    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
      if (it->first == n) {
        out.type = it->second;
        out.res = Typed::Bound;
        return out;
      }
    }
    if (auto t = sig_.lookup(n)) {
      out.type = from_type(*t);
      out.res = Typed::Const;
      return out;
    }
    if (auto it = new_consts_.find(n); it != new_consts_.end()) {
      out.type = it->second;
      out.res = Typed::NewConst;
      return out;
    }
    if (auto it = free_.find(n); it != free_.end()) {
      out.type = it->second;
      out.res = Typed::Free;
      return out;
    }
    if (applied && n[0] != '#') {
      if (!opts_.declare_unknown) throw UnknownConstant(n);
      out.type = fresh();
      new_consts_.emplace(n, out.type);
      out.res = Typed::NewConst;
      return out;
    }
    out.type = fresh();
    free_.emplace(n, out.type);
    out.res = Typed::Free;
    return out;
  }

  Type resolve(MTypePtr t) {
    t = find(t);
    if (t->meta >= 0) {
      if (opts_.strict) throw UnresolvedType("type of the term is not determined");
      binding_[t->meta] = base(BaseType::Entity);
      return Type::entity();
    }
    if (t->dom) return Type::arrow(resolve(t->dom), resolve(t->cod));
    return base_type(t->base);
  }

  Term build(const Typed& t) {
    const Raw& r = *t.raw;
    switch (r.kind) {
      case Raw::Literal:
        return Term::literal(r.value);
      case Raw::Ident:
        if (t.res == Typed::Const || t.res == Typed::NewConst) {
          return Term::constant(r.name, resolve(t.type));
        }
        return Term::var(r.name, resolve(t.type));
      case Raw::Binder: {
        Term body = build(t.kids[0]);
        Term lam = Term::abs(r.var, resolve(t.binder_type), body);
        if (r.name == "lam") return lam;
        return Term::app(mk::builtin(r.name == "forall" ? sym::kForall : sym::kExists), lam);
      }
      case Raw::Op:
        return mk::binop(r.name, build(t.kids[0]), build(t.kids[1]));
      case Raw::Not:
        return mk::neg(build(t.kids[0]));
      case Raw::Apply: {
        Term f = build(t.kids[0]);
        for (size_t i = 1; i < t.kids.size(); ++i) f = Term::app(f, build(t.kids[i]));
        return f;
      }
    }
    throw InternalError("unreachable raw node");
  }

  const Signature& sig_;
  const ParseOptions& opts_;
  int next_meta_ = 0;
  std::map<int, MTypePtr> binding_;
  std::map<std::string, MTypePtr> free_;
  std::map<std::string, MTypePtr> new_consts_;
};

}  // namespace detail

/// Parses a term in canonical syntax. Applied identifiers must be declared in
/// `sig` unless `opts.declare_unknown` is set, in which case they are added
/// to `*declare_into` with their inferred types.
inline Term parse_term(const std::string& text, const Signature& sig,
                       const ParseOptions& opts = {}, Signature* declare_into = nullptr) {
  detail::TermParser p(text);
  detail::RawPtr raw = p.parse_all();
  detail::Inference inf(sig, opts);
  return inf.run(raw, declare_into);
}

/// Parses a type such as `(Entity -> Num) -> Bool`.
inline Type parse_type(const std::string& text) {
  detail::TermParser p(text);
  return p.parse_type_all();
}

}  // namespace nhl
