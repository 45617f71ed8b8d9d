#pragma once

// The While language: expressions, statements with mandatory loop
// invariants, a concrete parser, a fuel-bounded interpreter and the
// embedding of program assertions into logical terms.
//
//   _s := 0;
//   while _n > 0 invariant _s >= 0 do
//     _s := _s + _n; _n := _n - 1
//   od

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nhl/error.hpp"
#include "nhl/term.hpp"

namespace nhl::imp {

enum class Op { Add, Sub, Mul, Eq, Ne, Lt, Le, Gt, Ge, And, Or };

struct PExpr {
  enum class Kind { Var, Int, Bool, Binary, Not } kind = Kind::Int;
  std::string name;  // Var
  Int value;         // Int
  bool truth = false;
  Op op = Op::Add;
  std::vector<PExpr> args;

  static PExpr var(std::string n) {
    PExpr e;
    e.kind = Kind::Var;
    e.name = std::move(n);
    return e;
  }
  static PExpr num(const Int& v) {
    PExpr e;
    e.kind = Kind::Int;
    e.value = v;
    return e;
  }
  static PExpr boolean(bool b) {
    PExpr e;
    e.kind = Kind::Bool;
    e.truth = b;
    return e;
  }
  static PExpr binary(Op op, PExpr l, PExpr r) {
    PExpr e;
    e.kind = Kind::Binary;
    e.op = op;
    e.args = {std::move(l), std::move(r)};
    return e;
  }
  static PExpr negate(PExpr x) {
    PExpr e;
    e.kind = Kind::Not;
    e.args = {std::move(x)};
    return e;
  }
};

inline bool is_arith(Op op) { return op == Op::Add || op == Op::Sub || op == Op::Mul; }
inline bool is_logic(Op op) { return op == Op::And || op == Op::Or; }

/// True if `e` is a condition (Bool-sorted); arithmetic otherwise.
inline bool is_condition(const PExpr& e) {
  switch (e.kind) {
    case PExpr::Kind::Var:
    case PExpr::Kind::Int: return false;
    case PExpr::Kind::Bool:
    case PExpr::Kind::Not: return true;
    case PExpr::Kind::Binary: return !is_arith(e.op);
  }
  return false;
}

struct Stmt {
  enum class Kind { Skip, Assign, Seq, If, While } kind = Kind::Skip;
  std::string var;        // Assign
  PExpr expr;             // Assign value, If/While condition
  PExpr invariant;        // While
  std::vector<Stmt> body; // Seq: statements; If: {then, else}; While: {body}
  int loop_id = 0;        // While: 1-based, textual order

  static Stmt skip() { return Stmt{}; }
  static Stmt assign(std::string v, PExpr e) {
    Stmt s;
    s.kind = Kind::Assign;
    s.var = std::move(v);
    s.expr = std::move(e);
    return s;
  }
  static Stmt seq(std::vector<Stmt> parts) {
    if (parts.size() == 1) return std::move(parts.front());
    Stmt s;
    s.kind = Kind::Seq;
    s.body = std::move(parts);
    return s;
  }
  static Stmt if_(PExpr c, Stmt t, Stmt e) {
    Stmt s;
    s.kind = Kind::If;
    s.expr = std::move(c);
    s.body = {std::move(t), std::move(e)};
    return s;
  }
  static Stmt while_(PExpr c, PExpr inv, Stmt b) {
    Stmt s;
    s.kind = Kind::While;
    s.expr = std::move(c);
    s.invariant = std::move(inv);
    s.body = {std::move(b)};
    return s;
  }
};

class MissingInvariant : public SyntaxError {
 public:
  MissingInvariant(int line, int column)
      : SyntaxError("while loop without an invariant annotation", line, column) {}
};

class UnboundVariable : public Error {
 public:
  explicit UnboundVariable(const std::string& n) : Error("unbound program variable '" + n + "'") {}
};

/// Numbers while loops 1, 2, ... in textual (pre-order) order.
inline void assign_loop_ids(Stmt& s, int& next) {
  if (s.kind == Stmt::Kind::While) s.loop_id = next++;
  for (auto& c : s.body) assign_loop_ids(c, next);
}

inline void assign_loop_ids(Stmt& s) {
  int next = 1;
  assign_loop_ids(s, next);
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

struct PTok {
  enum Kind { Ident, Number, Sym, End } kind;
  std::string text;
  int line, column;
};

inline std::vector<PTok> lex_program(const std::string& src) {
  std::vector<PTok> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    int l = line, cl = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      std::string t = src.substr(i, j - i);
      advance(j - i);
      out.push_back({PTok::Ident, t, l, cl});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      std::string t = src.substr(i, j - i);
      advance(j - i);
      out.push_back({PTok::Number, t, l, cl});
      continue;
    }
    static const char* two[] = {":=", "==", "!=", "<=", ">=", "&&", "||"};
    bool matched = false;
    for (const char* op : two) {
      if (src.compare(i, 2, op) == 0) {
        out.push_back({PTok::Sym, op, l, cl});
        advance(2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string("+-*=<>!();").find(c) != std::string::npos) {
      out.push_back({PTok::Sym, std::string(1, c), l, cl});
      advance(1);
      continue;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", l, cl);
  }
  out.push_back({PTok::End, "", line, col});
  return out;
}

class ProgramParser {
 public:
  explicit ProgramParser(const std::string& src) : toks_(lex_program(src)) {}

  Stmt program() {
    Stmt s = stmt_list();
    if (peek().kind != PTok::End) fail("unexpected '" + peek().text + "'");
    return s;
  }

  PExpr expression() {
    PExpr e = expr();
    if (peek().kind != PTok::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const PTok& peek() const { return toks_[pos_]; }
  bool at_sym(const std::string& s) const { return peek().kind == PTok::Sym && peek().text == s; }
  bool at_kw(const std::string& s) const { return peek().kind == PTok::Ident && peek().text == s; }
  void expect_sym(const std::string& s) {
    if (!at_sym(s)) fail("expected '" + s + "'");
    ++pos_;
  }
  void expect_kw(const std::string& s) {
    if (!at_kw(s)) fail("expected '" + s + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg, peek().line, peek().column);
  }
  [[noreturn]] void type_error(const std::string& msg, const PTok& at) const {
    throw TypeMismatch("line " + std::to_string(at.line) + ", column " +
                       std::to_string(at.column) + ": " + msg);
  }

  static bool is_keyword(const std::string& s) {
    static const std::set<std::string> kws = {"skip", "if", "then", "else", "fi", "while",
                                              "invariant", "do", "od", "true", "false"};
    return kws.count(s) != 0;
  }

  bool at_list_end() const {
    return peek().kind == PTok::End || at_kw("else") || at_kw("fi") || at_kw("od");
  }

  Stmt stmt_list() {
    std::vector<Stmt> parts;
    parts.push_back(stmt());
    while (at_sym(";")) {
      ++pos_;
      if (at_list_end()) break;  // trailing separator
      parts.push_back(stmt());
    }
    return Stmt::seq(std::move(parts));
  }

  Stmt stmt() {
    const PTok t = peek();
    if (at_kw("skip")) {
      ++pos_;
      return Stmt::skip();
    }
    if (at_kw("if")) {
      ++pos_;
      PExpr c = condition();
      expect_kw("then");
      Stmt th = stmt_list();
      Stmt el = Stmt::skip();
      if (at_kw("else")) {
        ++pos_;
        el = stmt_list();
      }
      expect_kw("fi");
      return Stmt::if_(std::move(c), std::move(th), std::move(el));
    }
    if (at_kw("while")) {
      ++pos_;
      PExpr c = condition();
      if (!at_kw("invariant")) {
        if (at_kw("do")) throw MissingInvariant(t.line, t.column);
        fail("expected 'invariant'");
      }
      ++pos_;
      PExpr inv = condition();
      expect_kw("do");
      Stmt b = stmt_list();
      expect_kw("od");
      Stmt w = Stmt::while_(std::move(c), std::move(inv), std::move(b));
      w.loop_id = next_loop_++;
      return w;
    }
    if (t.kind == PTok::Ident && !is_keyword(t.text)) {
      if (!sym::is_program_var(t.text)) {
        fail("program variables must start with '_' (got '" + t.text + "')");
      }
      ++pos_;
      expect_sym(":=");
      const PTok at = peek();
      PExpr e = expr();
      if (is_condition(e)) type_error("assignment of a condition to '" + t.text + "'", at);
      return Stmt::assign(t.text, std::move(e));
    }
    fail(t.kind == PTok::End ? "unexpected end of program" : "unexpected '" + t.text + "'");
  }

  PExpr condition() {
    const PTok at = peek();
    PExpr e = expr();
    if (!is_condition(e)) type_error("expected a condition", at);
    return e;
  }

  PExpr expr() { return disjunction(); }

  void want(const PExpr& e, bool cond, const PTok& at) const {
    if (is_condition(e) != cond) {
      type_error(cond ? "expected a condition" : "expected an arithmetic expression", at);
    }
  }

  PExpr disjunction() {
    PExpr l = conjunction();
    while (at_sym("||")) {
      const PTok at = peek();
      ++pos_;
      PExpr r = conjunction();
      want(l, true, at);
      want(r, true, at);
      l = PExpr::binary(Op::Or, std::move(l), std::move(r));
    }
    return l;
  }

  PExpr conjunction() {
    PExpr l = negation();
    while (at_sym("&&")) {
      const PTok at = peek();
      ++pos_;
      PExpr r = negation();
      want(l, true, at);
      want(r, true, at);
      l = PExpr::binary(Op::And, std::move(l), std::move(r));
    }
    return l;
  }

  PExpr negation() {
    if (at_sym("!")) {
      const PTok at = peek();
      ++pos_;
      PExpr e = negation();
      want(e, true, at);
      return PExpr::negate(std::move(e));
    }
    return comparison();
  }

  PExpr comparison() {
    PExpr l = sum();
    static const std::map<std::string, Op> ops = {{"=", Op::Eq}, {"==", Op::Eq}, {"!=", Op::Ne},
                                                  {"<", Op::Lt}, {"<=", Op::Le}, {">", Op::Gt},
                                                  {">=", Op::Ge}};
    if (peek().kind == PTok::Sym) {
      if (auto it = ops.find(peek().text); it != ops.end()) {
        const PTok at = peek();
        ++pos_;
        PExpr r = sum();
        want(l, false, at);
        want(r, false, at);
        return PExpr::binary(it->second, std::move(l), std::move(r));
      }
    }
    return l;
  }

  PExpr sum() {
    PExpr l = product();
    while (at_sym("+") || at_sym("-")) {
      const PTok at = peek();
      Op op = at_sym("+") ? Op::Add : Op::Sub;
      ++pos_;
      PExpr r = product();
      want(l, false, at);
      want(r, false, at);
      l = PExpr::binary(op, std::move(l), std::move(r));
    }
    return l;
  }

  PExpr product() {
    PExpr l = unary();
    while (at_sym("*")) {
      const PTok at = peek();
      ++pos_;
      PExpr r = unary();
      want(l, false, at);
      want(r, false, at);
      l = PExpr::binary(Op::Mul, std::move(l), std::move(r));
    }
    return l;
  }

  PExpr unary() {
    if (at_sym("-")) {
      const PTok at = peek();
      ++pos_;
      if (peek().kind == PTok::Number) {
        PExpr e = PExpr::num(-Int(peek().text));
        ++pos_;
        return e;
      }
      PExpr e = unary();
      want(e, false, at);
      return PExpr::binary(Op::Sub, PExpr::num(0), std::move(e));
    }
    return atom();
  }

  PExpr atom() {
    const PTok t = peek();
    if (t.kind == PTok::Number) {
      ++pos_;
      return PExpr::num(Int(t.text));
    }
    if (at_kw("true") || at_kw("false")) {
      ++pos_;
      return PExpr::boolean(t.text == "true");
    }
    if (t.kind == PTok::Ident && !is_keyword(t.text)) {
      if (!sym::is_program_var(t.text)) {
        fail("program variables must start with '_' (got '" + t.text + "')");
      }
      ++pos_;
      return PExpr::var(t.text);
    }
    if (at_sym("(")) {
      ++pos_;
      PExpr e = expr();
      expect_sym(")");
      return e;
    }
    fail(t.kind == PTok::End ? "unexpected end of input" : "unexpected '" + t.text + "'");
  }

  std::vector<PTok> toks_;
  size_t pos_ = 0;
  int next_loop_ = 1;
};

}  // namespace detail

/// Parses a program. Throws SyntaxError (with line/column), MissingInvariant,
/// or TypeMismatch.
inline Stmt parse_program(const std::string& text) {
  detail::ProgramParser p(text);
  return p.program();
}

/// Parses a single program expression (assertion or arithmetic).
inline PExpr parse_expr(const std::string& text) {
  detail::ProgramParser p(text);
  return p.expression();
}

// ---------------------------------------------------------------------------
// Printing

inline const char* op_text(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Eq: return "=";
    case Op::Ne: return "!=";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::And: return "&&";
    case Op::Or: return "||";
  }
  return "?";
}

inline int op_level(Op op) {
  switch (op) {
    case Op::Or: return 1;
    case Op::And: return 2;
    case Op::Add:
    case Op::Sub: return 5;
    case Op::Mul: return 6;
    default: return 4;  // comparisons
  }
}

inline std::string print_expr(const PExpr& e, int ctx = 0) {
  switch (e.kind) {
    case PExpr::Kind::Var: return e.name;
    case PExpr::Kind::Int: {
      std::string s = e.value.str();
      return (e.value < 0 && ctx > 6) ? "(" + s + ")" : s;
    }
    case PExpr::Kind::Bool: return e.truth ? "true" : "false";
    case PExpr::Kind::Not: return "!" + print_expr(e.args[0], 7);
    case PExpr::Kind::Binary: {
      int lvl = op_level(e.op);
      bool cmp = lvl == 4;
      std::string s = print_expr(e.args[0], cmp ? lvl + 1 : lvl) + " " + op_text(e.op) + " " +
                      print_expr(e.args[1], lvl + 1);
      return ctx > lvl ? "(" + s + ")" : s;
    }
  }
  return "";
}

inline void print_stmt(const Stmt& s, int indent, std::string& out) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  switch (s.kind) {
    case Stmt::Kind::Skip: out += pad + "skip"; return;
    case Stmt::Kind::Assign: out += pad + s.var + " := " + print_expr(s.expr); return;
    case Stmt::Kind::Seq:
      for (size_t i = 0; i < s.body.size(); ++i) {
        if (i) out += ";\n";
        print_stmt(s.body[i], indent, out);
      }
      return;
    case Stmt::Kind::If:
      out += pad + "if " + print_expr(s.expr) + " then\n";
      print_stmt(s.body[0], indent + 1, out);
      out += "\n" + pad + "else\n";
      print_stmt(s.body[1], indent + 1, out);
      out += "\n" + pad + "fi";
      return;
    case Stmt::Kind::While:
      out += pad + "while " + print_expr(s.expr) + " invariant " + print_expr(s.invariant) +
             " do\n";
      print_stmt(s.body[0], indent + 1, out);
      out += "\n" + pad + "od";
      return;
  }
}

/// Canonical program text; parse_program(print_program(s)) reproduces s.
inline std::string print_program(const Stmt& s) {
  std::string out;
  print_stmt(s, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Semantics

using PState = std::map<std::string, Int>;

inline void collect_vars(const PExpr& e, std::set<std::string>& out) {
  if (e.kind == PExpr::Kind::Var) out.insert(e.name);
  for (const auto& a : e.args) collect_vars(a, out);
}

inline void collect_vars(const Stmt& s, std::set<std::string>& out) {
  if (s.kind == Stmt::Kind::Assign) out.insert(s.var);
  if (s.kind == Stmt::Kind::Assign || s.kind == Stmt::Kind::If || s.kind == Stmt::Kind::While) {
    collect_vars(s.expr, out);
  }
  if (s.kind == Stmt::Kind::While) collect_vars(s.invariant, out);
  for (const auto& c : s.body) collect_vars(c, out);
}

inline std::set<std::string> program_vars(const Stmt& s) {
  std::set<std::string> out;
  collect_vars(s, out);
  return out;
}

inline Int eval_int(const PExpr& e, const PState& st);

inline bool eval_bool(const PExpr& e, const PState& st) {
  switch (e.kind) {
    case PExpr::Kind::Bool: return e.truth;
    case PExpr::Kind::Not: return !eval_bool(e.args[0], st);
    case PExpr::Kind::Binary:
      switch (e.op) {
        case Op::And: return eval_bool(e.args[0], st) && eval_bool(e.args[1], st);
        case Op::Or: return eval_bool(e.args[0], st) || eval_bool(e.args[1], st);
        case Op::Eq: return eval_int(e.args[0], st) == eval_int(e.args[1], st);
        case Op::Ne: return eval_int(e.args[0], st) != eval_int(e.args[1], st);
        case Op::Lt: return eval_int(e.args[0], st) < eval_int(e.args[1], st);
        case Op::Le: return eval_int(e.args[0], st) <= eval_int(e.args[1], st);
        case Op::Gt: return eval_int(e.args[0], st) > eval_int(e.args[1], st);
        case Op::Ge: return eval_int(e.args[0], st) >= eval_int(e.args[1], st);
        default: break;
      }
      break;
    default: break;
  }
  throw TypeMismatch("arithmetic expression used as a condition");
}

inline Int eval_int(const PExpr& e, const PState& st) {
  switch (e.kind) {
    case PExpr::Kind::Int: return e.value;
    case PExpr::Kind::Var: {
      auto it = st.find(e.name);
      if (it == st.end()) throw UnboundVariable(e.name);
      return it->second;
    }
    case PExpr::Kind::Binary:
      switch (e.op) {
        case Op::Add: return eval_int(e.args[0], st) + eval_int(e.args[1], st);
        case Op::Sub: return eval_int(e.args[0], st) - eval_int(e.args[1], st);
        case Op::Mul: return eval_int(e.args[0], st) * eval_int(e.args[1], st);
        default: break;
      }
      break;
    default: break;
  }
  throw TypeMismatch("condition used as an arithmetic expression");
}

struct ExecResult {
  bool fuel_exhausted = false;
  PState state;
};

namespace detail {
inline bool exec(const Stmt& s, PState& st, long& fuel) {
  switch (s.kind) {
    case Stmt::Kind::Skip: return true;
    case Stmt::Kind::Assign: {
      Int v = eval_int(s.expr, st);
      if (!st.count(s.var)) throw UnboundVariable(s.var);
      st[s.var] = v;
      return true;
    }
    case Stmt::Kind::Seq:
      for (const auto& c : s.body) {
        if (!exec(c, st, fuel)) return false;
      }
      return true;
    case Stmt::Kind::If:
      return exec(eval_bool(s.expr, st) ? s.body[0] : s.body[1], st, fuel);
    case Stmt::Kind::While:
      while (eval_bool(s.expr, st)) {
        if (fuel <= 0) return false;
        --fuel;
        if (!exec(s.body[0], st, fuel)) return false;
      }
      return true;
  }
  return true;
}
}  // namespace detail

/// Big-step execution; each loop iteration consumes one unit of fuel.
inline ExecResult exec(const Stmt& s, PState state, long fuel) {
  ExecResult r;
  r.fuel_exhausted = !detail::exec(s, state, fuel);
  r.state = std::move(state);
  return r;
}

// ---------------------------------------------------------------------------
// Embedding into the logic

inline Term embed(const PExpr& e) {
  switch (e.kind) {
    case PExpr::Kind::Var: return mk::program_var(e.name);
    case PExpr::Kind::Int: return mk::lit(e.value);
    case PExpr::Kind::Bool: return mk::truth(e.truth);
    case PExpr::Kind::Not: return mk::neg(embed(e.args[0]));
    case PExpr::Kind::Binary: {
      Term l = embed(e.args[0]);
      Term r = embed(e.args[1]);
      switch (e.op) {
        case Op::Add: return mk::binop(sym::kPlus, l, r);
        case Op::Sub: return mk::binop(sym::kMinus, l, r);
        case Op::Mul: return mk::binop(sym::kTimes, l, r);
        case Op::Eq: return mk::eq(l, r);
        case Op::Ne: return mk::neg(mk::eq(l, r));
        case Op::Lt: return mk::binop(sym::kLt, l, r);
        case Op::Le: return mk::binop(sym::kLe, l, r);
        case Op::Gt: return mk::binop(sym::kGt, l, r);
        case Op::Ge: return mk::binop(sym::kGe, l, r);
        case Op::And: return mk::conj(l, r);
        case Op::Or: return mk::disj(l, r);
      }
    }
  }
  throw InternalError("unreachable expression kind");
}

}  // namespace nhl::imp
