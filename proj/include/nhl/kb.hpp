#pragma once

// Domain knowledge: equalities between domain functions and subsumption
// between predicates, their application to formulas, and reuse of stored
// proofs under the knowledge base.

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nhl/error.hpp"
#include "nhl/hoare.hpp"
#include "nhl/imp.hpp"
#include "nhl/spec_form.hpp"
#include "nhl/syntax.hpp"
#include "nhl/term.hpp"
#include "nhl/vc.hpp"

namespace nhl {

struct Axiom {
  enum class Kind { FunEqual, Isa } kind;
  std::string first;
  std::string second;

  std::string str() const {
    return (kind == Kind::FunEqual ? "equal " : "isa ") + first + " " + second;
  }
};

class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  /// Validates and orients the axioms. Equal functions are merged into
  /// classes; every member rewrites to the alphabetically greatest name of
  /// its class, so the oriented system has no cycles by construction.
  KnowledgeBase(std::vector<Axiom> axioms, const Signature& sig) : axioms_(std::move(axioms)) {
    std::map<std::string, std::string> parent;
    std::function<std::string(const std::string&)> find = [&](const std::string& x) {
      auto it = parent.find(x);
      if (it == parent.end() || it->second == x) return x;
      return it->second = find(it->second);
    };
    for (const auto& a : axioms_) {
      if (a.first == a.second) throw Error("degenerate axiom '" + a.str() + "'");
      auto tf = sig.lookup(a.first), tg = sig.lookup(a.second);
      if (!tf || !tg) throw UnknownConstant(!tf ? a.first : a.second);
      const Type e = Type::entity();
      if (a.kind == Axiom::Kind::FunEqual) {
        bool ok = *tf == *tg && (*tf == Type::arrow(e, Type::num()) ||
                                 *tf == Type::arrow(e, Type::boolean()));
        if (!ok) {
          throw TypeMismatch("axiom '" + a.str() + "' needs two functions of type Entity -> Num "
                             "or Entity -> Bool");
        }
        std::string ra = find(a.first), rb = find(a.second);
        parent.emplace(ra, ra);
        parent.emplace(rb, rb);
        if (ra != rb) parent[std::min(ra, rb)] = std::max(ra, rb);
      } else {
        if (*tf != Type::arrow(e, Type::boolean()) || *tg != Type::arrow(e, Type::boolean())) {
          throw TypeMismatch("axiom '" + a.str() + "' needs two predicates of type Entity -> Bool");
        }
      }
    }
    for (const auto& [name, _] : parent) {
      std::string r = find(name);
      if (r != name) rewrite_[name] = r;
    }
    for (const auto& [from, to] : rewrite_) {
      if (rewrite_.count(to)) throw InternalError("knowledge base orientation is not terminal");
    }
  }

  const std::vector<Axiom>& axioms() const { return axioms_; }
  /// Oriented function rewrites, source name to target name.
  const std::map<std::string, std::string>& rewrites() const { return rewrite_; }
  bool empty() const { return axioms_.empty(); }

  std::string canonical(const std::string& f) const {
    auto it = rewrite_.find(f);
    return it == rewrite_.end() ? f : it->second;
  }

 private:
  std::vector<Axiom> axioms_;
  std::map<std::string, std::string> rewrite_;
};

/// Parses `equal f g` and `isa A B` lines. Undeclared names are declared in
/// `sig`: functions of `equal` as Entity -> Num unless the partner is known,
/// predicates of `isa` as Entity -> Bool.
inline KnowledgeBase load_kb(const std::string& text, Signature& sig) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<Axiom> axioms;
  const Type e = Type::entity();
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ws(line);
    std::vector<std::string> words;
    for (std::string w; ws >> w;) words.push_back(w);
    if (words.empty()) continue;
    if (words.size() != 3 || (words[0] != "equal" && words[0] != "isa")) {
      throw SyntaxError("expected `equal f g` or `isa A B`", lineno);
    }
    for (int i = 1; i <= 2; ++i) {
      const auto& w = words[i];
      bool ident = !w.empty() && std::isalpha(static_cast<unsigned char>(w[0])) &&
                   std::all_of(w.begin(), w.end(), [](char c) {
                     return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                   });
      if (!ident || sym::is_logical(w) || w == sym::kPost) {
        throw SyntaxError("'" + w + "' is not a domain symbol name", lineno);
      }
    }
    Axiom a{words[0] == "equal" ? Axiom::Kind::FunEqual : Axiom::Kind::Isa, words[1], words[2]};
    if (a.kind == Axiom::Kind::Isa) {
      for (const auto& n : {a.first, a.second}) {
        if (!sig.lookup(n)) sig.declare(n, Type::arrow(e, Type::boolean()));
      }
    } else {
      auto tf = sig.lookup(a.first), tg = sig.lookup(a.second);
      Type t = tf ? *tf : tg ? *tg : Type::arrow(e, Type::num());
      if (!tf) sig.declare(a.first, t);
      if (!tg) sig.declare(a.second, t);
    }
    axioms.push_back(a);
  }
  try {
    return KnowledgeBase(std::move(axioms), sig);
  } catch (const TypeMismatch& err) {
    throw TypeMismatch(std::string("knowledge base: ") + err.what());
  }
}

namespace detail {

inline void ground_entity_terms(const Term& t, std::vector<Term>& out) {
  for_each_subterm(t, [&](const Term& s) {
    if (!s.type().is(BaseType::Entity) || !is_closed(s)) return;
    if (std::none_of(out.begin(), out.end(), [&](const Term& o) { return alpha_eq(o, s); })) {
      out.push_back(s);
    }
  });
}

inline Term rename_functions(const Term& t, const KnowledgeBase& kb) {
  Term out = t;
  for (const auto& [from, to] : kb.rewrites()) {
    auto ty = [&]() -> std::optional<Type> {
      std::optional<Type> found;
      for_each_subterm(out, [&](const Term& s) {
        if (!found && s.is_const() && !s.is_literal() && s.name() == from) found = s.type();
      });
      return found;
    }();
    if (ty) out = replace_const(out, from, Term::constant(to, *ty));
  }
  return out;
}

}  // namespace detail

/// Rewrites equal functions to their canonical representative and, for every
/// `isa A B` whose A occurs in the formula, adds the hypotheses
/// `forall x. A(x) => B(x)` and its instances at the ground Entity terms
/// present. Hypotheses go to the left of a top-level implication.
inline Term apply_kb(const Term& formula, const KnowledgeBase& kb) {
  if (kb.empty()) return formula;
  Term f = detail::rename_functions(formula, kb);
  std::set<std::string> present = constants_of(f);
  std::vector<Term> ground;
  detail::ground_entity_terms(f, ground);
  std::vector<Term> hyps;
  const Type pred = Type::arrow(Type::entity(), Type::boolean());
  for (const auto& a : kb.axioms()) {
    if (a.kind != Axiom::Kind::Isa) continue;
    std::string from = kb.canonical(a.first), to = kb.canonical(a.second);
    if (!present.count(from)) continue;
    Term A = Term::constant(from, pred), B = Term::constant(to, pred);
    Term x = Term::var("x", Type::entity());
    Term axiom = mk::forall("x", mk::imp(Term::app(A, x), Term::app(B, x)));
    for (const auto& g : ground) {
      Term inst = mk::imp(Term::app(A, g), Term::app(B, g));
      if (std::none_of(hyps.begin(), hyps.end(), [&](const Term& h) { return alpha_eq(h, inst); })) {
        hyps.push_back(inst);
      }
    }
    if (std::none_of(hyps.begin(), hyps.end(), [&](const Term& h) { return alpha_eq(h, axiom); })) {
      hyps.push_back(axiom);
    }
  }
  if (hyps.empty()) return f;
  // Already-present hypotheses are not added twice, so the result is a
  // fixpoint.
  std::vector<Term> existing;
  Term conclusion = f;
  bool implication = is_binop(f, sym::kImplies);
  if (implication) {
    auto b = *as_binop(f);
    existing = conjuncts(std::get<1>(b));
    conclusion = std::get<2>(b);
  }
  std::vector<Term> extra;
  for (const auto& h : hyps) {
    if (std::none_of(existing.begin(), existing.end(), [&](const Term& e) { return alpha_eq(e, h); })) {
      extra.push_back(h);
    }
  }
  if (extra.empty()) return f;
  if (implication) {
    existing.insert(existing.end(), extra.begin(), extra.end());
    return mk::imp(mk::conj_all(existing), conclusion);
  }
  return mk::imp(mk::conj_all(extra), f);
}

/// Applies the function rewrites to every binding body of a relation.
inline LfplRelation apply_kb(const LfplRelation& r, const KnowledgeBase& kb) {
  std::vector<Binding> out;
  for (const auto& b : r.bindings()) out.push_back({detail::rename_functions(b.body, kb), b.program_var});
  return LfplRelation(r.logical_vars(), std::move(out));
}

inline SpecForm apply_kb(const SpecForm& s, const KnowledgeBase& kb) {
  auto rn = [&](const Term& t) { return detail::rename_functions(t, kb); };
  switch (s.kind()) {
    case SpecForm::Kind::Invariant: return SpecForm::invariant(rn(s.form()));
    case SpecForm::Kind::Imperative: return SpecForm::imperative(rn(s.form()));
    case SpecForm::Kind::ConditionalImperative:
      return SpecForm::conditional(rn(s.condition()), rn(s.form()));
    case SpecForm::Kind::PrePost: return SpecForm::pre_post(rn(s.form()), rn(s.after()));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Proof records

/// Hex SHA-256 of `data`.
inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw InternalError("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Digest of the canonical printing of a program, so layout and comments do
/// not change a program's identity.
inline std::string program_digest(const imp::Stmt& s) { return sha256_hex(imp::print_program(s)); }

class ProgramMismatch : public Error {
 public:
  ProgramMismatch() : Error("proof record was made for a different program") {}
};

struct ProofRecord {
  std::string spec_line;
  SpecForm spec = SpecForm::invariant(mk::truth(true));
  LfplRelation relation;
  std::string digest;
  std::vector<std::pair<Provenance, Verdict::Kind>> verdicts;

  bool fully_valid() const {
    return !verdicts.empty() && std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) {
      return v.second == Verdict::Kind::Valid;
    });
  }
};

inline ProofRecord make_record(std::string spec_line, const SpecForm& spec, const LfplRelation& r,
                               const imp::Stmt& program, const std::vector<Vc>& vcs) {
  ProofRecord rec{std::move(spec_line), spec, r, program_digest(program), {}};
  for (const auto& v : vcs) rec.verdicts.emplace_back(v.provenance, v.verdict.kind);
  return rec;
}

inline std::string save_record(const ProofRecord& rec) {
  std::ostringstream out;
  out << "nhl-proof-record 1\n";
  out << "spec-line: " << rec.spec_line << "\n";
  out << "spec-kind: " << kind_name(rec.spec.kind()) << "\n";
  for (const auto& p : rec.spec.parts()) out << "form: " << print_term(p) << "\n";
  for (const auto& b : rec.relation.bindings()) {
    out << "relation: " << print_term(b.body) << " = " << b.program_var << "\n";
  }
  out << "program-digest: " << rec.digest << "\n";
  for (const auto& [prov, kind] : rec.verdicts) {
    Verdict v;
    v.kind = kind;
    out << "vc: " << prov.str() << "\t" << v.name() << "\n";
  }
  return out.str();
}

namespace detail {
inline Provenance parse_provenance(const std::string& s) {
  if (s == "main") return Provenance::main();
  auto num = [&](size_t from) {
    size_t close = s.find(')', from);
    if (close == std::string::npos) throw SyntaxError("bad provenance '" + s + "'");
    return std::stoi(s.substr(from, close - from));
  };
  if (s.rfind("loop-preservation(", 0) == 0) return Provenance::preservation(num(18));
  if (s.rfind("loop-exit(", 0) == 0) return Provenance::exit(num(10));
  throw SyntaxError("bad provenance '" + s + "'");
}
}  // namespace detail

/// Reads a record written by save_record. Domain symbols in the stored forms
/// are declared into `sig` as needed.
inline ProofRecord load_record(const std::string& text, Signature& sig) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  ProofRecord rec;
  std::string kind;
  std::vector<Term> forms;
  std::string relation_text;
  ParseOptions opts;
  opts.declare_unknown = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "nhl-proof-record 1") throw SyntaxError("not a proof record", 1);
      continue;
    }
    if (line.empty()) continue;
    size_t colon = line.find(": ");
    if (colon == std::string::npos) throw SyntaxError("expected `key: value`", lineno);
    std::string key = line.substr(0, colon), value = line.substr(colon + 2);
    if (key == "spec-line") {
      rec.spec_line = value;
    } else if (key == "spec-kind") {
      kind = value;
    } else if (key == "form") {
      forms.push_back(parse_term(value, sig, opts, &sig));
    } else if (key == "relation") {
      parse_term(value, sig, opts, &sig);
      relation_text += value + "\n";
    } else if (key == "program-digest") {
      rec.digest = value;
    } else if (key == "vc") {
      size_t tab = value.find('\t');
      if (tab == std::string::npos) throw SyntaxError("expected provenance and verdict", lineno);
      std::string verdict = value.substr(tab + 1);
      Verdict::Kind vk = verdict == "Valid"     ? Verdict::Kind::Valid
                         : verdict == "Invalid" ? Verdict::Kind::Invalid
                         : verdict == "Unknown" ? Verdict::Kind::Unknown
                                                : throw SyntaxError("bad verdict", lineno);
      rec.verdicts.emplace_back(detail::parse_provenance(value.substr(0, tab)), vk);
    } else {
      throw SyntaxError("unknown key '" + key + "'", lineno);
    }
  }
  auto need = [&](size_t n) {
    if (forms.size() != n) throw SyntaxError("spec kind '" + kind + "' needs " + std::to_string(n) + " forms");
  };
  if (kind == "invariant") {
    need(1);
    rec.spec = SpecForm::invariant(forms[0]);
  } else if (kind == "imperative") {
    need(1);
    rec.spec = SpecForm::imperative(forms[0]);
  } else if (kind == "conditional-imperative") {
    need(2);
    rec.spec = SpecForm::conditional(forms[0], forms[1]);
  } else if (kind == "pre-post") {
    need(2);
    rec.spec = SpecForm::pre_post(forms[0], forms[1]);
  } else {
    throw SyntaxError("unknown spec kind '" + kind + "'");
  }
  rec.relation = load_relation(relation_text, sig);
  if (rec.digest.empty()) throw SyntaxError("proof record has no program digest");
  return rec;
}

namespace detail {
/// Binding bodies abstracted over their own free variables, keyed by program
/// variable, so logical-variable names do not matter.
inline std::map<std::string, Term> closed_bindings(const LfplRelation& r) {
  std::map<std::string, Term> out;
  for (const auto& b : r.bindings()) {
    std::vector<std::string> vars;
    std::set<std::string> bound;
    free_vars_in_order(b.body, bound, vars);
    Term t = b.body;
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) t = Term::abs(*it, Type::entity(), t);
    out.emplace(b.program_var, t);
  }
  return out;
}
}  // namespace detail

/// True when a fully valid proof carries over to `new_spec` under `new_r`:
/// the knowledge-base normal forms of the logical forms and of the relation
/// bindings coincide with the proved ones. Invariant projection is re-checked
/// under the new symbols.
inline bool transfer(const ProofRecord& proved, const KnowledgeBase& kb, const SpecForm& new_spec,
                     const LfplRelation& new_r, const std::string& program_digest) {
  if (proved.digest != program_digest) throw ProgramMismatch();
  if (!proved.fully_valid()) return false;
  SpecForm a = apply_kb(proved.spec, kb), b = apply_kb(new_spec, kb);
  if (!alpha_eq(a, b)) return false;
  auto ra = detail::closed_bindings(apply_kb(proved.relation, kb));
  auto rb = detail::closed_bindings(apply_kb(new_r, kb));
  if (ra.size() != rb.size()) return false;
  for (const auto& [v, t] : ra) {
    auto it = rb.find(v);
    if (it == rb.end() || !alpha_eq(t, it->second)) return false;
  }
  if (new_spec.kind() == SpecForm::Kind::Invariant) {
    try {
      project_invariant(b.form(), apply_kb(new_r, kb));
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

}  // namespace nhl
