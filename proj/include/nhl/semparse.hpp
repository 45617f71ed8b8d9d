#pragma once

// Weighted compositional semantic parsing from controlled English to logical
// forms, and the classifier for the four specification shapes.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nhl/error.hpp"
#include "nhl/spec_form.hpp"
#include "nhl/syntax.hpp"
#include "nhl/term.hpp"

namespace nhl {

/// Start category of declarative sentences.
inline const std::string kDeclarative = "S";
/// Start category of imperative sentences.
inline const std::string kImperative = "IMP";
/// Category receiving numeric tokens such as `42` or `-3`.
inline const std::string kNumeralCategory = "NUM";
/// Weight of a numeric token; word entries like "zero" outrank digits.
inline constexpr double kNumeralWeight = -0.1;
inline constexpr int kDefaultK = 5;
inline constexpr double kScoreEpsilon = 1e-9;

class NoParse : public Error {
 public:
  NoParse(std::string longest, std::vector<std::string> unknown)
      : Error(message(longest, unknown)), longest_(std::move(longest)), unknown_(std::move(unknown)) {}
  /// The longest token span that parses as some category.
  const std::string& longest_span() const { return longest_; }
  const std::vector<std::string>& unknown_tokens() const { return unknown_; }

 private:
  static std::string message(const std::string& longest, const std::vector<std::string>& unknown) {
    std::string m = "no parse";
    if (!unknown.empty()) {
      m += "; unknown:";
      for (const auto& u : unknown) m += " " + u;
    }
    if (!longest.empty()) m += "; longest parsable span: '" + longest + "'";
    return m;
  }
  std::string longest_;
  std::vector<std::string> unknown_;
};

class MalformedMarkers : public Error {
 public:
  using Error::Error;
};

struct LexEntry {
  std::vector<std::string> surface;
  std::string category;
  Term semantics;
  double weight = 0;
  int line = 0;
};

struct GrammarRule {
  std::string lhs;
  std::vector<std::string> rhs;
  Term combinator;
  double weight = 0;
  /// Words interleaved with child slots `#1`, `#2`; empty when absent.
  std::vector<std::string> templ;
  int line = 0;
};

struct Derivation;
using DerivationPtr = std::shared_ptr<const Derivation>;

/// One node of a derivation tree.
struct Derivation {
  enum class Kind { Lexical, Numeral, Rule };
  Kind kind;
  int index = -1;  // lexicon entry or rule index
  std::string category;
  std::vector<std::string> words;  // lexical surface or numeral token
  std::vector<DerivationPtr> kids;
  std::string serialized;

  static DerivationPtr make(Kind kind, int index, std::string category, std::vector<std::string> words,
                            std::vector<DerivationPtr> kids) {
    auto d = std::make_shared<Derivation>();
    d->kind = kind;
    d->index = index;
    d->category = std::move(category);
    d->words = std::move(words);
    d->kids = std::move(kids);
    std::string s = "(" + d->category;
    if (kind == Kind::Lexical) s += "@" + std::to_string(index);
    if (kind == Kind::Rule) s += "#" + std::to_string(index);
    for (const auto& w : d->words) s += " " + w;
    for (const auto& k : d->kids) s += " " + k->serialized;
    d->serialized = s + ")";
    return d;
  }
};

struct ParseResult {
  Term logical_form;
  double score = 0;
  DerivationPtr derivation;
};

/// Ranking shared by parsing and generation: higher score first, then the
/// lexicographically smallest serialized derivation.
inline bool ranks_before(double sa, const Derivation& a, double sb, const Derivation& b) {
  if (std::abs(sa - sb) > kScoreEpsilon) return sa > sb;
  return a.serialized < b.serialized;
}

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '|') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline double parse_weight(const std::string& text, int line) {
  try {
    size_t used = 0;
    double w = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return w;
  } catch (const std::exception&) {
    throw SyntaxError("bad weight '" + text + "'", line);
  }
}

inline std::string strip_comment(const std::string& line) {
  size_t h = line.find('#');
  // `#1` placeholders are not comments.
  while (h != std::string::npos && h + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[h + 1]))) {
    h = line.find('#', h + 1);
  }
  return h == std::string::npos ? line : line.substr(0, h);
}

inline bool is_numeral(const std::string& tok) {
  size_t i = tok[0] == '-' ? 1 : 0;
  if (i >= tok.size()) return false;
  for (; i < tok.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
  }
  return true;
}

inline std::string placeholder(size_t i) { return "#" + std::to_string(i + 1); }

/// Semantics of a rule application: the combinator with child meanings
/// substituted for its placeholders, in beta-normal form.
inline Term compose(const Term& combinator, const std::vector<Term>& kids) {
  Term t = combinator;
  for (size_t i = 0; i < kids.size(); ++i) t = substitute(t, placeholder(i), kids[i]);
  return normalize(t);
}

}  // namespace detail

class Grammar {
 public:
  const std::vector<LexEntry>& lexicon() const { return lexicon_; }
  const std::vector<GrammarRule>& rules() const { return rules_; }
  /// Builtins plus every constant the lexicon introduces.
  const Signature& signature() const { return sig_; }
  std::optional<Type> category_type(const std::string& cat) const {
    auto it = types_.find(cat);
    if (it == types_.end()) return std::nullopt;
    return it->second;
  }
  bool has_category(const std::string& cat) const { return types_.count(cat) != 0; }
  bool numerals_enabled() const {
    auto t = category_type(kNumeralCategory);
    return t && *t == Type::num();
  }
  /// Start categories present in this grammar, declarative first.
  std::vector<std::string> start_categories() const {
    std::vector<std::string> out;
    for (const auto& c : {kDeclarative, kImperative}) {
      if (has_category(c)) out.push_back(c);
    }
    return out;
  }
  /// Lexicon indices by surface string.
  const std::map<std::string, std::vector<int>>& by_surface() const { return by_surface_; }
  size_t max_surface() const { return max_surface_; }
  /// Unary rules ordered so that a rule's child category is complete before
  /// the rule is applied.
  const std::vector<int>& unary_order() const { return unary_order_; }

  friend Grammar load_grammar(const std::string& lexicon_text, const std::string& rules_text);

 private:
  std::vector<LexEntry> lexicon_;
  std::vector<GrammarRule> rules_;
  Signature sig_ = Signature::builtin();
  std::map<std::string, Type> types_;
  std::map<std::string, std::vector<int>> by_surface_;
  size_t max_surface_ = 0;
  std::vector<int> unary_order_;
};

inline Grammar load_grammar(const std::string& lexicon_text, const std::string& rules_text) {
  Grammar g;
  struct RawEntry {
    std::vector<std::string> surface;
    std::string category, semantics;
    double weight;
    int line;
  };
  struct RawRule {
    std::string lhs;
    std::vector<std::string> rhs;
    std::string combinator;
    double weight;
    std::vector<std::string> templ;
    int line;
  };
  std::vector<RawEntry> entries;
  std::vector<RawRule> rules;

  {
    std::istringstream in(lexicon_text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      std::string body = detail::trim(detail::strip_comment(line));
      if (body.empty()) continue;
      auto f = detail::split_fields(body);
      if (f.size() != 4) throw SyntaxError("expected 'surface | CATEGORY | term | weight'", no);
      auto surface = detail::words(detail::lower(f[0]));
      if (surface.empty()) throw SyntaxError("empty surface", no);
      if (f[1].empty() || detail::words(f[1]).size() != 1) throw SyntaxError("bad category", no);
      entries.push_back({surface, f[1], f[2], detail::parse_weight(f[3], no), no});
    }
  }
  if (entries.empty()) throw Error("no lexical entries");

  {
    std::istringstream in(rules_text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      std::string body = detail::trim(detail::strip_comment(line));
      if (body.empty()) continue;
      auto f = detail::split_fields(body);
      if (f.size() != 3 && f.size() != 4) {
        throw SyntaxError("expected 'LHS -> RHS1 [RHS2] | combinator | weight [| template]'", no);
      }
      auto head = detail::words(f[0]);
      if (head.size() < 3 || head.size() > 4 || head[1] != "->") {
        throw SyntaxError("rule needs one or two right-hand-side categories", no);
      }
      RawRule r{head[0], {head.begin() + 2, head.end()}, f[1], detail::parse_weight(f[2], no), {}, no};
      if (f.size() == 4) {
        r.templ = detail::words(f[3]);
        for (const auto& w : r.templ) {
          if (w[0] != '#') continue;
          bool ok = w.size() == 2 && (w[1] == '1' || (w[1] == '2' && r.rhs.size() == 2));
          if (!ok) throw SyntaxError("template slot " + w + " exceeds rule arity", no);
        }
      }
      rules.push_back(std::move(r));
    }
  }

  // Category types: propagate from lexical entries and combinators until
  // nothing changes.
  auto set_type = [&](const std::string& cat, const Type& t, const std::string& where) {
    auto [it, fresh] = g.types_.emplace(cat, t);
    if (!fresh && it->second != t) {
      throw TypeMismatch(where + ": category " + cat + " has type " + it->second.str() + ", not " + t.str());
    }
    return fresh;
  };
  auto lex_where = [](const RawEntry& e) { return "lexicon line " + std::to_string(e.line); };
  auto rule_where = [](const RawRule& r) { return "rule line " + std::to_string(r.line); };

  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : entries) {
      if (g.types_.count(e.category)) continue;
      Signature scratch = g.sig_;
      ParseOptions o;
      o.declare_unknown = true;
      o.strict = true;
      try {
        Term t = parse_term(e.semantics, g.sig_, o, &scratch);
        changed |= set_type(e.category, typecheck(t, scratch), lex_where(e));
      } catch (const UnresolvedType&) {
      } catch (const SyntaxError& err) {
        throw SyntaxError(lex_where(e) + ": " + err.what(), e.line);
      }
    }
    for (const auto& r : rules) {
      ParseOptions o;
      o.strict = true;
      std::map<std::string, Type> inferred;
      o.free_types_out = &inferred;
      for (size_t i = 0; i < r.rhs.size(); ++i) {
        if (auto t = g.category_type(r.rhs[i])) o.free_var_types.emplace(detail::placeholder(i), *t);
      }
      if (auto t = g.category_type(r.lhs)) o.expected = *t;
      if (o.free_var_types.size() == r.rhs.size() && o.expected) continue;
      try {
        Term t = parse_term(r.combinator, g.sig_, o);
        changed |= set_type(r.lhs, typecheck(t, g.sig_), rule_where(r));
        for (size_t i = 0; i < r.rhs.size(); ++i) {
          auto it = inferred.find(detail::placeholder(i));
          if (it != inferred.end()) changed |= set_type(r.rhs[i], it->second, rule_where(r));
        }
      } catch (const UnresolvedType&) {
      } catch (const UnknownConstant&) {
      } catch (const SyntaxError& err) {
        throw SyntaxError(rule_where(r) + ": " + err.what(), r.line);
      } catch (const TypeMismatch& err) {
        throw TypeMismatch(rule_where(r) + ": " + err.what());
      }
    }
  }

  for (const auto& e : entries) {
    auto t = g.category_type(e.category);
    if (!t) throw TypeMismatch(lex_where(e) + ": cannot determine the type of category " + e.category);
    ParseOptions o;
    o.declare_unknown = true;
    o.expected = *t;
    Term sem = [&] {
      try {
        return parse_term(e.semantics, g.sig_, o, &g.sig_);
      } catch (const TypeMismatch& err) {
        throw TypeMismatch(lex_where(e) + " ('" + e.semantics + "'): " + err.what());
      }
    }();
    if (!is_closed(sem)) throw TypeMismatch(lex_where(e) + ": semantics has free variables");
    g.lexicon_.push_back({e.surface, e.category, sem, e.weight, e.line});
  }

  for (const auto& r : rules) {
    for (const auto& c : r.rhs) {
      if (!g.category_type(c)) {
        throw TypeMismatch(rule_where(r) + ": cannot determine the type of category " + c);
      }
    }
    ParseOptions o;
    for (size_t i = 0; i < r.rhs.size(); ++i) o.free_var_types.emplace(detail::placeholder(i), *g.category_type(r.rhs[i]));
    if (auto t = g.category_type(r.lhs)) o.expected = *t;
    Term comb = [&] {
      try {
        return parse_term(r.combinator, g.sig_, o);
      } catch (const Error& err) {
        throw TypeMismatch(rule_where(r) + " ('" + r.combinator + "'): " + err.what());
      }
    }();
    std::set<std::string> used;
    for (const auto& v : free_vars(comb)) used.insert(v.first);
    std::set<std::string> want;
    for (size_t i = 0; i < r.rhs.size(); ++i) want.insert(detail::placeholder(i));
    if (used != want) {
      throw SyntaxError("combinator arity " + std::to_string(used.size()) + " does not match " +
                            std::to_string(r.rhs.size()) + " right-hand-side categories",
                        r.line);
    }
    set_type(r.lhs, typecheck(comb, g.sig_), rule_where(r));
    g.rules_.push_back({r.lhs, r.rhs, comb, r.weight, r.templ, r.line});
  }

  for (const auto& c : {kDeclarative, kImperative}) {
    auto t = g.category_type(c);
    if (t && *t != Type::boolean()) throw TypeMismatch("start category " + c + " must have type Bool");
  }
  if (g.start_categories().empty()) throw Error("grammar defines neither S nor IMP");

  for (size_t i = 0; i < g.lexicon_.size(); ++i) {
    std::string key;
    for (const auto& w : g.lexicon_[i].surface) key += (key.empty() ? "" : " ") + w;
    g.by_surface_[key].push_back(static_cast<int>(i));
    g.max_surface_ = std::max(g.max_surface_, g.lexicon_[i].surface.size());
  }

  // Unary rules in dependency order; a cycle would make the chart infinite.
  {
    std::vector<int> unary;
    for (size_t i = 0; i < g.rules_.size(); ++i) {
      if (g.rules_[i].rhs.size() == 1) unary.push_back(static_cast<int>(i));
    }
    std::set<std::string> cats;
    for (int i : unary) {
      cats.insert(g.rules_[i].lhs);
      cats.insert(g.rules_[i].rhs[0]);
    }
    std::map<std::string, int> state;  // 1 visiting, 2 done
    std::vector<std::string> order;
    std::function<void(const std::string&)> visit = [&](const std::string& c) {
      int& s = state[c];
      if (s == 2) return;
      if (s == 1) throw Error("cycle of unary rules through category " + c);
      s = 1;
      for (int i : unary) {
        if (g.rules_[i].lhs == c) visit(g.rules_[i].rhs[0]);
      }
      s = 2;
      order.push_back(c);
    };
    for (const auto& c : cats) visit(c);
    for (const auto& c : order) {
      for (int i : unary) {
        if (g.rules_[i].rhs[0] == c) g.unary_order_.push_back(i);
      }
    }
  }

  // Generation needs a template on every rule reachable from a start category.
  {
    std::set<std::string> seen;
    std::vector<std::string> todo = g.start_categories();
    while (!todo.empty()) {
      std::string c = todo.back();
      todo.pop_back();
      if (!seen.insert(c).second) continue;
      for (const auto& r : g.rules_) {
        if (r.lhs != c) continue;
        if (r.templ.empty()) throw SyntaxError("rule for " + c + " reachable from a start category has no template", r.line);
        for (const auto& k : r.rhs) todo.push_back(k);
      }
    }
  }
  return g;
}

/// Lowercases, strips terminal punctuation and splits on whitespace.
inline std::vector<std::string> tokenize(const std::string& sentence) {
  std::string s = detail::lower(sentence);
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || std::string(".!?;:,").find(s.back()) != std::string::npos)) {
    s.pop_back();
  }
  std::vector<std::string> out;
  for (auto w : detail::words(s)) {
    while (w.size() > 1 && w.back() == ',') w.pop_back();
    out.push_back(w);
  }
  return out;
}

namespace detail {

struct Item {
  Term sem;
  double score;
  DerivationPtr deriv;
};

inline bool item_before(const Item& a, const Item& b) {
  return ranks_before(a.score, *a.deriv, b.score, *b.deriv);
}

using Cell = std::map<std::string, std::vector<Item>>;

inline void add_item(std::vector<Item>& list, Item item, size_t beam) {
  auto pos = std::lower_bound(list.begin(), list.end(), item, item_before);
  if (static_cast<size_t>(pos - list.begin()) >= beam) return;
  list.insert(pos, std::move(item));
  if (list.size() > beam) list.pop_back();
}

/// CKY chart with `beam` best items per span and category.
class Chart {
 public:
  Chart(const Grammar& g, const std::vector<std::string>& toks, size_t beam)
      : g_(g), toks_(toks), n_(toks.size()), beam_(beam), cells_((n_ + 1) * (n_ + 1)) {
    for (size_t len = 1; len <= n_; ++len) {
      for (size_t i = 0; i + len <= n_; ++i) fill(i, i + len);
    }
  }

  const Cell& cell(size_t i, size_t j) const { return cells_[i * (n_ + 1) + j]; }

 private:
  Cell& at(size_t i, size_t j) { return cells_[i * (n_ + 1) + j]; }

  void fill(size_t i, size_t j) {
    Cell& c = at(i, j);
    size_t len = j - i;
    if (len <= g_.max_surface()) {
      std::string key;
      for (size_t t = i; t < j; ++t) key += (t == i ? "" : " ") + toks_[t];
      auto it = g_.by_surface().find(key);
      if (it != g_.by_surface().end()) {
        for (int e : it->second) {
          const LexEntry& le = g_.lexicon()[e];
          add_item(c[le.category],
                   {le.semantics, le.weight,
                    Derivation::make(Derivation::Kind::Lexical, e, le.category, le.surface, {})},
                   beam_);
        }
      }
    }
    if (len == 1 && g_.numerals_enabled() && is_numeral(toks_[i])) {
      add_item(c[kNumeralCategory],
               {Term::literal(Int(toks_[i])), kNumeralWeight,
                Derivation::make(Derivation::Kind::Numeral, -1, kNumeralCategory, {toks_[i]}, {})},
               beam_);
    }
    for (size_t r = 0; r < g_.rules().size(); ++r) {
      const GrammarRule& rule = g_.rules()[r];
      if (rule.rhs.size() != 2) continue;
      for (size_t m = i + 1; m < j; ++m) {
        auto a = cell(i, m).find(rule.rhs[0]);
        if (a == cell(i, m).end()) continue;
        auto b = cell(m, j).find(rule.rhs[1]);
        if (b == cell(m, j).end()) continue;
        for (const Item& x : a->second) {
          for (const Item& y : b->second) apply(c, static_cast<int>(r), {&x, &y});
        }
      }
    }
    for (int r : g_.unary_order()) {
      const GrammarRule& rule = g_.rules()[r];
      auto a = c.find(rule.rhs[0]);
      if (a == c.end()) continue;
      std::vector<Item> kids = a->second;
      for (const Item& x : kids) apply(c, r, {&x});
    }
  }

  void apply(Cell& c, int r, std::vector<const Item*> kids) {
    const GrammarRule& rule = g_.rules()[r];
    std::vector<Term> sems;
    std::vector<DerivationPtr> ds;
    double score = rule.weight;
    for (const Item* k : kids) {
      sems.push_back(k->sem);
      ds.push_back(k->deriv);
      score += k->score;
    }
    auto& list = c[rule.lhs];
    Item probe{Term::boolean(true), score, Derivation::make(Derivation::Kind::Rule, r, rule.lhs, {}, ds)};
    if (list.size() >= beam_ && !item_before(probe, list.back())) return;
    probe.sem = compose(rule.combinator, sems);
    add_item(list, std::move(probe), beam_);
  }

  const Grammar& g_;
  const std::vector<std::string>& toks_;
  size_t n_;
  size_t beam_;
  std::vector<Cell> cells_;
};

inline NoParse no_parse(const Grammar& g, const std::vector<std::string>& toks, const Chart& chart) {
  std::vector<std::string> unknown;
  for (size_t i = 0; i < toks.size(); ++i) {
    bool covered = g.numerals_enabled() && is_numeral(toks[i]);
    for (size_t a = (i + 1 > g.max_surface() ? i + 1 - g.max_surface() : 0); a <= i && !covered; ++a) {
      for (size_t b = i + 1; b <= std::min(toks.size(), a + g.max_surface()) && !covered; ++b) {
        std::string key;
        for (size_t t = a; t < b; ++t) key += (t == a ? "" : " ") + toks[t];
        covered = g.by_surface().count(key) != 0;
      }
    }
    if (!covered && std::find(unknown.begin(), unknown.end(), toks[i]) == unknown.end()) {
      unknown.push_back(toks[i]);
    }
  }
  std::string longest;
  size_t best = 0;
  for (size_t len = toks.size(); len >= 1 && best == 0; --len) {
    for (size_t i = 0; i + len <= toks.size(); ++i) {
      if (!chart.cell(i, i + len).empty()) {
        best = len;
        for (size_t t = i; t < i + len; ++t) longest += (t == i ? "" : " ") + toks[t];
        break;
      }
    }
  }
  return NoParse(longest, unknown);
}

}  // namespace detail

/// Top-k parses of `tokens` as `start`, best first.
inline std::vector<ParseResult> parse(const Grammar& g, const std::vector<std::string>& tokens,
                                      const std::string& start, int k = kDefaultK) {
  if (k < 1) throw Error("k must be at least 1");
  detail::Chart chart(g, tokens, static_cast<size_t>(k));
  std::vector<ParseResult> out;
  if (!tokens.empty()) {
    const detail::Cell& top = chart.cell(0, tokens.size());
    auto it = top.find(start);
    if (it != top.end()) {
      for (const auto& item : it->second) {
        if (!is_closed(item.sem)) throw InternalError("open logical form " + print_term(item.sem));
        out.push_back({item.sem, item.score, item.deriv});
      }
    }
  }
  if (out.empty()) throw detail::no_parse(g, tokens, chart);
  return out;
}

/// A specification reading with its score and one derivation per segment.
struct ScoredSpec {
  SpecForm form;
  double score = 0;
  std::vector<DerivationPtr> derivations;

  std::string serialized() const {
    std::string s;
    for (const auto& d : derivations) s += d->serialized;
    return s;
  }
};

/// Splits an optional leading `name:` label off a specification line.
inline std::pair<std::string, std::string> split_label(const std::string& line) {
  std::string s = detail::trim(line);
  size_t colon = s.find(':');
  if (colon == std::string::npos || colon == 0) return {"", s};
  std::string head = s.substr(0, colon);
  if (head == "IF" || head == "THEN" || head == "THEN AFTER") return {"", s};
  for (char c : head) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return {"", s};
  }
  return {head, detail::trim(s.substr(colon + 1))};
}

namespace detail {

inline std::vector<size_t> find_all(const std::string& s, const std::string& what) {
  std::vector<size_t> out;
  for (size_t p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) out.push_back(p);
  return out;
}

inline bool better_spec(const ScoredSpec& a, const ScoredSpec& b) {
  if (std::abs(a.score - b.score) > kScoreEpsilon) return a.score > b.score;
  return a.serialized() < b.serialized();
}

}  // namespace detail

/// Classifies a specification line by its markers and returns its top-k
/// readings, best first, without duplicate logical forms.
inline std::vector<ScoredSpec> parse_spec(const Grammar& g, const std::string& spec_line, int k = kDefaultK) {
  std::string s = split_label(spec_line).second;
  auto ifs = detail::find_all(s, "IF:");
  auto afters = detail::find_all(s, "THEN AFTER:");
  auto thens = detail::find_all(s, "THEN:");

  std::vector<ScoredSpec> all;
  auto segment = [&](const std::string& text, const std::string& start) {
    auto toks = tokenize(text);
    if (toks.empty()) throw MalformedMarkers("empty specification segment");
    return parse(g, toks, start, k);
  };

  if (ifs.empty() && afters.empty() && thens.empty()) {
    std::optional<NoParse> failure;
    size_t failure_span = 0;
    for (const auto& start : g.start_categories()) {
      try {
        for (auto& r : segment(s, start)) {
          SpecForm f = start == kDeclarative ? SpecForm::invariant(r.logical_form)
                                             : SpecForm::imperative(r.logical_form);
          all.push_back({f, r.score, {r.derivation}});
        }
      } catch (const NoParse& e) {
        size_t span = detail::words(e.longest_span()).size();
        if (!failure || span > failure_span) {
          failure = e;
          failure_span = span;
        }
      }
    }
    if (all.empty()) throw *failure;
  } else {
    if (ifs.size() != 1 || ifs[0] != 0) throw MalformedMarkers("a specification with markers must start with IF:");
    if (afters.size() + thens.size() != 1) throw MalformedMarkers("expected exactly one THEN: or THEN AFTER:");
    bool pre_post = !afters.empty();
    size_t at = pre_post ? afters[0] : thens[0];
    size_t marker_len = pre_post ? std::string("THEN AFTER:").size() : std::string("THEN:").size();
    std::string first = s.substr(3, at - 3);
    std::string second = s.substr(at + marker_len);
    auto a = segment(first, kDeclarative);
    auto b = segment(second, pre_post ? kDeclarative : kImperative);
    for (const auto& x : a) {
      for (const auto& y : b) {
        SpecForm f = pre_post ? SpecForm::pre_post(x.logical_form, y.logical_form)
                              : SpecForm::conditional(x.logical_form, y.logical_form);
        all.push_back({f, x.score + y.score, {x.derivation, y.derivation}});
      }
    }
  }

  std::stable_sort(all.begin(), all.end(), detail::better_spec);
  std::vector<ScoredSpec> out;
  for (auto& c : all) {
    bool dup = std::any_of(out.begin(), out.end(), [&](const ScoredSpec& o) { return alpha_eq(o.form, c.form); });
    if (!dup) out.push_back(std::move(c));
    if (out.size() == static_cast<size_t>(k)) break;
  }
  return out;
}

}  // namespace nhl
