#pragma once

// Generation of canonical English from logical forms by running the parsing
// grammar in reverse, and the "Did you mean" confirmation loop built on it.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nhl/semparse.hpp"

namespace nhl {

class NotRealizable : public Error {
 public:
  using Error::Error;
};

inline constexpr int kGenerationDepth = 12;

struct Realization {
  std::string text;
  double score = 0;
  DerivationPtr derivation;
};

namespace detail {

/// Surface text of a derivation through the rule templates.
inline std::string yield(const Grammar& g, const Derivation& d) {
  if (d.kind != Derivation::Kind::Rule) {
    std::string s;
    for (const auto& w : d.words) s += (s.empty() ? "" : " ") + w;
    return s;
  }
  std::string s;
  for (const auto& piece : g.rules()[d.index].templ) {
    std::string part = piece[0] == '#' ? yield(g, *d.kids[piece[1] - '1']) : piece;
    if (part.empty()) continue;
    s += (s.empty() ? "" : " ") + part;
  }
  return s;
}

class Generator {
 public:
  Generator(const Grammar& g, const Term& target, std::vector<std::string> starts)
      : g_(g), target_(target), starts_(std::move(starts)) {
    for_each_subterm(target, [&](const Term& t) {
      subterms_.insert(canonical_key(t));
      if (t.is_literal()) literals_.insert(t.value());
    });
    constants_ = constants_of(target);
    size_cap_ = term_size(target) + 8;
  }

  std::optional<Realization> run() {
    for (size_t e = 0; e < g_.lexicon().size(); ++e) {
      const LexEntry& le = g_.lexicon()[e];
      offer(le.category, le.semantics, le.weight,
            Derivation::make(Derivation::Kind::Lexical, static_cast<int>(e), le.category, le.surface, {}));
    }
    if (g_.numerals_enabled()) {
      for (const auto& v : literals_) {
        offer(kNumeralCategory, Term::literal(v), kNumeralWeight,
              Derivation::make(Derivation::Kind::Numeral, -1, kNumeralCategory, {v.str()}, {}));
      }
    }
    for (int depth = 1; depth < kGenerationDepth; ++depth) {
      bool changed = false;
      auto snapshot = by_cat_;
      for (size_t r = 0; r < g_.rules().size(); ++r) {
        const GrammarRule& rule = g_.rules()[r];
        auto a = snapshot.find(rule.rhs[0]);
        if (a == snapshot.end()) continue;
        if (rule.rhs.size() == 1) {
          for (const auto& [k, x] : a->second) changed |= combine(static_cast<int>(r), {&x});
          continue;
        }
        auto b = snapshot.find(rule.rhs[1]);
        if (b == snapshot.end()) continue;
        for (const auto& [k1, x] : a->second) {
          for (const auto& [k2, y] : b->second) changed |= combine(static_cast<int>(r), {&x, &y});
        }
      }
      if (!changed) break;
    }
    std::optional<Item> best;
    std::string key = canonical_key(target_);
    for (const auto& start : starts_) {
      auto c = by_cat_.find(start);
      if (c == by_cat_.end()) continue;
      auto it = c->second.find(key);
      if (it == c->second.end()) continue;
      if (!best || item_before(it->second, *best)) best = it->second;
    }
    if (!best) return std::nullopt;
    return Realization{yield(g_, *best->deriv), best->score, best->deriv};
  }

 private:
  bool admissible(const Term& sem) {
    if (term_size(sem) > size_cap_) return false;
    if (!sem.type().is_arrow()) return subterms_.count(canonical_key(sem)) != 0;
    for (const auto& c : constants_of(sem)) {
      if (!constants_.count(c)) return false;
    }
    return true;
  }

  bool offer(const std::string& cat, const Term& sem, double score, DerivationPtr d) {
    if (!admissible(sem)) return false;
    Item item{sem, score, std::move(d)};
    auto& slot = by_cat_[cat];
    std::string key = canonical_key(sem);
    auto it = slot.find(key);
    if (it != slot.end() && !item_before(item, it->second)) return false;
    slot.insert_or_assign(key, std::move(item));
    return true;
  }

  bool combine(int r, std::vector<const Item*> kids) {
    const GrammarRule& rule = g_.rules()[r];
    std::vector<Term> sems;
    std::vector<DerivationPtr> ds;
    double score = rule.weight;
    for (const Item* k : kids) {
      sems.push_back(k->sem);
      ds.push_back(k->deriv);
      score += k->score;
    }
    Term sem = compose(rule.combinator, sems);
    return offer(rule.lhs, sem, score, Derivation::make(Derivation::Kind::Rule, r, rule.lhs, {}, ds));
  }

  const Grammar& g_;
  Term target_;
  std::vector<std::string> starts_;
  std::set<std::string> subterms_;
  std::set<Int> literals_;
  std::set<std::string> constants_;
  size_t size_cap_;
  std::map<std::string, std::map<std::string, Item>> by_cat_;
};

}  // namespace detail

/// Best derivation in the grammar whose meaning is alpha-equal to `lf`,
/// from the given start category or from any of them when `start` is empty.
inline Realization realize(const Term& lf, const Grammar& g, const std::string& start = "") {
  if (!is_closed(lf) || lf.type() != Type::boolean()) {
    throw NotRealizable("only closed Bool formulas can be rendered: " + print_term(lf));
  }
  std::vector<std::string> starts = start.empty() ? g.start_categories() : std::vector<std::string>{start};
  auto r = detail::Generator(g, normalize(lf), starts).run();
  if (!r) throw NotRealizable("no sentence in the grammar means " + print_term(lf));
  return *r;
}

/// Canonical lowercase sentence for a logical form.
inline std::string render(const Term& lf, const Grammar& g, const std::string& start = "") {
  return realize(lf, g, start).text;
}

/// Renders a specification in marker syntax, each part from the start
/// category its position is parsed with.
inline std::string render_spec(const SpecForm& spec, const Grammar& g) {
  switch (spec.kind()) {
    case SpecForm::Kind::Invariant: return render(spec.form(), g, kDeclarative);
    case SpecForm::Kind::Imperative: return render(spec.form(), g, kImperative);
    case SpecForm::Kind::ConditionalImperative:
      return "IF: " + render(spec.condition(), g, kDeclarative) + " THEN: " + render(spec.form(), g, kImperative);
    case SpecForm::Kind::PrePost:
      return "IF: " + render(spec.form(), g, kDeclarative) + " THEN AFTER: " + render(spec.after(), g, kDeclarative);
  }
  return "";
}

/// Outcome of asking the user to rephrase after every candidate was rejected.
struct RephraseRequest {
  std::string message = "none of the readings was confirmed; please rephrase the specification";
};

/// The confirmation loop: one "Did you mean" prompt per candidate in rank
/// order until one is accepted or the candidates run out.
class DisambiguationSession {
 public:
  explicit DisambiguationSession(std::vector<std::string> renderings) : renderings_(std::move(renderings)) {
    if (renderings_.empty()) throw Error("disambiguation needs at least one candidate");
  }

  bool finished() const { return selected_.has_value() || next_ >= renderings_.size(); }
  /// Index of the candidate being offered.
  size_t current() const { return next_; }
  std::string prompt() const {
    if (finished()) throw Error("no pending prompt");
    return "Did you mean: " + renderings_[next_] + "? [y/n]";
  }
  void answer(bool yes) {
    if (finished()) throw Error("no pending prompt");
    if (yes) {
      selected_ = next_;
    } else {
      ++next_;
    }
  }
  std::optional<size_t> selected() const { return selected_; }
  std::optional<RephraseRequest> rephrase() const {
    if (finished() && !selected_) return RephraseRequest{};
    return std::nullopt;
  }

 private:
  std::vector<std::string> renderings_;
  size_t next_ = 0;
  std::optional<size_t> selected_;
};

/// Prompt texts for ranked specification readings; unrenderable readings
/// fall back to their printed logical forms.
inline std::vector<std::string> candidate_renderings(const std::vector<ScoredSpec>& candidates, const Grammar& g) {
  std::vector<std::string> out;
  for (const auto& c : candidates) {
    try {
      out.push_back(render_spec(c.form, g));
    } catch (const NotRealizable&) {
      out.push_back(c.form.str());
    }
  }
  return out;
}

}  // namespace nhl
