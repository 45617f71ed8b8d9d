#pragma once

#include <optional>
#include <string>

#include "nhl/syntax.hpp"
#include "nhl/term.hpp"

namespace nhl {

/// The four shapes a natural-language specification can take, with the
/// logical forms of its parts.
class SpecForm {
 public:
  enum class Kind { Invariant, Imperative, ConditionalImperative, PrePost };

  static SpecForm invariant(Term l) { return SpecForm(Kind::Invariant, std::move(l), std::nullopt); }
  static SpecForm imperative(Term l) {
    return SpecForm(Kind::Imperative, std::move(l), std::nullopt);
  }
  /// IF: condition THEN: command.
  static SpecForm conditional(Term condition, Term command) {
    return SpecForm(Kind::ConditionalImperative, std::move(condition), std::move(command));
  }
  /// IF: pre THEN AFTER: post.
  static SpecForm pre_post(Term pre, Term post) {
    return SpecForm(Kind::PrePost, std::move(pre), std::move(post));
  }

  Kind kind() const { return kind_; }

  /// The main logical form: L for invariants, imperatives and conditional
  /// imperatives; the precondition form for pre/post specifications.
  const Term& form() const { return kind_ == Kind::ConditionalImperative ? *second_ : first_; }
  /// E of a conditional imperative.
  const Term& condition() const { return first_; }
  /// L' of a pre/post specification.
  const Term& after() const { return *second_; }

  /// All component terms in surface order.
  std::vector<Term> parts() const {
    std::vector<Term> out{first_};
    if (second_) out.push_back(*second_);
    return out;
  }

  std::string str() const {
    switch (kind_) {
      case Kind::Invariant: return "Invariant(" + print_term(first_) + ")";
      case Kind::Imperative: return "Imperative(" + print_term(first_) + ")";
      case Kind::ConditionalImperative:
        return "ConditionalImperative(" + print_term(first_) + "; " + print_term(*second_) + ")";
      case Kind::PrePost:
        return "PrePost(" + print_term(first_) + "; " + print_term(*second_) + ")";
    }
    return "";
  }

  friend bool alpha_eq(const SpecForm& a, const SpecForm& b) {
    if (a.kind_ != b.kind_) return false;
    auto pa = a.parts(), pb = b.parts();
    for (size_t i = 0; i < pa.size(); ++i) {
      if (!nhl::alpha_eq(pa[i], pb[i])) return false;
    }
    return true;
  }

 private:
  SpecForm(Kind k, Term first, std::optional<Term> second)
      : kind_(k), first_(std::move(first)), second_(std::move(second)) {}
  Kind kind_;
  Term first_;
  std::optional<Term> second_;
};

inline const char* kind_name(SpecForm::Kind k) {
  switch (k) {
    case SpecForm::Kind::Invariant: return "invariant";
    case SpecForm::Kind::Imperative: return "imperative";
    case SpecForm::Kind::ConditionalImperative: return "conditional-imperative";
    case SpecForm::Kind::PrePost: return "pre-post";
  }
  return "?";
}

}  // namespace nhl
