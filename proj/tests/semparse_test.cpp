#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "nhl/semparse.hpp"
#include "program_gen.hpp"
#include "test_data.hpp"

namespace nhl {
namespace {

using testing::corpus;
using testing::shipped_grammar;

Term lf(const std::string& text) { return parse_term(text, shipped_grammar().signature()); }

#define EXPECT_ALPHA(a, b) EXPECT_TRUE(alpha_eq((a), (b))) << print_term(a) << "  vs  " << print_term(b)

const char* kTinyLexicon = R"(
balance | N | lam x. balance(x) | 1.0
all | DET | lam f: Entity -> Num. lam p: Num -> Bool. forall x. p(f(x)) | 0
must be | COP | lam p: Num -> Bool. p | 0
positive | PRED | lam x: Num. x > 0 | 0
)";
const char* kTinyRules = R"(
S -> NPQ VP | #1(#2) | 0 | #1 #2
NPQ -> DET N | #1(#2) | 0 | #1 #2
VP -> COP PRED | #1(#2) | 0 | #1 #2
)";

TEST(LoadGrammar, ShippedGrammarTypes) {
  const Grammar& g = shipped_grammar();
  EXPECT_EQ(*g.category_type("N"), Type::arrow(Type::entity(), Type::num()));
  EXPECT_EQ(*g.category_type("S"), Type::boolean());
  EXPECT_EQ(*g.category_type("IMP"), Type::boolean());
  EXPECT_EQ(*g.category_type("NUM"), Type::num());
  EXPECT_EQ(*g.signature().lookup("balance"), Type::arrow(Type::entity(), Type::num()));
  EXPECT_TRUE(g.numerals_enabled());
}

TEST(LoadGrammar, EntryWithInferredCategoryType) {
  Grammar g = load_grammar(kTinyLexicon, kTinyRules);
  ASSERT_EQ(g.lexicon().size(), 4u);
  EXPECT_EQ(g.lexicon()[0].surface, std::vector<std::string>{"balance"});
  EXPECT_DOUBLE_EQ(g.lexicon()[0].weight, 1.0);
  EXPECT_EQ(*g.category_type("N"), Type::arrow(Type::entity(), Type::num()));
  EXPECT_EQ(g.lexicon()[2].surface, (std::vector<std::string>{"must", "be"}));
}

TEST(LoadGrammar, ArityMismatch) {
  std::string rules = std::string(kTinyRules) + "VP -> PRED | #1(#2) | 0 | #1\n";
  EXPECT_THROW(load_grammar(kTinyLexicon, rules), Error);
  EXPECT_THROW(load_grammar(kTinyLexicon, "S -> NPQ VP | #1 | 0 | #1 #2\n"), Error);
}

TEST(LoadGrammar, EmptyLexicon) {
  try {
    load_grammar("# nothing here\n\n", kTinyRules);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no lexical entries"), std::string::npos);
  }
}

TEST(LoadGrammar, SyntaxErrorsCarryLines) {
  try {
    load_grammar("balance | N | lam x. balance(x) | 1.0\nbroken line\n", kTinyRules);
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  try {
    load_grammar(kTinyLexicon, "S -> NPQ VP | #1(#2) | heavy | #1 #2\n");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 1);
  }
  EXPECT_THROW(load_grammar(kTinyLexicon, "S NPQ VP | #1(#2) | 0\n"), SyntaxError);
}

TEST(LoadGrammar, TypeErrorNamesEntry) {
  std::string lex = std::string(kTinyLexicon) + "odd | PRED | lam x: Num. x && true | 0\n";
  try {
    load_grammar(lex, kTinyRules);
    FAIL();
  } catch (const TypeMismatch& e) {
    EXPECT_NE(std::string(e.what()).find("lexicon line 6"), std::string::npos) << e.what();
  }
}

TEST(LoadGrammar, CategoryTypeConflict) {
  std::string lex = std::string(kTinyLexicon) + "sometimes | PRED | lam x: Entity. x = x | 0\n";
  EXPECT_THROW(load_grammar(lex, kTinyRules), TypeMismatch);
}

TEST(LoadGrammar, UnaryCycleRejected) {
  std::string rules = std::string(kTinyRules) + "A -> PRED | #1 | 0 | #1\nPRED -> A | #1 | 0 | #1\n";
  EXPECT_THROW(load_grammar(kTinyLexicon, rules), Error);
}

TEST(LoadGrammar, ReachableRuleNeedsTemplate) {
  std::string rules = "S -> NPQ VP | #1(#2) | 0 | #1 #2\nNPQ -> DET N | #1(#2) | 0\nVP -> COP PRED | #1(#2) | 0 | #1 #2\n";
  EXPECT_THROW(load_grammar(kTinyLexicon, rules), SyntaxError);
  EXPECT_THROW(load_grammar(kTinyLexicon, "S -> NPQ VP | #1(#2) | 0 | #1 #3\n"), SyntaxError);
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("All balances must be greater than zero."),
            (std::vector<std::string>{"all", "balances", "must", "be", "greater", "than", "zero"}));
  EXPECT_EQ(tokenize("Increment the balance."), (std::vector<std::string>{"increment", "the", "balance"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("  Is it?!  "), (std::vector<std::string>{"is", "it"}));
}

TEST(Parse, WorkedExampleSentences) {
  const Grammar& g = shipped_grammar();
  EXPECT_ALPHA(parse(g, tokenize("All balances must be greater than zero."), kDeclarative)[0].logical_form,
               lf("forall x. balance(x) > 0"));
  EXPECT_ALPHA(parse(g, tokenize("Increment the balance."), kImperative)[0].logical_form,
               lf("forall x. balance(post(x)) = balance(x) + 1"));
  EXPECT_ALPHA(parse(g, tokenize("All values must be greater than zero."), kDeclarative)[0].logical_form,
               lf("forall x. valueof(x) > 0"));
}

TEST(Parse, NoParseReportsUnknownTokens) {
  try {
    parse(shipped_grammar(), tokenize("frobnicate the balance"), kImperative);
    FAIL();
  } catch (const NoParse& e) {
    EXPECT_EQ(e.unknown_tokens(), std::vector<std::string>{"frobnicate"});
    EXPECT_EQ(e.longest_span(), "the balance");
  }
  EXPECT_THROW(parse(shipped_grammar(), {}, kDeclarative), NoParse);
  EXPECT_THROW(parse(shipped_grammar(), tokenize("balance"), kDeclarative, 0), Error);
}

TEST(Parse, NumeralsAndNumberWords) {
  const Grammar& g = shipped_grammar();
  Term neg = parse(g, tokenize("All balances must be at least -3."), kDeclarative)[0].logical_form;
  EXPECT_EQ(print_term(neg), "forall x. balance(x) >= -3");
  auto words = parse(g, tokenize("All balances must be at least one hundred."), kDeclarative);
  EXPECT_ALPHA(words[0].logical_form, lf("forall x. balance(x) >= 100"));
}

TEST(Parse, ResultsAreClosedNormalBoolAndRanked) {
  const Grammar& g = shipped_grammar();
  for (const auto& c : corpus()) {
    for (const auto& spec : parse_spec(g, c.sentence, 10)) {
      for (const auto& p : spec.form.parts()) {
        EXPECT_TRUE(is_closed(p));
        EXPECT_EQ(p.type(), Type::boolean());
        EXPECT_ALPHA(normalize(p), p);
      }
    }
    for (const auto& start : g.start_categories()) {
      std::vector<ParseResult> rs;
      try {
        rs = parse(g, tokenize(c.sentence), start, 10);
      } catch (const NoParse&) {
        continue;
      }
      for (size_t i = 1; i < rs.size(); ++i) {
        EXPECT_TRUE(ranks_before(rs[i - 1].score, *rs[i - 1].derivation, rs[i].score, *rs[i].derivation));
      }
    }
  }
}

TEST(Parse, LogicalFormIsComposition) {
  const Grammar& g = shipped_grammar();
  auto r = parse(g, tokenize("every balance must be positive"), kDeclarative, 1)[0];
  std::function<Term(const Derivation&)> meaning = [&](const Derivation& d) -> Term {
    if (d.kind == Derivation::Kind::Lexical) return g.lexicon()[d.index].semantics;
    if (d.kind == Derivation::Kind::Numeral) return Term::literal(Int(d.words[0]));
    Term t = g.rules()[d.index].combinator;
    for (size_t i = 0; i < d.kids.size(); ++i) t = substitute(t, "#" + std::to_string(i + 1), meaning(*d.kids[i]));
    return t;
  };
  EXPECT_ALPHA(normalize(meaning(*r.derivation)), r.logical_form);
  EXPECT_NEAR(r.score, -0.1 - 0.1, 1e-12);
}

TEST(Parse, Deterministic) {
  const Grammar& g = shipped_grammar();
  auto a = parse_spec(g, "The amount must be positive.", 10);
  Grammar again = load_grammar(testing::slurp(testing::data_path("grammar/lexicon.txt")),
                               testing::slurp(testing::data_path("grammar/rules.txt")));
  auto b = parse_spec(again, "The amount must be positive.", 10);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].serialized(), b[i].serialized());
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_TRUE(alpha_eq(a[i].form, b[i].form));
  }
}

TEST(ParseSpec, FourForms) {
  const Grammar& g = shipped_grammar();
  auto inv = parse_spec(g, "All balances must be greater than zero.");
  EXPECT_EQ(inv[0].form.kind(), SpecForm::Kind::Invariant);
  EXPECT_ALPHA(inv[0].form.form(), lf("forall x. balance(x) > 0"));

  auto imp = parse_spec(g, "Increment the balance.");
  EXPECT_EQ(imp[0].form.kind(), SpecForm::Kind::Imperative);

  auto cond = parse_spec(g, "IF: the balance is greater than 0 THEN: increment the balance.");
  ASSERT_EQ(cond[0].form.kind(), SpecForm::Kind::ConditionalImperative);
  EXPECT_ALPHA(cond[0].form.condition(), lf("forall x. balance(x) > 0"));
  EXPECT_ALPHA(cond[0].form.form(), lf("forall x. balance(post(x)) = balance(x) + 1"));

  auto pp = parse_spec(g,
                       "IF: the balance is greater than 0 and the balance is incremented THEN AFTER: the new "
                       "balance is greater than 1.");
  ASSERT_EQ(pp[0].form.kind(), SpecForm::Kind::PrePost);
  EXPECT_ALPHA(pp[0].form.form(),
               lf("(forall x. balance(x) > 0) && (forall x. balance(post(x)) = balance(x) + 1)"));
  EXPECT_ALPHA(pp[0].form.after(), lf("forall x. balance(post(x)) > 1"));
  EXPECT_NEAR(pp[0].score, cond[0].score - 0.25, 1e-9);
}

TEST(ParseSpec, MalformedMarkers) {
  const Grammar& g = shipped_grammar();
  EXPECT_THROW(parse_spec(g, "THEN: increment the balance."), MalformedMarkers);
  EXPECT_THROW(parse_spec(g, "IF: the balance is greater than 0."), MalformedMarkers);
  EXPECT_THROW(parse_spec(g, "IF: the balance is positive THEN: increment the balance THEN AFTER: x"),
               MalformedMarkers);
  EXPECT_THROW(parse_spec(g, "IF: THEN: increment the balance."), MalformedMarkers);
  EXPECT_THROW(parse_spec(g, "IF: the balance is positive THEN: frobnicate"), NoParse);
}

TEST(ParseSpec, LabelsAndLimits) {
  const Grammar& g = shipped_grammar();
  EXPECT_EQ(split_label("inv-1: All balances must be positive.").first, "inv-1");
  EXPECT_EQ(split_label("IF: the balance is positive THEN: increment the balance").first, "");
  auto labelled = parse_spec(g, "inv-1: All balances must be positive.");
  EXPECT_ALPHA(labelled[0].form.form(), lf("forall x. balance(x) > 0"));
  EXPECT_EQ(parse_spec(g, "The amount must be positive.", 1).size(), 1u);
  auto all = parse_spec(g, "The amount must be positive.", 10);
  ASSERT_GE(all.size(), 2u);
  EXPECT_DOUBLE_EQ(all[0].score, all[1].score);
  for (size_t i = 0; i < all.size(); ++i) {
    for (size_t j = i + 1; j < all.size(); ++j) EXPECT_FALSE(alpha_eq(all[i].form, all[j].form));
  }
}

// ---------------------------------------------------------------------------
// Exhaustive derivation enumeration as an oracle for the chart

struct Found {
  std::string serialized;
  std::string key;
  double score;
  bool operator<(const Found& o) const {
    return std::tie(serialized, key) < std::tie(o.serialized, o.key);
  }
};

class Enumerator {
 public:
  Enumerator(const Grammar& g, std::vector<std::string> toks) : g_(g), toks_(std::move(toks)) {}

  struct D {
    Term sem;
    double score;
    DerivationPtr d;
  };

  std::vector<D> all(size_t i, size_t j, const std::string& cat) {
    auto key = std::make_tuple(i, j, cat);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<D> out;
    std::string surface;
    for (size_t t = i; t < j; ++t) surface += (t == i ? "" : " ") + toks_[t];
    for (size_t e = 0; e < g_.lexicon().size(); ++e) {
      const LexEntry& le = g_.lexicon()[e];
      std::string s;
      for (const auto& w : le.surface) s += (s.empty() ? "" : " ") + w;
      if (le.category == cat && s == surface) {
        out.push_back({le.semantics, le.weight,
                       Derivation::make(Derivation::Kind::Lexical, static_cast<int>(e), cat, le.surface, {})});
      }
    }
    if (cat == kNumeralCategory && j == i + 1 && detail::is_numeral(toks_[i])) {
      out.push_back({Term::literal(Int(toks_[i])), kNumeralWeight,
                     Derivation::make(Derivation::Kind::Numeral, -1, cat, {toks_[i]}, {})});
    }
    for (size_t r = 0; r < g_.rules().size(); ++r) {
      const GrammarRule& rule = g_.rules()[r];
      if (rule.lhs != cat) continue;
      auto build = [&](std::vector<const D*> kids) {
        Term t = rule.combinator;
        double score = rule.weight;
        std::vector<DerivationPtr> ds;
        for (size_t k = 0; k < kids.size(); ++k) {
          t = substitute(t, "#" + std::to_string(k + 1), kids[k]->sem);
          score += kids[k]->score;
          ds.push_back(kids[k]->d);
        }
        out.push_back({normalize(t), score, Derivation::make(Derivation::Kind::Rule, static_cast<int>(r), cat, {}, ds)});
      };
      if (rule.rhs.size() == 1) {
        for (const auto& a : all(i, j, rule.rhs[0])) build({&a});
      } else {
        for (size_t m = i + 1; m < j; ++m) {
          auto left = all(i, m, rule.rhs[0]);
          if (left.empty()) continue;
          auto right = all(m, j, rule.rhs[1]);
          for (const auto& a : left) {
            for (const auto& b : right) build({&a, &b});
          }
        }
      }
    }
    memo_[key] = out;
    return out;
  }

 private:
  const Grammar& g_;
  std::vector<std::string> toks_;
  std::map<std::tuple<size_t, size_t, std::string>, std::vector<D>> memo_;
};

void expect_chart_matches_oracle(const Grammar& g, const std::vector<std::string>& toks) {
  for (const auto& start : g.start_categories()) {
    Enumerator en(g, toks);
    std::multiset<Found> want;
    for (const auto& d : en.all(0, toks.size(), start)) {
      want.insert({d.d->serialized, canonical_key(d.sem), d.score});
    }
    std::multiset<Found> got;
    try {
      for (const auto& r : parse(g, toks, start, 100000)) {
        got.insert({r.derivation->serialized, canonical_key(r.logical_form), r.score});
      }
    } catch (const NoParse&) {
    }
    std::string sentence;
    for (const auto& t : toks) sentence += t + " ";
    ASSERT_EQ(got.size(), want.size()) << sentence << "as " << start;
    auto a = got.begin();
    for (auto b = want.begin(); b != want.end(); ++a, ++b) {
      EXPECT_EQ(a->serialized, b->serialized) << sentence;
      EXPECT_EQ(a->key, b->key) << sentence;
      EXPECT_NEAR(a->score, b->score, 1e-9) << sentence;
    }
  }
}

TEST(ChartOracle, CorpusSentencesUpToSevenTokens) {
  const Grammar& g = shipped_grammar();
  int checked = 0;
  for (const auto& c : corpus()) {
    auto toks = tokenize(split_label(c.sentence).second);
    if (toks.size() > 7 || toks[0] == "if:") continue;
    expect_chart_matches_oracle(g, toks);
    ++checked;
  }
  EXPECT_GE(checked, 15);
}

TEST(ChartOracle, RandomGrammarSentences) {
  const Grammar& g = shipped_grammar();
  testing::SentenceGen gen(g, testing::seed_from_env(20240611));
  int checked = 0;
  for (int i = 0; i < 4000 && checked < 300; ++i) {
    auto toks = gen.sentence(i % 2 ? kDeclarative : kImperative);
    if (toks.empty() || toks.size() > 7) continue;
    expect_chart_matches_oracle(g, toks);
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(ChartOracle, RandomWordSequences) {
  const Grammar& g = shipped_grammar();
  std::vector<std::string> vocab;
  for (const auto& e : g.lexicon()) {
    for (const auto& w : e.surface) vocab.push_back(w);
  }
  vocab.push_back("7");
  std::mt19937_64 rng(testing::seed_from_env(99));
  for (int i = 0; i < 200; ++i) {
    size_t n = std::uniform_int_distribution<size_t>(1, 7)(rng);
    std::vector<std::string> toks;
    for (size_t t = 0; t < n; ++t) toks.push_back(vocab[std::uniform_int_distribution<size_t>(0, vocab.size() - 1)(rng)]);
    expect_chart_matches_oracle(g, toks);
  }
}

}  // namespace
}  // namespace nhl
