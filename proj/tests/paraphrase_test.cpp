#include <gtest/gtest.h>

#include "nhl/paraphrase.hpp"
#include "program_gen.hpp"
#include "test_data.hpp"

namespace nhl {
namespace {

using testing::corpus;
using testing::shipped_grammar;

Term lf(const std::string& text) { return parse_term(text, shipped_grammar().signature()); }

/// Top-1 reading of a rendered specification.
SpecForm reparse(const std::string& text) { return parse_spec(shipped_grammar(), text)[0].form; }

TEST(Render, InvariantSentence) {
  std::string s = render(lf("forall x. balance(x) > 0"), shipped_grammar());
  EXPECT_EQ(s, "all balances must be greater than zero");
  EXPECT_TRUE(alpha_eq(reparse(s).form(), lf("forall x. balance(x) > 0")));
}

TEST(Render, ImperativeSentence) {
  Term l = lf("forall x. balance(post(x)) = balance(x) + 1");
  std::string s = render(l, shipped_grammar());
  EXPECT_EQ(s, "increment the balance");
  EXPECT_TRUE(alpha_eq(reparse(s).form(), l));
}

TEST(Render, AlphaVariantsRenderAlike) {
  EXPECT_EQ(render(lf("forall y. valueof(y) > 0"), shipped_grammar()),
            render(lf("forall x. valueof(x) > 0"), shipped_grammar()));
}

TEST(Render, NotRealizable) {
  Signature sig = shipped_grammar().signature();
  sig.declare("height", Type::arrow(Type::entity(), Type::num()));
  EXPECT_THROW(render(parse_term("forall x. height(x) > 0", sig), shipped_grammar()), NotRealizable);
  EXPECT_THROW(render(lf("forall x. balance(x) > balance(post(x))"), shipped_grammar()), NotRealizable);
  EXPECT_THROW(render(lf("balance"), shipped_grammar()), NotRealizable);
  Term open = Term::app(Term::app(mk::builtin(sym::kGt), Term::var("y", Type::num())), mk::lit(0));
  EXPECT_THROW(render(open, shipped_grammar()), NotRealizable);
}

TEST(Render, SpecificationsKeepTheirMarkers) {
  const Grammar& g = shipped_grammar();
  SpecForm cond = SpecForm::conditional(lf("forall x. balance(x) > 0"),
                                        lf("forall x. balance(post(x)) = balance(x) + 1"));
  std::string s = render_spec(cond, g);
  EXPECT_EQ(s, "IF: all balances must be greater than zero THEN: increment the balance");
  EXPECT_TRUE(alpha_eq(reparse(s), cond));
}

TEST(Render, StartCategoryFixesTheSentenceKind) {
  const Grammar& g = shipped_grammar();
  Term l = lf("forall x. valueof(post(x)) = valueof(x) + 1");
  EXPECT_EQ(render(l, g, kImperative), "increment the value");
  EXPECT_EQ(render(l, g, kDeclarative), "the value is incremented");
  EXPECT_EQ(reparse(render_spec(SpecForm::invariant(l), g)).kind(), SpecForm::Kind::Invariant);
}

TEST(Render, Deterministic) {
  const Grammar& g = shipped_grammar();
  Term l = lf("(forall x. balance(x) > 0) && (forall x. balance(post(x)) = balance(x) + 1)");
  Realization a = realize(l, g), b = realize(l, g);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.derivation->serialized, b.derivation->serialized);
}

TEST(RoundTrip, CorpusSentences) {
  const Grammar& g = shipped_grammar();
  auto cases = corpus();
  ASSERT_GE(cases.size(), 25u);
  for (const auto& c : cases) {
    SpecForm top = parse_spec(g, c.sentence)[0].form;
    std::string text = render_spec(top, g);
    EXPECT_TRUE(alpha_eq(reparse(text), top)) << c.sentence << " -> " << text;
  }
}

TEST(RoundTrip, RandomGrammarSentences) {
  const Grammar& g = shipped_grammar();
  testing::SentenceGen gen(g, testing::seed_from_env(7));
  int checked = 0;
  for (int i = 0; i < 3000 && checked < 200; ++i) {
    const std::string& start = i % 2 ? kDeclarative : kImperative;
    auto toks = gen.sentence(start);
    if (toks.empty() || toks.size() > 10) continue;
    std::vector<ParseResult> rs;
    try {
      rs = parse(g, toks, start, 1);
    } catch (const NoParse&) {
      continue;
    }
    std::string text = render(rs[0].logical_form, g, start);
    auto again = parse(g, tokenize(text), start, 1);
    EXPECT_TRUE(alpha_eq(again[0].logical_form, rs[0].logical_form)) << text;
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(Disambiguation, SingleCandidateAccepted) {
  DisambiguationSession s({"increment the balance"});
  EXPECT_EQ(s.prompt(), "Did you mean: increment the balance? [y/n]");
  s.answer(true);
  EXPECT_TRUE(s.finished());
  EXPECT_EQ(s.selected(), 0u);
  EXPECT_FALSE(s.rephrase());
}

TEST(Disambiguation, ThirdCandidateAccepted) {
  DisambiguationSession s({"a", "b", "c"});
  s.answer(false);
  EXPECT_EQ(s.prompt(), "Did you mean: b? [y/n]");
  s.answer(false);
  s.answer(true);
  EXPECT_EQ(s.selected(), 2u);
}

TEST(Disambiguation, AllRejectedAsksToRephrase) {
  DisambiguationSession s({"a", "b"});
  s.answer(false);
  s.answer(false);
  EXPECT_TRUE(s.finished());
  EXPECT_FALSE(s.selected());
  EXPECT_TRUE(s.rephrase());
  EXPECT_THROW(s.prompt(), Error);
  EXPECT_THROW(DisambiguationSession({}), Error);
}

TEST(Disambiguation, PromptsFollowScoreOrder) {
  const Grammar& g = shipped_grammar();
  auto cands = parse_spec(g, "The amount must be positive.");
  auto texts = candidate_renderings(cands, g);
  ASSERT_EQ(texts.size(), cands.size());
  for (size_t i = 0; i < cands.size(); ++i) EXPECT_TRUE(alpha_eq(reparse(texts[i]), cands[i].form)) << texts[i];
}

}  // namespace
}  // namespace nhl
