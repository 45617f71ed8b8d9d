#include <gtest/gtest.h>

#include "nhl/discharge.hpp"
#include "nhl/eval.hpp"
#include "nhl/hoare.hpp"
#include "nhl/syntax.hpp"
#include "program_gen.hpp"

namespace nhl {
namespace {

Signature banking() {
  Signature s = Signature::builtin();
  s.declare("balance", Type::arrow(Type::entity(), Type::num()));
  s.declare("valueof", Type::arrow(Type::entity(), Type::num()));
  s.declare("g", Type::arrow(Type::num(), Type::num()));
  s.declare("f", Type::arrow(Type::entity(), Type::num()));
  s.declare("savings", Type::arrow(Type::entity(), Type::boolean()));
  s.declare("account", Type::arrow(Type::entity(), Type::boolean()));
  return s;
}

Term parse(const std::string& s) { return parse_term(s, banking()); }
Vc vc(const std::string& s) { return {parse(s), Provenance::main(), {}}; }

#define EXPECT_ALPHA(a, b) EXPECT_TRUE(alpha_eq((a), (b))) << print_term(a) << "  vs  " << print_term(b)

const char* kImperativeVc =
    "(forall x. balance(post(x)) = balance(x) + 1) && (exists x. balance(x) = _balance) => "
    "(forall x. balance(post(x)) = balance(x) + 1) && (exists x. balance(post(x)) = _balance + 1)";

// ---------------------------------------------------------------------------
// Quantifiers

TEST(Skolemize, InvariantDerivation) {
  Term out = skolemize_and_instantiate(
      parse("(forall x. balance(x) > 0) && (exists x. balance(x) = _balance) => _balance > 0"));
  EXPECT_ALPHA(out, parse("balance(@c1) > 0 && balance(@c1) = _balance => _balance > 0"));
}

TEST(Skolemize, ImperativeGroundSet) {
  Term out = skolemize_and_instantiate(parse(kImperativeVc));
  std::vector<Term> entities;
  for_each_subterm(out, [&](const Term& s) {
    if (s.type().is(BaseType::Entity) && is_closed(s)) detail::add_unique(entities, s);
  });
  for (const auto& e : entities) {
    std::string p = print_term(e);
    EXPECT_TRUE(p == "@c1" || p == "@c2" || p == "post(@c1)" || p == "post(@c2)" ||
                p == "post(post(@c1))" || p == "post(post(@c2))")
        << p;
  }
  bool quantified = false;
  for_each_subterm(out, [&](const Term& s) { quantified = quantified || as_quantifier(s).has_value(); });
  EXPECT_FALSE(quantified);
}

TEST(Skolemize, QuantifierFreeUnchanged) {
  Term t = parse("_a > 0 => _a + 1 > 0");
  EXPECT_ALPHA(skolemize_and_instantiate(t), t);
}

TEST(Skolemize, WitnessUnderInstantiationIsUnsupported) {
  EXPECT_THROW(skolemize_and_instantiate(parse("(forall x. exists y. f(x) = f(y)) => true")),
               UnsupportedQuantifierShape);
  EXPECT_TRUE(decide(vc("(forall x. exists y. f(x) = f(y)) => true")).is_unknown());
}

// ---------------------------------------------------------------------------
// Equalities and abstraction

TEST(Saturate, RewritesWithBinding) {
  Term out = saturate_equalities(parse("balance(@c1) > 0 && balance(@c1) = _balance => _balance > 0"));
  EXPECT_ALPHA(out, parse("_balance > 0 && balance(@c1) = _balance => _balance > 0"));
}

TEST(Saturate, NoEqualitiesUnchanged) {
  Term t = parse("balance(@c1) > 0 => balance(@c1) >= 0");
  EXPECT_ALPHA(saturate_equalities(t), t);
}

TEST(Saturate, ChainedEqualities) {
  Term t = parse("f(@c1) = balance(@c1) && balance(@c1) = _v => f(@c1) > 0");
  auto facts = ground_facts(t);
  ASSERT_EQ(facts.size(), 2u);
  for (const auto& fact : facts) EXPECT_EQ(print_term(fact.rhs), "_v");
  EXPECT_ALPHA(saturate_equalities(t),
               parse("f(@c1) = balance(@c1) && balance(@c1) = _v => _v > 0"));
}

TEST(Saturate, RewriteBudget) {
  Term t = parse("f(@c1) = balance(@c1) && balance(@c1) = _v => f(@c1) > 0 && balance(@c1) > 0");
  EXPECT_THROW(saturate_equalities(t, 1), RewriteBudgetExceeded);
  EXPECT_NO_THROW(saturate_equalities(t, 2));
}

TEST(Abstract, SameTermSameVariable) {
  Abstraction a = abstract_uninterpreted(
      parse("balance(post(@c1)) = _balance + 1 => balance(post(@c1)) = _balance + 1"));
  EXPECT_ALPHA(a.formula, parse("$v1 = _balance + 1 => $v1 = _balance + 1"));
  ASSERT_EQ(a.mapping.size(), 1u);
  EXPECT_EQ(print_term(a.mapping[0].second), "balance(post(@c1))");
}

TEST(Abstract, PureArithmeticUnchanged) {
  Term t = parse("_a > 0 && 2 * _b = _a => _a + _b > 0");
  EXPECT_ALPHA(abstract_uninterpreted(t).formula, t);
}

TEST(Abstract, DistinctTermsDistinctVariables) {
  Abstraction a = abstract_uninterpreted(parse("balance(@c1) = valueof(@c1)"));
  EXPECT_ALPHA(a.formula, parse("$v1 = $v2"));
  EXPECT_EQ(a.mapping.size(), 2u);
}

TEST(Abstract, NonLinearProductsAndAtoms) {
  Abstraction a = abstract_uninterpreted(parse("savings(@c1) && _a * _b > 0"));
  EXPECT_ALPHA(a.formula, parse("$p1 && $v1 > 0"));
}

// ---------------------------------------------------------------------------
// Arithmetic

TEST(Lia, SimpleValidities) {
  EXPECT_TRUE(lia::valid(parse("_a > 0 => _a + 1 > 0")));
  EXPECT_TRUE(lia::valid(parse("_a > 0 => _a >= 1")));
  EXPECT_TRUE(lia::valid(parse("_a = 2 * _b => !(_a = 2 * _c + 1)")));
  EXPECT_TRUE(lia::valid(parse("_a < _b || _a = _b || _a > _b")));
  EXPECT_FALSE(lia::valid(parse("_a > 0 => _a - 1 > 0")));
  EXPECT_FALSE(lia::valid(parse("_a >= 0 => _a * 2 > _a")));
}

TEST(Lia, IntegerTighteningNeeded) {
  // 2a > 0 and 2a < 2 has rational solutions only.
  EXPECT_TRUE(lia::valid(parse("!(2 * _a > 0 && 2 * _a < 2)")));
}

// ---------------------------------------------------------------------------
// Decide

Term invariant_vc(const std::string& program) {
  LfplRelation r = load_relation("balance(x) = _balance", banking());
  HoareTriple t = build_triple(SpecForm::invariant(parse("forall x. balance(x) > 0")), r,
                               imp::parse_program(program));
  return generate_vcs(t)[0].formula;
}

TEST(Decide, InvariantExampleValid) {
  EXPECT_TRUE(decide({invariant_vc("_balance := _balance + 1"), Provenance::main(), {}}).is_valid());
}

TEST(Decide, ImperativeExampleValid) {
  Verdict v = decide(vc(kImperativeVc));
  EXPECT_TRUE(v.is_valid()) << v.reason;
}

TEST(Decide, BoundaryCounterexample) {
  Verdict v = decide(vc("_balance > 0 => _balance - 1 > 0"));
  ASSERT_TRUE(v.is_invalid());
  EXPECT_EQ(v.model_str(), "_balance=1");
}

TEST(Decide, CongruenceIsIncompleteButSound) {
  Term f = parse("_a = _b => g(_a) = g(_b)");
  Verdict v = decide({f, Provenance::main(), {}});
  EXPECT_TRUE(v.is_unknown()) << v.name() << " " << v.model_str();
  EXPECT_TRUE(brute_force(f, 1, 1).is_valid());
}

TEST(Decide, QuantifiedCounterexampleIsGenuine) {
  Term f = parse("(forall x. balance(x) >= 0) && (exists x. balance(x) = _balance) => _balance > 0");
  Verdict v = decide({f, Provenance::main(), {}});
  ASSERT_TRUE(v.is_invalid());
  EXPECT_EQ(v.value_of("_balance"), "0");
  EXPECT_TRUE(brute_force(f, 2, 1).is_invalid());
}

TEST(Decide, UsesKnowledgeBase) {
  Signature sig = banking();
  KnowledgeBase kb = load_kb("equal balance valueof\nisa savings account", sig);
  Term f = parse("(forall x. valueof(x) > 0) && (exists x. balance(x) = _balance) => _balance > 0");
  EXPECT_TRUE(decide({f, Provenance::main(), {}}, kb).is_valid());
  EXPECT_FALSE(decide({f, Provenance::main(), {}}).is_valid());
  Term g = parse("savings(@c1) => account(@c1)");
  EXPECT_TRUE(decide({g, Provenance::main(), {}}, kb).is_valid());
  EXPECT_TRUE(decide({g, Provenance::main(), {}}).is_invalid());
}

TEST(Decide, InvalidModelsFalsifyTheFormula) {
  std::vector<std::string> cases = {
      "_a > 0 && _b > 0 => _a - _b > 0",
      "_a * 3 = _b => _b > _a",
      "(exists x. balance(x) = _a) => _a = 5",
      "(forall x. balance(post(x)) >= balance(x)) && (exists x. balance(x) = _b) => "
      "(exists x. balance(post(x)) = _b + 1)",
  };
  for (const auto& c : cases) {
    Term f = parse(c);
    Verdict v = decide({f, Provenance::main(), {}});
    ASSERT_TRUE(v.is_invalid()) << c;
    imp::PState st;
    for (const auto& [k, x] : v.model) {
      if (sym::is_program_var(k)) st[k] = Int(x);
    }
    if (!constants_of(f).count("balance")) EXPECT_FALSE(holds_in_state(f, st)) << c;
    EXPECT_FALSE(brute_force(f, 3, 2).is_valid()) << c;
  }
}

// ---------------------------------------------------------------------------
// Oracle

TEST(BruteForce, Examples) {
  EXPECT_TRUE(brute_force(parse("(forall x. balance(x) > 0) && (exists x. balance(x) = _balance) => "
                                "_balance > 0"),
                          2, 1)
                  .is_valid());
  Verdict v = brute_force(parse("_balance > 0 => _balance - 1 > 0"), 4, 1);
  ASSERT_TRUE(v.is_invalid());
  EXPECT_EQ(v.value_of("_balance"), "1");
  EXPECT_TRUE(brute_force(parse("true"), 4, 2).is_valid());
}

TEST(BruteForce, CostExceeded) {
  EXPECT_THROW(brute_force(parse("g(_a) = g(_b)"), 4, 1), CostExceeded);
}

// ---------------------------------------------------------------------------
// Export

TEST(Smt, ArithmeticScript) {
  std::string s = export_smtlib(vc("_balance > 0 => _balance + 1 > 0"));
  EXPECT_NE(s.find("(set-logic AUFLIA)"), std::string::npos);
  EXPECT_NE(s.find("(declare-sort Entity 0)"), std::string::npos);
  EXPECT_NE(s.find("(declare-fun _balance () Int)"), std::string::npos);
  EXPECT_NE(s.find("(assert (not (=> (> _balance 0) (> (+ _balance 1) 0))))"), std::string::npos);
  EXPECT_NE(s.find("(check-sat)"), std::string::npos);
}

TEST(Smt, DeclaresFunctionsInFirstOccurrenceOrder) {
  std::string s = export_smtlib(vc(kImperativeVc));
  size_t b = s.find("(declare-fun balance (Entity) Int)");
  size_t p = s.find("(declare-fun post (Entity) Entity)");
  ASSERT_NE(b, std::string::npos);
  ASSERT_NE(p, std::string::npos);
  EXPECT_LT(b, p);
  EXPECT_NE(s.find("(exists ((x Entity))"), std::string::npos);
  EXPECT_NE(s.find("(forall ((x Entity))"), std::string::npos);
}

TEST(Smt, QuotesAwkwardSymbolsAndNegativeLiterals) {
  std::string s = export_smtlib(vc("balance(@c1) > -2"));
  EXPECT_NE(s.find("(declare-fun |@c1| () Entity)"), std::string::npos);
  EXPECT_NE(s.find("(- 2)"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Properties

class LinearGen {
 public:
  explicit LinearGen(unsigned seed) : rng_(seed) {}
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Term atom() {
    static const char* vars[] = {"_a", "_b", "_c"};
    static const std::string_view ops[] = {sym::kEq, sym::kLt, sym::kLe, sym::kGt, sym::kGe};
    Term lhs = mk::lit(pick(-5, 5));
    for (const char* v : vars) {
      int c = pick(-3, 3);
      if (c != 0 && pick(0, 2) != 0) {
        lhs = mk::binop(sym::kPlus, mk::binop(sym::kTimes, mk::lit(c), mk::program_var(v)), lhs);
      }
    }
    return mk::binop(ops[pick(0, 4)], lhs, mk::lit(pick(-5, 5)));
  }

  Term formula(int depth) {
    if (depth == 0) return atom();
    switch (pick(0, 4)) {
      case 0: return mk::conj(formula(depth - 1), formula(depth - 1));
      case 1: return mk::disj(formula(depth - 1), formula(depth - 1));
      case 2: return mk::imp(formula(depth - 1), formula(depth - 1));
      case 3: return mk::neg(formula(depth - 1));
      default: return atom();
    }
  }

 private:
  std::mt19937 rng_;
};

TEST(Property, DecideAgreesWithExhaustiveEvaluation) {
  LinearGen gen(testing::seed_from_env(5150));
  std::vector<std::string> vars{"_a", "_b", "_c"};
  auto states = testing::all_states(vars, -10, 10);
  ProverOptions opts;
  opts.bound = 10;
  int valid = 0, invalid = 0, unknown = 0;
  for (int i = 0; i < 500; ++i) {
    Term f = gen.formula(gen.pick(1, 3));
    imp::PExpr e = testing::to_pexpr(f);
    bool all_true = true;
    for (const auto& st : states) {
      if (!imp::eval_bool(e, st)) {
        all_true = false;
        break;
      }
    }
    Verdict v = decide({f, Provenance::main(), {}}, {}, opts);
    if (v.is_valid()) {
      ++valid;
      EXPECT_TRUE(all_true) << print_term(f);
    } else if (v.is_invalid()) {
      ++invalid;
      EXPECT_FALSE(all_true) << print_term(f);
      imp::PState st{{"_a", 0}, {"_b", 0}, {"_c", 0}};
      for (const auto& [k, x] : v.model) st[k] = Int(x);
      EXPECT_FALSE(imp::eval_bool(e, st)) << print_term(f) << " " << v.model_str();
    } else {
      ++unknown;
      // A countermodel inside the searched range would have been found.
      EXPECT_TRUE(all_true) << print_term(f);
    }
  }
  EXPECT_GT(valid, 0);
  EXPECT_GT(invalid, 0);
}

TEST(Property, AbstractionValidityIsSound) {
  // Formulas over uninterpreted terms: whenever the abstraction is valid the
  // exhaustive oracle finds no countermodel.
  std::mt19937 rng(testing::seed_from_env(77));
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const char* terms[] = {"balance(@c1)", "valueof(@c1)", "balance(post(@c1))", "_a"};
  int proved = 0;
  for (int i = 0; i < 150; ++i) {
    auto atom = [&] {
      static const char* ops[] = {"=", "<", "<=", ">", ">="};
      return std::string(terms[pick(0, 3)]) + " + " + std::to_string(pick(-2, 2)) + " " + ops[pick(0, 4)] +
             " " + terms[pick(0, 3)];
    };
    std::string s = "(" + atom() + ") && (" + atom() + ") => (" + atom() + ")";
    if (pick(0, 1)) s = "(" + atom() + ") => (" + s + ")";
    Term f = parse(s);
    if (lia::valid(abstract_uninterpreted(f).formula)) {
      ++proved;
      EXPECT_TRUE(brute_force(f, 2, 2).is_valid()) << s;
    }
  }
  EXPECT_GT(proved, 0);
}

}  // namespace
}  // namespace nhl
