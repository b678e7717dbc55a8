#include <gtest/gtest.h>

#include <random>
#include <string>

#include "dsmalc/formula.hpp"
#include "dsmalc/signature.hpp"

using namespace dsmalc;

namespace {

// Fully parenthesized rendering, used as a structural oracle independent of
// the precedence-aware printer.
std::string lisp(const Formula& f) {
  switch (f.kind()) {
    case Kind::Bot: return "F";
    case Kind::Top: return "T";
    case Kind::One: return "1";
    case Kind::Var: return f.name();
    case Kind::Bang: return "(! " + f.name() + " " + lisp(f.body()) + ")";
    case Kind::Prod: return "(* " + lisp(f.left()) + " " + lisp(f.right()) + ")";
    case Kind::LDiv: return "(ldiv " + lisp(f.left()) + " " + lisp(f.right()) + ")";
    case Kind::RDiv: return "(rdiv " + lisp(f.left()) + " " + lisp(f.right()) + ")";
    case Kind::Or: return "(or " + lisp(f.left()) + " " + lisp(f.right()) + ")";
    case Kind::And: return "(and " + lisp(f.left()) + " " + lisp(f.right()) + ")";
  }
  return "?";
}

// Rendering with every binary node parenthesized; any correct parser must
// read it back without relying on precedence.
std::string bracketed(const Formula& f) {
  switch (f.kind()) {
    case Kind::Bot: return "F";
    case Kind::Top: return "T";
    case Kind::One: return "1";
    case Kind::Var: return f.name();
    case Kind::Bang: return "![" + f.name() + "](" + bracketed(f.body()) + ")";
    default: break;
  }
  const char* op = f.kind() == Kind::Prod ? "*" : f.kind() == Kind::LDiv ? "\\" : f.kind() == Kind::RDiv ? "/"
                 : f.kind() == Kind::Or   ? "\\/" : "/\\";
  return "(" + bracketed(f.left()) + " " + op + " " + bracketed(f.right()) + ")";
}

SubexpSignature sig_ab() { return validate_signature({{"a", "b"}, {{"a", "b"}}, {}, {}, {}}); }

Formula random_tree(std::mt19937_64& rng, int depth) {
  auto pick = [&](int k) { return static_cast<int>(rng() % k); };
  if (depth == 0 || pick(4) == 0) {
    switch (pick(6)) {
      case 0: return Formula::bot();
      case 1: return Formula::top();
      case 2: return Formula::one();
      default: return Formula::var("p" + std::to_string(pick(3)));
    }
  }
  const int op = pick(6);
  if (op == 5) return Formula::bang(pick(2) ? "a" : "b", random_tree(rng, depth - 1));
  const Kind kinds[] = {Kind::Prod, Kind::LDiv, Kind::RDiv, Kind::Or, Kind::And};
  return Formula::binary(kinds[op], random_tree(rng, depth - 1), random_tree(rng, depth - 1));
}

}  // namespace

TEST(Signature, OnePointIsValid) {
  const auto s = validate_signature({{"a"}, {{"a", "a"}}, {}, {}, {}});
  EXPECT_EQ(s.size(), 1u);
  EXPECT_TRUE(s.preceq(0, 0));
  EXPECT_TRUE(s.closure_added().empty());
}

TEST(Signature, WeakeningSetMustBeUpwardClosed) {
  try {
    validate_signature({{"a", "b"}, {{"a", "b"}}, {"a"}, {}, {}});
    FAIL() << "expected NotUpwardClosed";
  } catch (const signature_error& e) {
    EXPECT_EQ(e.kind(), SignatureErrorKind::NotUpwardClosed);
    EXPECT_EQ(e.set_name(), "W");
    EXPECT_EQ(e.first(), "a");
    EXPECT_EQ(e.second(), "b");
  }
}

TEST(Signature, WeakeningAndContractionRequireExchange) {
  try {
    validate_signature({{"a"}, {}, {"a"}, {}, {"a"}});
    FAIL() << "expected WCNotInE";
  } catch (const signature_error& e) {
    EXPECT_EQ(e.kind(), SignatureErrorKind::WCNotInE);
    EXPECT_EQ(e.first(), "a");
  }
}

TEST(Signature, RejectsEmptyDuplicateAndUnknown) {
  auto kind_of = [](const RawSignature& raw) {
    try {
      validate_signature(raw);
    } catch (const signature_error& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error";
    return SignatureErrorKind::Empty;
  };
  EXPECT_EQ(kind_of({}), SignatureErrorKind::Empty);
  EXPECT_EQ(kind_of({{"a", "a"}, {}, {}, {}, {}}), SignatureErrorKind::DuplicateIndex);
  EXPECT_EQ(kind_of({{"a"}, {{"a", "z"}}, {}, {}, {}}), SignatureErrorKind::UnknownIndex);
  EXPECT_EQ(kind_of({{"a"}, {}, {}, {"q"}, {}}), SignatureErrorKind::UnknownIndex);
}

TEST(Signature, ClosesPreorderAndReportsAddedPairs) {
  const auto s = validate_signature({{"x", "y", "z"}, {{"x", "y"}, {"y", "z"}}, {}, {}, {}});
  EXPECT_TRUE(s.preceq(0, 2));
  EXPECT_FALSE(s.preceq(2, 0));
  // Three reflexive pairs plus (x, z).
  EXPECT_EQ(s.closure_added().size(), 4u);
  EXPECT_THROW(validate_signature({{"x", "y", "z"}, {{"x", "y"}, {"y", "z"}}, {}, {}, {}}, {false}),
               signature_error);
}

TEST(Signature, ClosureMatchesWarshallOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    RawSignature raw;
    for (int i = 0; i < n; ++i) raw.indices.push_back("i" + std::to_string(i));
    std::vector<std::vector<bool>> rel(n, std::vector<bool>(n));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (rng() % 4 == 0) {
          rel[a][b] = true;
          raw.preceq.emplace_back(raw.indices[a], raw.indices[b]);
        }
    // Reachability by repeated squaring, written independently of the library.
    for (int a = 0; a < n; ++a) rel[a][a] = true;
    for (int round = 0; round < n; ++round)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            if (rel[a][b] && rel[b][c]) rel[a][c] = true;
    const auto s = validate_signature(raw);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) EXPECT_EQ(s.preceq(a, b), rel[a][b]);
    EXPECT_EQ(validate_signature(s.to_raw()), s);
  }
}

TEST(Parse, ProductOfProduct) {
  const auto f = parse_formula_unchecked("p1 * (p2 * p3)");
  EXPECT_EQ(f, Formula::prod(Formula::var("p1"), Formula::prod(Formula::var("p2"), Formula::var("p3"))));
}

TEST(Parse, BangOverConjunction) {
  const auto f = parse_formula("![a](p1 /\\ p2)", sig_ab());
  EXPECT_EQ(f, Formula::bang("a", Formula::conj(Formula::var("p1"), Formula::var("p2"))));
}

TEST(Parse, UnknownIndexIsReported) {
  try {
    parse_formula("![z]p1", sig_ab());
    FAIL() << "expected UnknownIndex";
  } catch (const parse_error& e) {
    EXPECT_EQ(e.kind(), ParseErrorKind::UnknownIndex);
    EXPECT_EQ(e.index(), "z");
    EXPECT_EQ(e.position(), 0u);
  }
  EXPECT_NO_THROW(parse_formula_unchecked("![z]p1"));
}

TEST(Parse, PrecedenceAndAssociativity) {
  EXPECT_EQ(lisp(parse_formula_unchecked("p \\/ q /\\ r")), "(or p (and q r))");
  EXPECT_EQ(lisp(parse_formula_unchecked("p /\\ q \\ r")), "(and p (ldiv q r))");
  EXPECT_EQ(lisp(parse_formula_unchecked("p / q * r")), "(rdiv p (* q r))");
  EXPECT_EQ(lisp(parse_formula_unchecked("p * q * r")), "(* (* p q) r)");
  EXPECT_EQ(lisp(parse_formula_unchecked("p \\/ q \\/ r")), "(or (or p q) r)");
  EXPECT_EQ(lisp(parse_formula_unchecked("![a]p * q")), "(* (! a p) q)");
  EXPECT_EQ(lisp(parse_formula_unchecked("![a]![b]T")), "(! a (! b T))");
  EXPECT_EQ(lisp(parse_formula_unchecked("F \\/ 1")), "(or F 1)");
}

TEST(Parse, SyntaxErrors) {
  for (const char* bad : {"p \\ q \\ r", "p / q \\ r", "(p", "p q", "", "p *", "![]p", "![a p", "2x", "p & q"}) {
    EXPECT_THROW(parse_formula_unchecked(bad), parse_error) << bad;
  }
  try {
    parse_formula_unchecked("p * )");
  } catch (const parse_error& e) {
    EXPECT_EQ(e.kind(), ParseErrorKind::Syntax);
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(Parse, Sequents) {
  const auto s = parse_sequent("![a]p |- p", sig_ab());
  EXPECT_EQ(s.lhs, Formula::bang("a", Formula::var("p")));
  EXPECT_EQ(s.rhs, Formula::var("p"));
  EXPECT_EQ(print_sequent(s), "![a]p |- p");
  EXPECT_THROW(parse_sequent_unchecked("p"), parse_error);
  EXPECT_THROW(parse_sequent_unchecked("p |- q |- r"), parse_error);
}

TEST(Print, Examples) {
  EXPECT_EQ(print_formula(Formula::prod(Formula::var("p1"), Formula::var("p2"))), "p1 * p2");
  EXPECT_EQ(print_formula(Formula::ldiv(Formula::var("p1"), Formula::var("p1"))), "p1 \\ p1");
  EXPECT_EQ(print_formula(Formula::bang("a", Formula::one())), "![a]1");
  EXPECT_EQ(print_formula(parse_formula_unchecked("(p \\ q) \\ r")), "(p \\ q) \\ r");
  EXPECT_EQ(print_formula(parse_formula_unchecked("p * (q * r)")), "p * (q * r)");
  EXPECT_EQ(print_formula(parse_formula_unchecked("![a](p * q)")), "![a](p * q)");
}

TEST(Print, RoundTripRandomTrees) {
  std::mt19937_64 rng(2024);
  const auto sig = sig_ab();
  for (int k = 0; k < 3000; ++k) {
    const Formula f = random_tree(rng, 5);
    const Formula back = parse_formula(print_formula(f), sig);
    ASSERT_EQ(lisp(back), lisp(f)) << print_formula(f);
    ASSERT_EQ(back, f);
    ASSERT_EQ(back.hash(), f.hash());
    ASSERT_EQ(lisp(parse_formula(bracketed(f), sig)), lisp(f)) << bracketed(f);
  }
}

TEST(Substitute, Examples) {
  const auto p1 = Formula::var("p1"), p2 = Formula::var("p2"), p3 = Formula::var("p3");
  EXPECT_EQ(substitute(Formula::conj(p1, p2), "p1", Formula::top()), Formula::conj(Formula::top(), p2));
  EXPECT_EQ(substitute(p1, "p2", Formula::bot()), p1);
  const auto theta = Formula::ldiv(p2, p3);
  EXPECT_EQ(substitute(Formula::prod(Formula::bang("a", p1), p1), "p1", theta),
            Formula::prod(Formula::bang("a", theta), theta));
}

TEST(Substitute, AgreesWithTextualReplacement) {
  // Replacing a variable token in the bracketed rendering is an independent
  // way to substitute, since every subformula is delimited.
  std::mt19937_64 rng(99);
  for (int k = 0; k < 500; ++k) {
    const Formula f = random_tree(rng, 4), theta = random_tree(rng, 2);
    std::string text = bracketed(f), out;
    const std::string repl = "(" + bracketed(theta) + ")";
    for (std::size_t i = 0; i < text.size();) {
      const bool boundary_before = i == 0 || !(std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '[');
      if (boundary_before && text.compare(i, 2, "p0") == 0 &&
          (i + 2 == text.size() || !std::isalnum(static_cast<unsigned char>(text[i + 2])))) {
        out += repl;
        i += 2;
      } else {
        out += text[i++];
      }
    }
    ASSERT_EQ(substitute(f, "p0", theta), parse_formula_unchecked(out)) << text;
  }
}

TEST(Formula, MetricsAndVariables) {
  const auto f = parse_formula_unchecked("![a](p * q) \\/ p");
  EXPECT_EQ(f.size(), 6u);
  EXPECT_EQ(f.depth(), 3u);  // atoms have depth 0
  EXPECT_EQ(variables(f), (std::vector<std::string>{"p", "q"}));
  EXPECT_TRUE(indices_known(f, sig_ab()));
  EXPECT_FALSE(indices_known(parse_formula_unchecked("![c]p"), sig_ab()));
  EXPECT_EQ(subformulas(f).size(), 5u);
}
