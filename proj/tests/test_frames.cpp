#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "dsmalc/calculus.hpp"
#include "dsmalc/complex_algebra.hpp"
#include "dsmalc/io.hpp"
#include "dsmalc/search.hpp"

using namespace dsmalc;
namespace fs = std::filesystem;

namespace {

SigmaFrame one_point(WorldSet unit = 1) {
  SigmaFrame f;
  f.base = make_ternary_frame(FinitePoset::chain(1), {{0, 0, 0}}, unit);
  f.sig = trivial_signature();
  f.access = {{1}};
  return f;
}

// 2-chain 0 ≤ 1 with R = {(u,v,w) : w ≥ u and w ≥ v}, O = both worlds.
SigmaFrame chain_max() {
  SigmaFrame f;
  std::vector<std::array<int, 3>> triples;
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v)
      for (int w = std::max(u, v); w < 2; ++w) triples.push_back({u, v, w});
  f.base = make_ternary_frame(FinitePoset::chain(2), triples, 0b11);
  f.sig = trivial_signature();
  f.access = {{0b11, 0b10}};
  return f;
}

bool mentions(const std::vector<Violation>& vs, const std::string& prefix) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.condition.rfind(prefix, 0) == 0; });
}

// Set-comprehension oracles written directly from the relational clauses.
WorldSet oracle_fuse(const SigmaFrame& f, WorldSet a, WorldSet b) {
  const std::size_t n = f.size();
  WorldSet out = 0;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t w = 0; w < n; ++w)
        if ((a >> u & 1) && (b >> v & 1) && f.base.r(u, v, w)) out |= WorldSet{1} << w;
  return out;
}

WorldSet oracle_under(const SigmaFrame& f, WorldSet a, WorldSet b) {
  const std::size_t n = f.size();
  WorldSet out = 0;
  for (std::size_t w = 0; w < n; ++w) {
    bool ok = true;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v)
        if (f.base.r(u, w, v) && (a >> u & 1) && !(b >> v & 1)) ok = false;
    if (ok) out |= WorldSet{1} << w;
  }
  return out;
}

WorldSet oracle_over(const SigmaFrame& f, WorldSet a, WorldSet b) {
  const std::size_t n = f.size();
  WorldSet out = 0;
  for (std::size_t w = 0; w < n; ++w) {
    bool ok = true;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v)
        if (f.base.r(w, u, v) && (b >> u & 1) && !(a >> v & 1)) ok = false;
    if (ok) out |= WorldSet{1} << w;
  }
  return out;
}

const SubexpSignature& structural_sig() {
  static const SubexpSignature sig = validate_signature({{"a", "b"}, {{"a", "b"}}, {"b"}, {"a", "b"}, {"a", "b"}});
  return sig;
}

}  // namespace

TEST(CheckFrame, OnePointFrameIsValid) { EXPECT_TRUE(check_sigma_frame(one_point()).empty()); }

TEST(CheckFrame, EmptyUnitViolatesCoverage) {
  const auto vs = check_sigma_frame(one_point(0));
  EXPECT_TRUE(mentions(vs, "O.unit_cover"));
}

TEST(CheckFrame, NonTransitiveAccessOnTwoChain) {
  SigmaFrame f = chain_max();
  f.access = {{0b10, 0b01}};
  EXPECT_TRUE(mentions(check_sigma_frame(f), "Ri.transitive[i]"));
  EXPECT_TRUE(mentions(check_sigma_frame(f), "Ri.reflexive[i]"));
}

TEST(CheckFrame, ShippedBadFrames) {
  const fs::path dir = fs::path(DSMALC_DATA_DIR) / "frames";
  EXPECT_TRUE(check_sigma_frame(io::frame_from_json(io::read_json_file(dir / "one_point.json"))).empty());
  EXPECT_TRUE(mentions(check_sigma_frame(io::frame_from_json(io::read_json_file(dir / "bad_empty_unit.json"))),
                       "O.unit_cover"));
  EXPECT_TRUE(mentions(check_sigma_frame(io::frame_from_json(io::read_json_file(dir / "bad_not_transitive.json"))),
                       "Ri.transitive"));
}

TEST(CheckFrame, TernaryDefects) {
  // Broken order is reported before anything else.
  TernaryFrame t;
  t.order = FinitePoset::from_upsets_unchecked({0b11, 0b11});
  t.fusion.assign(4, 0);
  EXPECT_TRUE(mentions(check_ternary_frame(t), "order.partial_order"));

  // R image not an upset on the 2-chain.
  t = make_ternary_frame(FinitePoset::chain(2), {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}}, 0b11);
  EXPECT_TRUE(mentions(check_ternary_frame(t), "R.monotone_third"));

  // O that is not an upset.
  t = chain_max().base;
  t.unit = 0b01;
  EXPECT_TRUE(mentions(check_ternary_frame(t), "O.upset"));

  // A unit point that pushes below: R 1 0 0 with 0 ∈ O forces 1 ≤ 0.
  t = make_ternary_frame(FinitePoset::antichain(2), {{0, 0, 0}, {1, 1, 1}, {1, 0, 0}}, 0b01);
  EXPECT_TRUE(mentions(check_ternary_frame(t), "O.unit_below"));

  EXPECT_THROW(make_ternary_frame(FinitePoset::chain(1), {{0, 0, 1}}, 1), input_error);
}

TEST(CheckFrame, StructuralConditionsFollowTheSignature) {
  // Two-element monoid on an antichain: world 0 is the unit, world 1 absorbs.
  // The upset {1} lies outside O, so weakening fails once the index asks for it.
  SigmaFrame f;
  f.base = make_ternary_frame(FinitePoset::antichain(2), {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}}, 0b01);
  f.sig = validate_signature({{"w"}, {}, {"w"}, {"w"}, {}});
  f.access = {{0b01, 0b10}};
  EXPECT_TRUE(check_ternary_frame(f.base).empty());
  EXPECT_TRUE(mentions(check_sigma_frame(f), "Ri.weakening[w]"));
  f.sig = trivial_signature("w");
  EXPECT_TRUE(check_sigma_frame(f).empty());
}

TEST(CheckFrame, OrderBetweenIndices) {
  // a ⪯ b demands R_a ⊆ R_b.
  SigmaFrame f = chain_max();
  f.sig = validate_signature({{"a", "b"}, {{"a", "b"}}, {}, {}, {}});
  f.access = {{0b11, 0b11}, {0b11, 0b10}};
  EXPECT_TRUE(mentions(check_sigma_frame(f), "Ri.order[a][b]"));
  f.access = {{0b11, 0b10}, {0b11, 0b10}};
  EXPECT_TRUE(check_sigma_frame(f).empty());
}

TEST(ComplexAlgebra, OnePoint) {
  const auto C = complex_algebra(one_point());
  ASSERT_EQ(C.carrier, (std::vector<WorldSet>{0, 1}));
  EXPECT_EQ(C.algebra.size(), 2u);
  EXPECT_EQ(C.algebra.prod(1, 1), 1);
  EXPECT_EQ(C.algebra.unit(), 1);
  EXPECT_TRUE(check_sigma_algebra(C.algebra).empty());
}

TEST(ComplexAlgebra, ChainMaxAgreesWithComprehension) {
  const SigmaFrame f = chain_max();
  ASSERT_TRUE(check_sigma_frame(f).empty());
  const auto C = complex_algebra(f);
  for (std::size_t a = 0; a < C.carrier.size(); ++a)
    for (std::size_t b = 0; b < C.carrier.size(); ++b) {
      const WorldSet A = C.carrier[a], B = C.carrier[b];
      EXPECT_EQ(C.carrier[C.algebra.prod(a, b)], oracle_fuse(f, A, B));
      EXPECT_EQ(C.carrier[C.algebra.ldiv(a, b)], oracle_under(f, A, B));
      EXPECT_EQ(C.carrier[C.algebra.rdiv(a, b)], oracle_over(f, A, B));
      // On this frame the product is intersection.
      EXPECT_EQ(oracle_fuse(f, A, B), A & B);
    }
}

TEST(ComplexAlgebra, OperationsMatchComprehensionOnEnumeratedFrames) {
  for (std::size_t n = 1; n <= 3; ++n) {
    for (const auto& f : enumerate_frames(structural_sig(), n)) {
      const auto C = complex_algebra(f);
      EXPECT_TRUE(check_sigma_algebra(C.algebra).empty());
      for (std::size_t a = 0; a < C.carrier.size(); ++a) {
        for (std::size_t i = 0; i < f.sig.size(); ++i) {
          WorldSet boxed = 0;
          for (std::size_t u = 0; u < n; ++u) {
            bool all = true;
            for (std::size_t w = 0; w < n; ++w)
              if (f.related(i, u, w) && !(C.carrier[a] >> w & 1)) all = false;
            if (all) boxed |= WorldSet{1} << u;
          }
          EXPECT_EQ(C.carrier[C.algebra.bang(i, a)], boxed);
        }
        for (std::size_t b = 0; b < C.carrier.size(); ++b) {
          EXPECT_EQ(C.carrier[C.algebra.prod(a, b)], oracle_fuse(f, C.carrier[a], C.carrier[b]));
          EXPECT_EQ(C.carrier[C.algebra.ldiv(a, b)], oracle_under(f, C.carrier[a], C.carrier[b]));
          EXPECT_EQ(C.carrier[C.algebra.rdiv(a, b)], oracle_over(f, C.carrier[a], C.carrier[b]));
        }
      }
    }
  }
}

TEST(Eval, OnePointModel) {
  const Model m = make_model(one_point(), {{"p", 1}, {"q", 0}});
  const auto sig = trivial_signature();
  EXPECT_TRUE(sequent_holds(m, parse_sequent("p |- T", sig)));
  EXPECT_FALSE(sequent_holds(m, parse_sequent("p |- q", sig)));
  EXPECT_FALSE(holds_at(m, 0, parse_sequent("p |- q", sig)));
  EXPECT_EQ(eval(m, parse_formula("p * p", sig)), 1u);
  EXPECT_EQ(eval(m, parse_formula("p \\ q", sig)), 0u);
  EXPECT_EQ(eval(m, parse_formula("q \\ p", sig)), 1u);
  EXPECT_EQ(eval(m, parse_formula("![i]p", sig)), 1u);
}

TEST(Eval, Errors) {
  EXPECT_THROW(make_model(chain_max(), {{"p", 0b01}}), input_error);
  EXPECT_THROW(make_model(chain_max(), {{"p", 0b100}}), input_error);
  const Model m = make_model(chain_max(), {{"p", 0b10}});
  EXPECT_THROW(eval(m, Formula::var("q")), unbound_variable);
  EXPECT_THROW(eval(m, parse_formula_unchecked("![zz]p")), input_error);
}

TEST(Eval, DistributivityHoldsInEveryModel) {
  const auto sig = structural_sig();
  const auto s = parse_sequent("p /\\ (q \\/ r) |- p /\\ q \\/ p /\\ r", sig);
  for (std::size_t n = 1; n <= 3; ++n)
    for (const auto& f : enumerate_frames(sig, n)) EXPECT_TRUE(frame_validates(f, s));
}

TEST(Eval, SetwiseAndPointwiseAgreeAndMatchComplexAlgebra) {
  std::mt19937_64 rng(42);
  Rng formula_rng(42);
  const auto& sig = structural_sig();
  std::vector<SigmaFrame> frames;
  for (std::size_t n = 1; n <= 3; ++n)
    for (auto& f : enumerate_frames(sig, n)) frames.push_back(std::move(f));
  FormulaShape shape;
  shape.variables = {"p", "q", "r"};
  for (int k = 0; k < 400; ++k) {
    const SigmaFrame& f = frames[rng() % frames.size()];
    const auto C = complex_algebra(f);
    std::map<std::string, WorldSet> val;
    for (const auto& v : shape.variables) val[v] = C.carrier[rng() % C.carrier.size()];
    const Model m = make_model(f, val);
    const Formula a = random_formula(formula_rng, sig, shape, 3), b = random_formula(formula_rng, sig, shape, 3);
    EXPECT_EQ(eval(m, a), interpret_in_cm(C, a, val)) << print_formula(a);
    const Sequent s{a, b};
    EXPECT_EQ(sequent_holds(m, s), sequent_holds_pointwise(m, s));
  }
}

TEST(Validity, OnePointFrame) {
  const auto sig = trivial_signature();
  EXPECT_TRUE(frame_validates(one_point(), parse_sequent("p |- ![i]p", sig)));
  EXPECT_FALSE(frame_validates(one_point(), parse_sequent("p |- q", sig)));
  EXPECT_TRUE(frame_validates(one_point(), parse_sequent("T |- T", sig)));
}

TEST(Validity, EveryAxiomSchemaOnSmallFrames) {
  const auto& sig = structural_sig();
  const auto schemas = axiom_schemas(sig);
  for (std::size_t n = 1; n <= 3; ++n)
    for (const auto& f : enumerate_frames(sig, n))
      for (const auto& s : schemas)
        EXPECT_TRUE(frame_validates(f, s.schema)) << print_sequent(s.schema) << " on " << n << " worlds";
}

TEST(Validity, ValuationCap) {
  const auto sig = trivial_signature();
  ValidityLimits tight;
  tight.max_valuations = 3;
  EXPECT_THROW(frame_validates(chain_max(), parse_sequent("p * q |- q", sig), tight), size_cap_exceeded);
}

TEST(Json, FrameAndModelRoundTrip) {
  for (const auto& f : enumerate_frames(structural_sig(), 2)) {
    const SigmaFrame back = io::frame_from_json(io::to_json(f));
    EXPECT_EQ(back.base.order, f.base.order);
    EXPECT_EQ(back.base.fusion, f.base.fusion);
    EXPECT_EQ(back.base.unit, f.base.unit);
    EXPECT_EQ(back.access, f.access);
    EXPECT_EQ(back.sig, f.sig);
  }
  const Model m = make_model(chain_max(), {{"p", 0b10}});
  const Model back = io::model_from_json(io::to_json(m));
  EXPECT_EQ(back.valuation, m.valuation);
}

TEST(Json, FrameInputErrors) {
  auto doc = io::to_json(one_point());
  doc["R"] = {{0, 0, 3}};
  EXPECT_THROW(io::frame_from_json(doc), input_error);
  doc = io::to_json(one_point());
  doc["Ri"] = {{"zz", nlohmann::json::array()}};
  doc.erase("sig");
  EXPECT_NO_THROW(io::frame_from_json(doc));
  EXPECT_THROW(io::frame_from_json(doc, &structural_sig()), input_error);
}

TEST(Dot, MentionsWorldsAndUnit) {
  const std::string dot = io::to_dot(chain_max());
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("w0"), std::string::npos);
  EXPECT_NE(dot.find("w1"), std::string::npos);
  EXPECT_NE(dot.find("doublecircle"), std::string::npos);
}
