#include <gtest/gtest.h>

#include <cmath>

#include "fms/model.hpp"
#include "test_util.hpp"

namespace fms {
namespace {

using testing::example;
using testing::pt;
using testing::q;

bool has_issue(const ValidationReport& r, ErrorCode code) {
  for (const auto& i : r.issues) {
    if (i.code == code) return true;
  }
  return false;
}

TEST(Validate, BundledSystemsAreValid) {
  for (const char* name : {"example2", "example2_modified", "example2_constant", "example3",
                           "example4"}) {
    EXPECT_TRUE(validate_system(example(name)).ok()) << name;
  }
}

TEST(Validate, Example2CellSums) {
  const auto rep = validate_system(example("example2"));
  // {0}, (0,1/9), {1/9}, (1/9,1), {1}
  ASSERT_EQ(rep.cells.size(), 5u);
  for (const auto& c : rep.cells) EXPECT_EQ(c.sum, 1);
}

TEST(Validate, SumTwoIsNonUnit) {
  const auto spec = parse_system(
      "[domain]\nlo=0\nhi=1\n[edge 0]\nslope=1/3\nintercept=0\nprob=piecewise (0,1,1,1,1)\n"
      "[edge 1]\nslope=1/3\nintercept=1/3\nprob=piecewise (0,1,1,1,1)\n");
  const auto rep = validate_system(spec);
  EXPECT_TRUE(has_issue(rep, ErrorCode::kNonUnitSum));
  for (const auto& c : rep.cells) EXPECT_EQ(c.sum, 2);
}

TEST(Validate, MapEscapes) {
  const auto spec = parse_system(
      "[domain]\nlo=0\nhi=1\n[edge 0]\nslope=1\nintercept=1\nprob=piecewise (0,1,1,1,1)\n");
  EXPECT_TRUE(has_issue(validate_system(spec), ErrorCode::kMapEscapesDomain));
}

TEST(Validate, OverlapAndGap) {
  const auto overlap = parse_system(
      "[domain]\nlo=0\nhi=1\n[edge 0]\nslope=0\nintercept=0\n"
      "prob=piecewise (0,1/2,1,1,1);(1/2,1,1,1,1)\n");
  EXPECT_TRUE(has_issue(validate_system(overlap), ErrorCode::kOverlappingPieces));
  const auto gap = parse_system(
      "[domain]\nlo=0\nhi=1\n[edge 0]\nslope=0\nintercept=0\n"
      "prob=piecewise (0,1/2,1,0,1);(1/2,1,0,1,1)\n");
  EXPECT_TRUE(has_issue(validate_system(gap), ErrorCode::kIncompletePieces));
}

TEST(Parser, RejectsUnknownKeysAndSections) {
  EXPECT_THROW(parse_system("[domain]\nlo=0\nhi=1\nwidth=2\n"), Error);
  EXPECT_THROW(parse_system("[range]\nlo=0\n"), Error);
  EXPECT_THROW(parse_system("[domain]\nlo=0\nhi=1\n"), Error);
  EXPECT_THROW(parse_system("[domain]\nlo=0\nhi=1\n[edge 0]\nslope=1\nintercept=0\n"
                            "prob=piecewise (0,1,1,1,1)\nq_value=1\n"),
               Error);
}

TEST(Parser, FormatRoundTrip) {
  for (const char* name : {"example2", "example4"}) {
    const auto spec = example(name);
    const auto again = parse_system(format_system(spec));
    EXPECT_EQ(format_system(again), format_system(spec));
  }
}

TEST(ApplyMap, Example2Endpoints) {
  const auto spec = example("example2");
  EXPECT_EQ(apply_map(spec, 0, pt("1")).value, q("1/3"));
  EXPECT_EQ(apply_map(spec, 1, pt("0")).value, q("1/3"));
  EXPECT_THROW(apply_map(spec, 2, pt("0")), Error);
  EXPECT_THROW(apply_map(spec, 0, pt("2")), Error);
}

TEST(ApplyMap, IrrationalTagPropagates) {
  const auto spec = example("example4");
  const Point x = Point::irrational_near(std::sqrt(0.5L));
  const Point y = apply_map(spec, 0, x);
  EXPECT_TRUE(y.irrational);
  EXPECT_NEAR(static_cast<double>(y.approx()), 0.35355339059327, 1e-12);
}

TEST(ApplyMap, InverseRecoversRational) {
  const auto spec = example("example2");
  const Rational x = q("17/81");
  for (EdgeIndex e = 0; e < 2; ++e) {
    const auto& m = spec.edges[e].map;
    EXPECT_EQ(*m.preimage(m.apply(x)), x);
  }
}

TEST(Prob, EndpointOwnership) {
  const auto spec = example("example2");
  EXPECT_EQ(prob(spec, 0, pt("1/9")), 0);
  EXPECT_EQ(prob(spec, 0, Point::exact(q("1/9") + q("1/1000"))), q("1/2"));
  EXPECT_EQ(prob(spec, 1, pt("0")), 1);
}

TEST(Prob, RationalityPredicate) {
  const auto spec = example("example4");
  EXPECT_EQ(prob(spec, 0, pt("1/3")), q("1/4"));
  EXPECT_EQ(prob(spec, 0, pt("irr:0.5")), q("1/3"));
  EXPECT_EQ(prob(spec, 1, pt("irr:0.5")), q("2/3"));
}

TEST(MarkovOperator, ConstantAndLinear) {
  const auto ex2 = example("example2");
  const auto ex3 = example("example3");
  const auto one = TestFunction::constant(1);
  const auto id = TestFunction::monomial(1);
  for (const char* x : {"0", "1/9", "1/5", "1"}) {
    EXPECT_EQ(markov_operator(ex2, one, pt(x)), 1);
  }
  EXPECT_EQ(markov_operator(ex3, id, pt("0")), q("1/4"));
  EXPECT_EQ(markov_operator(ex2, id, pt("1")), q("1/2"));
  const double v = markov_operator(ex2, [](double z) { return z * z; }, pt("1"));
  EXPECT_NEAR(v, 0.5 / 9 + 0.5 * 4 / 9, 1e-15);
}

TEST(TestFunction, Grammar) {
  const auto f = TestFunction::parse("x^2 - 1/2*x + ind(1/3,1]");
  EXPECT_EQ(f(q("1/3")), q("1/9") - q("1/6"));
  EXPECT_EQ(f(q("1")), q("1/2") + 1);
  EXPECT_EQ(TestFunction::parse("3")(q("5")), 3);
  EXPECT_EQ(TestFunction::parse("-x")(q("1/2")), q("-1/2"));
  EXPECT_THROW(TestFunction::parse("y^2"), Error);
  EXPECT_THROW(TestFunction::parse("x +"), Error);
}

TEST(PushForward, Example2Deltas) {
  const auto spec = example("example2");
  const auto one = push_forward(spec, DiscreteMeasure{{{pt("1"), Rational(1)}}});
  ASSERT_EQ(one.atoms.size(), 2u);
  EXPECT_EQ(one.atoms[0].point.value, q("1/3"));
  EXPECT_EQ(one.atoms[0].weight, q("1/2"));
  EXPECT_EQ(one.atoms[1].point.value, q("2/3"));
  EXPECT_EQ(one.atoms[1].weight, q("1/2"));
  const auto zero = push_forward(spec, DiscreteMeasure{{{pt("0"), Rational(1)}}});
  ASSERT_EQ(zero.atoms.size(), 1u);
  EXPECT_EQ(zero.atoms[0].point.value, q("1/3"));
  EXPECT_EQ(zero.atoms[0].weight, 1);
}

TEST(PushForward, PreservesMassAndCoalesces) {
  const auto spec = example("example3");
  DiscreteMeasure nu{{{pt("0"), q("1/2")}, {pt("1"), q("1/2")}}};
  for (int k = 0; k < 6; ++k) {
    nu = push_forward(spec, nu);
    EXPECT_EQ(nu.total_mass(), 1);
  }
  EXPECT_LE(nu.atoms.size(), 128u);
  for (std::size_t k = 1; k < nu.atoms.size(); ++k) {
    EXPECT_LT(nu.atoms[k - 1].point.value, nu.atoms[k].point.value);
  }
}

TEST(ProbabilityTable, DrawMatchesThresholds) {
  const auto spec = example("example2");
  const ProbabilityTable table(spec);
  const std::size_t c = table.cell_of(Rational(1), false);
  EXPECT_EQ(table.draw(c, 0), 0u);
  EXPECT_EQ(table.draw(c, (std::uint64_t{1} << 63) - 1), 0u);
  EXPECT_EQ(table.draw(c, std::uint64_t{1} << 63), 1u);
  const std::size_t z = table.cell_of(Rational(0), false);
  EXPECT_EQ(table.draw(z, 0), 1u);
}

TEST(OrbitPoint, SwitchesToLongDoubleAboveCap) {
  const auto spec = example("example2");
  const Stepper stepper(spec, 16);
  OrbitPoint x(pt("1"));
  for (int k = 0; k < 5; ++k) stepper.advance(x, 0);
  EXPECT_TRUE(x.is_exact());
  EXPECT_EQ(x.exact(), q("1/243"));
  for (int k = 0; k < 10; ++k) stepper.advance(x, 1);
  EXPECT_FALSE(x.is_exact());
  EXPECT_GT(x.approx(), 0.49L);
}

}  // namespace
}  // namespace fms
