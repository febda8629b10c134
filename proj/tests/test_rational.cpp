#include <gtest/gtest.h>

#include "fms/errors.hpp"
#include "fms/linalg.hpp"
#include "fms/rational.hpp"

namespace fms {
namespace {

TEST(Rational, ParsesFractionsIntegersDecimals) {
  EXPECT_EQ(parse_rational("1/9"), Rational(1, 9));
  EXPECT_EQ(parse_rational(" -3 "), Rational(-3));
  EXPECT_EQ(parse_rational("0.125"), Rational(1, 8));
  EXPECT_EQ(parse_rational("2/4"), Rational(1, 2));
  EXPECT_THROW(parse_rational("1/0"), Error);
  EXPECT_THROW(parse_rational("abc"), Error);
}

TEST(Rational, CanonicalStrings) {
  EXPECT_EQ(to_string(Rational(2, 6)), "1/3");
  EXPECT_EQ(to_string(Rational(4, 2)), "2");
  EXPECT_EQ(to_string(Rational(0)), "0");
}

TEST(Rational, LongDoubleRoundTrip) {
  const long double v = 0.70710678118654752440L;
  EXPECT_EQ(to_long_double(from_long_double(v)), v);
  EXPECT_EQ(to_long_double(Rational(1, 4)), 0.25L);
}

TEST(Rational, ScaledThreshold) {
  EXPECT_EQ(scaled_threshold(Rational(1, 2)), std::uint64_t{1} << 63);
  EXPECT_EQ(scaled_threshold(Rational(0)), 0u);
  EXPECT_EQ(scaled_threshold(Rational(1)), UINT64_MAX);
}

TEST(Interval, OwnershipDecidesMembership) {
  Interval left = Interval::closed(0, Rational(1, 9));
  Interval right{Rational(1, 9), 1, false, true};
  EXPECT_TRUE(left.contains(Rational(1, 9)));
  EXPECT_FALSE(right.contains(Rational(1, 9)));
  EXPECT_FALSE(left.intersects(right));
  EXPECT_EQ(to_string(right), "(1/9,1]");
  EXPECT_EQ(to_string(Interval::point(0)), "{0}");
  EXPECT_TRUE(right.contains(right.representative()));
  EXPECT_TRUE(Interval::closed(0, 1).contains(right));
}

TEST(Linalg, SolvesAndDetectsSingular) {
  RationalMatrix a = {{2, 1}, {1, 3}};
  auto x = solve_exact(a, {3, 4});
  ASSERT_TRUE(x);
  EXPECT_EQ((*x)[0], 1);
  EXPECT_EQ((*x)[1], 1);
  EXPECT_FALSE(solve_exact({{1, 2}, {2, 4}}, {1, 2}));
}

TEST(Linalg, EchelonRank) {
  EchelonBasis b(3);
  EXPECT_TRUE(b.insert({1, 0, 1}));
  EXPECT_TRUE(b.insert({0, 1, 1}));
  EXPECT_FALSE(b.insert({1, 1, 2}));
  EXPECT_FALSE(b.insert({0, 0, 0}));
  EXPECT_EQ(b.rank(), 2u);
}

}  // namespace
}  // namespace fms
