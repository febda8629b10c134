#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fms/dynamics.hpp"
#include "fms/rng.hpp"
#include "test_util.hpp"

namespace fms {
namespace {

using testing::example;
using testing::pt;
using testing::q;

LabeledChain chain_for(const SystemSpec& spec) {
  return extract_symbolic_chain(spec, refine_markov_partition(spec));
}

TEST(Simulate, ZeroSteps) {
  const auto t = simulate(example("example2"), pt("1/2"), 0, 1);
  EXPECT_TRUE(t.labels.empty());
  ASSERT_EQ(t.points.size(), 1u);
  EXPECT_EQ(t.points[0].exact(), q("1/2"));
}

TEST(Simulate, ForcedFirstStep) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = simulate(example("example2"), pt("0"), 1, seed);
    EXPECT_EQ(t.labels[0], 1u);
    EXPECT_EQ(t.points[1].exact(), q("1/3"));
  }
}

TEST(Simulate, ExactRecursion) {
  const auto spec = example("example3");
  const auto t = simulate(spec, pt("1"), 40, 5);
  for (std::size_t k = 0; k < t.steps(); ++k) {
    ASSERT_TRUE(t.points[k + 1].is_exact());
    EXPECT_EQ(t.points[k + 1].exact(), spec.edges[t.labels[k]].map.apply(t.points[k].exact()));
  }
}

TEST(Simulate, Deterministic) {
  const auto spec = example("example2");
  EXPECT_EQ(trace_csv(spec, simulate(spec, pt("1"), 200, 8)),
            trace_csv(spec, simulate(spec, pt("1"), 200, 8)));
  EXPECT_NE(trace_csv(spec, simulate(spec, pt("1"), 200, 8)),
            trace_csv(spec, simulate(spec, pt("1"), 200, 9)));
}

TEST(Simulate, OutOfDomain) {
  EXPECT_THROW(simulate(example("example2"), pt("3/2"), 1, 1), Error);
}

TEST(Simulate, IrrationalLabelFrequency) {
  const auto t = simulate(example("example4"), pt("0"), 100000, 12);
  double zeros = 0;
  for (EdgeIndex e : t.labels) zeros += e == 0;
  const double n = static_cast<double>(t.steps());
  const double sigma = std::sqrt(0.25 * 0.75 / n);
  EXPECT_NEAR(zeros / n, 0.25, 3 * sigma);
}

TEST(Simulate, OneStepFrequenciesMatchProbabilities) {
  const auto spec = example("example3");
  const Stepper stepper(spec, 64);
  for (const char* x : {"0", "1/2", "3/4"}) {
    const double p0 = prob(spec, 0, pt(x)).get_d();
    auto rng = substream(77, 99);
    const int n = 20000;
    int zeros = 0;
    for (int k = 0; k < n; ++k) {
      OrbitPoint p(pt(x));
      zeros += stepper.step(p, rng()) == 0;
    }
    EXPECT_NEAR(zeros / double(n), p0, 4 * std::sqrt(p0 * (1 - p0) / n)) << x;
  }
}

TEST(Simulate, TraceCsvColumns) {
  const auto spec = example("example4");
  const std::string csv = trace_csv(spec, simulate(spec, pt("irr:0.5"), 2, 1));
  EXPECT_EQ(csv.rfind("step,label,point,precision\n0,,irr:", 0), 0u);
  EXPECT_NE(csv.find(",long_double\n"), std::string::npos);
  const std::string exact = trace_csv(example("example2"), simulate(example("example2"), pt("0"), 1, 1));
  EXPECT_EQ(exact, "step,label,point,precision\n0,,0,exact\n1,1,1/3,exact\n");
}

TEST(Ergodic, Constant) {
  const auto t = simulate(example("example2"), pt("1"), 500, 3);
  const auto avg = ergodic_average(t, TestFunction::constant(q("3/7")));
  ASSERT_TRUE(avg.exact);
  EXPECT_EQ(*avg.exact, q("3/7"));
  EXPECT_EQ(avg.count, 500u);
  EXPECT_EQ(ergodic_average(t, TestFunction::constant(1)).value, 1.0);
}

TEST(Ergodic, EmptyTrace) {
  Trace t;
  EXPECT_THROW(ergodic_average(t, TestFunction::constant(1)), Error);
}

TEST(Ergodic, Example2Averages) {
  const auto spec = example("example2");
  const auto t = simulate(spec, pt("1"), 200000, 21);
  EXPECT_NEAR(ergodic_average(t, TestFunction::monomial(1)).value, 2.0 / 7, 0.005);
  EXPECT_NEAR(ergodic_average(t, TestFunction::parse("ind(1/3,1]")).value, 4.0 / 7, 0.005);
}

TEST(Frequencies, Classes) {
  PartitionParams params;
  params.xi.seed = 1;
  const auto ex2 = example("example2");
  const auto f2 = class_frequencies(simulate(ex2, pt("1"), 200000, 4),
                                    fundamental_partition(ex2, params));
  const double e2[] = {0, 1.0 / 7, 2.0 / 7, 4.0 / 7};
  ASSERT_EQ(f2.size(), 4u);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(f2[k], e2[k], 0.005);

  const auto ex3 = example("example3");
  const auto f3 = class_frequencies(simulate(ex3, pt("0"), 1000, 4),
                                    fundamental_partition(ex3, params));
  EXPECT_EQ(f3, (std::vector<double>{1.0}));

  const auto mod = example("example2_modified");
  const auto fm = class_frequencies(simulate(mod, pt("1"), 200000, 4),
                                    fundamental_partition(mod, params));
  const double em[] = {0, 1.0 / 15, 2.0 / 15, 4.0 / 15, 8.0 / 15};
  ASSERT_EQ(fm.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(fm[k], em[k], 0.005);
}

TEST(Contraction, ExactRates) {
  const auto ex2 = example("example2");
  const auto ex3 = example("example3");
  const auto ex4 = example("example4");
  EXPECT_EQ(contraction_estimate(ex2, chain_for(ex2), 16, 1).rate, q("1/3"));
  EXPECT_EQ(contraction_estimate(ex3, chain_for(ex3), 16, 1).rate, q("1/3"));
  const auto r4 = contraction_estimate(ex4, tag_chain(ex4), 16, 1);
  EXPECT_EQ(r4.rate, q("1/2"));
  EXPECT_TRUE(r4.contractive);
}

TEST(Contraction, IdentityMapsNotContractive) {
  const auto spec = parse_system(
      "[domain]\nlo=0\nhi=1\n[edge 0]\nslope=1\nintercept=0\nprob=piecewise (0,1,1,1,1/2)\n"
      "[edge 1]\nslope=1\nintercept=0\nprob=piecewise (0,1,1,1,1/2)\n");
  const auto r = contraction_estimate(spec, chain_for(spec), 8, 1);
  EXPECT_EQ(r.rate, 1);
  EXPECT_FALSE(r.contractive);
}

TEST(Contraction, DegenerateOnly) {
  LabeledChain c;
  c.labels = {"0"};
  c.maps = {AffineMap{0, 0}};
  c.state_names = {"{0}"};
  c.hulls = {Interval::point(0)};
  c.irrational_states = {false};
  c.point_reps = {Point::exact(0)};
  c.transitions = {{Transition{0, Rational(1)}}};
  const auto spec = parse_system(
      "[domain]\nlo=0\nhi=1\n[edge 0]\nslope=0\nintercept=0\nprob=piecewise (0,1,1,1,1)\n");
  try {
    contraction_estimate(spec, c, 4, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCellOnly);
  }
}

TEST(W1, Examples) {
  EXPECT_EQ(w1_distance({0.3, 0.1, 0.7}, {0.7, 0.3, 0.1}), 0.0);
  EXPECT_EQ(w1_distance({0, 0}, {1, 1}), 1.0);
  EXPECT_EQ(w1_distance({0, 1}, {0, 0}), 0.5);
  EXPECT_NEAR(w1_distance({0, 1}, {0.5}), 0.5, 1e-15);
  EXPECT_THROW(w1_distance({}, {1}), Error);
}

TEST(Cloud, ReproducibleAndInDomain) {
  const auto spec = example("example2");
  const auto a = stationary_cloud(spec, pt("1"), 500, 50, 3);
  EXPECT_EQ(a, stationary_cloud(spec, pt("1"), 500, 50, 3));
  for (double v : a) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Rate, Example2WithinBound) {
  const auto spec = example("example2");
  const auto ref = stationary_cloud(spec, pt("1"), 4000, 100, 1);
  RateOptions opts;
  opts.bound = std::sqrt(0.5);
  const auto r = convergence_rate(spec, std::vector<Point>(4000, pt("1")), ref, 1, opts);
  EXPECT_EQ(r.distances.size(), 31u);
  EXPECT_GT(r.ratio_count, 0u);
  EXPECT_TRUE(r.within_bound()) << r.geometric_mean_ratio;
  for (double d : r.distances) EXPECT_GE(d, 0.0);
}

TEST(Rate, ConstantVariant) {
  const auto spec = example("example2_constant");
  const auto ref = stationary_cloud(spec, pt("1"), 4000, 100, 2);
  RateOptions opts;
  opts.bound = 1.0 / 3;
  const auto r = convergence_rate(spec, std::vector<Point>(4000, pt("1")), ref, 2, opts);
  EXPECT_TRUE(r.within_bound()) << r.geometric_mean_ratio;
}

TEST(Rate, StationaryStartHasNoTrend) {
  const auto spec = example("example2");
  const auto ref = stationary_cloud(spec, pt("1"), 2000, 100, 4);
  const auto start_values = stationary_cloud(spec, pt("1/2"), 2000, 100, 5);
  std::vector<Point> start;
  for (double v : start_values) start.push_back(Point::exact(from_long_double(v)));
  RateOptions opts;
  opts.n_max = 20;
  const auto r = convergence_rate(spec, start, ref, 4, opts);
  // Least squares slope of log d_n against n.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(r.distances.size());
  for (std::size_t k = 0; k < r.distances.size(); ++k) {
    const double y = std::log(r.distances[k]);
    sx += k;
    sy += y;
    sxx += double(k) * k;
    sxy += k * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_LT(std::fabs(slope), 0.05);
  for (double d : r.distances) EXPECT_LT(d, 4 * r.noise_floor);
}

TEST(Rate, CsvLayout) {
  const auto spec = example("example2");
  const auto ref = stationary_cloud(spec, pt("1"), 200, 50, 1);
  RateOptions opts;
  opts.n_max = 3;
  const auto r = convergence_rate(spec, std::vector<Point>(200, pt("1")), ref, 1, opts);
  const std::string csv = rate_csv(r);
  EXPECT_EQ(csv.rfind("n,d_n,ratio\n0,", 0), 0u);
  EXPECT_NE(csv.find("geometric_mean_ratio,ratios,noise_floor,bound,within_bound,seed\n"),
            std::string::npos);
}

}  // namespace
}  // namespace fms
