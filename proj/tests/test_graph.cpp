#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fms/graph.hpp"
#include "test_util.hpp"

namespace fms {
namespace {

using testing::example;
using testing::example2_with;
using testing::q;

Digraph make_graph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& arcs) {
  Digraph g;
  for (std::size_t v = 0; v < n; ++v) g.vertices.push_back("v" + std::to_string(v));
  for (const auto& [s, t] : arcs) g.arcs.push_back({s, t, "a"});
  return g;
}

LabeledChain chain_for(const SystemSpec& spec) {
  return extract_symbolic_chain(spec, refine_markov_partition(spec));
}

// One state on [0,1] driven by the single map x -> slope*x + intercept.
LabeledChain single_map_chain(const Rational& slope, const Rational& intercept) {
  LabeledChain c;
  c.labels = {"0"};
  c.maps = {AffineMap{slope, intercept}};
  c.state_names = {"[0,1]"};
  c.hulls = {Interval::closed(0, 1)};
  c.irrational_states = {false};
  c.point_reps = {Point::exact(Rational(1, 2))};
  c.transitions = {{Transition{0, Rational(1)}}};
  return c;
}

PartitionParams seeded() {
  PartitionParams p;
  p.xi.seed = 1;
  return p;
}

TEST(Flags, A2SupportGraph) {
  const auto chain = chain_for(example("example2")).restricted({1, 2, 3});
  const auto g = support_graph(chain);
  EXPECT_TRUE(is_irreducible(g));
  EXPECT_TRUE(is_aperiodic(g));
  EXPECT_TRUE(is_recurrent(g));
}

TEST(Flags, A3SupportGraph) {
  const auto chain = chain_for(example("example2_modified")).restricted({1, 2, 3, 4});
  const auto g = support_graph(chain);
  EXPECT_TRUE(is_irreducible(g));
  EXPECT_TRUE(is_aperiodic(g));
}

TEST(Flags, Example2FullGraph) {
  const auto fp = fundamental_partition(example("example2"), seeded());
  const auto g = fms_graph(fp);
  EXPECT_EQ(g.num_vertices(), 4u);
  EXPECT_FALSE(is_irreducible(g));
  EXPECT_FALSE(is_recurrent(g));
  const auto terminal = terminal_components(g);
  ASSERT_EQ(terminal.size(), 1u);
  EXPECT_EQ(terminal[0], (std::vector<std::size_t>{1, 2, 3}));
  const auto sub = induced_subgraph(g, terminal[0]);
  EXPECT_TRUE(is_recurrent(sub));
  EXPECT_TRUE(is_irreducible(sub));
}

TEST(Flags, SmallGraphs) {
  EXPECT_TRUE(is_irreducible(make_graph(1, {{0, 0}})));
  EXPECT_TRUE(is_aperiodic(make_graph(1, {{0, 0}})));
  const auto two_cycle = make_graph(2, {{0, 1}, {1, 0}});
  EXPECT_TRUE(is_irreducible(two_cycle));
  EXPECT_FALSE(is_aperiodic(two_cycle));
  EXPECT_EQ(component_periods(two_cycle), (std::vector<std::size_t>{2}));
  const auto absorbing = make_graph(2, {{0, 1}, {1, 1}});
  EXPECT_FALSE(is_recurrent(absorbing));
  EXPECT_EQ(strongly_connected_components(absorbing).size(), 2u);
  const auto mixed = make_graph(3, {{0, 1}, {1, 2}, {2, 0}, {1, 0}});
  EXPECT_EQ(component_periods(mixed), (std::vector<std::size_t>{1}));
  EXPECT_THROW(induced_subgraph(mixed, {5}), Error);
}

TEST(Flags, RecurrentMatchesIrreducible) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 6;
    std::vector<std::pair<std::size_t, std::size_t>> arcs;
    const std::size_t m = rng() % (2 * n + 1);
    for (std::size_t k = 0; k < m; ++k) arcs.emplace_back(rng() % n, rng() % n);
    const auto g = make_graph(n, arcs);
    EXPECT_EQ(is_recurrent(g), is_irreducible(g));
  }
}

TEST(Stationary, A2Formula) {
  for (const char* bs : {"1/4", "1/3", "1/2", "2/3", "1/10", "9/10"}) {
    const Rational b = q(bs);
    const auto chain = chain_for(example2_with(b, q("1/9"))).restricted({1, 2, 3});
    const auto r = stationary_distribution(chain);
    const Rational z = 1 + b + b * b;
    EXPECT_EQ(r.method, StationaryMethod::kExactSolve);
    EXPECT_EQ(r.pi, (std::vector<Rational>{b * b / z, b / z, 1 / z})) << bs;
    EXPECT_EQ(r.exact_residual, 0);
    EXPECT_TRUE(r.unique);
  }
}

TEST(Stationary, A3Formula) {
  for (const char* bs : {"1/4", "1/3", "1/2", "2/3"}) {
    const Rational b = q(bs);
    const auto chain = chain_for(example2_with(b, q("1/27"))).restricted({1, 2, 3, 4});
    const auto r = stationary_distribution(chain);
    const Rational z = 1 + b + b * b + b * b * b;
    EXPECT_EQ(r.pi, (std::vector<Rational>{b * b * b / z, b * b / z, b / z, 1 / z})) << bs;
    EXPECT_EQ(r.exact_residual, 0);
  }
}

TEST(Stationary, HalfValues) {
  const auto r2 = stationary_distribution(chain_for(example("example2")));
  EXPECT_EQ(r2.pi, (std::vector<Rational>{0, q("1/7"), q("2/7"), q("4/7")}));
  const auto r3 = stationary_distribution(chain_for(example("example2_modified")));
  EXPECT_EQ(r3.pi,
            (std::vector<Rational>{0, q("1/15"), q("2/15"), q("4/15"), q("8/15")}));
}

TEST(Stationary, TrivialAndMultiple) {
  EXPECT_EQ(stationary_distribution(RationalMatrix{{1}}).pi, (std::vector<Rational>{1}));
  const auto r = stationary_distribution(RationalMatrix{{1, 0}, {0, 1}});
  EXPECT_FALSE(r.unique);
  EXPECT_EQ(r.component_pi.size(), 2u);
  EXPECT_THROW(stationary_distribution(RationalMatrix{}), Error);
}

TEST(Stationary, PowerIterationAgrees) {
  StationaryOptions opts;
  opts.force_power_iteration = true;
  const auto r = stationary_distribution(chain_for(example("example2_modified")), opts);
  EXPECT_EQ(r.method, StationaryMethod::kPowerIteration);
  ASSERT_EQ(r.pi_approx.size(), 5u);
  const double expected[] = {0, 1.0 / 15, 2.0 / 15, 4.0 / 15, 8.0 / 15};
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(r.pi_approx[k], expected[k], 1e-10);
  EXPECT_LT(r.residual, 1e-11);
}

TEST(Moments, Example2) {
  const auto chain = chain_for(example("example2"));
  const auto r = exact_first_moment(chain, stationary_distribution(chain).pi);
  EXPECT_EQ(r.mean, q("2/7"));
  EXPECT_EQ(r.invariance_residual, 0);
  EXPECT_EQ(r.class_moments[1], q("2/43"));
  EXPECT_EQ(r.class_moments[2], q("6/43"));
  EXPECT_EQ(r.class_moments[3], q("18/43"));
}

TEST(Moments, ScalarIdentity) {
  // m = m/3 + (1/3)(1 - mu(p0 > 0 region) * b)
  for (const char* bs : {"1/4", "1/2", "2/3"}) {
    const Rational b = q(bs);
    const auto chain = chain_for(example2_with(b, q("1/9")));
    const auto pi = stationary_distribution(chain).pi;
    const auto r = exact_first_moment(chain, pi);
    const Rational p0 = b * (pi[2] + pi[3]);
    EXPECT_EQ(r.mean, r.mean / 3 + (1 - p0) / 3) << bs;
  }
}

TEST(Moments, SingleMaps) {
  EXPECT_EQ(exact_first_moment(single_map_chain(q("1/2"), 0), {1}).mean, 0);
  EXPECT_EQ(exact_first_moment(single_map_chain(q("1/2"), q("1/2")), {1}).mean, 1);
  EXPECT_THROW(exact_first_moment(single_map_chain(1, 0), {1}), Error);
}

TEST(Spectrum, A2Moduli) {
  const auto a = chain_for(example("example2")).restricted({1, 2, 3}).transition_matrix();
  const auto m = spectrum_moduli(a);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_NEAR(m[0], 1.0, 1e-12);
  EXPECT_NEAR(m[1], 0.5, 1e-9);
  EXPECT_NEAR(m[2], 0.5, 1e-9);
}

TEST(Csv, ExactStrings) {
  const auto chain = chain_for(example("example2")).restricted({1, 2, 3});
  const std::string m = matrix_csv(chain.transition_matrix(), chain.state_names);
  EXPECT_NE(m.find("\"(1/9,1/3]\",1/2,0,1/2"), std::string::npos);
  const std::string s = stationary_csv(stationary_distribution(chain), chain.state_names);
  EXPECT_EQ(s, "state,pi\n\"(0,1/9]\",1/7\n\"(1/9,1/3]\",2/7\n\"(1/3,1]\",4/7\n");
}

}  // namespace
}  // namespace fms
