#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fms/model.hpp"
#include "fms/partition.hpp"

namespace fms {

inline constexpr std::size_t kTraceExactBits = 4096;

// x_0 = start, x_k = w_{labels[k-1]}(x_{k-1}).
struct Trace {
  std::uint64_t seed = 0;
  Point start;
  std::vector<EdgeIndex> labels;
  std::vector<OrbitPoint> points;

  std::size_t steps() const { return labels.size(); }
};

Trace simulate(const SystemSpec& spec, const Point& x0, std::size_t steps, std::uint64_t seed,
               std::size_t exact_bits_cap = kTraceExactBits);

struct ErgodicAverage {
  double value = 0.0;
  std::optional<Rational> exact;  // when every averaged point is exact
  std::size_t count = 0;
};

// (1/n) sum_{k<n} f(x_k) with n = max(steps, 1).
ErgodicAverage ergodic_average(const Trace& trace, const TestFunction& f);

// Visit frequencies of x_0..x_{n-1} per class of the fundamental partition.
std::vector<double> class_frequencies(const Trace& trace, const FundamentalPartition& fp);

struct ContractionEstimate {
  Rational rate;  // max over sampled pairs of sum_e p_e(x)|w_e x - w_e y| / |x - y|
  bool contractive = false;
  std::size_t pairs = 0;
};

// Samples pairs x != y inside each nondegenerate state of the chain.
ContractionEstimate contraction_estimate(const SystemSpec& spec, const LabeledChain& chain,
                                         std::size_t num_pairs, std::uint64_t seed);

// W1 between two empirical measures on the line: integral of |F_a - F_b|.
double w1_distance(std::vector<double> a, std::vector<double> b);

// Independent orbits of length burn_in from x0, one per atom.
std::vector<double> stationary_cloud(const SystemSpec& spec, const Point& x0, std::size_t size,
                                     std::size_t burn_in, std::uint64_t seed);

struct RateOptions {
  std::size_t n_max = 30;
  std::size_t bootstrap = 50;
  double noise_multiplier = 3.0;
  double bound = 1.0;
  double slack = 0.1;
  std::size_t exact_bits_cap = 64;
};

struct RateReport {
  std::vector<double> distances;             // d_0 .. d_{n_max}
  std::vector<std::optional<double>> ratios;  // ratios[n] = d_{n+1}/d_n above the floor
  double noise_floor = 0.0;
  double geometric_mean_ratio = 0.0;  // NaN when no ratio is above the floor
  std::size_t ratio_count = 0;
  double bound = 1.0;
  double slack = 0.1;
  std::uint64_t seed = 0;

  bool within_bound() const;
};

// Pushes each start atom one step per iteration (substream per atom and step)
// and records W1 against the reference cloud.
RateReport convergence_rate(const SystemSpec& spec, const std::vector<Point>& start_cloud,
                            const std::vector<double>& reference_cloud, std::uint64_t seed,
                            const RateOptions& options = {});

// "step,label,point,precision"; exact points as p/q, others as decimals.
std::string trace_csv(const SystemSpec& spec, const Trace& trace);
// "n,d_n,ratio" rows then a summary header and line.
std::string rate_csv(const RateReport& report);

}  // namespace fms
