#include "fms/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fms/rng.hpp"

namespace fms {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Uniform rational in the open unit interval with 32-bit resolution.
Rational open_unit(std::mt19937_64& rng) {
  std::uint64_t k = rng() >> 32;
  if (k == 0) k = 1;
  Rational u(static_cast<unsigned long>(k), 1ul);
  u /= Rational(4294967296.0);
  return u;
}

}  // namespace

Trace simulate(const SystemSpec& spec, const Point& x0, std::size_t steps, std::uint64_t seed,
               std::size_t exact_bits_cap) {
  if (!spec.domain.contains(x0.value)) {
    throw Error(ErrorCode::kOutOfDomain, "start " + to_string(x0) + " outside the domain");
  }
  const Stepper stepper(spec, exact_bits_cap);
  auto rng = substream(seed, streams::kTrace);
  Trace t;
  t.seed = seed;
  t.start = x0;
  t.labels.reserve(steps);
  t.points.reserve(steps + 1);
  OrbitPoint x(x0);
  t.points.push_back(x);
  for (std::size_t k = 0; k < steps; ++k) {
    t.labels.push_back(stepper.step(x, rng()));
    t.points.push_back(x);
  }
  return t;
}

ErgodicAverage ergodic_average(const Trace& trace, const TestFunction& f) {
  if (trace.points.empty()) throw Error(ErrorCode::kEmptyTrace, "trace has no points");
  const std::size_t n = std::max<std::size_t>(trace.steps(), 1);
  ErgodicAverage avg;
  avg.count = n;
  bool all_exact = true;
  for (std::size_t k = 0; k < n; ++k) all_exact = all_exact && trace.points[k].is_exact();
  if (all_exact) {
    Rational sum(0);
    for (std::size_t k = 0; k < n; ++k) sum += f(trace.points[k].exact());
    sum /= Rational(static_cast<unsigned long>(n), 1ul);
    sum.canonicalize();
    avg.value = sum.get_d();
    avg.exact = sum;
    return avg;
  }
  long double sum = 0.0L;
  long double carry = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    const OrbitPoint& p = trace.points[k];
    const long double v = p.is_exact() ? to_long_double(f(p.exact())) : f(p.approx());
    // Kahan summation.
    const long double y = v - carry;
    const long double s = sum + y;
    carry = (s - sum) - y;
    sum = s;
  }
  avg.value = static_cast<double>(sum / static_cast<long double>(n));
  return avg;
}

std::vector<double> class_frequencies(const Trace& trace, const FundamentalPartition& fp) {
  if (trace.points.empty()) throw Error(ErrorCode::kEmptyTrace, "trace has no points");
  const std::size_t n = std::max<std::size_t>(trace.steps(), 1);
  std::vector<std::size_t> counts(fp.num_classes(), 0);
  for (std::size_t k = 0; k < n; ++k) ++counts[classify_point(fp, trace.points[k])];
  std::vector<double> freq;
  for (std::size_t c : counts) freq.push_back(static_cast<double>(c) / static_cast<double>(n));
  return freq;
}

ContractionEstimate contraction_estimate(const SystemSpec& spec, const LabeledChain& chain,
                                         std::size_t num_pairs, std::uint64_t seed) {
  if (num_pairs == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one pair");
  ContractionEstimate est;
  for (std::size_t s = 0; s < chain.num_states(); ++s) {
    const Interval& h = chain.hulls[s];
    if (h.lo == h.hi) continue;
    auto rng = substream(seed, streams::kContraction, s);
    const bool tag = chain.irrational_states[s];
    for (std::size_t k = 0; k < num_pairs; ++k) {
      const Rational x = h.lo + (h.hi - h.lo) * open_unit(rng);
      Rational y = h.lo + (h.hi - h.lo) * open_unit(rng);
      if (x == y) continue;
      Rational num(0);
      for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
        const Rational p = prob(spec, e, Point{x, tag});
        if (p == 0) continue;
        const AffineMap& m = spec.edges[e].map;
        num += p * abs(m.apply(x) - m.apply(y));
      }
      Rational r = num / abs(x - y);
      r.canonicalize();
      if (est.pairs == 0 || r > est.rate) est.rate = r;
      ++est.pairs;
    }
  }
  if (est.pairs == 0) {
    throw Error(ErrorCode::kDegenerateCellOnly, "no nondegenerate cell to sample pairs from");
  }
  est.contractive = est.rate < 1;
  return est;
}

double w1_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptySamples, "W1 needs two samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const long double na = static_cast<long double>(a.size());
  const long double nb = static_cast<long double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  long double total = 0.0L;
  double t = std::min(a[0], b[0]);
  while (i < a.size() || j < b.size()) {
    double next;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      next = a[i];
    } else {
      next = b[j];
    }
    total += std::fabs(static_cast<long double>(i) / na - static_cast<long double>(j) / nb) *
             (static_cast<long double>(next) - static_cast<long double>(t));
    t = next;
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
  }
  return static_cast<double>(total);
}

std::vector<double> stationary_cloud(const SystemSpec& spec, const Point& x0, std::size_t size,
                                     std::size_t burn_in, std::uint64_t seed) {
  if (size == 0) throw Error(ErrorCode::kEmptySamples, "cloud size must be positive");
  const Stepper stepper(spec, 64);
  std::vector<double> cloud;
  cloud.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    auto rng = substream(seed, streams::kReference, i);
    OrbitPoint p(x0);
    for (std::size_t k = 0; k < burn_in; ++k) stepper.step(p, rng());
    cloud.push_back(static_cast<double>(p.approx()));
  }
  return cloud;
}

bool RateReport::within_bound() const {
  return ratio_count > 0 && geometric_mean_ratio <= bound + slack;
}

RateReport convergence_rate(const SystemSpec& spec, const std::vector<Point>& start_cloud,
                            const std::vector<double>& reference_cloud, std::uint64_t seed,
                            const RateOptions& options) {
  if (start_cloud.empty() || reference_cloud.empty()) {
    throw Error(ErrorCode::kEmptySamples, "rate needs nonempty clouds");
  }
  RateReport report;
  report.bound = options.bound;
  report.slack = options.slack;
  report.seed = seed;

  // Noise floor: W1 between two independent resamples of the reference,
  // sized like the pushed cloud and the reference.
  const std::size_t m = reference_cloud.size();
  long double sq = 0.0L;
  for (std::size_t b = 0; b < options.bootstrap; ++b) {
    auto rng = substream(seed, streams::kBootstrap, b);
    std::vector<double> pushed(start_cloud.size());
    std::vector<double> ref(m);
    for (double& v : pushed) v = reference_cloud[rng() % m];
    for (double& v : ref) v = reference_cloud[rng() % m];
    const long double d = w1_distance(pushed, ref);
    sq += d * d;
  }
  const long double rms = options.bootstrap ? std::sqrt(sq / options.bootstrap) : 0.0L;
  report.noise_floor = static_cast<double>(options.noise_multiplier * rms);

  const Stepper stepper(spec, options.exact_bits_cap);
  std::vector<OrbitPoint> atoms;
  atoms.reserve(start_cloud.size());
  for (const Point& p : start_cloud) atoms.emplace_back(p);
  std::vector<double> values(atoms.size());
  auto measure = [&] {
    for (std::size_t i = 0; i < atoms.size(); ++i) values[i] = static_cast<double>(atoms[i].approx());
    report.distances.push_back(w1_distance(values, reference_cloud));
  };
  measure();
  for (std::size_t n = 1; n <= options.n_max; ++n) {
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      auto rng = substream(seed, streams::kCloud, i, n);
      stepper.step(atoms[i], rng());
    }
    measure();
  }

  report.ratios.assign(options.n_max, std::nullopt);
  long double log_sum = 0.0L;
  for (std::size_t n = 0; n < options.n_max; ++n) {
    const double a = report.distances[n];
    const double b = report.distances[n + 1];
    if (a <= report.noise_floor || b <= report.noise_floor) break;
    report.ratios[n] = b / a;
    log_sum += std::log(static_cast<long double>(b / a));
    ++report.ratio_count;
  }
  report.geometric_mean_ratio =
      report.ratio_count
          ? static_cast<double>(std::exp(log_sum / static_cast<long double>(report.ratio_count)))
          : std::numeric_limits<double>::quiet_NaN();
  return report;
}

std::string trace_csv(const SystemSpec& spec, const Trace& trace) {
  std::ostringstream out;
  out << "step,label,point,precision\n";
  char buf[64];
  for (std::size_t k = 0; k < trace.points.size(); ++k) {
    out << k << ",";
    if (k > 0) out << spec.edges[trace.labels[k - 1]].id;
    const OrbitPoint& p = trace.points[k];
    if (p.is_exact()) {
      out << "," << to_string(p.exact()) << ",exact\n";
    } else {
      std::snprintf(buf, sizeof(buf), "%.21Lg", p.approx());
      out << "," << (p.irrational() ? "irr:" : "") << buf << ",long_double\n";
    }
  }
  return out.str();
}

std::string rate_csv(const RateReport& report) {
  std::ostringstream out;
  out << "n,d_n,ratio\n";
  for (std::size_t n = 0; n < report.distances.size(); ++n) {
    out << n << "," << format_double(report.distances[n]) << ",";
    if (n > 0 && report.ratios[n - 1]) out << format_double(*report.ratios[n - 1]);
    out << "\n";
  }
  out << "geometric_mean_ratio,ratios,noise_floor,bound,within_bound,seed\n";
  out << format_double(report.geometric_mean_ratio) << "," << report.ratio_count << ","
      << format_double(report.noise_floor) << "," << format_double(report.bound) << ","
      << (report.within_bound() ? "true" : "false") << "," << report.seed << "\n";
  return out.str();
}

}  // namespace fms
