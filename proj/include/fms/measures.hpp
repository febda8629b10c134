#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fms/model.hpp"

namespace fms {

// Finite edge sequence naming the cylinder of all paths with that prefix.
using Word = std::vector<EdgeIndex>;

// "[1,0,0]" with the system's edge ids.
std::string format_word(const SystemSpec& spec, const Word& w);
Word parse_word(const SystemSpec& spec, std::string_view text);

// Value of a prefix likelihood ratio: finite(r >= 0) or +infinity.
struct ExtendedRatio {
  bool infinite = false;
  Rational value;

  static ExtendedRatio finite(Rational r) { return {false, std::move(r)}; }
  static ExtendedRatio infinity() { return {true, Rational(0)}; }

  friend bool operator==(const ExtendedRatio& a, const ExtendedRatio& b) {
    return a.infinite == b.infinite && (a.infinite || a.value == b.value);
  }
};

std::string to_string(const ExtendedRatio& r);

inline constexpr std::uint64_t kDefaultWordBudget = std::uint64_t{1} << 22;

// P_x of the cylinder: p_{e1}(x) p_{e2}(w_{e1} x) ...; stops at the first
// zero factor without applying further maps.
Rational cylinder_measure(const SystemSpec& spec, const Point& x, const Word& w);

struct CylinderMass {
  Word word;
  Rational mass;
};

// All depth-n cylinders in lexicographic order. Throws BudgetExceeded when
// |E|^n exceeds the budget.
std::vector<CylinderMass> enumerate_cylinders(const SystemSpec& spec, const Point& x,
                                              std::size_t depth, bool omit_zero = true,
                                              std::uint64_t budget = kDefaultWordBudget);

// X_n on the cylinder w for the pair (x, y): P_x/P_y, 0 when P_x vanishes,
// infinity when only P_y vanishes.
ExtendedRatio likelihood_ratio(const SystemSpec& spec, const Point& x, const Point& y,
                               const Word& w);

// max over depth-m cylinders C with P_y(C) > 0 of
// |int_C X_n dP_y - int_C X_m dP_y|, with the integral over P_y-null
// subcylinders taken as 0. Zero whenever P_x charges no P_y-null depth-n
// cylinder inside a P_y-positive depth-m one; otherwise it equals the P_x mass
// that escapes to such cylinders.
Rational martingale_discrepancy(const SystemSpec& spec, const Point& x, const Point& y,
                                std::size_t m, std::size_t n,
                                std::uint64_t budget = kDefaultWordBudget);

// P_x(X_n > M); infinite-ratio cylinders always count.
Rational tail_mass_exact(const SystemSpec& spec, const Point& x, const Point& y,
                         std::size_t n, const Rational& M,
                         std::uint64_t budget = kDefaultWordBudget);

// ---------------------------------------------------------------- xi evidence

struct XiParams {
  std::size_t n_exact = 10;
  std::vector<Rational> m_grid = {2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::size_t n_mc = 2000;
  std::size_t num_samples = 4000;
  std::uint64_t seed = 0;
  double drift_z = 4.0;
  // Exact tails must vanish for every M >= this for an "equivalent" verdict.
  Rational zero_tail_from = 32;
  // Combined tail at least 1 - tail_tol for every M counts as persistent.
  double tail_tol = 1e-9;
  // Sampled orbits stay exact while denominators fit in this many bits.
  std::size_t exact_bits = 128;
  std::uint64_t budget = kDefaultWordBudget;
  unsigned threads = 1;
  // An externally supplied class-level equivalence certificate.
  bool certified_equivalent = false;
};

enum class XiVerdict { kEquivalent, kSingularCertified, kSingularStatistical, kInconclusive };

std::string_view to_string(XiVerdict v);

struct TailEntry {
  std::size_t n;
  Rational M;
  Rational mass;  // P_x(X_n > M) + P_y(Y_n > M), in [0, 2]
};

// Per-step growth of log X_n over the second half of the sampled paths.
struct DriftEstimate {
  double drift = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  std::size_t finite_paths = 0;
  std::size_t infinite_paths = 0;
};

struct XiReport {
  std::vector<TailEntry> exact_tail_table;
  bool infinite_branch = false;          // some cylinder charged by one side only
  std::optional<Word> separating_word;   // shortest such cylinder found
  DriftEstimate drift_x;                 // log X_n under P_x
  DriftEstimate drift_y;                 // log Y_n under P_y
  std::vector<std::pair<Rational, double>> mc_tail_estimates;  // M -> sampled tail sum
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  XiVerdict verdict = XiVerdict::kInconclusive;
};

XiReport xi_estimate(const SystemSpec& spec, const Point& x, const Point& y,
                     const XiParams& params);

// CSV block "n,M,exact_tail" followed by the summary header and line
// "verdict,drift,stderr,samples,seed".
std::string to_csv(const XiReport& report);

}  // namespace fms
