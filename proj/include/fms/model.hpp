#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fms/errors.hpp"
#include "fms/rational.hpp"

namespace fms {

// A point of the state interval. Irrational points carry a rational stand-in
// (the nearest long double) used for interval membership and map arithmetic;
// the rationality predicate reads only the tag.
struct Point {
  Rational value;
  bool irrational = false;

  static Point exact(Rational v) { return {std::move(v), false}; }
  static Point irrational_near(long double approx) {
    return {from_long_double(approx), true};
  }

  long double approx() const { return to_long_double(value); }

  friend bool operator==(const Point& a, const Point& b) {
    return a.irrational == b.irrational && a.value == b.value;
  }
};

std::string to_string(const Point& p);

// "1/3", "0.25", or "irr:0.7071067811865475" for a tagged irrational.
Point parse_point(std::string_view text);

struct AffineMap {
  Rational slope;
  Rational intercept;

  Rational apply(const Rational& x) const { return slope * x + intercept; }
  long double apply(long double x) const;
  Point apply(const Point& x) const;
  // Image of an interval; ownership flags follow the endpoints (and swap for
  // decreasing maps).
  Interval image(const Interval& iv) const;
  // Preimage of a single point, when the slope is nonzero.
  std::optional<Rational> preimage(const Rational& y) const;
};

struct Piece {
  Interval interval;
  Rational value;
};

struct PiecewiseConstant {
  std::vector<Piece> pieces;
};

struct RationalityPredicate {
  Rational value_on_rationals;
  Rational value_on_irrationals;
};

using ProbabilityFunction = std::variant<PiecewiseConstant, RationalityPredicate>;

// Piece lookup by exact membership; nullopt when no piece owns x.
std::optional<Rational> evaluate(const ProbabilityFunction& p, const Point& x);

struct Edge {
  std::string id;
  AffineMap map;
  ProbabilityFunction prob;
};

using EdgeIndex = std::size_t;

struct SystemSpec {
  Interval domain;  // closed [lo, hi]
  std::vector<Edge> edges;

  std::size_t num_edges() const { return edges.size(); }
  EdgeIndex edge_index(std::string_view id) const;
  bool is_piecewise_constant() const;
  bool is_rationality_predicate() const;
};

// ---------------------------------------------------------------- validation

struct CellSum {
  Interval cell;
  bool irrational = false;  // evaluated at an irrational-tagged point
  Rational sum;
};

struct ValidationIssue {
  ErrorCode code;
  std::string message;
};

struct ValidationReport {
  std::vector<CellSum> cells;
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
};

// Checks the probability sums on every cell of the common breakpoint
// refinement, piece coverage, and map invariance of the domain.
ValidationReport validate_system(const SystemSpec& spec);

// ---------------------------------------------------------------- evaluation

Point apply_map(const SystemSpec& spec, EdgeIndex e, const Point& x);
Rational prob(const SystemSpec& spec, EdgeIndex e, const Point& x);

// Small expression grammar for test functions: sums of c*x^k and
// c*ind<interval> terms, evaluated exactly on rationals.
class TestFunction {
 public:
  struct Term {
    Rational coefficient;
    int power = 0;                    // used when indicator is empty
    std::optional<Interval> indicator;
  };

  TestFunction() = default;
  explicit TestFunction(std::vector<Term> terms) : terms_(std::move(terms)) {}

  // Grammar: term (('+'|'-') term)*, term := [coef '*'] atom | coef,
  // atom := 'x' ['^' k] | 'ind' interval, e.g. "x^2 - 1/2*x + ind(1/3,1]".
  static TestFunction parse(std::string_view text);
  static TestFunction constant(const Rational& c);
  static TestFunction monomial(int power, const Rational& c = Rational(1));

  Rational operator()(const Rational& x) const;
  long double operator()(long double x) const;
  Rational operator()(const Point& x) const { return (*this)(x.value); }

  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
};

// U f(x) = sum_e p_e(x) f(w_e(x)), exact in rational arithmetic.
Rational markov_operator(const SystemSpec& spec, const TestFunction& f, const Point& x);
double markov_operator(const SystemSpec& spec, const std::function<double(double)>& f,
                       const Point& x);

struct Atom {
  Point point;
  Rational weight;
};

struct DiscreteMeasure {
  std::vector<Atom> atoms;

  Rational total_mass() const;
};

// U* nu = sum_x nu(x) sum_e p_e(x) delta_{w_e(x)}; zero weights dropped,
// coincident points merged, atoms ordered by (value, tag).
DiscreteMeasure push_forward(const SystemSpec& spec, const DiscreteMeasure& nu);

// ---------------------------------------------------------------- sampling

// Probabilities tabulated on the common refinement of all breakpoints (point
// cells and the open gaps between them, split by the rationality tag when any
// edge uses the predicate). Drives fast repeated evaluation along orbits.
class ProbabilityTable {
 public:
  explicit ProbabilityTable(const SystemSpec& spec);

  std::size_t num_cells() const { return probs_.size(); }
  std::size_t cell_of(const Rational& x, bool irrational) const;
  std::size_t cell_of(long double x, bool irrational) const;

  const std::vector<Rational>& probs(std::size_t cell) const { return probs_[cell]; }
  const std::vector<double>& log_probs(std::size_t cell) const { return log_probs_[cell]; }
  // Label for a 64-bit uniform draw: the first positive edge e with
  // u < floor(cum_e * 2^64), the last positive edge absorbing the remainder.
  EdgeIndex draw(std::size_t cell, std::uint64_t u) const;

 private:
  std::size_t base_cell(const Rational& x) const;
  std::size_t base_cell(long double x) const;

  std::vector<Rational> breakpoints_;
  std::vector<long double> breakpoints_ld_;
  bool tag_split_ = false;
  std::vector<std::vector<Rational>> probs_;
  std::vector<std::vector<double>> log_probs_;
  std::vector<std::vector<std::uint64_t>> thresholds_;
  std::vector<EdgeIndex> last_positive_;
};

// A point moving along an orbit: exact while its denominator stays below a
// bit cap, long double afterwards. Tagged irrationals are always approximate.
class OrbitPoint {
 public:
  explicit OrbitPoint(const Point& p);

  bool is_exact() const { return exact_.has_value(); }
  const Rational& exact() const { return *exact_; }
  long double approx() const { return exact_ ? to_long_double(*exact_) : approx_; }
  bool irrational() const { return irrational_; }

  // slope_ld/intercept_ld are the long double images of m's coefficients.
  void advance(const AffineMap& m, long double slope_ld, long double intercept_ld,
               std::size_t exact_bits_cap);
  std::size_t cell(const ProbabilityTable& table) const;
  Point to_point() const;

 private:
  std::optional<Rational> exact_;
  long double approx_ = 0.0L;
  bool irrational_ = false;
};

// Probability table plus cached map coefficients for sampling orbits.
class Stepper {
 public:
  Stepper(const SystemSpec& spec, std::size_t exact_bits_cap);

  const SystemSpec& spec() const { return *spec_; }
  const ProbabilityTable& table() const { return table_; }
  std::size_t exact_bits_cap() const { return cap_; }

  void advance(OrbitPoint& x, EdgeIndex e) const;
  // Draws a label at x from the uniform word u, moves x, returns the label.
  EdgeIndex step(OrbitPoint& x, std::uint64_t u) const;

 private:
  const SystemSpec* spec_;
  ProbabilityTable table_;
  std::vector<long double> slopes_;
  std::vector<long double> intercepts_;
  std::size_t cap_;
};

}  // namespace fms
