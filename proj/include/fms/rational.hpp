#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace fms {

using Rational = mpq_class;

// Accepts "p/q", "p", and finite decimals such as "-0.125". The result is
// canonicalized.
Rational parse_rational(std::string_view text);

// Canonical GMP form: "p/q", or "p" when the denominator is 1.
std::string to_string(const Rational& r);

long double to_long_double(const Rational& r);

// Exact value of a finite long double.
Rational from_long_double(long double v);

std::size_t denominator_bits(const Rational& r);

// floor(r * 2^64) for r in [0, 1); values >= 1 saturate to UINT64_MAX.
std::uint64_t scaled_threshold(const Rational& r);

// Closed/open/half-open interval with rational endpoints. A degenerate
// interval {a} has lo == hi and both ends closed.
struct Interval {
  Rational lo;
  Rational hi;
  bool lo_closed = true;
  bool hi_closed = true;

  static Interval closed(Rational lo, Rational hi) {
    return {std::move(lo), std::move(hi), true, true};
  }
  static Interval point(const Rational& a) { return {a, a, true, true}; }

  bool empty() const;
  bool is_point() const { return lo == hi && lo_closed && hi_closed; }
  bool contains(const Rational& x) const;
  bool contains(long double x) const;
  bool contains(const Interval& other) const;
  bool intersects(const Interval& other) const;
  // A rational strictly inside when nondegenerate, else the point itself.
  Rational representative() const;

  friend bool operator==(const Interval& a, const Interval& b) {
    return a.lo == b.lo && a.hi == b.hi && a.lo_closed == b.lo_closed &&
           a.hi_closed == b.hi_closed;
  }
};

// Interval notation: "[0,1/9]", "(1/9,1/3]", "{0}".
std::string to_string(const Interval& iv);

}  // namespace fms
