#include "fms/rational.hpp"

#include <cctype>
#include <cmath>
#include <limits>

#include <mpfr.h>

#include "fms/errors.hpp"

namespace fms {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

mpz_class parse_integer(std::string_view s, std::string_view whole) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) {
    throw Error(ErrorCode::kParse,
                "malformed rational '" + std::string(whole) + "'");
  }
  mpz_class z(std::string(s), 10);
  return negative ? mpz_class(-z) : z;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view s = trim(text);
  if (s.empty()) throw Error(ErrorCode::kParse, "empty rational");

  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    mpz_class num = parse_integer(trim(s.substr(0, slash)), s);
    std::string_view den_text = trim(s.substr(slash + 1));
    if (!den_text.empty() && den_text.front() == '+') den_text.remove_prefix(1);
    mpz_class den = parse_integer(den_text, s);
    if (den == 0) {
      throw Error(ErrorCode::kParse, "zero denominator in '" + std::string(s) + "'");
    }
    Rational r(num, den);
    r.canonicalize();
    return r;
  }

  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = s.substr(0, dot);
    std::string_view frac_part = s.substr(dot + 1);
    bool negative = !int_part.empty() && int_part.front() == '-';
    if (!int_part.empty() && (int_part.front() == '-' || int_part.front() == '+')) {
      int_part.remove_prefix(1);
    }
    if ((int_part.empty() && frac_part.empty()) ||
        (!int_part.empty() && !all_digits(int_part)) ||
        (!frac_part.empty() && !all_digits(frac_part))) {
      throw Error(ErrorCode::kParse, "malformed decimal '" + std::string(s) + "'");
    }
    std::string digits = std::string(int_part) + std::string(frac_part);
    if (digits.empty()) digits = "0";
    mpz_class num(digits, 10);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_part.size());
    Rational r(negative ? mpz_class(-num) : num, den);
    r.canonicalize();
    return r;
  }

  return Rational(parse_integer(s, s));
}

std::string to_string(const Rational& r) {
  Rational c(r);
  c.canonicalize();
  return c.get_str();
}

long double to_long_double(const Rational& r) {
  mpfr_t t;
  mpfr_init2(t, std::numeric_limits<long double>::digits);
  mpfr_set_q(t, r.get_mpq_t(), MPFR_RNDN);
  long double v = mpfr_get_ld(t, MPFR_RNDN);
  mpfr_clear(t);
  return v;
}

Rational from_long_double(long double v) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite value has no rational form");
  }
  mpfr_t t;
  mpfr_init2(t, std::numeric_limits<long double>::digits);
  mpfr_set_ld(t, v, MPFR_RNDN);
  Rational r;
  mpfr_get_q(r.get_mpq_t(), t);
  mpfr_clear(t);
  return r;
}

std::size_t denominator_bits(const Rational& r) {
  return mpz_sizeinbase(r.get_den().get_mpz_t(), 2);
}

std::uint64_t scaled_threshold(const Rational& r) {
  if (r >= 1) return std::numeric_limits<std::uint64_t>::max();
  if (r <= 0) return 0;
  mpz_class scaled = (mpz_class(r.get_num()) << 64) / r.get_den();
  std::uint64_t hi = mpz_class(scaled >> 32).get_ui();
  std::uint64_t lo = mpz_class(scaled & mpz_class(0xFFFFFFFFUL)).get_ui();
  return (hi << 32) | lo;
}

bool Interval::empty() const {
  if (lo < hi) return false;
  if (lo == hi) return !(lo_closed && hi_closed);
  return true;
}

bool Interval::contains(const Rational& x) const {
  if (x < lo || x > hi) return false;
  if (x == lo && !lo_closed) return false;
  if (x == hi && !hi_closed) return false;
  return true;
}

bool Interval::contains(long double x) const {
  const long double l = to_long_double(lo);
  const long double h = to_long_double(hi);
  if (x < l || x > h) return false;
  if (x == l && !lo_closed) return false;
  if (x == h && !hi_closed) return false;
  return true;
}

bool Interval::contains(const Interval& other) const {
  if (other.empty()) return true;
  if (empty()) return false;
  if (other.lo < lo) return false;
  if (other.lo == lo && other.lo_closed && !lo_closed) return false;
  if (other.hi > hi) return false;
  if (other.hi == hi && other.hi_closed && !hi_closed) return false;
  return true;
}

bool Interval::intersects(const Interval& other) const {
  if (empty() || other.empty()) return false;
  // Overlap is [max lo, min hi] with the tighter ownership at each end.
  Interval meet;
  if (lo > other.lo) {
    meet.lo = lo;
    meet.lo_closed = lo_closed;
  } else if (other.lo > lo) {
    meet.lo = other.lo;
    meet.lo_closed = other.lo_closed;
  } else {
    meet.lo = lo;
    meet.lo_closed = lo_closed && other.lo_closed;
  }
  if (hi < other.hi) {
    meet.hi = hi;
    meet.hi_closed = hi_closed;
  } else if (other.hi < hi) {
    meet.hi = other.hi;
    meet.hi_closed = other.hi_closed;
  } else {
    meet.hi = hi;
    meet.hi_closed = hi_closed && other.hi_closed;
  }
  return !meet.empty();
}

Rational Interval::representative() const {
  if (lo == hi) return lo;
  Rational mid = (lo + hi) / 2;
  mid.canonicalize();
  return mid;
}

std::string to_string(const Interval& iv) {
  if (iv.is_point()) return "{" + to_string(iv.lo) + "}";
  return std::string(iv.lo_closed ? "[" : "(") + to_string(iv.lo) + "," +
         to_string(iv.hi) + (iv.hi_closed ? "]" : ")");
}

}  // namespace fms
