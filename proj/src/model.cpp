#include "fms/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace fms {

namespace {

std::string format_long_double(long double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.21Lg", v);
  return buf;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string strip(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Sorted breakpoints of the common refinement: domain ends plus every piece
// endpoint strictly inside the domain.
std::vector<Rational> refinement_breakpoints(const SystemSpec& spec) {
  std::vector<Rational> pts = {spec.domain.lo, spec.domain.hi};
  for (const Edge& e : spec.edges) {
    if (const auto* pw = std::get_if<PiecewiseConstant>(&e.prob)) {
      for (const Piece& piece : pw->pieces) {
        for (const Rational* b : {&piece.interval.lo, &piece.interval.hi}) {
          if (*b > spec.domain.lo && *b < spec.domain.hi) pts.push_back(*b);
        }
      }
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Cells of the refinement in order: {b0}, (b0,b1), {b1}, ..., {bk}.
std::vector<Interval> refinement_cells(const std::vector<Rational>& pts) {
  std::vector<Interval> cells;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    cells.push_back(Interval::point(pts[i]));
    if (i + 1 < pts.size()) cells.push_back({pts[i], pts[i + 1], false, false});
  }
  return cells;
}

bool has_rationality_edge(const SystemSpec& spec) {
  return std::any_of(spec.edges.begin(), spec.edges.end(), [](const Edge& e) {
    return std::holds_alternative<RationalityPredicate>(e.prob);
  });
}

Rational rational_pow(const Rational& x, int k) {
  Rational r(1);
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

void check_in_domain(const SystemSpec& spec, const Point& x) {
  if (!spec.domain.contains(x.value)) {
    throw Error(ErrorCode::kOutOfDomain,
                "point " + to_string(x) + " outside " + to_string(spec.domain));
  }
}

}  // namespace

// ---------------------------------------------------------------- Point

std::string to_string(const Point& p) {
  if (p.irrational) return "irr:" + format_long_double(p.approx());
  return to_string(p.value);
}

Point parse_point(std::string_view text) {
  std::string s = strip(text);
  if (s.rfind("irr:", 0) == 0) {
    std::string num = strip(std::string_view(s).substr(4));
    char* end = nullptr;
    long double v = std::strtold(num.c_str(), &end);
    if (num.empty() || end == nullptr || *end != '\0' || !std::isfinite(v)) {
      throw Error(ErrorCode::kParse, "malformed irrational point '" + s + "'");
    }
    return Point::irrational_near(v);
  }
  return Point::exact(parse_rational(s));
}

// ---------------------------------------------------------------- AffineMap

long double AffineMap::apply(long double x) const {
  return to_long_double(slope) * x + to_long_double(intercept);
}

Point AffineMap::apply(const Point& x) const {
  if (!x.irrational || slope == 0) {
    Rational v = apply(x.value);
    return {v, x.irrational && slope != 0};
  }
  return Point::irrational_near(to_long_double(apply(x.value)));
}

Interval AffineMap::image(const Interval& iv) const {
  if (slope == 0) return Interval::point(intercept);
  Rational a = apply(iv.lo);
  Rational b = apply(iv.hi);
  if (slope > 0) return {a, b, iv.lo_closed, iv.hi_closed};
  return {b, a, iv.hi_closed, iv.lo_closed};
}

std::optional<Rational> AffineMap::preimage(const Rational& y) const {
  if (slope == 0) return std::nullopt;
  Rational x = (y - intercept) / slope;
  x.canonicalize();
  return x;
}

// ---------------------------------------------------------------- probabilities

std::optional<Rational> evaluate(const ProbabilityFunction& p, const Point& x) {
  if (const auto* rp = std::get_if<RationalityPredicate>(&p)) {
    return x.irrational ? rp->value_on_irrationals : rp->value_on_rationals;
  }
  for (const Piece& piece : std::get<PiecewiseConstant>(p).pieces) {
    if (piece.interval.contains(x.value)) return piece.value;
  }
  return std::nullopt;
}

EdgeIndex SystemSpec::edge_index(std::string_view id) const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].id == id) return i;
  }
  throw Error(ErrorCode::kUnknownEdge, "no edge '" + std::string(id) + "'");
}

bool SystemSpec::is_piecewise_constant() const {
  return std::all_of(edges.begin(), edges.end(), [](const Edge& e) {
    return std::holds_alternative<PiecewiseConstant>(e.prob);
  });
}

bool SystemSpec::is_rationality_predicate() const {
  return !edges.empty() && has_rationality_edge(*this);
}

// ---------------------------------------------------------------- validation

ValidationReport validate_system(const SystemSpec& spec) {
  ValidationReport report;
  auto issue = [&](ErrorCode code, std::string msg) {
    report.issues.push_back({code, std::move(msg)});
  };

  for (const Edge& e : spec.edges) {
    if (const auto* pw = std::get_if<PiecewiseConstant>(&e.prob)) {
      for (std::size_t i = 0; i < pw->pieces.size(); ++i) {
        const Piece& a = pw->pieces[i];
        if (a.interval.empty()) {
          issue(ErrorCode::kIncompletePieces,
                "edge " + e.id + ": empty piece " + to_string(a.interval));
        }
        if (!spec.domain.contains(a.interval)) {
          issue(ErrorCode::kIncompletePieces,
                "edge " + e.id + ": piece " + to_string(a.interval) + " leaves the domain");
        }
        if (a.value < 0 || a.value > 1) {
          issue(ErrorCode::kInvalidArgument,
                "edge " + e.id + ": value " + to_string(a.value) + " outside [0,1]");
        }
        for (std::size_t j = i + 1; j < pw->pieces.size(); ++j) {
          if (a.interval.intersects(pw->pieces[j].interval)) {
            issue(ErrorCode::kOverlappingPieces,
                  "edge " + e.id + ": " + to_string(a.interval) + " overlaps " +
                      to_string(pw->pieces[j].interval));
          }
        }
      }
    } else {
      const auto& rp = std::get<RationalityPredicate>(e.prob);
      for (const Rational* v : {&rp.value_on_rationals, &rp.value_on_irrationals}) {
        if (*v < 0 || *v > 1) {
          issue(ErrorCode::kInvalidArgument,
                "edge " + e.id + ": value " + to_string(*v) + " outside [0,1]");
        }
      }
    }
    Interval img = e.map.image(spec.domain);
    if (!spec.domain.contains(img)) {
      issue(ErrorCode::kMapEscapesDomain,
            "edge " + e.id + ": image " + to_string(img) + " not inside " +
                to_string(spec.domain));
    }
  }

  const bool tagged = has_rationality_edge(spec);
  for (const Interval& cell : refinement_cells(refinement_breakpoints(spec))) {
    for (bool irr : {false, true}) {
      if (irr && (!tagged || cell.is_point())) continue;
      Point rep{cell.representative(), irr};
      Rational sum(0);
      bool complete = true;
      for (const Edge& e : spec.edges) {
        auto v = evaluate(e.prob, rep);
        if (!v) {
          complete = false;
          issue(ErrorCode::kIncompletePieces,
                "edge " + e.id + ": no piece covers " + to_string(cell));
          continue;
        }
        sum += *v;
      }
      report.cells.push_back({cell, irr, sum});
      if (complete && sum != 1) {
        issue(ErrorCode::kNonUnitSum, "cell " + to_string(cell) +
                                          (irr ? " (irrational)" : "") + " sums to " +
                                          to_string(sum));
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------- evaluation

Point apply_map(const SystemSpec& spec, EdgeIndex e, const Point& x) {
  if (e >= spec.num_edges()) {
    throw Error(ErrorCode::kUnknownEdge, "edge index " + std::to_string(e));
  }
  check_in_domain(spec, x);
  return spec.edges[e].map.apply(x);
}

Rational prob(const SystemSpec& spec, EdgeIndex e, const Point& x) {
  if (e >= spec.num_edges()) {
    throw Error(ErrorCode::kUnknownEdge, "edge index " + std::to_string(e));
  }
  check_in_domain(spec, x);
  auto v = evaluate(spec.edges[e].prob, x);
  // Points no piece owns get the zero extension.
  return v ? *v : Rational(0);
}

TestFunction TestFunction::constant(const Rational& c) {
  return TestFunction({Term{c, 0, std::nullopt}});
}

TestFunction TestFunction::monomial(int power, const Rational& c) {
  return TestFunction({Term{c, power, std::nullopt}});
}

namespace {

Interval parse_interval(std::string_view text) {
  std::string s = strip(text);
  if (s.size() >= 3 && s.front() == '{' && s.back() == '}') {
    return Interval::point(parse_rational(std::string_view(s).substr(1, s.size() - 2)));
  }
  if (s.size() < 5 || (s.front() != '[' && s.front() != '(') ||
      (s.back() != ']' && s.back() != ')')) {
    throw Error(ErrorCode::kParse, "malformed interval '" + s + "'");
  }
  auto comma = s.find(',');
  if (comma == std::string::npos) {
    throw Error(ErrorCode::kParse, "malformed interval '" + s + "'");
  }
  Interval iv;
  iv.lo_closed = s.front() == '[';
  iv.hi_closed = s.back() == ']';
  iv.lo = parse_rational(std::string_view(s).substr(1, comma - 1));
  iv.hi = parse_rational(std::string_view(s).substr(comma + 1, s.size() - comma - 2));
  return iv;
}

TestFunction::Term parse_term(const std::string& text, bool negative) {
  TestFunction::Term term{Rational(1), 0, std::nullopt};
  std::string atom = text;
  if (auto star = text.find('*'); star != std::string::npos) {
    term.coefficient = parse_rational(text.substr(0, star));
    atom = strip(text.substr(star + 1));
  }
  if (atom.rfind("ind", 0) == 0) {
    term.indicator = parse_interval(std::string_view(atom).substr(3));
  } else if (!atom.empty() && atom.front() == 'x') {
    std::string rest = strip(std::string_view(atom).substr(1));
    if (rest.empty()) {
      term.power = 1;
    } else if (rest.front() == '^') {
      std::string k = strip(std::string_view(rest).substr(1));
      if (k.empty() || !std::all_of(k.begin(), k.end(), ::isdigit)) {
        throw Error(ErrorCode::kParse, "bad exponent in '" + text + "'");
      }
      term.power = std::stoi(k);
    } else {
      throw Error(ErrorCode::kParse, "unexpected '" + rest + "' in term '" + text + "'");
    }
  } else if (text.find('*') == std::string::npos) {
    term.coefficient = parse_rational(atom);
  } else {
    throw Error(ErrorCode::kParse, "unknown atom '" + atom + "'");
  }
  if (negative) term.coefficient = -term.coefficient;
  return term;
}

}  // namespace

TestFunction TestFunction::parse(std::string_view text) {
  std::vector<Term> terms;
  std::string current;
  bool negative = false;
  int depth = 0;
  auto flush = [&] {
    std::string t = strip(current);
    if (t.empty()) throw Error(ErrorCode::kParse, "empty term in '" + std::string(text) + "'");
    terms.push_back(parse_term(t, negative));
    current.clear();
  };
  bool at_term_start = true;
  for (char c : text) {
    if (is_space(c)) {
      current.push_back(c);
      continue;
    }
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (depth == 0 && (c == '+' || c == '-') && c != '\0') {
      if (at_term_start) {
        if (c == '-') negative = !negative;
        continue;
      }
      flush();
      negative = c == '-';
      at_term_start = true;
      continue;
    }
    at_term_start = false;
    current.push_back(c);
  }
  flush();
  return TestFunction(std::move(terms));
}

Rational TestFunction::operator()(const Rational& x) const {
  Rational sum(0);
  for (const Term& t : terms_) {
    if (t.indicator) {
      if (t.indicator->contains(x)) sum += t.coefficient;
    } else {
      sum += t.coefficient * rational_pow(x, t.power);
    }
  }
  return sum;
}

long double TestFunction::operator()(long double x) const {
  long double sum = 0.0L;
  for (const Term& t : terms_) {
    long double c = to_long_double(t.coefficient);
    if (t.indicator) {
      if (t.indicator->contains(x)) sum += c;
    } else {
      sum += c * std::pow(x, t.power);
    }
  }
  return sum;
}

Rational markov_operator(const SystemSpec& spec, const TestFunction& f, const Point& x) {
  Rational sum(0);
  for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
    Rational p = prob(spec, e, x);
    if (p == 0) continue;
    sum += p * f(apply_map(spec, e, x));
  }
  return sum;
}

double markov_operator(const SystemSpec& spec, const std::function<double(double)>& f,
                       const Point& x) {
  double sum = 0.0;
  for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
    Rational p = prob(spec, e, x);
    if (p == 0) continue;
    sum += p.get_d() * f(static_cast<double>(apply_map(spec, e, x).approx()));
  }
  return sum;
}

Rational DiscreteMeasure::total_mass() const {
  Rational m(0);
  for (const Atom& a : atoms) m += a.weight;
  return m;
}

DiscreteMeasure push_forward(const SystemSpec& spec, const DiscreteMeasure& nu) {
  auto less = [](const Point& a, const Point& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.irrational < b.irrational;
  };
  std::map<Point, Rational, decltype(less)> acc(less);
  for (const Atom& atom : nu.atoms) {
    if (atom.weight == 0) continue;
    for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
      Rational p = prob(spec, e, atom.point);
      if (p == 0) continue;
      acc[apply_map(spec, e, atom.point)] += atom.weight * p;
    }
  }
  DiscreteMeasure out;
  for (auto& [pt, w] : acc) {
    if (w != 0) out.atoms.push_back({pt, w});
  }
  return out;
}

// ---------------------------------------------------------------- ProbabilityTable

ProbabilityTable::ProbabilityTable(const SystemSpec& spec)
    : breakpoints_(refinement_breakpoints(spec)), tag_split_(has_rationality_edge(spec)) {
  for (const Rational& b : breakpoints_) breakpoints_ld_.push_back(to_long_double(b));
  const std::vector<Interval> cells = refinement_cells(breakpoints_);
  const std::size_t n = cells.size() * (tag_split_ ? 2 : 1);
  probs_.resize(n);
  log_probs_.resize(n);
  thresholds_.resize(n);
  last_positive_.assign(n, spec.num_edges());
  for (std::size_t c = 0; c < n; ++c) {
    const Interval& cell = cells[tag_split_ ? c / 2 : c];
    const bool irr = tag_split_ && (c % 2 == 1);
    Point rep{cell.representative(), irr};
    Rational cum(0);
    for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
      Rational p = evaluate(spec.edges[e].prob, rep).value_or(Rational(0));
      cum += p;
      probs_[c].push_back(p);
      log_probs_[c].push_back(p > 0 ? std::log(p.get_d())
                                    : -std::numeric_limits<double>::infinity());
      thresholds_[c].push_back(scaled_threshold(cum));
      if (p > 0) last_positive_[c] = e;
    }
    if (cum != 1) last_positive_[c] = spec.num_edges();
  }
}

std::size_t ProbabilityTable::base_cell(const Rational& x) const {
  if (x < breakpoints_.front() || x > breakpoints_.back()) {
    throw Error(ErrorCode::kOutOfDomain, "point " + to_string(x) + " outside the domain");
  }
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
  if (*it == x) return 2 * i;
  return 2 * (i - 1) + 1;
}

std::size_t ProbabilityTable::base_cell(long double x) const {
  if (!(x >= breakpoints_ld_.front() && x <= breakpoints_ld_.back())) {
    throw Error(ErrorCode::kOutOfDomain, "point outside the domain");
  }
  auto it = std::lower_bound(breakpoints_ld_.begin(), breakpoints_ld_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - breakpoints_ld_.begin());
  if (*it == x) return 2 * i;
  return 2 * (i - 1) + 1;
}

std::size_t ProbabilityTable::cell_of(const Rational& x, bool irrational) const {
  std::size_t b = base_cell(x);
  return tag_split_ ? 2 * b + (irrational ? 1 : 0) : b;
}

std::size_t ProbabilityTable::cell_of(long double x, bool irrational) const {
  std::size_t b = base_cell(x);
  return tag_split_ ? 2 * b + (irrational ? 1 : 0) : b;
}

EdgeIndex ProbabilityTable::draw(std::size_t cell, std::uint64_t u) const {
  const EdgeIndex last = last_positive_[cell];
  if (last == probs_[cell].size()) {
    throw Error(ErrorCode::kZeroMassState,
                "edge probabilities do not sum to 1 on table cell " + std::to_string(cell));
  }
  for (EdgeIndex e = 0; e < last; ++e) {
    if (probs_[cell][e] > 0 && u < thresholds_[cell][e]) return e;
  }
  return last;
}

// ---------------------------------------------------------------- OrbitPoint

OrbitPoint::OrbitPoint(const Point& p) : irrational_(p.irrational) {
  if (p.irrational) {
    approx_ = p.approx();
  } else {
    exact_ = p.value;
  }
}

void OrbitPoint::advance(const AffineMap& m, long double slope_ld, long double intercept_ld,
                         std::size_t exact_bits_cap) {
  if (m.slope == 0) {
    exact_ = m.intercept;
    irrational_ = false;
    return;
  }
  if (exact_) {
    *exact_ = m.slope * *exact_ + m.intercept;
    if (denominator_bits(*exact_) > exact_bits_cap) {
      approx_ = to_long_double(*exact_);
      exact_.reset();
    }
    return;
  }
  approx_ = slope_ld * approx_ + intercept_ld;
}

std::size_t OrbitPoint::cell(const ProbabilityTable& table) const {
  if (exact_) return table.cell_of(*exact_, irrational_);
  return table.cell_of(approx_, irrational_);
}

Point OrbitPoint::to_point() const {
  if (exact_) return Point::exact(*exact_);
  return {from_long_double(approx_), irrational_};
}

Stepper::Stepper(const SystemSpec& spec, std::size_t exact_bits_cap)
    : spec_(&spec), table_(spec), cap_(exact_bits_cap) {
  for (const Edge& e : spec.edges) {
    slopes_.push_back(to_long_double(e.map.slope));
    intercepts_.push_back(to_long_double(e.map.intercept));
  }
}

void Stepper::advance(OrbitPoint& x, EdgeIndex e) const {
  x.advance(spec_->edges[e].map, slopes_[e], intercepts_[e], cap_);
}

EdgeIndex Stepper::step(OrbitPoint& x, std::uint64_t u) const {
  const EdgeIndex e = table_.draw(x.cell(table_), u);
  advance(x, e);
  return e;
}

}  // namespace fms
