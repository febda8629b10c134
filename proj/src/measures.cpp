#include "fms/measures.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "fms/rng.hpp"

namespace fms {

namespace {

void check_budget(const SystemSpec& spec, std::size_t depth, std::uint64_t budget) {
  long double words = 1.0L;
  for (std::size_t i = 0; i < depth; ++i) words *= static_cast<long double>(spec.num_edges());
  if (words > static_cast<long double>(budget)) {
    std::ostringstream msg;
    msg << "|E|^n = " << spec.num_edges() << "^" << depth << " exceeds budget " << budget;
    throw Error(ErrorCode::kBudgetExceeded, msg.str());
  }
}

void check_point(const SystemSpec& spec, const Point& x) {
  if (!spec.domain.contains(x.value)) {
    throw Error(ErrorCode::kOutOfDomain, "point " + to_string(x) + " outside the domain");
  }
}

// Depth-first walk over cylinders up to `depth` carrying both P_x and P_y.
// Subtrees null under both measures are skipped. `visit(word, px, py)` runs at
// every visited node of depth >= 1.
template <class Visit>
void walk_pairs(const SystemSpec& spec, const Point& x, const Point& y, std::size_t depth,
                Visit&& visit) {
  Word word;
  auto rec = [&](auto& self, const Point& px_pt, const Point& py_pt, const Rational& px,
                 const Rational& py) -> void {
    if (word.size() == depth) return;
    for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
      Rational qx = px == 0 ? Rational(0) : px * prob(spec, e, px_pt);
      Rational qy = py == 0 ? Rational(0) : py * prob(spec, e, py_pt);
      if (qx == 0 && qy == 0) continue;
      word.push_back(e);
      visit(static_cast<const Word&>(word), qx, qy);
      const Point nx = qx == 0 ? px_pt : apply_map(spec, e, px_pt);
      const Point ny = qy == 0 ? py_pt : apply_map(spec, e, py_pt);
      self(self, nx, ny, qx, qy);
      word.pop_back();
    }
  };
  rec(rec, x, y, Rational(1), Rational(1));
}

// Outcome of one sampled path of the log likelihood ratio.
struct PathResult {
  bool infinite = false;
  double log_half = 0.0;
  double log_end = 0.0;
  std::optional<Word> witness;  // exact-mode separating prefix
};

std::vector<PathResult> sample_paths(const SystemSpec& spec, const Point& from,
                                     const Point& other, std::uint64_t stream,
                                     const XiParams& params) {
  const Stepper stepper(spec, params.exact_bits);
  const ProbabilityTable& table = stepper.table();
  std::vector<PathResult> results(params.num_samples);
  const std::size_t half = params.n_mc / 2;

  auto run = [&](std::size_t begin, std::size_t end) {
    Word labels;
    for (std::size_t i = begin; i < end; ++i) {
      auto rng = substream(params.seed, stream, i);
      OrbitPoint a(from);
      OrbitPoint b(other);
      PathResult& r = results[i];
      double log_ratio = 0.0;
      labels.clear();
      for (std::size_t k = 0; k < params.n_mc; ++k) {
        if (k == half) r.log_half = log_ratio;
        const std::size_t ca = a.cell(table);
        EdgeIndex e;
        try {
          e = table.draw(ca, rng());
        } catch (const Error& err) {
          if (err.code() != ErrorCode::kZeroMassState) throw;
          throw Error(ErrorCode::kDegenerateSampling, err.what());
        }
        labels.push_back(e);
        const double la = table.log_probs(ca)[e];
        const double lb = table.log_probs(b.cell(table))[e];
        if (std::isinf(lb)) {
          r.infinite = true;
          if (a.is_exact() && b.is_exact()) r.witness = labels;
          break;
        }
        log_ratio += la - lb;
        stepper.advance(a, e);
        stepper.advance(b, e);
      }
      if (params.n_mc == half) r.log_half = log_ratio;
      r.log_end = log_ratio;
    }
  };

  const unsigned threads = std::max(1u, params.threads);
  if (threads == 1 || params.num_samples < 2) {
    run(0, params.num_samples);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (params.num_samples + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(params.num_samples, b + chunk);
      if (b >= e) break;
      pool.emplace_back(run, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return results;
}

DriftEstimate summarize_drift(const std::vector<PathResult>& paths, std::size_t n_mc) {
  DriftEstimate d;
  const double span = static_cast<double>(n_mc - n_mc / 2);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const PathResult& p : paths) {
    if (p.infinite) {
      ++d.infinite_paths;
      continue;
    }
    const double inc = span > 0 ? (p.log_end - p.log_half) / span : 0.0;
    sum += inc;
    sum_sq += inc * inc;
    ++d.finite_paths;
  }
  if (d.finite_paths == 0) {
    d.drift = std::numeric_limits<double>::infinity();
    d.z = std::numeric_limits<double>::infinity();
    return d;
  }
  const double n = static_cast<double>(d.finite_paths);
  d.drift = sum / n;
  const double var = d.finite_paths > 1 ? std::max(0.0, (sum_sq - n * d.drift * d.drift) / (n - 1))
                                        : 0.0;
  d.std_error = std::sqrt(var / n);
  if (d.std_error > 0) {
    d.z = d.drift / d.std_error;
  } else {
    d.z = d.drift == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), d.drift);
  }
  if (d.infinite_paths > 0) d.z = std::numeric_limits<double>::infinity();
  return d;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string format_word(const SystemSpec& spec, const Word& w) {
  std::string out = "[";
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ",";
    out += w[i] < spec.num_edges() ? spec.edges[w[i]].id : "?";
  }
  return out + "]";
}

Word parse_word(const SystemSpec& spec, std::string_view text) {
  std::string s(text);
  std::string inner;
  for (char c : s) {
    if (c != '[' && c != ']' && !std::isspace(static_cast<unsigned char>(c))) inner.push_back(c);
  }
  Word w;
  std::stringstream ss(inner);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) w.push_back(spec.edge_index(tok));
  }
  return w;
}

std::string to_string(const ExtendedRatio& r) {
  return r.infinite ? "inf" : to_string(r.value);
}

std::string_view to_string(XiVerdict v) {
  switch (v) {
    case XiVerdict::kEquivalent: return "equivalent";
    case XiVerdict::kSingularCertified: return "singular_certified";
    case XiVerdict::kSingularStatistical: return "singular_statistical";
    case XiVerdict::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Rational cylinder_measure(const SystemSpec& spec, const Point& x, const Word& w) {
  check_point(spec, x);
  for (EdgeIndex e : w) {
    if (e >= spec.num_edges()) {
      throw Error(ErrorCode::kUnknownEdge, "edge index " + std::to_string(e));
    }
  }
  Rational mass(1);
  Point cur = x;
  for (std::size_t k = 0; k < w.size(); ++k) {
    Rational p = prob(spec, w[k], cur);
    if (p == 0) return Rational(0);
    mass *= p;
    if (k + 1 < w.size()) cur = apply_map(spec, w[k], cur);
  }
  return mass;
}

std::vector<CylinderMass> enumerate_cylinders(const SystemSpec& spec, const Point& x,
                                              std::size_t depth, bool omit_zero,
                                              std::uint64_t budget) {
  check_point(spec, x);
  check_budget(spec, depth, budget);
  std::vector<CylinderMass> out;
  Word word;
  auto rec = [&](auto& self, const Point& cur, const Rational& mass) -> void {
    if (word.size() == depth) {
      if (!omit_zero || mass != 0) out.push_back({word, mass});
      return;
    }
    for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
      Rational q = mass == 0 ? Rational(0) : mass * prob(spec, e, cur);
      if (q == 0 && omit_zero) continue;
      word.push_back(e);
      self(self, q == 0 ? cur : apply_map(spec, e, cur), q);
      word.pop_back();
    }
  };
  rec(rec, x, Rational(1));
  return out;
}

ExtendedRatio likelihood_ratio(const SystemSpec& spec, const Point& x, const Point& y,
                               const Word& w) {
  Rational px = cylinder_measure(spec, x, w);
  if (px == 0) return ExtendedRatio::finite(Rational(0));
  Rational py = cylinder_measure(spec, y, w);
  if (py == 0) return ExtendedRatio::infinity();
  Rational r = px / py;
  r.canonicalize();
  return ExtendedRatio::finite(r);
}

Rational martingale_discrepancy(const SystemSpec& spec, const Point& x, const Point& y,
                                std::size_t m, std::size_t n, std::uint64_t budget) {
  if (m > n) throw Error(ErrorCode::kInvalidArgument, "martingale check needs m <= n");
  check_point(spec, x);
  check_point(spec, y);
  check_budget(spec, n, budget);
  // Per depth-m prefix: (P_x(C_m), P_y(C_m), sum of P_x over P_y-positive
  // depth-n subcylinders).
  struct Acc {
    Rational px_m, py_m, integral_n;
  };
  std::map<Word, Acc> acc;
  walk_pairs(spec, x, y, n, [&](const Word& w, const Rational& px, const Rational& py) {
    if (w.size() == m) {
      Acc& a = acc[w];
      a.px_m = px;
      a.py_m = py;
    }
    if (w.size() == n && py > 0) {
      acc[Word(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(m))].integral_n += px;
    }
  });
  if (m == 0) {
    acc[Word{}].px_m = 1;
    acc[Word{}].py_m = 1;
  }
  Rational worst(0);
  for (const auto& [prefix, a] : acc) {
    if (a.py_m == 0) continue;
    // X_m is constant on C_m, so int_{C_m} X_m dP_y = P_x(C_m).
    Rational d = abs(a.integral_n - a.px_m);
    if (d > worst) worst = d;
  }
  return worst;
}

Rational tail_mass_exact(const SystemSpec& spec, const Point& x, const Point& y,
                         std::size_t n, const Rational& M, std::uint64_t budget) {
  check_point(spec, x);
  check_point(spec, y);
  check_budget(spec, n, budget);
  Rational tail(0);
  walk_pairs(spec, x, y, n, [&](const Word& w, const Rational& px, const Rational& py) {
    if (w.size() != n || px == 0) return;
    if (py == 0 || px > M * py) tail += px;
  });
  return tail;
}

XiReport xi_estimate(const SystemSpec& spec, const Point& x, const Point& y,
                     const XiParams& params) {
  check_point(spec, x);
  check_point(spec, y);
  if (params.n_exact == 0 || params.m_grid.empty() || params.num_samples == 0 ||
      params.n_mc == 0) {
    throw Error(ErrorCode::kInvalidArgument, "xi parameters must be positive");
  }
  check_budget(spec, params.n_exact, params.budget);

  XiReport report;
  report.seed = params.seed;
  report.samples = params.num_samples;

  // Exact tails for every depth up to n_exact in a single walk.
  const std::size_t grid = params.m_grid.size();
  std::vector<std::vector<Rational>> tails(params.n_exact + 1,
                                           std::vector<Rational>(grid, Rational(0)));
  walk_pairs(spec, x, y, params.n_exact,
             [&](const Word& w, const Rational& px, const Rational& py) {
               const std::size_t d = w.size();
               if ((px > 0) != (py > 0)) {
                 report.infinite_branch = true;
                 if (!report.separating_word || w.size() < report.separating_word->size()) {
                   report.separating_word = w;
                 }
               }
               for (std::size_t k = 0; k < grid; ++k) {
                 const Rational& M = params.m_grid[k];
                 if (px > 0 && (py == 0 || px > M * py)) tails[d][k] += px;
                 if (py > 0 && (px == 0 || py > M * px)) tails[d][k] += py;
               }
             });
  for (std::size_t d = 1; d <= params.n_exact; ++d) {
    for (std::size_t k = 0; k < grid; ++k) {
      report.exact_tail_table.push_back({d, params.m_grid[k], tails[d][k]});
    }
  }

  // Monte Carlo under P_x for log X_n and under P_y for log Y_n.
  const auto paths_x = sample_paths(spec, x, y, streams::kXiUnderX, params);
  const auto paths_y = sample_paths(spec, y, x, streams::kXiUnderY, params);
  report.drift_x = summarize_drift(paths_x, params.n_mc);
  report.drift_y = summarize_drift(paths_y, params.n_mc);

  bool mc_certified = false;
  for (const auto* paths : {&paths_x, &paths_y}) {
    for (const PathResult& p : *paths) {
      if (!p.witness) continue;
      // Re-verify the sampled prefix exactly before treating it as a witness.
      Rational a = cylinder_measure(spec, x, *p.witness);
      Rational b = cylinder_measure(spec, y, *p.witness);
      if ((a > 0) != (b > 0)) {
        mc_certified = true;
        if (!report.separating_word || p.witness->size() < report.separating_word->size()) {
          report.separating_word = p.witness;
        }
      }
    }
  }

  for (std::size_t k = 0; k < grid; ++k) {
    const double log_m = std::log(params.m_grid[k].get_d());
    std::size_t hits_x = 0;
    std::size_t hits_y = 0;
    for (const PathResult& p : paths_x) hits_x += (p.infinite || p.log_end > log_m) ? 1 : 0;
    for (const PathResult& p : paths_y) hits_y += (p.infinite || p.log_end > log_m) ? 1 : 0;
    const double n = static_cast<double>(params.num_samples);
    report.mc_tail_estimates.emplace_back(params.m_grid[k], hits_x / n + hits_y / n);
  }

  bool persistent = true;
  bool zero_above = true;
  for (std::size_t k = 0; k < grid; ++k) {
    if (tails[params.n_exact][k].get_d() < 1.0 - params.tail_tol) persistent = false;
  }
  for (std::size_t d = 1; d <= params.n_exact; ++d) {
    for (std::size_t k = 0; k < grid; ++k) {
      if (params.m_grid[k] >= params.zero_tail_from && tails[d][k] != 0) zero_above = false;
    }
  }

  const double z_max = std::max(report.drift_x.z, report.drift_y.z);
  const double z_abs = std::max(std::abs(report.drift_x.z), std::abs(report.drift_y.z));
  if (report.infinite_branch || mc_certified || persistent) {
    report.verdict = XiVerdict::kSingularCertified;
  } else if (z_max > params.drift_z) {
    report.verdict = XiVerdict::kSingularStatistical;
  } else if (params.certified_equivalent || (zero_above && z_abs < params.drift_z)) {
    report.verdict = XiVerdict::kEquivalent;
  } else {
    report.verdict = XiVerdict::kInconclusive;
  }
  return report;
}

std::string to_csv(const XiReport& report) {
  std::ostringstream out;
  out << "n,M,exact_tail\n";
  for (const TailEntry& t : report.exact_tail_table) {
    out << t.n << "," << to_string(t.M) << "," << to_string(t.mass) << "\n";
  }
  out << "verdict,drift,stderr,samples,seed\n";
  out << to_string(report.verdict) << "," << format_double(report.drift_x.drift) << ","
      << format_double(report.drift_x.std_error) << "," << report.samples << ","
      << report.seed << "\n";
  return out.str();
}

}  // namespace fms
