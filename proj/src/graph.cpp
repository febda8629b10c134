#include "fms/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <sstream>

namespace fms {

namespace {

std::vector<char> reachable_from(const Adjacency& adj, std::size_t root) {
  std::vector<char> seen(adj.size(), 0);
  std::vector<std::size_t> stack = {root};
  seen[root] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

Adjacency matrix_adjacency(const RationalMatrix& a) {
  Adjacency adj(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[i][j] != 0) adj[i].push_back(j);
    }
  }
  return adj;
}

std::vector<Rational> solve_component(const RationalMatrix& a,
                                      const std::vector<std::size_t>& comp) {
  const std::size_t n = comp.size();
  // pi (A_C - I) = 0 with the last equation replaced by sum pi = 1.
  RationalMatrix m(n, RationalVector(n, Rational(0)));
  RationalVector rhs(n, Rational(0));
  for (std::size_t r = 0; r + 1 < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      m[r][c] = a[comp[c]][comp[r]] - (r == c ? 1 : 0);
    }
  }
  for (std::size_t c = 0; c < n; ++c) m[n - 1][c] = 1;
  rhs[n - 1] = 1;
  auto sol = solve_exact(m, rhs);
  if (!sol) throw Error(ErrorCode::kSingularSystem, "stationary equations are singular");
  std::vector<Rational> pi(a.size(), Rational(0));
  for (std::size_t k = 0; k < n; ++k) pi[comp[k]] = (*sol)[k];
  return pi;
}

std::vector<double> power_component(const RationalMatrix& a, const std::vector<std::size_t>& comp,
                                    const StationaryOptions& options, double* residual) {
  const std::size_t n = comp.size();
  std::vector<std::vector<std::pair<std::size_t, long double>>> rows(n);
  std::vector<std::ptrdiff_t> local(a.size(), -1);
  for (std::size_t k = 0; k < n; ++k) local[comp[k]] = static_cast<std::ptrdiff_t>(k);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[comp[k]][j] != 0 && local[j] >= 0) {
        rows[k].emplace_back(static_cast<std::size_t>(local[j]), to_long_double(a[comp[k]][j]));
      }
    }
  }
  std::vector<long double> x(n, 1.0L / n);
  std::vector<long double> next(n);
  // Lazy chain (A + I)/2 removes periodicity without moving the fixed point.
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0L);
    for (std::size_t k = 0; k < n; ++k) {
      next[k] += 0.5L * x[k];
      for (auto [j, p] : rows[k]) next[j] += 0.5L * x[k] * p;
    }
    long double diff = 0.0L;
    for (std::size_t k = 0; k < n; ++k) diff = std::max(diff, std::fabs(next[k] - x[k]));
    x.swap(next);
    if (diff < options.tolerance) break;
  }
  long double total = std::accumulate(x.begin(), x.end(), 0.0L);
  std::vector<long double> image(n, 0.0L);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] /= total;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (auto [j, p] : rows[k]) image[j] += x[k] * p;
  }
  long double worst = 0.0L;
  for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::fabs(image[k] - x[k]));
  *residual = static_cast<double>(worst);
  std::vector<double> pi(a.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) pi[comp[k]] = static_cast<double>(x[k]);
  return pi;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Adjacency Digraph::adjacency() const {
  Adjacency adj(num_vertices());
  for (const Arc& a : arcs) adj[a.source].push_back(a.target);
  return adj;
}

Digraph support_graph(const LabeledChain& chain) {
  Digraph g;
  g.vertices = chain.state_names;
  for (std::size_t s = 0; s < chain.num_states(); ++s) {
    for (std::size_t e = 0; e < chain.num_labels(); ++e) {
      const auto& t = chain.transitions[s][e];
      if (t) g.arcs.push_back({s, t->target, chain.labels[e]});
    }
  }
  return g;
}

Digraph fms_graph(const FundamentalPartition& fp) {
  Digraph g;
  for (std::size_t k = 0; k < fp.num_classes(); ++k) g.vertices.push_back(fp.class_name(k));
  for (const FmsEdge& e : fp.edges) {
    g.arcs.push_back({e.source, e.target, fp.chain.labels[e.label]});
  }
  return g;
}

Digraph induced_subgraph(const Digraph& g, const std::vector<std::size_t>& vertices) {
  std::vector<std::ptrdiff_t> index(g.num_vertices(), -1);
  Digraph out;
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    if (vertices[k] >= g.num_vertices()) {
      throw Error(ErrorCode::kInvalidArgument, "vertex out of range");
    }
    index[vertices[k]] = static_cast<std::ptrdiff_t>(k);
    out.vertices.push_back(g.vertices[vertices[k]]);
  }
  for (const Arc& a : g.arcs) {
    if (index[a.source] >= 0 && index[a.target] >= 0) {
      out.arcs.push_back({static_cast<std::size_t>(index[a.source]),
                          static_cast<std::size_t>(index[a.target]), a.label});
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> strongly_connected_components(const Digraph& g) {
  std::size_t count = 0;
  const auto comp = strongly_connected_components(g.adjacency(), &count);
  std::vector<std::vector<std::size_t>> out(count);
  for (std::size_t v = 0; v < comp.size(); ++v) out[comp[v]].push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::size_t>> terminal_components(const Digraph& g) {
  return terminal_components(g.adjacency());
}

bool is_irreducible(const Digraph& g) {
  if (g.num_vertices() == 0) return false;
  std::size_t count = 0;
  strongly_connected_components(g.adjacency(), &count);
  return count == 1;
}

std::vector<std::size_t> component_periods(const Digraph& g) {
  const auto comps = strongly_connected_components(g);
  const Adjacency adj = g.adjacency();
  std::vector<std::size_t> periods;
  std::vector<std::ptrdiff_t> level(g.num_vertices(), -1);
  std::vector<std::ptrdiff_t> comp_of(g.num_vertices(), -1);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (std::size_t v : comps[c]) comp_of[v] = static_cast<std::ptrdiff_t>(c);
  }
  for (std::size_t c = 0; c < comps.size(); ++c) {
    // BFS levels inside the component; the period is the gcd of level defects.
    const std::size_t root = comps[c][0];
    std::deque<std::size_t> queue = {root};
    level[root] = 0;
    std::size_t period = 0;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      for (std::size_t w : adj[v]) {
        if (comp_of[w] != static_cast<std::ptrdiff_t>(c)) continue;
        if (level[w] < 0) {
          level[w] = level[v] + 1;
          queue.push_back(w);
        } else {
          const auto defect = static_cast<std::size_t>(std::abs(level[v] + 1 - level[w]));
          period = std::gcd(period, defect);
        }
      }
    }
    // Any arc inside a component closes a cycle; a lone vertex needs a loop.
    bool cyclic = comps[c].size() > 1;
    if (!cyclic) {
      for (std::size_t w : adj[root]) cyclic = cyclic || w == root;
    }
    periods.push_back(cyclic ? period : 0);
  }
  return periods;
}

bool is_aperiodic(const Digraph& g) {
  const auto periods = component_periods(g);
  return std::all_of(periods.begin(), periods.end(), [](std::size_t p) { return p == 0 || p == 1; });
}

bool is_recurrent(const Digraph& g) {
  if (g.num_vertices() == 0) return false;
  const Adjacency adj = g.adjacency();
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto seen = reachable_from(adj, v);
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) return false;
  }
  return true;
}

std::string_view to_string(StationaryMethod m) {
  return m == StationaryMethod::kExactSolve ? "exact_solve" : "power_iteration";
}

StationaryResult stationary_distribution(const RationalMatrix& a,
                                         const StationaryOptions& options) {
  if (a.empty()) throw Error(ErrorCode::kInvalidArgument, "empty transition matrix");
  StationaryResult r;
  r.terminal_components = terminal_components(matrix_adjacency(a));
  r.unique = r.terminal_components.size() == 1;
  std::size_t largest = 0;
  for (const auto& c : r.terminal_components) largest = std::max(largest, c.size());
  if (options.force_power_iteration || largest > options.exact_limit) {
    r.method = StationaryMethod::kPowerIteration;
    double residual = 0.0;
    for (const auto& c : r.terminal_components) {
      double res = 0.0;
      auto pi = power_component(a, c, options, &res);
      if (r.pi_approx.empty()) r.pi_approx = std::move(pi);
      residual = std::max(residual, res);
    }
    r.residual = residual;
    return r;
  }
  r.method = StationaryMethod::kExactSolve;
  for (const auto& c : r.terminal_components) r.component_pi.push_back(solve_component(a, c));
  r.pi = r.component_pi.front();
  for (const Rational& p : r.pi) r.pi_approx.push_back(p.get_d());
  Rational worst(0);
  for (std::size_t j = 0; j < a.size(); ++j) {
    Rational s(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += r.pi[i] * a[i][j];
    Rational d = abs(s - r.pi[j]);
    if (d > worst) worst = d;
  }
  r.exact_residual = worst;
  r.residual = worst.get_d();
  return r;
}

StationaryResult stationary_distribution(const LabeledChain& chain,
                                         const StationaryOptions& options) {
  return stationary_distribution(chain.transition_matrix(), options);
}

MomentResult exact_first_moment(const LabeledChain& chain, const std::vector<Rational>& pi) {
  const std::size_t n = chain.num_states();
  if (pi.size() != n) throw Error(ErrorCode::kInvalidArgument, "pi has the wrong length");
  std::vector<std::size_t> support;
  std::vector<std::ptrdiff_t> local(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    if (pi[s] > 0) {
      local[s] = static_cast<std::ptrdiff_t>(support.size());
      support.push_back(s);
    }
  }
  const std::size_t k = support.size();
  RationalMatrix m(k, RationalVector(k, Rational(0)));
  RationalVector rhs(k, Rational(0));
  for (std::size_t r = 0; r < k; ++r) m[r][r] += pi[support[r]];
  for (std::size_t i : support) {
    for (std::size_t e = 0; e < chain.num_labels(); ++e) {
      const auto& t = chain.transitions[i][e];
      if (!t) continue;
      if (local[t->target] < 0) {
        throw Error(ErrorCode::kSingularSystem, "pi charges a state that leaks mass");
      }
      const std::size_t row = static_cast<std::size_t>(local[t->target]);
      const Rational w = pi[i] * t->probability;
      m[row][static_cast<std::size_t>(local[i])] -= w * chain.maps[e].slope;
      rhs[row] += w * chain.maps[e].intercept;
    }
  }
  auto sol = solve_exact(m, rhs);
  if (!sol) throw Error(ErrorCode::kSingularSystem, "moment equations are singular");

  MomentResult out;
  out.class_moments.assign(n, Rational(0));
  for (std::size_t r = 0; r < k; ++r) out.class_moments[support[r]] = (*sol)[r];
  Rational image(0);
  for (std::size_t i : support) {
    out.mean += pi[i] * out.class_moments[i];
    for (std::size_t e = 0; e < chain.num_labels(); ++e) {
      const auto& t = chain.transitions[i][e];
      if (t) {
        image += pi[i] * t->probability *
                 (chain.maps[e].slope * out.class_moments[i] + chain.maps[e].intercept);
      }
    }
  }
  out.mean.canonicalize();
  out.invariance_residual = abs(out.mean - image);
  for (std::size_t s : support) {
    const Interval& h = chain.hulls[s];
    if (out.class_moments[s] < h.lo || out.class_moments[s] > h.hi) {
      throw Error(ErrorCode::kSingularSystem,
                  "moment of " + chain.state_names[s] + " falls outside its hull");
    }
  }
  return out;
}

std::vector<double> spectrum_moduli(const RationalMatrix& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get_d();
    }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  std::vector<double> out;
  for (Eigen::Index k = 0; k < n; ++k) out.push_back(std::abs(solver.eigenvalues()[k]));
  std::sort(out.rbegin(), out.rend());
  return out;
}

std::string matrix_csv(const RationalMatrix& a, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "from";
  for (const std::string& n : names) out << ",\"" << n << "\"";
  out << "\n";
  for (std::size_t i = 0; i < a.size(); ++i) {
    out << "\"" << names[i] << "\"";
    for (const Rational& v : a[i]) out << "," << to_string(v);
    out << "\n";
  }
  return out.str();
}

std::string stationary_csv(const StationaryResult& r, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "state,pi\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << "\"" << names[i] << "\",";
    if (r.method == StationaryMethod::kExactSolve) {
      out << to_string(r.pi[i]);
    } else {
      out << format_double(r.pi_approx[i]);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace fms
