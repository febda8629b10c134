#include "fms/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <sstream>

#include "fms/scc.hpp"

namespace fms {

namespace {

const PiecewiseConstant& pieces_of(const Edge& e) { return std::get<PiecewiseConstant>(e.prob); }

// Point {b_k} for even atom ids, open gap (b_k, b_{k+1}) for odd ones.
Interval atom_interval(const std::vector<Rational>& pts, std::size_t a) {
  const std::size_t k = a / 2;
  if (a % 2 == 0) return Interval::point(pts[k]);
  return {pts[k], pts[k + 1], false, false};
}

std::size_t atom_of(const std::vector<Rational>& pts, const Rational& x) {
  auto it = std::lower_bound(pts.begin(), pts.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - pts.begin());
  if (it != pts.end() && *it == x) return 2 * k;
  return 2 * k - 1;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

void check_state(const LabeledChain& chain, std::size_t s) {
  if (s >= chain.num_states()) {
    throw Error(ErrorCode::kInvalidArgument, "state " + std::to_string(s) + " out of range");
  }
}

std::string join_words(const SystemSpec& spec, const std::vector<Word>& words) {
  std::string out;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k) out += " ";
    out += format_word(spec, words[k]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- interval partition

std::string_view to_string(BreakpointOrigin o) {
  switch (o) {
    case BreakpointOrigin::kDomainEndpoint: return "domain endpoint";
    case BreakpointOrigin::kProbabilityDiscontinuity: return "probability breakpoint";
    case BreakpointOrigin::kMapPreimage: return "map preimage";
  }
  return "";
}

std::size_t IntervalPartition::cell_of(const Rational& x) const {
  auto it = std::partition_point(cells.begin(), cells.end(), [&](const Interval& c) {
    return c.hi < x || (c.hi == x && !c.hi_closed);
  });
  if (it == cells.end() || !it->contains(x)) {
    throw Error(ErrorCode::kOutOfDomain, "point " + to_string(x) + " in no cell");
  }
  return static_cast<std::size_t>(it - cells.begin());
}

std::size_t IntervalPartition::cell_of(long double x) const {
  auto it = std::partition_point(cells.begin(), cells.end(), [&](const Interval& c) {
    const long double hi = to_long_double(c.hi);
    return hi < x || (hi == x && !c.hi_closed);
  });
  if (it == cells.end()) {
    throw Error(ErrorCode::kOutOfDomain, "point outside the partition");
  }
  return static_cast<std::size_t>(it - cells.begin());
}

IntervalPartition refine_markov_partition(const SystemSpec& spec,
                                          const RefinementOptions& options) {
  if (!spec.is_piecewise_constant()) {
    throw Error(ErrorCode::kNotPiecewiseConstant,
                "interval refinement needs piecewise-constant probabilities");
  }
  IntervalPartition part;
  std::map<Rational, Breakpoint> found;
  std::deque<Rational> queue;
  auto add = [&](Breakpoint b) {
    if (found.count(b.value)) return;
    if (found.size() >= options.max_breakpoints) {
      throw Error(ErrorCode::kRefinementBudgetExceeded,
                  "no finite Markov partition found within " +
                      std::to_string(options.max_breakpoints) + " breakpoints");
    }
    queue.push_back(b.value);
    found.emplace(b.value, std::move(b));
  };

  add({spec.domain.lo, BreakpointOrigin::kDomainEndpoint, std::nullopt, std::nullopt});
  add({spec.domain.hi, BreakpointOrigin::kDomainEndpoint, std::nullopt, std::nullopt});
  for (const Edge& e : spec.edges) {
    for (const Piece& p : pieces_of(e).pieces) {
      for (const Rational* v : {&p.interval.lo, &p.interval.hi}) {
        if (spec.domain.contains(*v)) {
          add({*v, BreakpointOrigin::kProbabilityDiscontinuity, std::nullopt, std::nullopt});
        }
      }
    }
  }
  while (!queue.empty()) {
    const Rational b = queue.front();
    queue.pop_front();
    for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
      auto pre = spec.edges[e].map.preimage(b);
      if (!pre || !spec.domain.contains(*pre)) continue;
      add({*pre, BreakpointOrigin::kMapPreimage, e, b});
    }
  }

  std::vector<Rational> pts;
  for (auto& [v, bp] : found) {
    pts.push_back(v);
    part.closure.push_back(bp);
  }
  const std::size_t num_atoms = 2 * pts.size() - 1;
  const std::size_t num_edges = spec.num_edges();

  // Per atom: probability vector and the target atom of each positive edge.
  std::vector<std::vector<Rational>> probs(num_atoms, std::vector<Rational>(num_edges));
  std::vector<std::vector<std::optional<std::size_t>>> targets(
      num_atoms, std::vector<std::optional<std::size_t>>(num_edges));
  for (std::size_t a = 0; a < num_atoms; ++a) {
    const Interval iv = atom_interval(pts, a);
    const Point rep = Point::exact(iv.representative());
    for (EdgeIndex e = 0; e < num_edges; ++e) {
      probs[a][e] = prob(spec, e, rep);
      if (probs[a][e] == 0) continue;
      const Interval img = spec.edges[e].map.image(iv);
      const std::size_t t = atom_of(pts, img.representative());
      if (!atom_interval(pts, t).contains(img)) {
        throw Error(ErrorCode::kImageSplitsCells,
                    "image of atom " + to_string(iv) + " under edge " + spec.edges[e].id +
                        " crosses a breakpoint");
      }
      targets[a][e] = t;
    }
  }

  // Contiguous runs with equal probability vectors, then split runs whose
  // atoms are sent to different blocks until nothing changes.
  std::vector<std::size_t> block(num_atoms, 0);
  for (std::size_t a = 1; a < num_atoms; ++a) {
    block[a] = block[a - 1] + (probs[a] == probs[a - 1] ? 0 : 1);
  }
  for (;;) {
    std::vector<std::size_t> next(num_atoms, 0);
    auto signature = [&](std::size_t a) {
      std::vector<std::ptrdiff_t> sig(num_edges, -1);
      for (EdgeIndex e = 0; e < num_edges; ++e) {
        if (targets[a][e]) sig[e] = static_cast<std::ptrdiff_t>(block[*targets[a][e]]);
      }
      return sig;
    };
    for (std::size_t a = 1; a < num_atoms; ++a) {
      const bool same = block[a] == block[a - 1] && signature(a) == signature(a - 1);
      next[a] = next[a - 1] + (same ? 0 : 1);
    }
    if (next.back() == block.back()) break;
    block = std::move(next);
  }

  for (std::size_t a = 0; a < num_atoms;) {
    std::size_t b = a;
    while (b + 1 < num_atoms && block[b + 1] == block[a]) ++b;
    const Interval first = atom_interval(pts, a);
    const Interval last = atom_interval(pts, b);
    part.cells.push_back({first.lo, last.hi, first.lo_closed, last.hi_closed});
    if (a > 0 && (part.cut_points.empty() || part.cut_points.back() != first.lo)) {
      part.cut_points.push_back(first.lo);
    }
    a = b + 1;
  }
  return part;
}

// ---------------------------------------------------------------- labeled chain

RationalMatrix LabeledChain::transition_matrix() const {
  const std::size_t n = num_states();
  RationalMatrix m(n, RationalVector(n, Rational(0)));
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& t : transitions[s]) {
      if (t) m[s][t->target] += t->probability;
    }
  }
  return m;
}

LabeledChain LabeledChain::restricted(const std::vector<std::size_t>& states) const {
  std::vector<std::ptrdiff_t> index(num_states(), -1);
  for (std::size_t k = 0; k < states.size(); ++k) {
    check_state(*this, states[k]);
    index[states[k]] = static_cast<std::ptrdiff_t>(k);
  }
  LabeledChain out;
  out.labels = labels;
  out.maps = maps;
  for (std::size_t s : states) {
    out.state_names.push_back(state_names[s]);
    out.hulls.push_back(hulls[s]);
    out.irrational_states.push_back(irrational_states[s]);
    out.point_reps.push_back(point_reps[s]);
    std::vector<std::optional<Transition>> row(num_labels());
    for (std::size_t e = 0; e < num_labels(); ++e) {
      const auto& t = transitions[s][e];
      if (!t) continue;
      if (index[t->target] < 0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "state " + state_names[s] + " leaves the restricted set under label " +
                        labels[e]);
      }
      row[e] = Transition{static_cast<std::size_t>(index[t->target]), t->probability};
    }
    out.transitions.push_back(std::move(row));
  }
  return out;
}

Rational LabeledChain::word_mass(std::size_t state, const Word& w) const {
  check_state(*this, state);
  Rational mass(1);
  for (EdgeIndex e : w) {
    if (e >= num_labels()) throw Error(ErrorCode::kUnknownEdge, "label " + std::to_string(e));
    const auto& t = transitions[state][e];
    if (!t) return Rational(0);
    mass *= t->probability;
    state = t->target;
  }
  return mass;
}

LabeledChain extract_symbolic_chain(const SystemSpec& spec, const IntervalPartition& part) {
  if (!spec.is_piecewise_constant()) {
    throw Error(ErrorCode::kNotPiecewiseConstant, "chain extraction needs piecewise pieces");
  }
  LabeledChain chain;
  for (const Edge& e : spec.edges) {
    chain.labels.push_back(e.id);
    chain.maps.push_back(e.map);
  }
  for (const Interval& cell : part.cells) {
    chain.state_names.push_back(to_string(cell));
    chain.hulls.push_back(cell);
    chain.irrational_states.push_back(false);
    chain.point_reps.push_back(Point::exact(cell.representative()));
    std::vector<std::optional<Transition>> row(spec.num_edges());
    for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
      std::set<Rational> values;
      for (const Piece& p : pieces_of(spec.edges[e]).pieces) {
        if (p.interval.intersects(cell)) values.insert(p.value);
      }
      if (values.size() > 1) {
        throw Error(ErrorCode::kNonConstantOnCell,
                    "edge " + spec.edges[e].id + " is not constant on " + to_string(cell));
      }
      const Rational p = values.empty() ? Rational(0) : *values.begin();
      if (p == 0) continue;
      const Interval img = spec.edges[e].map.image(cell);
      const std::size_t t = part.cell_of(img.representative());
      if (!part.cells[t].contains(img)) {
        throw Error(ErrorCode::kImageSplitsCells,
                    "edge " + spec.edges[e].id + " maps " + to_string(cell) + " onto " +
                        to_string(img));
      }
      row[e] = Transition{t, p};
    }
    chain.transitions.push_back(std::move(row));
  }
  return chain;
}

LabeledChain tag_chain(const SystemSpec& spec) {
  LabeledChain chain;
  chain.state_names = {"rationals", "irrationals"};
  chain.hulls = {spec.domain, spec.domain};
  chain.irrational_states = {false, true};
  const long double lo = to_long_double(spec.domain.lo);
  const long double hi = to_long_double(spec.domain.hi);
  chain.point_reps = {Point::exact(spec.domain.lo),
                      Point::irrational_near(lo + (hi - lo) * std::sqrt(0.5L))};
  chain.transitions.assign(2, std::vector<std::optional<Transition>>(spec.num_edges()));
  for (EdgeIndex e = 0; e < spec.num_edges(); ++e) {
    const Edge& edge = spec.edges[e];
    chain.labels.push_back(edge.id);
    chain.maps.push_back(edge.map);
    Rational q;
    Rational r;
    if (const auto* pred = std::get_if<RationalityPredicate>(&edge.prob)) {
      q = pred->value_on_rationals;
      r = pred->value_on_irrationals;
    } else {
      std::set<Rational> values;
      for (const Piece& p : pieces_of(edge).pieces) values.insert(p.value);
      if (values.size() != 1) {
        throw Error(ErrorCode::kNotPiecewiseConstant,
                    "edge " + edge.id + " mixes pieces with a rationality predicate");
      }
      q = r = *values.begin();
    }
    if (q > 0) chain.transitions[0][e] = Transition{0, q};
    if (r > 0) chain.transitions[1][e] = Transition{edge.map.slope == 0 ? 0u : 1u, r};
  }
  return chain;
}

// ---------------------------------------------------------------- certificates

std::string_view to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::kSupportSeparation: return "support_separation";
    case CertificateKind::kMeasureEquality: return "measure_equality";
    case CertificateKind::kCouplingMerge: return "coupling_merge";
    case CertificateKind::kStatistical: return "statistical";
    case CertificateKind::kTransitive: return "transitive";
  }
  return "";
}

std::string MergeCertificate::summary(const SystemSpec& spec) const {
  std::ostringstream out;
  out << to_string(kind) << " " << (equivalent ? "merge" : "separate");
  switch (kind) {
    case CertificateKind::kSupportSeparation:
      out << " word " << format_word(spec, *word) << " masses " << to_string(mass_i) << " vs "
          << to_string(mass_j);
      break;
    case CertificateKind::kMeasureEquality:
      if (word) {
        out << " word " << format_word(spec, *word) << " masses " << to_string(mass_i) << " vs "
            << to_string(mass_j);
      } else {
        out << " span " << join_words(spec, span_words);
      }
      break;
    case CertificateKind::kCouplingMerge:
      out << " product_states " << product_states << " terminal_diagonal "
          << terminal_diagonal_states.size();
      break;
    case CertificateKind::kStatistical:
      if (xi) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), " drift %.6g z %.3g", xi->drift_x.drift, xi->drift_x.z);
        out << " verdict " << to_string(xi->verdict) << buf;
        if (xi->separating_word) out << " word " << format_word(spec, *xi->separating_word);
      } else {
        out << " not run";
      }
      break;
    case CertificateKind::kTransitive:
      break;
  }
  if (exact) {
    out << " [exact certificate]";
  } else if (xi) {
    out << " [statistical, seed=" << xi->seed << "]";
  } else {
    out << " [no certificate]";
  }
  return out.str();
}

std::optional<MergeCertificate> support_separation(const LabeledChain& chain, std::size_t i,
                                                   std::size_t j) {
  check_state(chain, i);
  check_state(chain, j);
  const std::size_t n = chain.num_states();
  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(n * n, none);
  std::vector<EdgeIndex> via(n * n, 0);
  std::vector<char> seen(n * n, 0);
  std::deque<std::size_t> queue = {i * n + j};
  seen[i * n + j] = 1;
  auto word_to = [&](std::size_t v) {
    Word w;
    while (parent[v] != none) {
      w.push_back(via[v]);
      v = parent[v];
    }
    std::reverse(w.begin(), w.end());
    return w;
  };
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    const std::size_t s = v / n;
    const std::size_t t = v % n;
    for (EdgeIndex e = 0; e < chain.num_labels(); ++e) {
      const auto& a = chain.transitions[s][e];
      const auto& b = chain.transitions[t][e];
      if (a.has_value() != b.has_value()) {
        MergeCertificate c;
        c.kind = CertificateKind::kSupportSeparation;
        c.equivalent = false;
        c.exact = true;
        Word w = word_to(v);
        w.push_back(e);
        c.mass_i = chain.word_mass(i, w);
        c.mass_j = chain.word_mass(j, w);
        c.word = std::move(w);
        return c;
      }
      if (!a) continue;
      const std::size_t u = a->target * n + b->target;
      if (seen[u]) continue;
      seen[u] = 1;
      parent[u] = v;
      via[u] = e;
      queue.push_back(u);
    }
  }
  return std::nullopt;
}

MergeCertificate measure_equality(const LabeledChain& chain, std::size_t i, std::size_t j) {
  check_state(chain, i);
  check_state(chain, j);
  const std::size_t n = chain.num_states();
  MergeCertificate c;
  c.kind = CertificateKind::kMeasureEquality;
  c.exact = true;

  // v_w = (e_i - e_j) M_w; P_i(w) - P_j(w) = v_w . 1.
  auto step = [&](const RationalVector& v, EdgeIndex e) {
    RationalVector out(n, Rational(0));
    for (std::size_t s = 0; s < n; ++s) {
      if (v[s] == 0) continue;
      const auto& t = chain.transitions[s][e];
      if (t) out[t->target] += v[s] * t->probability;
    }
    return out;
  };
  RationalVector v0(n, Rational(0));
  v0[i] += 1;
  v0[j] -= 1;
  EchelonBasis basis(n);
  basis.insert(v0);
  std::deque<std::pair<RationalVector, Word>> queue;
  queue.emplace_back(v0, Word{});
  c.span_words.push_back({});
  while (!queue.empty()) {
    auto [v, w] = std::move(queue.front());
    queue.pop_front();
    for (EdgeIndex e = 0; e < chain.num_labels(); ++e) {
      RationalVector next = step(v, e);
      Word nw = w;
      nw.push_back(e);
      Rational diff = std::accumulate(next.begin(), next.end(), Rational(0));
      if (diff != 0) {
        c.equivalent = false;
        c.mass_i = chain.word_mass(i, nw);
        c.mass_j = chain.word_mass(j, nw);
        c.word = std::move(nw);
        c.span_words.clear();
        return c;
      }
      if (basis.insert(next)) {
        c.span_words.push_back(nw);
        queue.emplace_back(std::move(next), std::move(nw));
      }
    }
  }
  c.equivalent = true;
  return c;
}

MergeCertificate coupling_merge_test(const SystemSpec& spec, const LabeledChain& chain,
                                     std::size_t i, std::size_t j, const XiParams& params,
                                     bool run_statistical) {
  check_state(chain, i);
  check_state(chain, j);
  const std::size_t n = chain.num_states();
  // Reachable pairs from (i, j) under labels both sides support.
  std::map<std::size_t, std::size_t> index;
  std::vector<std::size_t> pairs;
  Adjacency adj;
  auto id_of = [&](std::size_t key) {
    auto [it, inserted] = index.emplace(key, pairs.size());
    if (inserted) {
      pairs.push_back(key);
      adj.emplace_back();
    }
    return it->second;
  };
  id_of(i * n + j);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const std::size_t s = pairs[k] / n;
    const std::size_t t = pairs[k] % n;
    for (EdgeIndex e = 0; e < chain.num_labels(); ++e) {
      const auto& a = chain.transitions[s][e];
      const auto& b = chain.transitions[t][e];
      if (!a || !b) continue;
      const std::size_t to = id_of(a->target * n + b->target);
      adj[k].push_back(to);
    }
  }

  MergeCertificate c;
  c.kind = CertificateKind::kCouplingMerge;
  c.product_states = pairs.size();
  bool all_meet = true;
  for (const auto& comp : terminal_components(adj)) {
    bool meets = false;
    for (std::size_t v : comp) {
      if (pairs[v] / n == pairs[v] % n) {
        meets = true;
        c.terminal_diagonal_states.push_back(pairs[v] / n);
        break;
      }
    }
    all_meet = all_meet && meets;
  }
  std::sort(c.terminal_diagonal_states.begin(), c.terminal_diagonal_states.end());
  if (all_meet) {
    c.equivalent = true;
    c.exact = true;
    return c;
  }

  MergeCertificate s;
  s.kind = CertificateKind::kStatistical;
  s.exact = false;
  s.product_states = c.product_states;
  if (!run_statistical) return s;
  s.xi = xi_estimate(spec, chain.point_reps[i], chain.point_reps[j], params);
  s.equivalent = s.xi->verdict == XiVerdict::kEquivalent;
  if (s.xi->verdict == XiVerdict::kSingularCertified) {
    s.exact = true;
    if (s.xi->separating_word) {
      s.word = s.xi->separating_word;
      s.mass_i = cylinder_measure(spec, chain.point_reps[i], *s.word);
      s.mass_j = cylinder_measure(spec, chain.point_reps[j], *s.word);
    }
  }
  return s;
}

// ---------------------------------------------------------------- fundamental system

std::string FundamentalPartition::class_name(std::size_t k) const {
  std::string out;
  for (std::size_t s : classes.at(k)) {
    if (!out.empty()) out += " u ";
    out += chain.state_names[s];
  }
  return out;
}

bool FundamentalPartition::exact() const {
  return std::all_of(certificates.begin(), certificates.end(),
                     [](const PairCertificate& p) { return p.certificate.exact; });
}

const MergeCertificate* FundamentalPartition::certificate(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  for (const PairCertificate& p : certificates) {
    if (p.i == i && p.j == j) return &p.certificate;
  }
  return nullptr;
}

FundamentalPartition fundamental_partition(const SystemSpec& spec, const PartitionParams& params) {
  FundamentalPartition fp;
  if (spec.is_piecewise_constant()) {
    fp.partition = refine_markov_partition(spec, params.refinement);
    fp.chain = extract_symbolic_chain(spec, fp.partition);
  } else {
    fp.tag_partition = true;
    fp.chain = tag_chain(spec);
  }
  const std::size_t n = fp.chain.num_states();

  // Exact certificates for every pair, in precedence order.
  std::vector<PairCertificate> decided;
  std::vector<std::pair<std::size_t, std::size_t>> pending;
  UnionFind exact_uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (auto sep = support_separation(fp.chain, i, j)) {
        decided.push_back({i, j, std::move(*sep)});
        continue;
      }
      MergeCertificate eq = measure_equality(fp.chain, i, j);
      if (eq.equivalent) {
        exact_uf.unite(i, j);
        decided.push_back({i, j, std::move(eq)});
        continue;
      }
      MergeCertificate cm = coupling_merge_test(spec, fp.chain, i, j, params.xi, false);
      if (cm.equivalent) {
        exact_uf.unite(i, j);
        decided.push_back({i, j, std::move(cm)});
        continue;
      }
      pending.emplace_back(i, j);
    }
  }

  // Statistical evidence only for pairs the exact merges leave apart.
  UnionFind uf = exact_uf;
  for (auto [i, j] : pending) {
    if (uf.find(i) == uf.find(j)) {
      MergeCertificate t;
      t.kind = CertificateKind::kTransitive;
      t.equivalent = true;
      t.exact = exact_uf.find(i) == exact_uf.find(j);
      decided.push_back({i, j, std::move(t)});
      continue;
    }
    MergeCertificate c = coupling_merge_test(spec, fp.chain, i, j, params.xi,
                                             params.run_statistical);
    if (c.kind == CertificateKind::kStatistical && !params.run_statistical && !c.xi) {
      throw Error(ErrorCode::kMissingSeed,
                  "pair (" + fp.chain.state_names[i] + ", " + fp.chain.state_names[j] +
                      ") needs statistical evidence");
    }
    if (c.equivalent) uf.unite(i, j);
    decided.push_back({i, j, std::move(c)});
  }
  std::sort(decided.begin(), decided.end(), [](const PairCertificate& a, const PairCertificate& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });

  // Classes numbered by their leftmost state.
  std::map<std::size_t, std::size_t> class_id;
  fp.class_of_state.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    auto [it, inserted] = class_id.emplace(uf.find(s), fp.classes.size());
    if (inserted) fp.classes.emplace_back();
    fp.class_of_state[s] = it->second;
    fp.classes[it->second].push_back(s);
  }

  for (PairCertificate& p : decided) {
    const bool together = fp.class_of_state[p.i] == fp.class_of_state[p.j];
    const MergeCertificate& c = p.certificate;
    if (together && !c.equivalent) {
      std::ostringstream msg;
      msg << "states " << fp.chain.state_names[p.i] << " and " << fp.chain.state_names[p.j]
          << " merged despite " << c.summary(spec);
      if (c.exact) throw Error(ErrorCode::kInconsistentMerge, msg.str());
      fp.diagnostics.push_back(msg.str());
    }
  }
  fp.certificates = std::move(decided);

  // E'_k = {(k, e) : p_e > 0 on K'_k}; supports and targets must agree inside a class.
  for (std::size_t k = 0; k < fp.classes.size(); ++k) {
    const auto& members = fp.classes[k];
    for (EdgeIndex e = 0; e < fp.chain.num_labels(); ++e) {
      const auto& first = fp.chain.transitions[members[0]][e];
      for (std::size_t s : members) {
        const auto& t = fp.chain.transitions[s][e];
        if (t.has_value() != first.has_value() ||
            (t && fp.class_of_state[t->target] != fp.class_of_state[first->target])) {
          throw Error(ErrorCode::kInconsistentMerge,
                      "class " + fp.class_name(k) + " is not forward invariant under edge " +
                          fp.chain.labels[e]);
        }
      }
      if (first) fp.edges.push_back({k, e, fp.class_of_state[first->target]});
    }
  }
  return fp;
}

std::size_t classify_point(const FundamentalPartition& fp, const Point& x) {
  if (fp.tag_partition) {
    if (!fp.chain.hulls[0].contains(x.value)) {
      throw Error(ErrorCode::kOutOfDomain, "point " + to_string(x) + " outside the domain");
    }
    return fp.class_of_state[x.irrational ? 1 : 0];
  }
  return fp.class_of_state[fp.partition.cell_of(x.value)];
}

std::size_t classify_point(const FundamentalPartition& fp, const OrbitPoint& x) {
  if (fp.tag_partition) return fp.class_of_state[x.irrational() ? 1 : 0];
  if (x.is_exact()) return fp.class_of_state[fp.partition.cell_of(x.exact())];
  return fp.class_of_state[fp.partition.cell_of(x.approx())];
}

Rational fms_prob(const SystemSpec& spec, const FundamentalPartition& fp, std::size_t fms_edge,
                  const Point& x) {
  if (fms_edge >= fp.edges.size()) {
    throw Error(ErrorCode::kUnknownEdge, "fundamental edge " + std::to_string(fms_edge));
  }
  const FmsEdge& e = fp.edges[fms_edge];
  if (classify_point(fp, x) != e.source) return Rational(0);
  return prob(spec, e.label, x);
}

Rational fms_markov_operator(const SystemSpec& spec, const FundamentalPartition& fp,
                             const TestFunction& f, const Point& x) {
  Rational total(0);
  for (std::size_t k = 0; k < fp.edges.size(); ++k) {
    Rational p = fms_prob(spec, fp, k, x);
    if (p == 0) continue;
    total += p * f(apply_map(spec, fp.edges[k].label, x));
  }
  return total;
}

Rational lift_check(const SystemSpec& spec, const FundamentalPartition& fp, const Point& x,
                    std::size_t n, std::uint64_t budget) {
  const auto original = enumerate_cylinders(spec, x, n, false, budget);
  // Push P'_x forward through psi, word by word.
  std::map<Word, Rational> lifted;
  Word image;
  auto rec = [&](auto& self, const Point& cur, const Rational& mass) -> void {
    if (image.size() == n) {
      lifted[image] += mass;
      return;
    }
    for (std::size_t k = 0; k < fp.edges.size(); ++k) {
      Rational p = fms_prob(spec, fp, k, cur);
      if (p == 0) continue;
      image.push_back(fp.edges[k].label);
      self(self, apply_map(spec, fp.edges[k].label, cur), mass * p);
      image.pop_back();
    }
  };
  rec(rec, x, Rational(1));

  Rational worst(0);
  for (const CylinderMass& c : original) {
    auto it = lifted.find(c.word);
    Rational d = abs(c.mass - (it == lifted.end() ? Rational(0) : it->second));
    if (d > worst) worst = d;
  }
  return worst;
}

std::string format_report(const SystemSpec& spec, const FundamentalPartition& fp) {
  std::ostringstream out;
  if (fp.tag_partition) {
    out << "partition: rationality tag\n";
  } else {
    out << "breakpoints:";
    for (std::size_t k = 0; k < fp.partition.cut_points.size(); ++k) {
      out << (k ? ", " : " ") << to_string(fp.partition.cut_points[k]);
    }
    out << "\nclosure:\n";
    for (const Breakpoint& b : fp.partition.closure) {
      out << "  " << to_string(b.value) << " " << to_string(b.origin);
      if (b.edge) {
        out << " (edge " << spec.edges[*b.edge].id << " onto " << to_string(*b.image) << ")";
      }
      out << "\n";
    }
  }
  out << "states:\n";
  for (std::size_t s = 0; s < fp.chain.num_states(); ++s) {
    out << "  " << s << " " << fp.chain.state_names[s] << " class " << fp.class_of_state[s]
        << "\n";
  }
  out << "classes: " << fp.num_classes() << "\n";
  for (std::size_t k = 0; k < fp.num_classes(); ++k) {
    out << "  K'" << k << " = " << fp.class_name(k) << "\n";
  }
  out << "certificates:\n";
  for (const PairCertificate& p : fp.certificates) {
    out << "  (" << p.i << "," << p.j << ") " << p.certificate.summary(spec) << "\n";
  }
  out << "edges:\n";
  for (std::size_t k = 0; k < fp.edges.size(); ++k) {
    const FmsEdge& e = fp.edges[k];
    out << "  e'" << k << " = (K'" << e.source << "," << spec.edges[e.label].id << ") -> K'"
        << e.target << " psi=" << spec.edges[e.label].id << "\n";
  }
  for (const std::string& d : fp.diagnostics) out << "diagnostic: " << d << "\n";
  out << "evidence: " << (fp.exact() ? "exact certificate" : "statistical") << "\n";
  return out.str();
}

}  // namespace fms
