#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fms/linalg.hpp"
#include "fms/measures.hpp"
#include "fms/model.hpp"

namespace fms {

// ---------------------------------------------------------------- interval partition

enum class BreakpointOrigin { kDomainEndpoint, kProbabilityDiscontinuity, kMapPreimage };

std::string_view to_string(BreakpointOrigin o);

struct Breakpoint {
  Rational value;
  BreakpointOrigin origin;
  // For preimages: the edge whose map sends `value` onto `image`.
  std::optional<EdgeIndex> edge;
  std::optional<Rational> image;
};

struct IntervalPartition {
  std::vector<Interval> cells;       // ordered left to right, disjoint, covering
  std::vector<Rational> cut_points;  // distinct boundaries between adjacent cells
  std::vector<Breakpoint> closure;   // preimage-closed breakpoint set

  std::size_t cell_of(const Rational& x) const;
  std::size_t cell_of(long double x) const;
};

struct RefinementOptions {
  std::size_t max_breakpoints = 256;
};

// Closes the probability breakpoints under map preimages, then lumps the
// resulting point/gap atoms into the coarsest run-contiguous cells on which
// every probability is constant and every map lands in a single cell.
IntervalPartition refine_markov_partition(const SystemSpec& spec,
                                          const RefinementOptions& options = {});

// ---------------------------------------------------------------- labeled chain

struct Transition {
  std::size_t target;
  Rational probability;
};

// Finite-state reduction with constant probabilities per (state, label).
struct LabeledChain {
  std::vector<std::string> labels;  // edge ids
  std::vector<AffineMap> maps;      // per label
  std::vector<std::string> state_names;
  std::vector<Interval> hulls;      // interval hull of each state's points
  std::vector<bool> irrational_states;
  std::vector<Point> point_reps;
  // transitions[state][label]; empty when the label has probability 0.
  std::vector<std::vector<std::optional<Transition>>> transitions;

  std::size_t num_states() const { return transitions.size(); }
  std::size_t num_labels() const { return labels.size(); }

  // Row-stochastic matrix summed over labels.
  RationalMatrix transition_matrix() const;
  // Sub-chain on `states` (in the given order); transitions must stay inside.
  LabeledChain restricted(const std::vector<std::size_t>& states) const;
  // Cylinder mass of a label word started in `state`.
  Rational word_mass(std::size_t state, const Word& w) const;
};

LabeledChain extract_symbolic_chain(const SystemSpec& spec, const IntervalPartition& part);

// Two-state chain {rationals, irrationals} for rationality-predicate systems;
// maps with rational coefficients preserve the tag.
LabeledChain tag_chain(const SystemSpec& spec);

// ---------------------------------------------------------------- certificates

enum class CertificateKind {
  kSupportSeparation,
  kMeasureEquality,
  kCouplingMerge,
  kStatistical,
  kTransitive,  // pair decided by merges of other pairs
};

std::string_view to_string(CertificateKind k);

struct MergeCertificate {
  CertificateKind kind;
  bool equivalent = false;
  bool exact = true;
  // kSupportSeparation, or a failed kMeasureEquality: the distinguishing word.
  std::optional<Word> word;
  Rational mass_i;
  Rational mass_j;
  // kMeasureEquality: words whose weight vectors span the difference space.
  std::vector<Word> span_words;
  // kCouplingMerge: product-chain size and the diagonal pairs that every
  // terminal component reaches.
  std::size_t product_states = 0;
  std::vector<std::size_t> terminal_diagonal_states;
  // kStatistical.
  std::optional<XiReport> xi;

  std::string summary(const SystemSpec& spec) const;
};

// A word reachable in the synchronous product from (i, j) that exactly one
// side supports: a cylinder with zero mass under one start and positive mass
// under the other.
std::optional<MergeCertificate> support_separation(const LabeledChain& chain, std::size_t i,
                                                   std::size_t j);

// Decides P_i == P_j on label sequences by span iteration over the difference
// of weight vectors; a failure yields a shortest distinguishing word.
MergeCertificate measure_equality(const LabeledChain& chain, std::size_t i, std::size_t j);

// Sufficient test for mutual absolute continuity: every terminal component
// of the product chain reachable from (i, j) meets the diagonal. Falls back
// to xi_estimate on the representative points.
MergeCertificate coupling_merge_test(const SystemSpec& spec, const LabeledChain& chain,
                                     std::size_t i, std::size_t j, const XiParams& params,
                                     bool run_statistical = true);

// ---------------------------------------------------------------- fundamental system

struct FmsEdge {
  std::size_t source;  // class i'
  EdgeIndex label;     // psi((i, e)) = e
  std::size_t target;  // class t'
};

struct PairCertificate {
  std::size_t i;
  std::size_t j;
  MergeCertificate certificate;
};

struct FundamentalPartition {
  bool tag_partition = false;
  IntervalPartition partition;  // empty for tag partitions
  LabeledChain chain;
  std::vector<std::size_t> class_of_state;
  std::vector<std::vector<std::size_t>> classes;
  std::vector<FmsEdge> edges;
  std::vector<PairCertificate> certificates;
  std::vector<std::string> diagnostics;

  std::size_t num_classes() const { return classes.size(); }
  std::string class_name(std::size_t k) const;
  // Every merge backed by an exact certificate.
  bool exact() const;
  const MergeCertificate* certificate(std::size_t i, std::size_t j) const;
};

struct PartitionParams {
  RefinementOptions refinement;
  XiParams xi;
  bool run_statistical = true;
};

FundamentalPartition fundamental_partition(const SystemSpec& spec,
                                           const PartitionParams& params = {});

std::size_t classify_point(const FundamentalPartition& fp, const Point& x);
std::size_t classify_point(const FundamentalPartition& fp, const OrbitPoint& x);

// p'_{e'}(x) = p_e(x) 1[x in K'_i] for e' = (i, e).
Rational fms_prob(const SystemSpec& spec, const FundamentalPartition& fp, std::size_t fms_edge,
                  const Point& x);

// U' f(x) computed from the fundamental system's own edges.
Rational fms_markov_operator(const SystemSpec& spec, const FundamentalPartition& fp,
                             const TestFunction& f, const Point& x);

// max over depth-n words w of |P_x(w) - sum_{psi(w') = w} P'_x(w')|.
Rational lift_check(const SystemSpec& spec, const FundamentalPartition& fp, const Point& x,
                    std::size_t n, std::uint64_t budget = kDefaultWordBudget);

// Plain-text report: breakpoints, classes, certificates, E'/psi table.
std::string format_report(const SystemSpec& spec, const FundamentalPartition& fp);

}  // namespace fms
