#pragma once

#include <string>
#include <vector>

#include "fms/linalg.hpp"
#include "fms/partition.hpp"
#include "fms/scc.hpp"

namespace fms {

struct Arc {
  std::size_t source;
  std::size_t target;
  std::string label;
};

// Directed multigraph; parallel arcs and loops allowed.
struct Digraph {
  std::vector<std::string> vertices;
  std::vector<Arc> arcs;

  std::size_t num_vertices() const { return vertices.size(); }
  Adjacency adjacency() const;
};

// One arc per positive (state, label) transition.
Digraph support_graph(const LabeledChain& chain);
// Vertices V' (classes), arcs E' with i', t' and the psi label.
Digraph fms_graph(const FundamentalPartition& fp);
Digraph induced_subgraph(const Digraph& g, const std::vector<std::size_t>& vertices);

std::vector<std::vector<std::size_t>> strongly_connected_components(const Digraph& g);
std::vector<std::vector<std::size_t>> terminal_components(const Digraph& g);

bool is_irreducible(const Digraph& g);
// Period of each strongly connected component; 0 for components without a cycle.
std::vector<std::size_t> component_periods(const Digraph& g);
// Every component that carries a cycle has period 1.
bool is_aperiodic(const Digraph& g);
// Every vertex is reached from every other vertex by a finite path.
bool is_recurrent(const Digraph& g);

// ---------------------------------------------------------------- stationary analysis

enum class StationaryMethod { kExactSolve, kPowerIteration };

std::string_view to_string(StationaryMethod m);

struct StationaryOptions {
  // Terminal components larger than this use power iteration.
  std::size_t exact_limit = 400;
  bool force_power_iteration = false;
  double tolerance = 1e-12;
  std::size_t max_iterations = 10'000'000;
};

struct StationaryResult {
  StationaryMethod method = StationaryMethod::kExactSolve;
  // Per state; weight 0 off the first terminal component. Exact mode only.
  std::vector<Rational> pi;
  std::vector<double> pi_approx;
  // max |pi A - pi|, zero in exact mode.
  Rational exact_residual;
  double residual = 0.0;
  bool unique = true;
  std::vector<std::vector<std::size_t>> terminal_components;
  // One distribution per terminal component (exact mode).
  std::vector<std::vector<Rational>> component_pi;
};

StationaryResult stationary_distribution(const RationalMatrix& a,
                                         const StationaryOptions& options = {});
StationaryResult stationary_distribution(const LabeledChain& chain,
                                         const StationaryOptions& options = {});

struct MomentResult {
  std::vector<Rational> class_moments;  // per state; 0 where pi vanishes
  Rational mean;                        // sum_j pi_j m_j
  Rational invariance_residual;         // |m - sum_e int p_e (s_e x + c_e) dmu|
};

// pi_j m_j = sum over arcs i -e-> j of pi_i p_e (s_e m_i + c_e), on the support of pi.
MomentResult exact_first_moment(const LabeledChain& chain, const std::vector<Rational>& pi);

// Moduli of the eigenvalues of the transition matrix, largest first.
std::vector<double> spectrum_moduli(const RationalMatrix& a);

// "from,to,..." header plus rows of exact p/q entries.
std::string matrix_csv(const RationalMatrix& a, const std::vector<std::string>& names);
// "state,pi" rows; exact p/q or %.17g.
std::string stationary_csv(const StationaryResult& r, const std::vector<std::string>& names);

}  // namespace fms
