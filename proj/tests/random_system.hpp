#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "fms/model.hpp"
#include "fms/system_io.hpp"

namespace fms::testing {

inline Rational random_unit(std::mt19937_64& rng, unsigned long den) {
  return Rational(static_cast<unsigned long>(rng() % (den + 1)), den);
}

// Random valid piecewise-constant system on [0,1] with 2-3 edges, increasing
// or decreasing affine maps, and up to three probability breakpoints.
inline SystemSpec random_system(std::mt19937_64& rng) {
  const std::size_t num_edges = 2 + rng() % 2;
  std::set<Rational> cuts;
  const std::size_t num_cuts = rng() % 4;
  while (cuts.size() < num_cuts) {
    Rational c = random_unit(rng, 12);
    if (c > 0 && c < 1) cuts.insert(c);
  }
  std::vector<Rational> ends = {0};
  ends.insert(ends.end(), cuts.begin(), cuts.end());
  ends.push_back(1);
  const std::size_t pieces = ends.size() - 1;
  // probs[piece][edge], each row a probability vector with some zeros.
  std::vector<std::vector<Rational>> probs(pieces);
  for (auto& row : probs) {
    std::vector<Rational> w(num_edges);
    Rational total = 0;
    for (auto& v : w) {
      v = rng() % 4 == 0 ? Rational(0) : Rational(static_cast<unsigned long>(1 + rng() % 6));
      total += v;
    }
    if (total == 0) {
      w[rng() % num_edges] = 1;
      total = 1;
    }
    for (auto& v : w) row.push_back(Rational(v / total));
  }
  std::ostringstream s;
  s << "[domain]\nlo = 0\nhi = 1\n";
  for (std::size_t e = 0; e < num_edges; ++e) {
    Rational slope(static_cast<unsigned long>(1 + rng() % 4), 5ul);
    Rational intercept = (1 - slope) * random_unit(rng, 6);
    if (rng() % 4 == 0) {
      intercept += slope;
      slope = -slope;
    }
    s << "[edge " << e << "]\nslope = " << to_string(slope)
      << "\nintercept = " << to_string(intercept) << "\nprob = piecewise ";
    for (std::size_t k = 0; k < pieces; ++k) {
      s << (k ? ";" : "") << "(" << to_string(ends[k]) << "," << to_string(ends[k + 1]) << ","
        << (k == 0 ? 1 : 0) << ",1," << to_string(probs[k][e]) << ")";
    }
    s << "\n";
  }
  return parse_system(s.str());
}

}  // namespace fms::testing
