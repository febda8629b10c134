#pragma once

#include <optional>
#include <vector>

#include "fms/rational.hpp"

namespace fms {

using RationalVector = std::vector<Rational>;
using RationalMatrix = std::vector<RationalVector>;

// Exact Gaussian elimination; nullopt when the system is singular.
std::optional<RationalVector> solve_exact(RationalMatrix a, RationalVector b);

// Incrementally maintained row-echelon basis over the rationals.
class EchelonBasis {
 public:
  explicit EchelonBasis(std::size_t dim) : dim_(dim) {}

  // Adds v when it is independent of the current rows; returns whether it was.
  bool insert(const RationalVector& v);
  std::size_t rank() const { return rows_.size(); }

 private:
  std::size_t dim_;
  std::vector<RationalVector> rows_;
  std::vector<std::size_t> pivots_;
};

}  // namespace fms
