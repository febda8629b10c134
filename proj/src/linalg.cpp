#include "fms/linalg.hpp"

#include <utility>

namespace fms {

std::optional<RationalVector> solve_exact(RationalMatrix a, RationalVector b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col] == 0) ++pivot;
    if (pivot == n) return std::nullopt;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t row = 0; row < n; ++row) {
      if (row == col || a[row][col] == 0) continue;
      Rational f = a[row][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[row][k] -= f * a[col][k];
      b[row] -= f * b[col];
    }
  }
  RationalVector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = b[i] / a[i][i];
    x[i].canonicalize();
  }
  return x;
}

bool EchelonBasis::insert(const RationalVector& v) {
  RationalVector r = v;
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const std::size_t p = pivots_[k];
    if (r[p] == 0) continue;
    Rational f = r[p] / rows_[k][p];
    for (std::size_t c = 0; c < dim_; ++c) r[c] -= f * rows_[k][c];
  }
  for (std::size_t c = 0; c < dim_; ++c) {
    if (r[c] != 0) {
      rows_.push_back(std::move(r));
      pivots_.push_back(c);
      return true;
    }
  }
  return false;
}

}  // namespace fms
