#include "msd/bases.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace msd {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Orthonormal 1D DCT-II entry for frequency p at sample i on an n-grid.
double dct_entry(int p, int n, int i) {
  const double scale = std::sqrt((p == 0 ? 1.0 : 2.0) / n);
  return scale * std::cos(std::numbers::pi * (2 * i + 1) * p / (2.0 * n));
}

}  // namespace

Subspace make_dct2_basis(int rows, int cols, int k) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("make_dct2_basis: grid dimensions must be positive");
  const int n = rows * cols;
  if (k < 1 || k > n)
    throw std::invalid_argument("make_dct2_basis: k out of range [1, rows*cols]");

  // Zigzag enumeration of frequency pairs: ascending p+q, ties by ascending p.
  std::vector<std::pair<int, int>> freqs;
  freqs.reserve(n);
  for (int s = 0; s <= rows + cols - 2 && static_cast<int>(freqs.size()) < k; ++s) {
    for (int p = 0; p <= s && static_cast<int>(freqs.size()) < k; ++p) {
      const int q = s - p;
      if (p < rows && q < cols) freqs.emplace_back(p, q);
    }
  }

  Mat P(n, k);
  for (int col = 0; col < k; ++col) {
    const auto [p, q] = freqs[col];
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        P(i * cols + j, col) = dct_entry(p, rows, i) * dct_entry(q, cols, j);
    P.col(col).normalize();
  }
  return {std::move(P), SignalShape::two_d(rows, cols), BasisKind::dct2};
}

Subspace make_hadamard_basis(int n, int k) {
  if (!is_power_of_two(n))
    throw std::invalid_argument("make_hadamard_basis: n must be a power of two");
  if (k < 1 || k > n)
    throw std::invalid_argument("make_hadamard_basis: k out of range [1, n]");

  // Sylvester construction.
  Mat H = Mat::Ones(1, 1);
  for (int m = 1; m < n; m *= 2) {
    Mat next(2 * m, 2 * m);
    next.topLeftCorner(m, m) = H;
    next.topRightCorner(m, m) = H;
    next.bottomLeftCorner(m, m) = H;
    next.bottomRightCorner(m, m) = -H;
    H = std::move(next);
  }

  // Keep the natural Sylvester column order: after the constant column the
  // early columns alternate at the finest scales, which keeps the span well
  // separated from low-frequency (smooth) subspaces.
  Mat P = H.leftCols(k) / std::sqrt(double(n));
  return {std::move(P), SignalShape::one_d(n), BasisKind::hadamard};
}

Subspace make_sinusoid_basis(int n, int k) {
  if (k % 2 != 0 || k < 2 || k > n - 1)
    throw std::invalid_argument("make_sinusoid_basis: k must be even and in [2, n-1]");

  Mat P(n, k);
  for (int q = 1; q <= k / 2; ++q) {
    for (int t = 0; t < n; ++t) {
      const double phase = 2.0 * std::numbers::pi * q * t / n;
      P(t, 2 * (q - 1)) = std::cos(phase);
      P(t, 2 * (q - 1) + 1) = std::sin(phase);
    }
  }
  for (int col = 0; col < k; ++col) P.col(col).normalize();
  return {std::move(P), SignalShape::one_d(n), BasisKind::sinusoid};
}

Subspace make_custom_basis(Mat matrix, SignalShape shape) {
  if (matrix.rows() != shape.size())
    throw std::invalid_argument("make_custom_basis: matrix rows do not match shape");
  if (matrix.cols() > matrix.rows())
    throw std::invalid_argument("make_custom_basis: more columns than rows");
  for (int col = 0; col < matrix.cols(); ++col) {
    const double norm = matrix.col(col).norm();
    if (norm == 0.0)
      throw std::invalid_argument("make_custom_basis: zero column");
    matrix.col(col) /= norm;
  }
  return {std::move(matrix), shape, BasisKind::custom};
}

}  // namespace msd
