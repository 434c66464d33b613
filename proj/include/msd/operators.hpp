#pragma once

#include "msd/types.hpp"

namespace msd {

// Sparse forward-difference operator. Each row has one -1 and one +1, so
// constant signals are annihilated. For 2D shapes the horizontal rows (Dx)
// are stacked above the vertical rows (Dy).
struct DiffOperator {
  SpMat matrix;  // R x N
  SignalShape shape;

  int rows() const { return static_cast<int>(matrix.rows()); }
  int cols() const { return static_cast<int>(matrix.cols()); }
};

// (n-1) x n forward-difference matrix for 1D signals.
DiffOperator diff_1d(int n);

// Stacked [Dx; Dy] for a rows x cols grid under row-major vectorization.
// Dx differences along each row, Dy along each column; no wraparound.
DiffOperator diff_2d(int rows, int cols);

// Elementwise sign(x) * max(|x| - t, 0).
Vec soft_threshold(const Vec& v, double t);

// Elementwise clamp to [0, 1].
Vec project_box01(const Vec& v);

// Keeps the K largest-magnitude entries, zeroes the rest. Ties are broken
// by keeping the lowest index. K >= length acts as the identity.
Vec project_top_k(const Vec& v, int k);

// Anisotropic total variation ||Dw||_1.
double tv(const Vec& w, const DiffOperator& d);

}  // namespace msd
