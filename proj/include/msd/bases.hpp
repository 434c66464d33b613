#pragma once

#include "msd/types.hpp"

namespace msd {

enum class BasisKind { dct2, hadamard, sinusoid, custom };

// A subspace model for one signal component: columns of `matrix` span it.
// Columns are unit-norm; for dct2 and hadamard they are orthonormal.
struct Subspace {
  Mat matrix;  // N x M, M <= N
  SignalShape shape;
  BasisKind kind = BasisKind::custom;

  int dim() const { return static_cast<int>(matrix.rows()); }
  int num_basis() const { return static_cast<int>(matrix.cols()); }
};

// k lowest-frequency 2D DCT-II basis images on a rows x cols grid,
// vectorized row-major. Columns are ordered by zigzag: ascending p+q,
// ties by ascending p, where p/q are the vertical/horizontal frequency
// indices.
Subspace make_dct2_basis(int rows, int cols, int k);

// First k columns of the order-n Sylvester Hadamard matrix in natural
// order, scaled by 1/sqrt(n). n must be a power of two.
Subspace make_hadamard_basis(int n, int k);

// Harmonic cos/sin pairs cos(2*pi*q*t/n), sin(2*pi*q*t/n) for q = 1..k/2,
// sampled at t = 0..n-1, each column unit-normalized. k must be even.
Subspace make_sinusoid_basis(int n, int k);

// Wraps a caller-supplied matrix, normalizing each column to unit norm.
Subspace make_custom_basis(Mat matrix, SignalShape shape);

}  // namespace msd
