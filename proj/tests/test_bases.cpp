#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "msd/bases.hpp"

using namespace msd;

namespace {

// Straight-line orthonormal 1D DCT-II entry, written independently of the
// library implementation.
double ref_dct(int p, int n, int i) {
  const double scale = std::sqrt((p == 0 ? 1.0 : 2.0) / n);
  return scale * std::cos(std::numbers::pi * (2 * i + 1) * p / (2.0 * n));
}

}  // namespace

TEST_CASE("dct2 DC basis is constant") {
  const Subspace s = make_dct2_basis(8, 8, 1);
  REQUIRE(s.matrix.rows() == 64);
  REQUIRE(s.matrix.cols() == 1);
  for (int i = 0; i < 64; ++i) CHECK(s.matrix(i, 0) == doctest::Approx(1.0 / 8).epsilon(1e-12));
}

TEST_CASE("dct2 columns are orthonormal") {
  const Subspace s = make_dct2_basis(64, 64, 40);
  const Mat gram = s.matrix.transpose() * s.matrix;
  CHECK((gram - Mat::Identity(40, 40)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("complete dct2 basis reconstructs any signal") {
  const Subspace s = make_dct2_basis(4, 4, 16);
  std::mt19937 rng(7);
  std::normal_distribution<double> dist;
  Vec x(16);
  for (int i = 0; i < 16; ++i) x[i] = dist(rng);
  const Vec back = s.matrix * (s.matrix.transpose() * x);
  CHECK((back - x).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("dct2 matches an independent zigzag-ordered construction") {
  const int rows = 3, cols = 3, k = 9;
  const Subspace s = make_dct2_basis(rows, cols, k);
  // Enumerate (p, q) by ascending p+q, ties by ascending p.
  int col = 0;
  for (int sum = 0; sum <= rows + cols - 2; ++sum)
    for (int p = 0; p <= sum; ++p) {
      const int q = sum - p;
      if (p >= rows || q >= cols) continue;
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          CHECK(s.matrix(i * cols + j, col) ==
                doctest::Approx(ref_dct(p, rows, i) * ref_dct(q, cols, j)).epsilon(1e-10));
      ++col;
    }
  CHECK(col == k);
}

TEST_CASE("dct2 rejects out-of-range k") {
  CHECK_THROWS_AS(make_dct2_basis(4, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_dct2_basis(4, 4, 17), std::invalid_argument);
  CHECK_THROWS_AS(make_dct2_basis(0, 4, 1), std::invalid_argument);
}

TEST_CASE("order-2 hadamard with the constant column first") {
  const Subspace s = make_hadamard_basis(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(s.matrix(0, 0) == doctest::Approx(r));
  CHECK(s.matrix(1, 0) == doctest::Approx(r));
  CHECK(s.matrix(0, 1) == doctest::Approx(r));
  CHECK(s.matrix(1, 1) == doctest::Approx(-r));
}

TEST_CASE("large hadamard subspace is orthonormal") {
  const Subspace s = make_hadamard_basis(4096, 8);
  REQUIRE(s.matrix.rows() == 4096);
  const Mat gram = s.matrix.transpose() * s.matrix;
  CHECK((gram - Mat::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("hadamard entries are +-1/sqrt(n)") {
  const Subspace s = make_hadamard_basis(16, 5);
  const double r = 1.0 / 4.0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(std::abs(std::abs(s.matrix(i, j)) - r) < 1e-14);
}

TEST_CASE("hadamard rejects non-powers of two") {
  CHECK_THROWS_AS(make_hadamard_basis(6, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_hadamard_basis(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_hadamard_basis(8, 9), std::invalid_argument);
}

TEST_CASE("sinusoid columns are mutually orthogonal") {
  const Subspace s = make_sinusoid_basis(256, 10);
  REQUIRE(s.matrix.cols() == 10);
  for (int a = 0; a < 10; ++a)
    for (int b = a + 1; b < 10; ++b)
      CHECK(std::abs(s.matrix.col(a).dot(s.matrix.col(b))) < 1e-10);
}

TEST_CASE("fundamental cos/sin pair is orthogonal") {
  const Subspace s = make_sinusoid_basis(8, 2);
  CHECK(std::abs(s.matrix.col(0).dot(s.matrix.col(1))) < 1e-12);
  // cos(2*pi*t/8) at t = 0 is 1 before normalization, so positive after.
  CHECK(s.matrix(0, 0) > 0.0);
  CHECK(std::abs(s.matrix(0, 1)) < 1e-12);
}

TEST_CASE("sinusoid rejects odd or out-of-range k") {
  CHECK_THROWS_AS(make_sinusoid_basis(8, 3), std::invalid_argument);
  CHECK_THROWS_AS(make_sinusoid_basis(8, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_sinusoid_basis(8, 8), std::invalid_argument);
}

TEST_CASE("all constructors return unit-norm columns") {
  for (const Subspace& s :
       {make_dct2_basis(6, 7, 11), make_hadamard_basis(32, 12),
        make_sinusoid_basis(50, 8)}) {
    for (int j = 0; j < s.matrix.cols(); ++j)
      CHECK(std::abs(s.matrix.col(j).norm() - 1.0) < 1e-10);
  }
}

TEST_CASE("constructors are bit-deterministic") {
  const Subspace a = make_dct2_basis(9, 5, 13);
  const Subspace b = make_dct2_basis(9, 5, 13);
  CHECK(std::memcmp(a.matrix.data(), b.matrix.data(),
                    sizeof(double) * a.matrix.size()) == 0);
  const Subspace c = make_hadamard_basis(64, 9);
  const Subspace d = make_hadamard_basis(64, 9);
  CHECK(std::memcmp(c.matrix.data(), d.matrix.data(),
                    sizeof(double) * c.matrix.size()) == 0);
}

TEST_CASE("custom basis normalizes and validates") {
  Mat m(3, 2);
  m << 2, 0, 0, 5, 0, 0;
  const Subspace s = make_custom_basis(m, SignalShape::one_d(3));
  CHECK(s.matrix(0, 0) == doctest::Approx(1.0));
  CHECK(s.matrix(1, 1) == doctest::Approx(1.0));

  Mat zero_col(3, 1);
  zero_col.setZero();
  CHECK_THROWS_AS(make_custom_basis(zero_col, SignalShape::one_d(3)),
                  std::invalid_argument);
  Mat wide(2, 3);
  wide.setOnes();
  CHECK_THROWS_AS(make_custom_basis(wide, SignalShape::one_d(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_custom_basis(m, SignalShape::one_d(4)),
                  std::invalid_argument);
}
