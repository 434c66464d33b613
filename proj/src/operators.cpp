#include "msd/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace msd {

DiffOperator diff_1d(int n) {
  if (n < 2) throw std::invalid_argument("diff_1d: n must be >= 2");
  SpMat d(n - 1, n);
  d.reserve(Eigen::VectorXi::Constant(n - 1, 2));
  for (int i = 0; i < n - 1; ++i) {
    d.insert(i, i) = -1.0;
    d.insert(i, i + 1) = 1.0;
  }
  d.makeCompressed();
  return {std::move(d), SignalShape::one_d(n)};
}

DiffOperator diff_2d(int rows, int cols) {
  if (rows < 2 || cols < 2)
    throw std::invalid_argument("diff_2d: both dimensions must be >= 2");
  const int n = rows * cols;
  const int rx = rows * (cols - 1);
  const int ry = (rows - 1) * cols;
  SpMat d(rx + ry, n);
  d.reserve(Eigen::VectorXi::Constant(rx + ry, 2));
  int r = 0;
  // Dx: differences along each row.
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols - 1; ++j, ++r) {
      d.insert(r, i * cols + j) = -1.0;
      d.insert(r, i * cols + j + 1) = 1.0;
    }
  // Dy: differences along each column.
  for (int i = 0; i < rows - 1; ++i)
    for (int j = 0; j < cols; ++j, ++r) {
      d.insert(r, i * cols + j) = -1.0;
      d.insert(r, (i + 1) * cols + j) = 1.0;
    }
  d.makeCompressed();
  return {std::move(d), SignalShape::two_d(rows, cols)};
}

Vec soft_threshold(const Vec& v, double t) {
  if (t < 0.0) throw std::invalid_argument("soft_threshold: t must be >= 0");
  return v.array().sign() * (v.array().abs() - t).max(0.0);
}

Vec project_box01(const Vec& v) { return v.cwiseMax(0.0).cwiseMin(1.0); }

Vec project_top_k(const Vec& v, int k) {
  if (k < 0) throw std::invalid_argument("project_top_k: K must be >= 0");
  const int n = static_cast<int>(v.size());
  if (k >= n) return v;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Stable partial sort on descending magnitude keeps lowest indices on ties.
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(v[a]) > std::abs(v[b]);
  });
  Vec out = Vec::Zero(n);
  for (int i = 0; i < k; ++i) out[idx[i]] = v[idx[i]];
  return out;
}

double tv(const Vec& w, const DiffOperator& d) {
  if (w.size() != d.matrix.cols())
    throw std::invalid_argument("tv: signal length does not match operator");
  return (d.matrix * w).lpNorm<1>();
}

}  // namespace msd
