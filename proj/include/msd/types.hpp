#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace msd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using BinVec = Eigen::VectorXi;  // entries 0/1

// Shape of the vectorized signal. 2D signals are rasterized row-major,
// so sample (i, j) of an (rows x cols) grid lands at index i*cols + j.
struct SignalShape {
  int rows = 0;
  int cols = 1;

  static SignalShape one_d(int n) { return {n, 1}; }
  static SignalShape two_d(int rows, int cols) { return {rows, cols}; }

  int size() const { return rows * cols; }
  bool operator==(const SignalShape&) const = default;
};

// Solver-facing error taxonomy. Argument validation uses std::invalid_argument.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularSystemError : SolverError {
  using SolverError::SolverError;
};

// Iterative linear solve missed its residual target; carries what it reached.
struct ConvergenceError : SolverError {
  double achieved_residual;
  ConvergenceError(const std::string& msg, double residual)
      : SolverError(msg), achieved_residual(residual) {}
};

struct DivergenceError : SolverError {
  using SolverError::SolverError;
};

struct DegenerateFitError : SolverError {
  using SolverError::SolverError;
};

struct SizeLimitError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace msd
