#pragma once

#include <vector>

#include "msd/bases.hpp"
#include "msd/operators.hpp"
#include "msd/types.hpp"

namespace msd {

enum class InitScheme { zeros, half, gaussian, uniform01, p1_residual };
enum class BinarizeMode { at_end, per_step };

struct AdmmConfig {
  double lambda1 = 0.3;  // l1 weight on the mask
  double lambda2 = 10.0; // TV weight
  double rho1 = 1.0;
  double rho2 = 1.0;
  int k1 = 10;           // sparsity budget for alpha1
  int k2 = 10;           // sparsity budget for alpha2
  int t_max = 20;
  double tol = 1e-6;     // relative-loss stopping threshold
  InitScheme init = InitScheme::half;
  unsigned seed = 0;     // mandatory for stochastic inits
  BinarizeMode binarize_mode = BinarizeMode::at_end;
  double bin_threshold = 0.5;
  double linsys_tol = 1e-10;  // relative residual for the w linear solve
  double gram_eps = 1e-8;     // ridge added to Gram matrices

  void validate() const;
};

struct Decomposition {
  Vec w_cont;            // relaxed mask, in [0,1]^N
  BinVec w_bin;          // final binary mask
  Vec alpha1, alpha2;    // sparse coefficients
  Vec comp1, comp2;      // P1*alpha1, P2*alpha2
  std::vector<double> loss_trace;  // objective per iteration
  int iterations = 0;
  bool converged = false;
};

// The relaxed masked-decomposition objective:
//   0.5*||x - (1-w).*P1*a1 - w.*P2*a2||^2 + lambda1*||w||_1 + lambda2*||Dw||_1
double loss(const Vec& x, const Subspace& p1, const Subspace& p2,
            const Vec& alpha1, const Vec& alpha2, const Vec& w,
            double lambda1, double lambda2, const DiffOperator& d);

// Closed-form coefficient update for one component. For which=2 solves
//   (P2' W^2 P2 + gram_eps I) a = P2' W (x - (1-w).*P1*a1),  W = diag(w),
// then projects onto the top-K support; which=1 swaps W for I-W.
// Pass k >= num_basis to get the unprojected least-squares solution.
Vec update_alpha(const Vec& x, const Subspace& p_self, const Subspace& p_other,
                 const Vec& alpha_other, const Vec& w, int which, int k,
                 double gram_eps);

// Unprojected solution of the w subproblem linear system
//   (C'C + rho2 D'D + rho1 I) w = C'h + rho1 y + rho2 D'z - u1 - D'u2
// with C = diag(P2a2 - P1a1), h = x - P1a1, solved to linsys_tol.
Vec solve_w_system(const Vec& x, const Vec& p1a1, const Vec& p2a2,
                   const Vec& y, const Vec& z, const Vec& u1, const Vec& u2,
                   double rho1, double rho2, const DiffOperator& d,
                   double linsys_tol);

// solve_w_system followed by the box projection onto [0,1]^N.
Vec update_w(const Vec& x, const Vec& p1a1, const Vec& p2a2,
             const Vec& y, const Vec& z, const Vec& u1, const Vec& u2,
             double rho1, double rho2, const DiffOperator& d,
             double linsys_tol);

// Entry = 1 iff w_cont entry >= threshold.
BinVec binarize(const Vec& w_cont, double threshold);

// Full ADMM solve of the relaxed masked decomposition. Deterministic given
// cfg (including seed).
Decomposition admm_solve(const Vec& x, const Subspace& p1, const Subspace& p2,
                         const AdmmConfig& cfg);

// Additive-model baseline: min 0.5*||x - P1a1 - P2a2||^2
//   + lambda1*||P2a2||_1 + lambda2*TV(P2a2), top-K budgets on both alphas.
// The mask is |P2a2| thresholded at bin_threshold * max|P2a2|.
Decomposition additive_solve(const Vec& x, const Subspace& p1,
                             const Subspace& p2, const AdmmConfig& cfg);

}  // namespace msd
