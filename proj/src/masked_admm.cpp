#include "msd/masked_admm.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <random>

namespace msd {

namespace {

DiffOperator make_diff(const SignalShape& shape) {
  return shape.cols == 1 ? diff_1d(shape.rows) : diff_2d(shape.rows, shape.cols);
}

// The TV operator follows the 2D grid if either subspace carries one.
SignalShape pick_shape(const Subspace& p1, const Subspace& p2, int n) {
  if (p1.shape.cols > 1 && p1.shape.size() == n) return p1.shape;
  if (p2.shape.cols > 1 && p2.shape.size() == n) return p2.shape;
  return SignalShape::one_d(n);
}

// Shared core of solve_w_system / update_w / admm_solve, with D'D precomputed.
Vec solve_w_core(const Vec& x, const Vec& p1a1, const Vec& p2a2,
                 const Vec& y, const Vec& z, const Vec& u1, const Vec& u2,
                 double rho1, double rho2, const DiffOperator& d,
                 const SpMat& dtd, double linsys_tol) {
  const int n = static_cast<int>(x.size());
  if (p1a1.size() != n || p2a2.size() != n || y.size() != n || u1.size() != n ||
      z.size() != d.matrix.rows() || u2.size() != d.matrix.rows())
    throw std::invalid_argument("update_w: inconsistent dimensions");
  if (rho1 <= 0.0 || rho2 <= 0.0)
    throw std::invalid_argument("update_w: rho1 and rho2 must be positive");

  const Vec c = p2a2 - p1a1;
  const Vec h = x - p1a1;

  SpMat m = rho2 * dtd;
  SpMat diag(n, n);
  diag.reserve(Eigen::VectorXi::Constant(n, 1));
  for (int i = 0; i < n; ++i) diag.insert(i, i) = c[i] * c[i] + rho1;
  m += diag;

  const Vec rhs = c.cwiseProduct(h) + rho1 * y + rho2 * (d.matrix.transpose() * z)
                  - u1 - d.matrix.transpose() * u2;
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return Vec::Zero(n);

  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(linsys_tol);
  cg.setMaxIterations(20 * n);
  cg.compute(m);
  Vec w = cg.solve(rhs);
  const double residual = (m * w - rhs).norm() / rhs_norm;
  if (residual > linsys_tol * 10.0)
    throw ConvergenceError("update_w: linear solve missed tolerance", residual);
  return w;
}

Vec initial_mask(const Vec& x, const Subspace& p1, const AdmmConfig& cfg) {
  const int n = static_cast<int>(x.size());
  switch (cfg.init) {
    case InitScheme::zeros:
      return Vec::Zero(n);
    case InitScheme::half:
      return Vec::Constant(n, 0.5);
    case InitScheme::gaussian: {
      std::mt19937 rng(cfg.seed);
      std::normal_distribution<double> dist(0.5, std::sqrt(0.1));
      Vec w(n);
      for (int i = 0; i < n; ++i) w[i] = std::clamp(dist(rng), 0.0, 1.0);
      return w;
    }
    case InitScheme::uniform01: {
      std::mt19937 rng(cfg.seed);
      std::uniform_real_distribution<double> dist(0.0, 1.0);
      Vec w(n);
      for (int i = 0; i < n; ++i) w[i] = dist(rng);
      return w;
    }
    case InitScheme::p1_residual: {
      // Fit x with P1 alone; samples with above-average fitting error
      // start out as foreground.
      const Vec a = p1.matrix.colPivHouseholderQr().solve(x);
      const Vec r = (x - p1.matrix * a).cwiseAbs();
      const double cut = r.mean();
      Vec w(n);
      for (int i = 0; i < n; ++i) w[i] = r[i] > cut ? 1.0 : 0.0;
      return w;
    }
  }
  throw std::invalid_argument("unknown initialization scheme");
}

}  // namespace

void AdmmConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0)
    throw std::invalid_argument("AdmmConfig: lambda1 and lambda2 must be >= 0");
  if (rho1 <= 0.0 || rho2 <= 0.0)
    throw std::invalid_argument("AdmmConfig: rho1 and rho2 must be > 0");
  if (k1 < 1 || k2 < 1)
    throw std::invalid_argument("AdmmConfig: K1 and K2 must be >= 1");
  if (t_max < 1) throw std::invalid_argument("AdmmConfig: t_max must be >= 1");
  if (tol <= 0.0) throw std::invalid_argument("AdmmConfig: tol must be > 0");
  if (bin_threshold <= 0.0 || bin_threshold >= 1.0)
    throw std::invalid_argument("AdmmConfig: bin_threshold must be in (0,1)");
  if (linsys_tol <= 0.0)
    throw std::invalid_argument("AdmmConfig: linsys_tol must be > 0");
  if (gram_eps < 0.0)
    throw std::invalid_argument("AdmmConfig: gram_eps must be >= 0");
}

double loss(const Vec& x, const Subspace& p1, const Subspace& p2,
            const Vec& alpha1, const Vec& alpha2, const Vec& w,
            double lambda1, double lambda2, const DiffOperator& d) {
  const int n = static_cast<int>(x.size());
  if (p1.dim() != n || p2.dim() != n || w.size() != n ||
      alpha1.size() != p1.num_basis() || alpha2.size() != p2.num_basis() ||
      d.matrix.cols() != n)
    throw std::invalid_argument("loss: inconsistent dimensions");
  const Vec residual = x - (Vec::Ones(n) - w).cwiseProduct(p1.matrix * alpha1)
                         - w.cwiseProduct(p2.matrix * alpha2);
  return 0.5 * residual.squaredNorm() + lambda1 * w.lpNorm<1>()
         + lambda2 * (d.matrix * w).lpNorm<1>();
}

Vec update_alpha(const Vec& x, const Subspace& p_self, const Subspace& p_other,
                 const Vec& alpha_other, const Vec& w, int which, int k,
                 double gram_eps) {
  const int n = static_cast<int>(x.size());
  if (p_self.dim() != n || p_other.dim() != n || w.size() != n)
    throw std::invalid_argument("update_alpha: inconsistent dimensions");
  if (which != 1 && which != 2)
    throw std::invalid_argument("update_alpha: which must be 1 or 2");

  const Vec wm = (which == 2) ? w : Vec(Vec::Ones(n) - w);
  const Vec other_mask = Vec::Ones(n) - wm;
  const Vec r = x - other_mask.cwiseProduct(p_other.matrix * alpha_other);

  Mat gram = p_self.matrix.transpose()
             * wm.array().square().matrix().asDiagonal() * p_self.matrix;
  gram.diagonal().array() += gram_eps;
  const Vec rhs = p_self.matrix.transpose() * wm.cwiseProduct(r);

  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
    throw SingularSystemError("update_alpha: singular Gram matrix for component " +
                              std::to_string(which));
  return project_top_k(ldlt.solve(rhs), k);
}

Vec solve_w_system(const Vec& x, const Vec& p1a1, const Vec& p2a2,
                   const Vec& y, const Vec& z, const Vec& u1, const Vec& u2,
                   double rho1, double rho2, const DiffOperator& d,
                   double linsys_tol) {
  const SpMat dtd = SpMat(d.matrix.transpose()) * d.matrix;
  return solve_w_core(x, p1a1, p2a2, y, z, u1, u2, rho1, rho2, d, dtd, linsys_tol);
}

Vec update_w(const Vec& x, const Vec& p1a1, const Vec& p2a2,
             const Vec& y, const Vec& z, const Vec& u1, const Vec& u2,
             double rho1, double rho2, const DiffOperator& d,
             double linsys_tol) {
  return project_box01(solve_w_system(x, p1a1, p2a2, y, z, u1, u2,
                                      rho1, rho2, d, linsys_tol));
}

BinVec binarize(const Vec& w_cont, double threshold) {
  BinVec out(w_cont.size());
  for (int i = 0; i < w_cont.size(); ++i) out[i] = w_cont[i] >= threshold ? 1 : 0;
  return out;
}

Decomposition admm_solve(const Vec& x, const Subspace& p1, const Subspace& p2,
                         const AdmmConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(x.size());
  if (p1.dim() != n || p2.dim() != n)
    throw std::invalid_argument("admm_solve: subspace dimension mismatch");

  const DiffOperator d = make_diff(pick_shape(p1, p2, n));
  const SpMat dtd = SpMat(d.matrix.transpose()) * d.matrix;

  Vec w = initial_mask(x, p1, cfg);
  Vec a1 = Vec::Zero(p1.num_basis());
  Vec a2 = Vec::Zero(p2.num_basis());
  Vec y = w;
  Vec z = d.matrix * w;
  Vec u1 = Vec::Zero(n);
  Vec u2 = Vec::Zero(d.matrix.rows());

  Decomposition out;
  double prev_loss = loss(x, p1, p2, a1, a2, w, cfg.lambda1, cfg.lambda2, d);

  for (int j = 1; j <= cfg.t_max; ++j) {
    a1 = update_alpha(x, p1, p2, a2, w, 1, cfg.k1, cfg.gram_eps);
    a2 = update_alpha(x, p2, p1, a1, w, 2, cfg.k2, cfg.gram_eps);
    const Vec p1a1 = p1.matrix * a1;
    const Vec p2a2 = p2.matrix * a2;
    w = project_box01(solve_w_core(x, p1a1, p2a2, y, z, u1, u2,
                                   cfg.rho1, cfg.rho2, d, dtd, cfg.linsys_tol));
    if (cfg.binarize_mode == BinarizeMode::per_step)
      w = binarize(w, cfg.bin_threshold).cast<double>();
    const Vec dw = d.matrix * w;
    y = soft_threshold(w + u1 / cfg.rho1, cfg.lambda1 / cfg.rho1);
    z = soft_threshold(dw + u2 / cfg.rho2, cfg.lambda2 / cfg.rho2);
    u1 += cfg.rho1 * (w - y);
    u2 += cfg.rho2 * (dw - z);

    const double l = loss(x, p1, p2, a1, a2, w, cfg.lambda1, cfg.lambda2, d);
    if (!std::isfinite(l)) throw DivergenceError("admm_solve: non-finite loss");
    out.loss_trace.push_back(l);
    out.iterations = j;
    const double rel = std::abs(l - prev_loss) / std::max(std::abs(prev_loss), 1e-300);
    prev_loss = l;
    // Never stop on the first iteration: a stalled first step can leave the
    // loss at its initial value without the iterates having moved anywhere.
    if (j >= 2 && rel <= cfg.tol) {
      out.converged = true;
      break;
    }
  }

  out.w_cont = w;
  out.w_bin = binarize(w, cfg.bin_threshold);
  // One more pair of alpha updates at the binarized mask, so the returned
  // coefficients describe the mask actually reported.
  const Vec wb = out.w_bin.cast<double>();
  a1 = update_alpha(x, p1, p2, a2, wb, 1, cfg.k1, cfg.gram_eps);
  a2 = update_alpha(x, p2, p1, a1, wb, 2, cfg.k2, cfg.gram_eps);
  out.alpha1 = a1;
  out.alpha2 = a2;
  out.comp1 = p1.matrix * a1;
  out.comp2 = p2.matrix * a2;
  return out;
}

Decomposition additive_solve(const Vec& x, const Subspace& p1,
                             const Subspace& p2, const AdmmConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(x.size());
  if (p1.dim() != n || p2.dim() != n)
    throw std::invalid_argument("additive_solve: subspace dimension mismatch");

  const DiffOperator d = make_diff(pick_shape(p1, p2, n));
  const Mat q = d.matrix * p2.matrix;  // D*P2, dense and small in columns
  const int m1 = p1.num_basis();
  const int m2 = p2.num_basis();

  Vec a1 = Vec::Zero(m1);
  Vec a2 = Vec::Zero(m2);
  Vec y = Vec::Zero(n);                 // auxiliary for P2*a2
  Vec z = Vec::Zero(d.matrix.rows());   // auxiliary for D*P2*a2
  Vec u1 = Vec::Zero(n);
  Vec u2 = Vec::Zero(d.matrix.rows());

  Mat gram1 = p1.matrix.transpose() * p1.matrix;
  gram1.diagonal().array() += cfg.gram_eps;
  const Eigen::LDLT<Mat> ldlt1(gram1);
  if (ldlt1.info() != Eigen::Success || ldlt1.rcond() < 1e-14)
    throw SingularSystemError("additive_solve: singular Gram matrix for component 1");

  Mat system2 = (1.0 + cfg.rho1) * (p2.matrix.transpose() * p2.matrix)
                + cfg.rho2 * (q.transpose() * q);
  system2.diagonal().array() += cfg.gram_eps;
  const Eigen::LDLT<Mat> ldlt2(system2);
  if (ldlt2.info() != Eigen::Success || ldlt2.rcond() < 1e-14)
    throw SingularSystemError("additive_solve: singular system for component 2");

  auto objective = [&](const Vec& c2) {
    return 0.5 * (x - p1.matrix * a1 - c2).squaredNorm()
           + cfg.lambda1 * c2.lpNorm<1>() + cfg.lambda2 * (d.matrix * c2).lpNorm<1>();
  };

  Decomposition out;
  double prev_loss = objective(p2.matrix * a2);

  for (int j = 1; j <= cfg.t_max; ++j) {
    a1 = project_top_k(ldlt1.solve(p1.matrix.transpose() * (x - p2.matrix * a2)),
                       cfg.k1);
    const Vec rhs2 = p2.matrix.transpose() * (x - p1.matrix * a1)
                     + p2.matrix.transpose() * (cfg.rho1 * y - u1)
                     + q.transpose() * (cfg.rho2 * z - u2);
    a2 = project_top_k(ldlt2.solve(rhs2), cfg.k2);
    const Vec c2 = p2.matrix * a2;
    const Vec dc2 = q * a2;
    y = soft_threshold(c2 + u1 / cfg.rho1, cfg.lambda1 / cfg.rho1);
    z = soft_threshold(dc2 + u2 / cfg.rho2, cfg.lambda2 / cfg.rho2);
    u1 += cfg.rho1 * (c2 - y);
    u2 += cfg.rho2 * (dc2 - z);

    const double l = objective(c2);
    if (!std::isfinite(l)) throw DivergenceError("additive_solve: non-finite loss");
    out.loss_trace.push_back(l);
    out.iterations = j;
    const double rel = std::abs(l - prev_loss) / std::max(std::abs(prev_loss), 1e-300);
    prev_loss = l;
    if (j >= 2 && rel <= cfg.tol) {
      out.converged = true;
      break;
    }
  }

  out.alpha1 = a1;
  out.alpha2 = a2;
  out.comp1 = p1.matrix * a1;
  out.comp2 = p2.matrix * a2;
  const Vec mag = out.comp2.cwiseAbs();
  const double peak = mag.maxCoeff();
  out.w_cont = peak > 0.0 ? Vec(mag / peak) : Vec(Vec::Zero(n));
  out.w_bin = BinVec::Zero(n);
  if (peak > 0.0)
    for (int i = 0; i < n; ++i)
      out.w_bin[i] = mag[i] >= cfg.bin_threshold * peak ? 1 : 0;
  return out;
}

}  // namespace msd
