#include "msd/motion.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>

namespace msd {

void FlowField::validate() const {
  if (width < 2 || height < 2)
    throw std::invalid_argument("FlowField: grid must be at least 2x2");
  if (u.size() != size() || v.size() != size())
    throw std::invalid_argument("FlowField: u/v size does not match grid");
}

void MotionConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0)
    throw std::invalid_argument("MotionConfig: lambdas must be >= 0");
  if (rho1 <= 0.0 || rho2 <= 0.0)
    throw std::invalid_argument("MotionConfig: rhos must be > 0");
  if (t_max < 1) throw std::invalid_argument("MotionConfig: t_max must be >= 1");
  if (tol <= 0.0) throw std::invalid_argument("MotionConfig: tol must be > 0");
  if (bin_threshold <= 0.0 || bin_threshold >= 1.0)
    throw std::invalid_argument("MotionConfig: bin_threshold must be in (0,1)");
}

std::pair<double, double> homography_apply(const Homography& h, double x, double y) {
  const auto& a = h.a;
  const double den = 1.0 + a[6] * x + a[7] * y;
  if (std::abs(den) < 1e-12)
    throw SolverError("homography_apply: degenerate mapping (zero denominator)");
  return {(a[0] + a[1] * x + a[2] * y) / den, (a[3] + a[4] * x + a[5] * y) / den};
}

MotionDesign build_design(const FlowField& flow) {
  flow.validate();
  const int n = flow.size();
  MotionDesign d;
  d.p_x.resize(n, 8);
  d.p_y.resize(n, 8);
  d.b_x.resize(n);
  d.b_y.resize(n);
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const int i = y * flow.width + x;
      const double tx = x + flow.u[i];
      const double ty = y + flow.v[i];
      d.p_x.row(i) << 1, x, y, 0, 0, 0, -x * tx, -y * tx;
      d.p_y.row(i) << 0, 0, 0, 1, x, y, -x * ty, -y * ty;
      d.b_x[i] = tx;
      d.b_y[i] = ty;
    }
  }
  return d;
}

Homography ls_global_motion(const FlowField& flow) {
  const MotionDesign d = build_design(flow);
  const int n = flow.size();
  Mat p(2 * n, 8);
  p.topRows(n) = d.p_x;
  p.bottomRows(n) = d.p_y;
  Vec b(2 * n);
  b.head(n) = d.b_x;
  b.tail(n) = d.b_y;

  Eigen::ColPivHouseholderQR<Mat> qr(p);
  if (qr.rank() < 8)
    throw DegenerateFitError("ls_global_motion: rank-deficient design matrix");
  Homography h;
  h.a = qr.solve(b);
  return h;
}

FlowField flow_from_homography(const Homography& a, int width, int height) {
  FlowField flow;
  flow.width = width;
  flow.height = height;
  flow.u.resize(width * height);
  flow.v.resize(width * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto [xn, yn] = homography_apply(a, x, y);
      flow.u[y * width + x] = xn - x;
      flow.v[y * width + x] = yn - y;
    }
  flow.validate();
  return flow;
}

MotionSegResult motion_segment(const FlowField& flow, const MotionConfig& cfg) {
  cfg.validate();
  const MotionDesign dsn = build_design(flow);
  const int n = flow.size();
  const DiffOperator d = diff_2d(flow.height, flow.width);
  const SpMat dtd = SpMat(d.matrix.transpose()) * d.matrix;

  Vec w = Vec::Constant(n, 0.5);
  Vec sx = Vec::Zero(n), sy = Vec::Zero(n);
  Vec y = w;
  Vec z = d.matrix * w;
  Vec u1 = Vec::Zero(n);
  Vec u2 = Vec::Zero(d.matrix.rows());
  // Seed the homography with the unweighted fit. Fitting it inside the loop
  // against the uniform initial mask would just absorb the (1-w) factor into
  // a scaled-up a, zeroing the residual that the s and w updates feed on.
  Eigen::Matrix<double, 8, 1> a = ls_global_motion(flow).a;

  // s holds the per-pixel displacement away from the global model, so the
  // data term reads (b - Pa) = w o s per direction.
  auto objective = [&](const Vec& wv) {
    const Vec rx = dsn.b_x - dsn.p_x * a - wv.cwiseProduct(sx);
    const Vec ry = dsn.b_y - dsn.p_y * a - wv.cwiseProduct(sy);
    return 0.5 * rx.squaredNorm() + 0.5 * ry.squaredNorm()
           + cfg.lambda1 * (sx.lpNorm<1>() + sy.lpNorm<1>())
           + cfg.lambda2 * wv.lpNorm<1>() + cfg.lambda3 * (d.matrix * wv).lpNorm<1>();
  };

  MotionSegResult out;
  double prev_loss = objective(w);

  for (int j = 1; j <= cfg.t_max; ++j) {
    // s: elementwise shrinkage against the residual excluding s.
    const Vec res_x = dsn.b_x - dsn.p_x * a;
    const Vec res_y = dsn.b_y - dsn.p_y * a;
    auto soft = [](double v, double t) {
      return std::copysign(std::max(std::abs(v) - t, 0.0), v);
    };
    for (int i = 0; i < n; ++i) {
      const double denom = std::max(w[i] * w[i], cfg.guard_eps);
      sx[i] = soft(w[i] * res_x[i], cfg.lambda1) / denom;
      sy[i] = soft(w[i] * res_y[i], cfg.lambda1) / denom;
    }

    // w: aggregate the x and y quadratic terms into one diagonal-plus-TV system.
    SpMat m = cfg.rho2 * dtd;
    SpMat diag(n, n);
    diag.reserve(Eigen::VectorXi::Constant(n, 1));
    for (int i = 0; i < n; ++i)
      diag.insert(i, i) = sx[i] * sx[i] + sy[i] * sy[i] + cfg.rho1;
    m += diag;
    const Vec rhs_w = sx.cwiseProduct(res_x) + sy.cwiseProduct(res_y)
                      + cfg.rho1 * y + cfg.rho2 * (d.matrix.transpose() * z)
                      - u1 - d.matrix.transpose() * u2;
    if (rhs_w.norm() == 0.0) {
      w.setZero();
    } else {
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
      cg.setTolerance(cfg.linsys_tol);
      cg.setMaxIterations(20 * n);
      cg.compute(m);
      Vec sol = cg.solve(rhs_w);
      const double residual = (m * sol - rhs_w).norm() / rhs_w.norm();
      if (residual > cfg.linsys_tol * 10.0)
        throw ConvergenceError("motion_segment: w solve missed tolerance", residual);
      w = project_box01(sol);
    }

    const Vec dw = d.matrix * w;
    y = soft_threshold(w + u1 / cfg.rho1, cfg.lambda2 / cfg.rho1);
    z = soft_threshold(dw + u2 / cfg.rho2, cfg.lambda3 / cfg.rho2);
    u1 += cfg.rho1 * (w - y);
    u2 += cfg.rho2 * (dw - z);

    // a: least squares over both stacks, weighted by (1-w)^2 with the masked
    // object motion removed from the target.
    const Vec om = Vec::Ones(n) - w;
    const Vec wt = om.array().square();
    Mat gram = dsn.p_x.transpose() * wt.asDiagonal() * dsn.p_x
               + dsn.p_y.transpose() * wt.asDiagonal() * dsn.p_y;
    const Vec rhs_a =
        dsn.p_x.transpose() * wt.cwiseProduct(dsn.b_x - w.cwiseProduct(sx))
        + dsn.p_y.transpose() * wt.cwiseProduct(dsn.b_y - w.cwiseProduct(sy));
    Eigen::LDLT<Mat> ldlt(gram);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-13)
      throw DegenerateFitError("motion_segment: degenerate homography system");
    a = ldlt.solve(rhs_a);

    const double l = objective(w);
    if (!std::isfinite(l)) throw DivergenceError("motion_segment: non-finite loss");
    out.loss_trace.push_back(l);
    out.iterations = j;
    const double rel = std::abs(l - prev_loss) / std::max(std::abs(prev_loss), 1e-300);
    prev_loss = l;
    // The first iteration can leave the loss numerically unchanged while the
    // iterates are still at their initial values, so never stop on it.
    if (j >= 2 && rel <= cfg.tol) {
      out.converged = true;
      break;
    }
  }

  out.a.a = a;
  out.w_cont = w;
  out.w_bin = Eigen::VectorXi(n);
  for (int i = 0; i < n; ++i) out.w_bin[i] = w[i] >= cfg.bin_threshold ? 1 : 0;
  // Cleanup pass: outlier displacements only live on the binary mask.
  out.s_x = sx;
  out.s_y = sy;
  for (int i = 0; i < n; ++i)
    if (out.w_bin[i] == 0) {
      out.s_x[i] = 0.0;
      out.s_y[i] = 0.0;
    }
  return out;
}

}  // namespace msd
