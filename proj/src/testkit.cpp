#include "msd/testkit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace msd {

namespace {

BinVec draw_mask_1d(int n, const MaskModel1d& model, std::mt19937& rng) {
  BinVec mask = BinVec::Zero(n);
  if (const auto* bern = std::get_if<BernoulliMask>(&model)) {
    std::bernoulli_distribution coin(bern->p);
    for (int i = 0; i < n; ++i) mask[i] = coin(rng) ? 1 : 0;
    return mask;
  }
  const auto& runs = std::get<RunsMask>(model);
  if (runs.density <= 0.0) return mask;
  if (runs.density >= 1.0) return BinVec::Ones(n);
  // Alternating geometric-length runs; background runs are stretched so the
  // expected foreground fraction matches `density`.
  const double fg_mean = std::max(runs.mean_len, 1.0);
  const double bg_mean =
      std::max(fg_mean * (1.0 - runs.density) / runs.density, 1.0);
  std::geometric_distribution<int> fg_len(1.0 / fg_mean);
  std::geometric_distribution<int> bg_len(1.0 / bg_mean);
  std::bernoulli_distribution start(runs.density);
  int state = start(rng) ? 1 : 0;
  int i = 0;
  while (i < n) {
    const int len = 1 + (state == 1 ? fg_len(rng) : bg_len(rng));
    for (int j = 0; j < len && i < n; ++j, ++i) mask[i] = state;
    state = 1 - state;
  }
  return mask;
}

double coverage(const BinVec& mask) {
  return mask.sum() / static_cast<double>(mask.size());
}

BinVec draw_mask_2d(int rows, int cols, const MaskModel2d& model,
                    std::mt19937& rng) {
  const int n = rows * cols;
  BinVec mask = BinVec::Zero(n);
  if (const auto* bern = std::get_if<BernoulliMask>(&model)) {
    std::bernoulli_distribution coin(bern->p);
    for (int i = 0; i < n; ++i) mask[i] = coin(rng) ? 1 : 0;
    return mask;
  }
  if (const auto* rects = std::get_if<RectsMask>(&model)) {
    if (rects->density <= 0.0) return mask;
    std::uniform_int_distribution<int> rx(0, cols - 1), ry(0, rows - 1);
    std::uniform_int_distribution<int> rw(1, std::max(cols / 3, 1));
    std::uniform_int_distribution<int> rh(1, std::max(rows / 3, 1));
    for (int attempt = 0; attempt < 64 && coverage(mask) < rects->density;
         ++attempt) {
      const int x0 = rx(rng), y0 = ry(rng);
      const int w = rw(rng), h = rh(rng);
      for (int i = y0; i < std::min(y0 + h, rows); ++i)
        for (int j = x0; j < std::min(x0 + w, cols); ++j) mask[i * cols + j] = 1;
    }
    return mask;
  }
  // Glyph-like strokes: thick random line segments.
  const auto& glyphs = std::get<GlyphsMask>(model);
  if (glyphs.density <= 0.0) return mask;
  std::uniform_int_distribution<int> rx(0, cols - 1), ry(0, rows - 1);
  std::uniform_int_distribution<int> rdir(0, 7);
  std::uniform_int_distribution<int> rlen(2, std::max(rows / 2, 2));
  static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  for (int attempt = 0; attempt < 256 && coverage(mask) < glyphs.density;
       ++attempt) {
    int x = rx(rng), y = ry(rng);
    const int dir = rdir(rng);
    const int len = rlen(rng);
    for (int step = 0; step < len; ++step) {
      for (int oy = 0; oy < 2; ++oy)
        for (int ox = 0; ox < 2; ++ox) {
          const int yy = y + oy, xx = x + ox;
          if (yy >= 0 && yy < rows && xx >= 0 && xx < cols) mask[yy * cols + xx] = 1;
        }
      x += dx[dir];
      y += dy[dir];
      if (x < 0 || x >= cols || y < 0 || y >= rows) break;
    }
  }
  return mask;
}

SyntheticInstance compose(const Subspace& p1, const Subspace& p2, BinVec mask,
                          unsigned seed, std::mt19937& rng,
                          std::string descriptor) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec a1(p1.num_basis()), a2(p2.num_basis());
  for (int i = 0; i < a1.size(); ++i) a1[i] = gauss(rng);
  for (int i = 0; i < a2.size(); ++i) a2[i] = gauss(rng);

  SyntheticInstance inst;
  inst.gt_alpha1 = a1;
  inst.gt_alpha2 = a2;
  inst.gt_comp1 = p1.matrix * a1;
  inst.gt_comp2 = p2.matrix * a2;
  inst.gt_mask = std::move(mask);
  inst.seed = seed;
  inst.descriptor = std::move(descriptor);
  const int n = p1.dim();
  inst.x.resize(n);
  for (int i = 0; i < n; ++i)
    inst.x[i] = inst.gt_mask[i] ? inst.gt_comp2[i] : inst.gt_comp1[i];
  return inst;
}

}  // namespace

SyntheticInstance gen_masked_1d(int n, const Subspace& p1, const Subspace& p2,
                                const MaskModel1d& model, unsigned seed) {
  if (p1.dim() != n || p2.dim() != n)
    throw std::invalid_argument("gen_masked_1d: subspace dimension mismatch");
  std::mt19937 rng(seed);
  BinVec mask = draw_mask_1d(n, model, rng);
  return compose(p1, p2, std::move(mask), seed, rng,
                 "1d n=" + std::to_string(n));
}

SyntheticInstance gen_masked_2d(int rows, int cols, const Subspace& p1,
                                const Subspace& p2, const MaskModel2d& model,
                                unsigned seed) {
  if (p1.dim() != rows * cols || p2.dim() != rows * cols)
    throw std::invalid_argument("gen_masked_2d: subspace dimension mismatch");
  std::mt19937 rng(seed);
  BinVec mask = draw_mask_2d(rows, cols, model, rng);
  return compose(p1, p2, std::move(mask), seed, rng,
                 "2d " + std::to_string(rows) + "x" + std::to_string(cols));
}

std::pair<FlowField, BinVec> gen_outlier_flow(int width, int height,
                                              const Homography& a,
                                              const Rect& rect, double rect_dx,
                                              double rect_dy, double noise_sigma,
                                              unsigned seed) {
  if (rect.width < 0 || rect.height < 0 || rect.x0 < 0 || rect.y0 < 0 ||
      rect.x0 + rect.width > width || rect.y0 + rect.height > height)
    throw std::invalid_argument("gen_outlier_flow: rect out of bounds");

  FlowField flow = flow_from_homography(a, width, height);
  BinVec gt = BinVec::Zero(width * height);
  for (int y = rect.y0; y < rect.y0 + rect.height; ++y)
    for (int x = rect.x0; x < rect.x0 + rect.width; ++x) {
      const int i = y * width + x;
      flow.u[i] = rect_dx;
      flow.v[i] = rect_dy;
      gt[i] = 1;
    }
  if (noise_sigma > 0.0) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (int i = 0; i < flow.size(); ++i) {
      flow.u[i] += noise(rng);
      flow.v[i] += noise(rng);
    }
  }
  return {std::move(flow), std::move(gt)};
}

OracleResult oracle_solve(const Vec& x, const Subspace& p1, const Subspace& p2,
                          double lambda1, double lambda2, int k1, int k2,
                          const DiffOperator& d) {
  const int n = static_cast<int>(x.size());
  if (n > 20) throw SizeLimitError("oracle_solve: n must be <= 20");
  if (p1.dim() != n || p2.dim() != n || d.matrix.cols() != n)
    throw std::invalid_argument("oracle_solve: inconsistent dimensions");

  // Least squares of x on the support rows of P, then the top-K rule.
  auto fit = [&](const Subspace& p, const std::vector<int>& support, int k) {
    if (support.empty()) return Vec(Vec::Zero(p.num_basis()));
    Mat rows(support.size(), p.num_basis());
    Vec target(support.size());
    for (size_t i = 0; i < support.size(); ++i) {
      rows.row(i) = p.matrix.row(support[i]);
      target[i] = x[support[i]];
    }
    Mat gram = rows.transpose() * rows;
    gram.diagonal().array() += 1e-10;
    Vec alpha = gram.ldlt().solve(rows.transpose() * target);
    return project_top_k(alpha, k);
  };

  OracleResult best;
  bool have_best = false;
  int best_popcount = 0;
  BinVec w(n);

  for (long m = 0; m < (1L << n); ++m) {
    std::vector<int> s1, s2;
    int popcount = 0;
    for (int i = 0; i < n; ++i) {
      w[i] = (m >> i) & 1;
      if (w[i]) {
        s2.push_back(i);
        ++popcount;
      } else {
        s1.push_back(i);
      }
    }
    const Vec a1 = fit(p1, s1, k1);
    const Vec a2 = fit(p2, s2, k2);
    double residual = 0.0;
    const Vec c1 = p1.matrix * a1;
    const Vec c2 = p2.matrix * a2;
    for (int i : s1) residual += (x[i] - c1[i]) * (x[i] - c1[i]);
    for (int i : s2) residual += (x[i] - c2[i]) * (x[i] - c2[i]);
    const double obj = 0.5 * residual + lambda1 * popcount
                       + lambda2 * (d.matrix * w.cast<double>()).lpNorm<1>();

    bool take = false;
    if (!have_best || obj < best.objective - 1e-12) {
      take = true;
    } else if (obj <= best.objective + 1e-12) {
      if (popcount < best_popcount) take = true;
      else if (popcount == best_popcount &&
               std::lexicographical_compare(w.data(), w.data() + n,
                                            best.mask.data(), best.mask.data() + n))
        take = true;
    }
    if (take) {
      best.mask = w;
      best.alpha1 = a1;
      best.alpha2 = a2;
      best.objective = obj;
      best_popcount = popcount;
      have_best = true;
    }
  }
  return best;
}

MetricsReport metrics(const BinVec& pred, const BinVec& gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("metrics: length mismatch");
  MetricsReport r;
  for (int i = 0; i < pred.size(); ++i) {
    if (pred[i] && gt[i]) ++r.tp;
    else if (pred[i] && !gt[i]) ++r.fp;
    else if (!pred[i] && gt[i]) ++r.fn;
  }
  r.precision = (r.tp + r.fp) > 0 ? double(r.tp) / (r.tp + r.fp) : 1.0;
  r.recall = (r.tp + r.fn) > 0 ? double(r.tp) / (r.tp + r.fn) : 1.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

}  // namespace msd
