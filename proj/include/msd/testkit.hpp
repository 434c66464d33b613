#pragma once

#include <variant>

#include "msd/bases.hpp"
#include "msd/motion.hpp"
#include "msd/operators.hpp"
#include "msd/types.hpp"

namespace msd {

// Ground-truth instance: x = (1-mask).*comp1 + mask.*comp2 exactly, with
// each component drawn from the span of its subspace.
struct SyntheticInstance {
  Vec x;
  BinVec gt_mask;
  Vec gt_comp1, gt_comp2;
  Vec gt_alpha1, gt_alpha2;
  unsigned seed = 0;
  std::string descriptor;
};

struct MetricsReport {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct OracleResult {
  BinVec mask;
  Vec alpha1, alpha2;
  double objective = 0.0;  // exact l0 objective value
};

// 1D mask models: independent Bernoulli(p) entries, or alternating
// geometric-length runs giving piecewise-constant masks.
struct BernoulliMask {
  double p = 0.3;
};
struct RunsMask {
  double mean_len = 20.0;  // mean foreground run length
  double density = 0.3;    // target foreground fraction
};
using MaskModel1d = std::variant<BernoulliMask, RunsMask>;

// 2D mask models: random rectangles up to a coverage target, glyph-like
// strokes, or Bernoulli.
struct RectsMask {
  double density = 0.15;
};
struct GlyphsMask {
  double density = 0.15;
};
using MaskModel2d = std::variant<RectsMask, GlyphsMask, BernoulliMask>;

SyntheticInstance gen_masked_1d(int n, const Subspace& p1, const Subspace& p2,
                                const MaskModel1d& model, unsigned seed);

SyntheticInstance gen_masked_2d(int rows, int cols, const Subspace& p1,
                                const Subspace& p2, const MaskModel2d& model,
                                unsigned seed);

struct Rect {
  int x0 = 0, y0 = 0, width = 0, height = 0;
};

// Homography flow everywhere, overwritten by a constant translation inside
// rect, plus i.i.d. Gaussian noise. gt_mask marks rect.
std::pair<FlowField, BinVec> gen_outlier_flow(int width, int height,
                                              const Homography& a,
                                              const Rect& rect, double rect_dx,
                                              double rect_dy, double noise_sigma,
                                              unsigned seed);

// Exhaustive solver of the exact l0 problem: enumerates every binary mask
// (n <= 20), fits each component by least squares on its support with the
// top-K rule, and returns the minimizer of
//   0.5*||residual||^2 + lambda1*||w||_0 + lambda2*||Dw||_1.
// Ties go to smaller ||w||_0, then lexicographically smaller mask.
OracleResult oracle_solve(const Vec& x, const Subspace& p1, const Subspace& p2,
                          double lambda1, double lambda2, int k1, int k2,
                          const DiffOperator& d);

// Precision/recall/F1 with 1-entries as positives. Conventions: precision
// and recall are 1 when their denominators are 0; f1 is 0 when both are 0.
MetricsReport metrics(const BinVec& pred, const BinVec& gt);

}  // namespace msd
