#pragma once

#include <vector>

#include "msd/operators.hpp"
#include "msd/types.hpp"

namespace msd {

// Per-pixel motion vectors on a width x height grid, row-major, so pixel
// (x, y) lands at index y*width + x. u is horizontal, v vertical
// displacement in pixels/frame.
struct FlowField {
  int width = 0;
  int height = 0;
  Vec u;
  Vec v;

  int size() const { return width * height; }
  void validate() const;
};

// Eight-parameter perspective mapping
//   x' = (a1 + a2 x + a3 y) / (1 + a7 x + a8 y)
//   y' = (a4 + a5 x + a6 y) / (1 + a7 x + a8 y)
struct Homography {
  Eigen::Matrix<double, 8, 1> a;

  static Homography identity() {
    Homography h;
    h.a << 0, 1, 0, 0, 0, 1, 0, 0;
    return h;
  }
};

struct MotionConfig {
  double lambda1 = 1.0;   // l1 weight on the outlier displacements s
  double lambda2 = 0.8;   // l1 weight on the mask w
  double lambda3 = 0.5;   // TV weight on w
  double rho1 = 1.0;
  double rho2 = 1.0;
  int t_max = 50;
  double tol = 1e-6;
  double bin_threshold = 0.5;
  double linsys_tol = 1e-10;
  double guard_eps = 1e-8;  // floor on w^2 in the s update

  void validate() const;
};

struct MotionSegResult {
  Homography a;
  Vec s_x, s_y;          // outlier displacement fields (pixels)
  Vec w_cont;            // relaxed mask in [0,1]^(WH)
  BinVec w_bin;
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = false;
};

// Design matrices for the stacked homography system: one row pair per pixel
// in row-major order, pixel coordinates are zero-based grid indices.
struct MotionDesign {
  Mat p_x, p_y;  // WH x 8
  Vec b_x, b_y;  // targets x+u and y+v
};

std::pair<double, double> homography_apply(const Homography& a, double x, double y);

MotionDesign build_design(const FlowField& flow);

// Plain least squares of the homography over the whole flow field.
Homography ls_global_motion(const FlowField& flow);

// Synthesizes the flow field induced by a homography on a grid.
FlowField flow_from_homography(const Homography& a, int width, int height);

// Masked outlier decomposition of the flow: global homography plus a
// sparse, connected outlier field, solved by ADMM.
MotionSegResult motion_segment(const FlowField& flow, const MotionConfig& cfg);

}  // namespace msd
