#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "msd/bases.hpp"
#include "msd/masked_admm.hpp"
#include "msd/testkit.hpp"

using namespace msd;

namespace {

// The 4-sample worked instance used throughout: P1 spans constants, P2 the
// alternating sign pattern, and x disagrees with the constant at sample 1.
struct Toy4 {
  Subspace p1, p2;
  Vec x;
  DiffOperator d;
  Toy4() {
    Mat m1(4, 1), m2(4, 1);
    m1 << 0.5, 0.5, 0.5, 0.5;
    m2 << 0.5, -0.5, 0.5, -0.5;
    p1 = make_custom_basis(m1, SignalShape::one_d(4));
    p2 = make_custom_basis(m2, SignalShape::one_d(4));
    x = Vec(4);
    x << 1, -1, 1, 1;
    d = diff_1d(4);
  }
};

Vec random_vec(int n, std::mt19937& rng) {
  std::normal_distribution<double> dist;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("loss is zero on an exact background-only fit") {
  const Subspace p1 = make_sinusoid_basis(16, 4);
  const Subspace p2 = make_hadamard_basis(16, 4);
  Vec a1(4);
  a1 << 1.0, -2.0, 0.5, 0.0;
  const Vec x = p1.matrix * a1;
  CHECK(loss(x, p1, p2, a1, Vec::Zero(4), Vec::Zero(16), 0.5, 0.5, diff_1d(16)) ==
        doctest::Approx(0.0));
}

TEST_CASE("loss on the worked 4-sample instance") {
  const Toy4 t;
  Vec a1(1), a2(1), w(4);
  a1 << 2;
  a2 << 2;
  w << 0, 1, 0, 0;
  // Residual vanishes; the mask costs lambda1*1 + lambda2*2.
  CHECK(loss(t.x, t.p1, t.p2, a1, a2, w, 0.1, 0.1, t.d) == doctest::Approx(0.3));
}

TEST_CASE("loss equals an independent straight-line evaluation") {
  std::mt19937 rng(23);
  const int n = 32;
  const Subspace p1 = make_sinusoid_basis(n, 6);
  const Subspace p2 = make_hadamard_basis(n, 6);
  const DiffOperator d = diff_1d(n);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_vec(n, rng);
    const Vec a1 = random_vec(6, rng);
    const Vec a2 = random_vec(6, rng);
    const Vec w = project_box01(random_vec(n, rng));
    const double l1 = 0.35, l2 = 2.0;

    double direct = 0.0;
    for (int i = 0; i < n; ++i) {
      double model = 0.0;
      for (int j = 0; j < 6; ++j)
        model += (1.0 - w[i]) * p1.matrix(i, j) * a1[j] + w[i] * p2.matrix(i, j) * a2[j];
      direct += 0.5 * (x[i] - model) * (x[i] - model) + l1 * std::abs(w[i]);
    }
    for (int i = 0; i + 1 < n; ++i) direct += l2 * std::abs(w[i + 1] - w[i]);

    CHECK(loss(x, p1, p2, a1, a2, w, l1, l2, d) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("loss rejects mismatched dimensions") {
  const Toy4 t;
  CHECK_THROWS_AS(loss(t.x, t.p1, t.p2, Vec::Zero(2), Vec::Zero(1), Vec::Zero(4),
                       0.1, 0.1, t.d),
                  std::invalid_argument);
  CHECK_THROWS_AS(loss(t.x, t.p1, t.p2, Vec::Zero(1), Vec::Zero(1), Vec::Zero(5),
                       0.1, 0.1, t.d),
                  std::invalid_argument);
}

TEST_CASE("update_alpha with a full mask is plain least squares") {
  std::mt19937 rng(31);
  const int n = 24;
  const Subspace p2 = make_sinusoid_basis(n, 6);
  const Subspace p1 = make_dct2_basis(n, 1, 6);
  const Vec x = random_vec(n, rng);
  const Vec a = update_alpha(x, p2, p1, Vec::Zero(6), Vec::Ones(n), 2, 6, 0.0);
  const Vec ls = (p2.matrix.transpose() * p2.matrix)
                     .ldlt()
                     .solve(p2.matrix.transpose() * x);
  CHECK((a - ls).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("update_alpha fails loudly on an all-zero mask") {
  const int n = 16;
  const Subspace p1 = make_sinusoid_basis(n, 4);
  const Subspace p2 = make_hadamard_basis(n, 4);
  CHECK_THROWS_AS(
      update_alpha(Vec::Ones(n), p2, p1, Vec::Zero(4), Vec::Zero(n), 2, 4, 0.0),
      SingularSystemError);
}

TEST_CASE("update_alpha result is a local minimum of its weighted residual") {
  std::mt19937 rng(37);
  const int n = 40, k = 5;
  const Subspace p1 = make_sinusoid_basis(n, 4);
  const Subspace p2n = make_dct2_basis(n, 1, k);
  const Vec x = random_vec(n, rng);
  const Vec a1 = random_vec(4, rng);
  const Vec w = project_box01(random_vec(n, rng).cwiseAbs());
  // k = num_basis means no top-K truncation, so the quadratic term alone
  // should be stationary.
  const Vec a = update_alpha(x, p2n, p1, a1, w, 2, k, 0.0);
  // The data term masks only the component, not the whole residual.
  const Vec target = x - (Vec::Ones(n) - w).cwiseProduct(p1.matrix * a1);
  auto quad = [&](const Vec& alpha) {
    return (target - w.cwiseProduct(p2n.matrix * alpha)).squaredNorm();
  };
  const double base = quad(a);
  for (int trial = 0; trial < 50; ++trial) {
    Vec delta = random_vec(k, rng);
    delta *= 1e-3 / delta.norm();
    CHECK(quad(a + delta) >= base - 1e-9);
  }
}

TEST_CASE("update_w vanishes when the components agree") {
  const int n = 12;
  std::mt19937 rng(41);
  const Vec x = random_vec(n, rng);
  const Vec shared = random_vec(n, rng);
  const DiffOperator d = diff_1d(n);
  const Vec w = update_w(x, shared, shared, Vec::Zero(n), Vec::Zero(n - 1),
                         Vec::Zero(n), Vec::Zero(n - 1), 1.0, 1.0, d, 1e-10);
  CHECK(w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("update_w output lies in the box") {
  std::mt19937 rng(43);
  const int n = 30;
  const DiffOperator d = diff_1d(n);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec w = update_w(random_vec(n, rng), random_vec(n, rng),
                           random_vec(n, rng), random_vec(n, rng),
                           random_vec(n - 1, rng), random_vec(n, rng),
                           random_vec(n - 1, rng), 2.0, 3.0, d, 1e-10);
    CHECK(w.minCoeff() >= 0.0);
    CHECK(w.maxCoeff() <= 1.0);
  }
}

TEST_CASE("solve_w_system meets its residual target") {
  std::mt19937 rng(47);
  const int n = 25;
  const DiffOperator d = diff_1d(n);
  const double rho1 = 1.5, rho2 = 2.5, tol = 1e-10;
  const Vec x = random_vec(n, rng);
  const Vec p1a1 = random_vec(n, rng);
  const Vec p2a2 = random_vec(n, rng);
  const Vec y = random_vec(n, rng);
  const Vec z = random_vec(n - 1, rng);
  const Vec u1 = random_vec(n, rng);
  const Vec u2 = random_vec(n - 1, rng);
  const Vec w = solve_w_system(x, p1a1, p2a2, y, z, u1, u2, rho1, rho2, d, tol);

  const Vec c = p2a2 - p1a1;
  const Mat dm = Mat(d.matrix);
  const Mat m = c.cwiseAbs2().asDiagonal().toDenseMatrix() +
                rho2 * dm.transpose() * dm +
                rho1 * Mat::Identity(n, n);
  const Vec rhs = c.cwiseProduct(x - p1a1) + rho1 * y + rho2 * dm.transpose() * z -
                  u1 - dm.transpose() * u2;
  CHECK((m * w - rhs).norm() <= tol * rhs.norm() * 10.0);
}

TEST_CASE("binarize thresholding") {
  Vec w(2);
  w << 0.7, 0.2;
  const BinVec b = binarize(w, 0.5);
  CHECK(b[0] == 1);
  CHECK(b[1] == 0);

  Vec boundary(1);
  boundary << 0.5;
  CHECK(binarize(boundary, 0.5)[0] == 1);

  Vec already(4);
  already << 0, 1, 1, 0;
  const BinVec same = binarize(already, 0.3);
  for (int i = 0; i < 4; ++i) CHECK(same[i] == static_cast<int>(already[i]));
}

TEST_CASE("admm_solve matches the oracle on the worked instance") {
  const Toy4 t;
  AdmmConfig cfg;
  cfg.lambda1 = cfg.lambda2 = 0.1;
  cfg.k1 = cfg.k2 = 1;
  cfg.rho1 = cfg.rho2 = 1.0;
  cfg.t_max = 10;
  const Decomposition dec = admm_solve(t.x, t.p1, t.p2, cfg);
  const Vec wb = dec.w_bin.cast<double>();
  const double obj = loss(t.x, t.p1, t.p2, dec.alpha1, dec.alpha2, wb, 0.1, 0.1, t.d);
  CHECK(obj <= 0.3 * 1.05);
}

TEST_CASE("a pure background signal yields the empty mask") {
  const int n = 32;
  const Subspace p1 = make_sinusoid_basis(n, 6);
  const Subspace p2 = make_hadamard_basis(n, 6);
  std::mt19937 rng(53);
  const Vec x = p1.matrix * (10.0 * random_vec(6, rng));
  AdmmConfig cfg;
  cfg.k1 = cfg.k2 = 6;
  cfg.t_max = 30;
  const Decomposition dec = admm_solve(x, p1, p2, cfg);
  CHECK(dec.w_bin.sum() == 0);
}

TEST_CASE("admm_solve is deterministic including stochastic inits") {
  const int n = 64;
  const Subspace p1 = make_sinusoid_basis(n, 6);
  const Subspace p2 = make_hadamard_basis(n, 6);
  const auto inst = gen_masked_1d(n, p1, p2, RunsMask{8.0, 0.3}, 5);
  AdmmConfig cfg;
  cfg.k1 = cfg.k2 = 6;
  cfg.init = InitScheme::gaussian;
  cfg.seed = 99;
  const Decomposition a = admm_solve(inst.x, p1, p2, cfg);
  const Decomposition b = admm_solve(inst.x, p1, p2, cfg);
  CHECK((a.w_cont - b.w_cont).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.alpha2 - b.alpha2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("decomposition invariants hold on random instances") {
  const int n = 128;
  const Subspace p1 = make_sinusoid_basis(n, 10);
  const Subspace p2 = make_hadamard_basis(n, 10);
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto inst = gen_masked_1d(n, p1, p2, RunsMask{16.0, 0.3}, seed);
    AdmmConfig cfg;
    cfg.t_max = 15;
    const Decomposition dec = admm_solve(inst.x, p1, p2, cfg);

    CHECK(dec.w_cont.minCoeff() >= 0.0);
    CHECK(dec.w_cont.maxCoeff() <= 1.0);
    CHECK((dec.alpha1.array() != 0.0).count() <= cfg.k1);
    CHECK((dec.alpha2.array() != 0.0).count() <= cfg.k2);
    CHECK(static_cast<int>(dec.loss_trace.size()) == dec.iterations);
    for (double l : dec.loss_trace) CHECK(std::isfinite(l));

    // Either the trace ends below tol in relative change or t_max was hit.
    if (dec.converged) {
      REQUIRE(dec.loss_trace.size() >= 2);
      const double last = dec.loss_trace.back();
      const double prev = dec.loss_trace[dec.loss_trace.size() - 2];
      CHECK(std::abs(last - prev) / std::max(std::abs(prev), 1e-300) <= cfg.tol);
    } else {
      CHECK(dec.iterations == cfg.t_max);
    }
  }
}

TEST_CASE("per-step binarization keeps the mask binary") {
  const int n = 64;
  const Subspace p1 = make_sinusoid_basis(n, 6);
  const Subspace p2 = make_hadamard_basis(n, 6);
  const auto inst = gen_masked_1d(n, p1, p2, RunsMask{8.0, 0.3}, 2);
  AdmmConfig cfg;
  cfg.k1 = cfg.k2 = 6;
  cfg.binarize_mode = BinarizeMode::per_step;
  const Decomposition dec = admm_solve(inst.x, p1, p2, cfg);
  for (int i = 0; i < n; ++i)
    CHECK((dec.w_cont[i] == 0.0 || dec.w_cont[i] == 1.0));
}

TEST_CASE("init schemes agree on well-posed instances") {
  const int n = 256;
  const Subspace p1 = make_sinusoid_basis(n, 10);
  const Subspace p2 = make_hadamard_basis(n, 10);
  const double scale = 1.5 * std::sqrt(double(n));
  const InitScheme schemes[5] = {InitScheme::zeros, InitScheme::half,
                                 InitScheme::gaussian, InitScheme::uniform01,
                                 InitScheme::p1_residual};
  double agree = 0.0;
  int pairs = 0;
  for (unsigned seed = 0; seed < 5; ++seed) {
    auto inst = gen_masked_1d(n, p1, p2, RunsMask{20.0, 0.3}, seed + 2000);
    inst.gt_comp1 *= scale;
    inst.gt_comp2 *= scale;
    for (int i = 0; i < n; ++i)
      inst.x[i] = inst.gt_mask[i] ? inst.gt_comp2[i] : inst.gt_comp1[i];
    BinVec masks[5];
    for (int a = 0; a < 5; ++a) {
      AdmmConfig cfg;
      cfg.rho2 = 4.0;
      cfg.bin_threshold = 0.35;
      cfg.init = schemes[a];
      cfg.seed = seed;
      masks[a] = admm_solve(inst.x, p1, p2, cfg).w_bin;
    }
    for (int a = 0; a < 5; ++a)
      for (int b = a + 1; b < 5; ++b) {
        agree += metrics(masks[a], masks[b]).f1;
        ++pairs;
      }
  }
  CHECK(agree / pairs >= 0.9);
}

TEST_CASE("additive baseline fits pure background with an empty component") {
  const int n = 32;
  const Subspace p1 = make_sinusoid_basis(n, 6);
  const Subspace p2 = make_hadamard_basis(n, 6);
  std::mt19937 rng(61);
  const Vec x = p1.matrix * (5.0 * random_vec(6, rng));
  AdmmConfig cfg;
  cfg.k1 = cfg.k2 = 6;
  cfg.lambda1 = 0.3;
  cfg.lambda2 = 1.0;
  cfg.t_max = 50;
  const Decomposition dec = additive_solve(x, p1, p2, cfg);
  CHECK(dec.comp2.cwiseAbs().maxCoeff() < 1e-3 * x.cwiseAbs().maxCoeff());
  CHECK((x - dec.comp1 - dec.comp2).cwiseAbs().maxCoeff() < 1e-4 * x.cwiseAbs().maxCoeff());
}

TEST_CASE("additive baseline is deterministic") {
  const int n = 64;
  const Subspace p1 = make_sinusoid_basis(n, 6);
  const Subspace p2 = make_hadamard_basis(n, 6);
  const auto inst = gen_masked_1d(n, p1, p2, RunsMask{8.0, 0.3}, 7);
  AdmmConfig cfg;
  cfg.k1 = cfg.k2 = 6;
  const Decomposition a = additive_solve(inst.x, p1, p2, cfg);
  const Decomposition b = additive_solve(inst.x, p1, p2, cfg);
  CHECK((a.alpha1 - b.alpha1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.alpha2 - b.alpha2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("config validation rejects bad parameters") {
  AdmmConfig cfg;
  cfg.lambda1 = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AdmmConfig{};
  cfg.rho1 = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AdmmConfig{};
  cfg.k1 = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AdmmConfig{};
  cfg.t_max = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AdmmConfig{};
  cfg.tol = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AdmmConfig{};
  cfg.bin_threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
