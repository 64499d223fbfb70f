#include "support.hpp"

#include "arzetc/errors.hpp"

#include <doctest.h>

using namespace arzetc;

namespace
{

// Resolvent identities linking the two kernel pairs, evaluated with the
// trapezoid rule on the nodes:
//   L(x,s) = K(x,s) + int_s^x N(x,xi) K(xi,s) dxi
//   N(x,s) = M(x,s) + int_s^x N(x,xi) M(xi,s) dxi
double resolvent_defect(const KernelSet & d, const InverseKernelSet & v)
{
  const int n = d.grid.n_cells();
  const double h = d.grid.spacing();
  double worst = 0.0;
  for (int i = 0; i <= n; ++i) {
    for (int s = 0; s <= i; ++s) {
      Eigen::RowVector3d acc_l = Eigen::RowVector3d::Zero();
      double acc_n = 0.0;
      for (int k = s; k <= i; ++k) {
        const double wgt = (k == s || k == i) && i > s ? 0.5 * h : (i > s ? h : 0.0);
        acc_l += wgt * v.n(i, k) * d.k_at(k, s);
        acc_n += wgt * v.n(i, k) * d.m(k, s);
      }
      worst = std::max(worst, (v.l_at(i, s) - d.k_at(i, s) - acc_l).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(v.n(i, s) - d.m(i, s) - acc_n));
    }
  }
  return worst;
}

// Largest difference between a grid and its 2x refinement on the coarse nodes.
double self_difference(const KernelSet & coarse, const KernelSet & fine)
{
  const int n = coarse.grid.n_cells();
  double worst = 0.0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= i; ++j) {
      worst = std::max(worst, (coarse.k_at(i, j) - fine.k_at(2 * i, 2 * j)).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(coarse.m(i, j) - fine.m(2 * i, 2 * j)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("triangular field interpolation")
{
  const TriangularGrid grid(2.0, 4);
  CHECK(grid.spacing() == 0.5);
  CHECK(grid.node(3) == 1.5);
  TriangularField f(grid);
  // A bilinear function is reproduced exactly, ghosts included.
  for (int i = 0; i <= 4; ++i) {
    for (int j = 0; j <= std::min(i + 1, 4); ++j) {
      f(i, j) = 1.0 + 2.0 * grid.node(i) - grid.node(j) + 0.5 * grid.node(i) * grid.node(j);
    }
  }
  CHECK(f.at(1.3, 0.7) == doctest::Approx(1.0 + 2.6 - 0.7 + 0.5 * 1.3 * 0.7));
  CHECK(f.at(2.0, 2.0) == doctest::Approx(1.0 + 4.0 - 2.0 + 2.0));
  CHECK(f.row_trace(2).size() == 3);
  CHECK(f.sup_norm() >= f(4, 0));
}

TEST_CASE("direct kernels satisfy their boundary conditions on the nodes")
{
  const LinearizedSystem sys = test::paper_system();
  const TriangularGrid grid(sys.length, 64);
  const KernelSet ks = solve_direct_kernels(sys, grid);
  CHECK(ks.residual < 1e-8);
  const Eigen::Matrix3d lp = sys.lambda_plus().asDiagonal();
  const double lm = sys.lambda_minus();
  const Eigen::Matrix3d denom_inv =
    (lp + lm * Eigen::Matrix3d::Identity()).inverse();
  for (int i = 0; i <= 64; ++i) {
    const double x = grid.node(i);
    const Eigen::RowVector3d diag = -sys.sigma_mp(x) * denom_inv;
    CHECK((ks.k_at(i, i) - diag).cwiseAbs().maxCoeff() < 1e-12);
    const double m0 = (ks.k_at(i, 0) * lp * sys.Q).value() / lm;
    CHECK(std::abs(ks.m(i, 0) - m0) < 1e-12);
  }
}

TEST_CASE("inverse kernels share the boundary data")
{
  const LinearizedSystem sys = test::paper_system();
  const TriangularGrid grid(sys.length, 64);
  const InverseKernelSet ks = solve_inverse_kernels(sys, grid);
  const Eigen::Matrix3d lp = sys.lambda_plus().asDiagonal();
  const double lm = sys.lambda_minus();
  for (int i = 0; i <= 64; ++i) {
    const double x = grid.node(i);
    const Eigen::RowVector3d diag =
      -sys.sigma_mp(x) * (lp + lm * Eigen::Matrix3d::Identity()).inverse();
    CHECK((ks.l_at(i, i) - diag).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(ks.n(i, 0) - (ks.l_at(i, 0) * lp * sys.Q).value() / lm) < 1e-12);
  }
  CHECK((ks.l_LL - ks.l_at(64, 64)).norm() == 0.0);
  CHECK(ks.n_L0 == ks.n(64, 0));
}

TEST_CASE("kernels vanish without in-domain coupling")
{
  LinearizedSystem sys = test::paper_system();
  sys.source_hat.setZero();
  const TriangularGrid grid(sys.length, 32);
  const KernelSet d = solve_direct_kernels(sys, grid);
  const InverseKernelSet v = solve_inverse_kernels(sys, grid);
  CHECK(d.m.sup_norm() == 0.0);
  CHECK(v.n.sup_norm() == 0.0);
  for (int c = 0; c < 3; ++c) {
    CHECK(d.k[c].sup_norm() == 0.0);
    CHECK(v.l[c].sup_norm() == 0.0);
  }
}

TEST_CASE("direct kernels self-converge at first order")
{
  const LinearizedSystem sys = test::paper_system();
  std::vector<KernelSet> sets;
  for (int n : {32, 64, 128}) {
    sets.push_back(solve_direct_kernels(sys, TriangularGrid(sys.length, n)));
  }
  const double e1 = self_difference(sets[0], sets[1]);
  const double e2 = self_difference(sets[1], sets[2]);
  MESSAGE("self differences " << e1 << " " << e2);
  CHECK(std::log2(e1 / e2) >= 0.9);
}

TEST_CASE("resolvent identity between direct and inverse kernels")
{
  const LinearizedSystem sys = test::paper_system();
  std::vector<double> h, err;
  for (int n : {32, 64, 128}) {
    const TriangularGrid grid(sys.length, n);
    h.push_back(grid.spacing());
    err.push_back(resolvent_defect(solve_direct_kernels(sys, grid),
                                   solve_inverse_kernels(sys, grid)));
  }
  MESSAGE("resolvent defects " << err[0] << " " << err[1] << " " << err[2]);
  CHECK(test::fitted_order(h, err) >= 0.9);
}

TEST_CASE("forward then inverse transform recovers the state at first order")
{
  const LinearizedSystem sys = test::paper_system();
  std::vector<double> h, err;
  for (int n : {32, 64, 128}) {
    const TriangularGrid grid(sys.length, n);
    const RiemannField w = test::smooth_field(n);
    const RiemannField back = transform_inverse(
      transform_forward(w, solve_direct_kernels(sys, grid)), solve_inverse_kernels(sys, grid));
    h.push_back(grid.spacing());
    err.push_back(l2_norm(back - w, grid.spacing()) / l2_norm(w, grid.spacing()));
  }
  MESSAGE("composition errors " << err[0] << " " << err[1] << " " << err[2]);
  CHECK(test::fitted_order(h, err) >= 0.9);
  CHECK(err.back() < 1e-2);
}

TEST_CASE("transforms reject mismatched grids")
{
  const Plant & plant = test::paper_plant(32);
  const RiemannField w = test::smooth_field(40);
  CHECK_THROWS_AS(transform_forward(w, plant.direct), NumericalError);
  CHECK_THROWS_AS(transform_inverse(w, plant.inverse), NumericalError);
}

TEST_CASE("solver reports non-convergence")
{
  const LinearizedSystem sys = test::paper_system();
  KernelSolverOptions opts;
  opts.max_iter = 1;
  CHECK_THROWS_AS(solve_direct_kernels(sys, TriangularGrid(sys.length, 16), opts),
                  ConvergenceError);
}

TEST_CASE("norms")
{
  RiemannField ones = RiemannField::Ones(4, 11);
  CHECK(l2_norm(ones, 0.1) == doctest::Approx(2.0));
  const Plant & plant = test::paper_plant(32);
  CHECK(operator_norm(plant.direct) > 0.0);
  CHECK(operator_norm(plant.inverse) > 0.0);
  // ||T w|| <= (1 + theta) ||w||
  const RiemannField w = test::smooth_field(32);
  const double h = plant.direct.grid.spacing();
  CHECK(l2_norm(transform_forward(w, plant.direct), h) <=
        (1.0 + operator_norm(plant.direct)) * l2_norm(w, h) + 1e-12);
}
