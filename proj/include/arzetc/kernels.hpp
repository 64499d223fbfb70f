#ifndef ARZETC_KERNELS_HPP_
#define ARZETC_KERNELS_HPP_

#include "arzetc/model.hpp"

#include <Eigen/Dense>

#include <array>

namespace arzetc
{

/// Uniform nodes (x_i, xi_j) = (i h, j h), 0 <= j <= i <= n, on the triangle
/// 0 <= xi <= x <= L.
class TriangularGrid
{
public:
  TriangularGrid(double length, int n_cells);

  int n_cells() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return length_ / n_; }
  double node(int i) const { return i * spacing(); }
  Eigen::VectorXd nodes() const { return uniform_grid(length_, n_); }

  bool operator==(const TriangularGrid &) const = default;

private:
  double length_;
  int n_;
};

/// Scalar field on a TriangularGrid. Entry (i, j) holds the value at
/// (x_i, xi_j) for j <= i; entry (i, i + 1) is a ghost value used only by the
/// bilinear interpolant in cells that straddle the diagonal.
class TriangularField
{
public:
  TriangularField() = default;
  explicit TriangularField(const TriangularGrid & grid);

  double operator()(int i, int j) const { return values_(i, j); }
  double & operator()(int i, int j) { return values_(i, j); }

  /// Bilinear interpolation at a point of the triangle.
  double at(double x, double xi) const;

  /// Ghost (i, i + 1) = average of the neighbouring diagonal nodes.
  void refresh_ghosts();

  /// Values along x = x_i for xi_0..xi_i.
  Eigen::VectorXd row_trace(int i) const { return values_.row(i).head(i + 1).transpose(); }

  double sup_norm() const;
  double max_abs_diff(const TriangularField & other) const;

  const TriangularGrid & grid() const { return grid_; }
  const Eigen::MatrixXd & values() const { return values_; }

private:
  TriangularGrid grid_{1.0, 1};
  Eigen::MatrixXd values_;
};

struct KernelSolverOptions
{
  double tol = 1e-8;
  int max_iter = 200;

  bool operator==(const KernelSolverOptions &) const = default;
};

/// Direct kernels: beta = w- - int_0^x K(x,xi) w+(xi) + M(x,xi) w-(xi) dxi.
struct KernelSet
{
  TriangularGrid grid{1.0, 1};
  std::array<TriangularField, 3> k;
  TriangularField m;
  int iterations = 0;
  double residual = 0.0;

  Eigen::RowVector3d k_at(int i, int j) const { return {k[0](i, j), k[1](i, j), k[2](i, j)}; }
};

/// Inverse kernels: w- = beta + int_0^x L(x,xi) alpha(xi) + N(x,xi) beta(xi) dxi.
struct InverseKernelSet
{
  TriangularGrid grid{1.0, 1};
  std::array<TriangularField, 3> l;
  TriangularField n;
  int iterations = 0;
  double residual = 0.0;

  Eigen::RowVector3d l_at(int i, int j) const { return {l[0](i, j), l[1](i, j), l[2](i, j)}; }

  // Boundary traces at x = L.
  Eigen::RowVector3d l_LL = Eigen::RowVector3d::Zero();
  Eigen::RowVector3d l_L0 = Eigen::RowVector3d::Zero();
  double n_LL = 0.0;
  double n_L0 = 0.0;
};

/// Successive approximation of the direct kernel equations
///   Lm K_x - K_xi Lp = K Spp(xi) + M Smp(xi),   Lm (M_x + M_xi) = K Spm(xi),
///   K(x,x) = -Smp(x) (Lp + Lm)^-1,             M(x,0) = K(x,0) Lp Q / Lm,
/// integrated along characteristics with bilinear interpolation.
/// Throws ConvergenceError after max_iter sweeps.
KernelSet solve_direct_kernels(const LinearizedSystem & sys, const TriangularGrid & grid,
                               const KernelSolverOptions & opts = {});

/// Successive approximation of the inverse kernel equations
///   Lm L_x - L_xi Lp = L Spp(xi) + int_xi^x L(x,s) Spm(s) L(s,xi) ds,
///   Lm (N_x + N_xi) = L Spm(xi) + int_xi^x L(x,s) Spm(s) N(s,xi) ds,
/// with the same boundary data as the direct kernels.
InverseKernelSet solve_inverse_kernels(const LinearizedSystem & sys, const TriangularGrid & grid,
                                       const KernelSolverOptions & opts = {});

/// (w+, w-) -> (alpha, beta). Rows 0..2 of the result are alpha, row 3 is beta.
RiemannField transform_forward(const RiemannField & w, const KernelSet & kernels);

/// (alpha, beta) -> (w+, w-).
RiemannField transform_inverse(const RiemannField & target, const InverseKernelSet & kernels);

/// Discrete Hilbert-Schmidt norm of the Volterra part of each transform, with
/// the same trapezoid weights the transforms use. ||Kw|| <= (1 + norm) ||w||.
double operator_norm(const KernelSet & kernels);
double operator_norm(const InverseKernelSet & kernels);

/// L2 norm over [0, L] (trapezoid) of a four-component field.
double l2_norm(const RiemannField & field, double h);

}  // namespace arzetc

#endif  // ARZETC_KERNELS_HPP_
