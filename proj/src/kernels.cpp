#include "arzetc/kernels.hpp"

#include "arzetc/errors.hpp"
#include "arzetc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace arzetc
{

TriangularGrid::TriangularGrid(double length, int n_cells)
: length_(length), n_(n_cells)
{
  if (!(length > 0.0) || n_cells < 1) {
    throw DomainError("TriangularGrid: need positive length and at least one cell");
  }
}

TriangularField::TriangularField(const TriangularGrid & grid)
: grid_(grid), values_(Eigen::MatrixXd::Zero(grid.n_cells() + 1, grid.n_cells() + 1))
{
}

double TriangularField::at(double x, double xi) const
{
  const int n = grid_.n_cells();
  const double inv_h = 1.0 / grid_.spacing();
  const double fx = x * inv_h;
  const double fy = xi * inv_h;
  const int i = std::clamp(static_cast<int>(std::floor(fx)) + 1, 1, n);
  const int j = std::min(std::clamp(static_cast<int>(std::floor(fy)) + 1, 1, n), i);
  const double tx = std::clamp(fx - (i - 1), 0.0, 1.0);
  const double ty = std::clamp(fy - (j - 1), 0.0, 1.0);
  return (1.0 - tx) * (1.0 - ty) * values_(i - 1, j - 1) + tx * (1.0 - ty) * values_(i, j - 1) +
         (1.0 - tx) * ty * values_(i - 1, j) + tx * ty * values_(i, j);
}

void TriangularField::refresh_ghosts()
{
  const int n = grid_.n_cells();
  for (int i = 0; i < n; ++i) {
    values_(i, i + 1) = 0.5 * (values_(i, i) + values_(i + 1, i + 1));
  }
}

double TriangularField::sup_norm() const
{
  double s = 0.0;
  for (int i = 0; i < values_.rows(); ++i) {
    s = std::max(s, values_.row(i).head(i + 1).cwiseAbs().maxCoeff());
  }
  return s;
}

double TriangularField::max_abs_diff(const TriangularField & other) const
{
  double s = 0.0;
  for (int i = 0; i < values_.rows(); ++i) {
    s = std::max(s, (values_.row(i).head(i + 1) - other.values_.row(i).head(i + 1))
                      .cwiseAbs().maxCoeff());
  }
  return s;
}

namespace
{

enum class KernelKind { direct, inverse };

struct GoursatSolution
{
  std::array<TriangularField, 3> row;
  TriangularField scalar;
  int iterations = 0;
  double residual = 0.0;
};

// Both kernel pairs share the characteristic structure; they differ in the
// zeroth-order coupling of the row kernel and in the nonlocal terms of the
// inverse equations.
GoursatSolution solve_goursat(const LinearizedSystem & sys, const TriangularGrid & grid,
                              const KernelSolverOptions & opts, KernelKind kind)
{
  if (!(opts.tol > 0.0) || opts.max_iter < 1) {
    throw DomainError("kernel solver: tol must be > 0 and max_iter >= 1");
  }
  if (!(sys.lambda(3) < 0.0)) {
    throw RegimeError("kernel solver: requires a congested system (lambda_4 < 0)");
  }
  if (std::abs(grid.length() - sys.length) > 1e-9 * sys.length) {
    throw DomainError("kernel solver: grid length differs from the road length");
  }

  const int n = grid.n_cells();
  const double h = grid.spacing();
  const Eigen::Vector3d lp = sys.lambda_plus();
  const double lm = sys.lambda_minus();
  const Eigen::Vector4d rates = sys.decay_rates();
  const Eigen::Matrix4d & jh = sys.source_hat;

  // sigma(a, b, x) = Jhat_ab exp(-(r_a - r_b) x)
  const auto coupling = [&](int a, int b, double x) {
    return a == b ? 0.0 : jh(a, b) * std::exp(-(rates(a) - rates(b)) * x);
  };
  const auto diagonal_value = [&](int c, double x) { return -coupling(3, c, x) / (lp(c) + lm); };

  std::vector<Eigen::Matrix4d> sigma_nodes(n + 1);
  for (int i = 0; i <= n; ++i) {
    sigma_nodes[i] = sys.sigma(grid.node(i));
  }

  GoursatSolution cur;
  for (auto & f : cur.row) {
    f = TriangularField(grid);
  }
  cur.scalar = TriangularField(grid);
  std::array<TriangularField, 3> extra_row;
  for (auto & f : extra_row) {
    f = TriangularField(grid);
  }
  TriangularField extra_scalar(grid);

  const double coupling_weight = kind == KernelKind::direct ? 1.0 : 0.0;
  double diff = 0.0;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    if (kind == KernelKind::inverse) {
      // int_xi^x L(x,s) Spm(s) {L, N}(s,xi) ds on the nodes s = x_j..x_i
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
      for (int i = 0; i <= n; ++i) {
        for (int m = 0; m <= i; ++m) {
          double s = 0.0;
          for (int b = 0; b < 3; ++b) {
            s += cur.row[b](i, m) * sigma_nodes[m](b, 3);
          }
          a(i, m) = s;
        }
      }
      for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= i; ++j) {
          Eigen::Array4d acc = Eigen::Array4d::Zero();
          for (int m = j; m <= i; ++m) {
            const double w = (m == j || m == i) ? 0.5 : 1.0;
            const double am = w * a(i, m);
            acc(0) += am * cur.row[0](m, j);
            acc(1) += am * cur.row[1](m, j);
            acc(2) += am * cur.row[2](m, j);
            acc(3) += am * cur.scalar(m, j);
          }
          if (i == j) {
            acc.setZero();
          }
          for (int c = 0; c < 3; ++c) {
            extra_row[c](i, j) = h * acc(c);
          }
          extra_scalar(i, j) = h * acc(3);
        }
      }
      for (auto & f : extra_row) {
        f.refresh_ghosts();
      }
      extra_scalar.refresh_ghosts();
    }

    GoursatSolution next;
    for (auto & f : next.row) {
      f = TriangularField(grid);
    }
    next.scalar = TriangularField(grid);

    for (int i = 0; i <= n; ++i) {
      const double x = grid.node(i);
      for (int j = 0; j <= i; ++j) {
        for (int c = 0; c < 3; ++c) {
          if (i == j) {
            next.row[c](i, i) = diagonal_value(c, x);
            continue;
          }
          // Characteristic (x0 + lm s, x0 - lp_c s) from the diagonal to (x_i, xi_j).
          const double xi = grid.node(j);
          const double s_end = (x - xi) / (lp(c) + lm);
          const double x0 = x - lm * s_end;
          const int n_sub = i - j;
          const double ds = s_end / n_sub;

          // Coupling coefficients along the path evolve geometrically in s.
          std::array<double, 4> coef{};
          std::array<double, 4> ratio{};
          for (int b = 0; b < 4; ++b) {
            const double rate = rates(b) - rates(c);
            const double scale = (b == 3 ? coupling_weight : 1.0);
            coef[b] = b == c ? 0.0 : scale * jh(b, c) * std::exp(-rate * x0);
            ratio[b] = std::exp(rate * lp(c) * ds);
          }
          // sigma(b, c, xi) = Jhat_bc exp(-(r_b - r_c) xi) with xi = x0 - lp_c s
          double acc = 0.0;
          for (int k = 0; k <= n_sub; ++k) {
            const double s = k * ds;
            const double px = std::min(x0 + lm * s, sys.length);
            const double pxi = std::max(x0 - lp(c) * s, 0.0);
            double f = 0.0;
            for (int b = 0; b < 3; ++b) {
              if (b != c) {
                f += cur.row[b].at(px, pxi) * coef[b];
              }
            }
            if (coupling_weight != 0.0) {
              f += cur.scalar.at(px, pxi) * coef[3];
            } else {
              f += extra_row[c].at(px, pxi);
            }
            acc += (k == 0 || k == n_sub) ? 0.5 * f : f;
            for (int b = 0; b < 4; ++b) {
              coef[b] *= ratio[b];
            }
          }
          next.row[c](i, j) = diagonal_value(c, x0) + ds * acc;
        }
      }
    }
    for (auto & f : next.row) {
      f.refresh_ghosts();
    }

    // Scalar kernel along (x - xi + s, s), all on nodes, from the updated rows.
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= i; ++j) {
        const int i0 = i - j;
        double base = 0.0;
        for (int c = 0; c < 3; ++c) {
          base += next.row[c](i0, 0) * lp(c) * sys.Q(c);
        }
        double acc = 0.0;
        for (int k = 0; k <= j; ++k) {
          double f = 0.0;
          for (int b = 0; b < 3; ++b) {
            f += next.row[b](i0 + k, k) * sigma_nodes[k](b, 3);
          }
          if (kind == KernelKind::inverse) {
            f += extra_scalar(i0 + k, k);
          }
          acc += (k == 0 || k == j) ? 0.5 * f : f;
        }
        if (j == 0) {
          acc = 0.0;
        }
        next.scalar(i, j) = (base + h * acc) / lm;
      }
    }
    next.scalar.refresh_ghosts();

    diff = next.scalar.max_abs_diff(cur.scalar);
    for (int c = 0; c < 3; ++c) {
      diff = std::max(diff, next.row[c].max_abs_diff(cur.row[c]));
    }
    if (!std::isfinite(diff)) {
      throw ConvergenceError("kernel solver: iterate became non-finite", diff, iter);
    }
    next.iterations = iter;
    next.residual = diff;
    cur = std::move(next);
    if (diff < opts.tol) {
      return cur;
    }
  }
  throw ConvergenceError("kernel solver: no convergence after " + std::to_string(opts.max_iter) +
                           " iterations (last residual " + std::to_string(diff) + ")",
                         diff, opts.max_iter);
}

double hilbert_schmidt(const std::array<TriangularField, 3> & row, const TriangularField & scalar)
{
  const auto & grid = scalar.grid();
  const int n = grid.n_cells();
  const double h = grid.spacing();
  const Eigen::VectorXd outer = trapezoid_weights(n + 1, h);
  double total = 0.0;
  for (int i = 1; i <= n; ++i) {
    double inner = 0.0;
    for (int j = 0; j <= i; ++j) {
      const double w = (j == 0 || j == i) ? 0.5 * h : h;
      double sq = scalar(i, j) * scalar(i, j);
      for (const auto & f : row) {
        sq += f(i, j) * f(i, j);
      }
      inner += w * sq;
    }
    total += outer(i) * inner;
  }
  return std::sqrt(total);
}

// Shared Volterra map: out(3, i) = in(3, i) + sign * int_0^{x_i} row . in+ + scalar in-.
RiemannField apply_volterra(const RiemannField & in, const std::array<TriangularField, 3> & row,
                            const TriangularField & scalar, double sign, const char * name)
{
  const auto & grid = scalar.grid();
  const int n = grid.n_cells();
  if (in.cols() != n + 1) {
    throw NumericalError(std::string(name) + ": field has " + std::to_string(in.cols()) +
                         " nodes but the kernel grid has " + std::to_string(n + 1));
  }
  const double h = grid.spacing();
  RiemannField out = in;
  for (int i = 1; i <= n; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j) {
      const double v = row[0](i, j) * in(0, j) + row[1](i, j) * in(1, j) +
                       row[2](i, j) * in(2, j) + scalar(i, j) * in(3, j);
      acc += (j == 0 || j == i) ? 0.5 * v : v;
    }
    out(3, i) = in(3, i) + sign * h * acc;
  }
  return out;
}

}  // namespace

KernelSet solve_direct_kernels(const LinearizedSystem & sys, const TriangularGrid & grid,
                               const KernelSolverOptions & opts)
{
  auto sol = solve_goursat(sys, grid, opts, KernelKind::direct);
  KernelSet out;
  out.grid = grid;
  out.k = std::move(sol.row);
  out.m = std::move(sol.scalar);
  out.iterations = sol.iterations;
  out.residual = sol.residual;
  return out;
}

InverseKernelSet solve_inverse_kernels(const LinearizedSystem & sys, const TriangularGrid & grid,
                                       const KernelSolverOptions & opts)
{
  auto sol = solve_goursat(sys, grid, opts, KernelKind::inverse);
  InverseKernelSet out;
  out.grid = grid;
  out.l = std::move(sol.row);
  out.n = std::move(sol.scalar);
  out.iterations = sol.iterations;
  out.residual = sol.residual;
  const int n = grid.n_cells();
  out.l_LL = out.l_at(n, n);
  out.l_L0 = out.l_at(n, 0);
  out.n_LL = out.n(n, n);
  out.n_L0 = out.n(n, 0);
  return out;
}

RiemannField transform_forward(const RiemannField & w, const KernelSet & kernels)
{
  return apply_volterra(w, kernels.k, kernels.m, -1.0, "transform_forward");
}

RiemannField transform_inverse(const RiemannField & target, const InverseKernelSet & kernels)
{
  return apply_volterra(target, kernels.l, kernels.n, 1.0, "transform_inverse");
}

double operator_norm(const KernelSet & kernels)
{
  return hilbert_schmidt(kernels.k, kernels.m);
}

double operator_norm(const InverseKernelSet & kernels)
{
  return hilbert_schmidt(kernels.l, kernels.n);
}

double l2_norm(const RiemannField & field, double h)
{
  const Eigen::VectorXd sq = field.colwise().squaredNorm().transpose();
  return std::sqrt(trapezoid(sq, h));
}

}  // namespace arzetc
