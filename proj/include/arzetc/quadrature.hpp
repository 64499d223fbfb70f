#ifndef ARZETC_QUADRATURE_HPP_
#define ARZETC_QUADRATURE_HPP_

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <stdexcept>

namespace arzetc
{

/// Composite trapezoid rule for samples on a uniform grid with spacing h.
template<typename Derived>
typename Derived::Scalar trapezoid(const Eigen::DenseBase<Derived> & samples,
                                   typename Derived::Scalar h)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = samples.size();
  if (n < 2) {
    return Scalar(0);
  }
  return h * (samples.sum() - Scalar(0.5) * (samples(0) + samples(n - 1)));
}

/// Trapezoid weights for n uniformly spaced samples.
inline Eigen::VectorXd trapezoid_weights(Eigen::Index n, double h)
{
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(n, h);
  if (n >= 1) {
    weights(0) *= 0.5;
    weights(n - 1) *= 0.5;
  }
  if (n == 1) {
    weights(0) = 0.0;
  }
  return weights;
}

namespace detail
{

inline double adaptive_simpson_step(const std::function<double(double)> & f, double a, double b,
                                    double fa, double fm, double fb, double whole, double tol,
                                    int depth)
{
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of a smooth integrand on [a, b].
inline double adaptive_simpson(const std::function<double(double)> & f, double a, double b,
                               double tol = 1e-13, int max_depth = 40)
{
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double result = detail::adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
  if (!std::isfinite(result)) {
    throw std::domain_error("adaptive_simpson: non-finite integral");
  }
  return result;
}

}  // namespace arzetc

#endif  // ARZETC_QUADRATURE_HPP_
