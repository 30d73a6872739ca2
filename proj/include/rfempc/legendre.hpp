#pragma once

/**
 * @file
 * @brief Shifted Legendre polynomials on [0, 1], monomial-coefficient
 * polynomials and Gauss-Legendre quadrature.
 *
 *   L_k(xi) = sum_{m=0}^{k} (-1)^{k+m} C(k, m) C(k+m, m) xi^m
 *
 * These are orthogonal but not orthonormal: int_0^1 L_k^2 = 1 / (2k + 1).
 */

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace rfempc {

/// Monomial coefficients c_0..c_k of L_k.
template<typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> legendre_shifted_coefficients(int k)
{
  if (k < 0) { throw std::invalid_argument("legendre_shifted_coefficients: negative degree"); }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c(k + 1);
  // C(k, m) C(k+m, m), updated term by term to stay integral.
  Scalar a = 1;
  for (int m = 0; m <= k; ++m) {
    if (m > 0) { a = a * Scalar(k - m + 1) * Scalar(k + m) / Scalar(m * m); }
    c(m) = ((k + m) % 2 ? -a : a);
  }
  return c;
}

/// Horner evaluation of sum_m c_m x^m.
template<typename Derived, typename Scalar>
Scalar poly_eval(const Eigen::MatrixBase<Derived> & c, Scalar x)
{
  Scalar v = 0;
  for (Eigen::Index m = c.size() - 1; m >= 0; --m) { v = v * x + Scalar(c(m)); }
  return v;
}

template<typename Scalar>
Scalar legendre_shifted(int k, Scalar xi)
{
  return poly_eval(legendre_shifted_coefficients<Scalar>(k), xi);
}

template<typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> poly_derivative(const Eigen::MatrixBase<Derived> & c)
{
  using Scalar = typename Derived::Scalar;
  if (c.size() <= 1) { return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(1); }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d(c.size() - 1);
  for (Eigen::Index m = 1; m < c.size(); ++m) { d(m - 1) = Scalar(m) * c(m); }
  return d;
}

/// int_0^1 p
template<typename Derived>
typename Derived::Scalar poly_mean(const Eigen::MatrixBase<Derived> & c)
{
  typename Derived::Scalar s = 0;
  for (Eigen::Index m = 0; m < c.size(); ++m) { s += c(m) / typename Derived::Scalar(m + 1); }
  return s;
}

/// a + s b, padding the shorter one.
template<typename DA, typename DB>
Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, 1> poly_axpy(const Eigen::MatrixBase<DA> & a,
                                                               typename DA::Scalar s,
                                                               const Eigen::MatrixBase<DB> & b)
{
  Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, 1> out =
    Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, 1>::Zero(std::max(a.size(), b.size()));
  out.head(a.size()) += a;
  out.head(b.size()) += s * b;
  return out;
}

template<typename Scalar = double>
struct QuadratureRule
{
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

/**
 * @brief n-point Gauss-Legendre rule mapped to [0, 1] (Golub-Welsch).
 *
 * Exact for polynomials of degree <= 2n - 1.
 */
template<typename Scalar = double>
QuadratureRule<Scalar> gauss_legendre(int n)
{
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (n < 1) { throw std::invalid_argument("gauss_legendre: need n >= 1"); }
  Mat J = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const Scalar b = Scalar(i) / std::sqrt(Scalar(4 * i * i - 1));
    J(i, i - 1)    = b;
    J(i - 1, i)    = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  QuadratureRule<Scalar> rule;
  rule.nodes   = (es.eigenvalues().array() + Scalar(1)) / Scalar(2);
  rule.weights = es.eigenvectors().row(0).transpose().array().square();  // sums to 1 on [0, 1]
  return rule;
}

}  // namespace rfempc
