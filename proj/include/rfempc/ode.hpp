#pragma once

/**
 * @file
 * @brief Adaptive Dormand-Prince 5(4) integrator (FSAL, elementary step
 * control, error measured against atol + rtol |y|).
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfempc {

class StepSizeUnderflow : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct OdeOptions
{
  double rtol = 1e-6;
  double atol = 1e-9;
  double initial_step = 0;  ///< 0 selects a step from the first derivative
  long max_steps      = 1000000;
};

struct OdeStats
{
  long accepted  = 0;
  long rejected  = 0;
  long rhs_evals = 0;
};

/// Integrate y' = f(t, y) from t0 to t1 and return y(t1).
template<typename F, typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> dormand_prince(
  F && f, double t0, double t1, const Eigen::MatrixBase<Derived> & y0, const OdeOptions & opt = {},
  OdeStats * stats = nullptr)
{
  using Vec = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeStats local;
  OdeStats & st = stats ? *stats : local;

  Vec y = y0;
  const double span = t1 - t0;
  if (span == 0.0 || y.size() == 0) { return y; }
  const double dir = span > 0 ? 1.0 : -1.0;

  Vec k1 = f(t0, y);
  ++st.rhs_evals;

  auto err_norm = [&](const Vec & err, const Vec & ya, const Vec & yb) {
    const Vec scale = (opt.atol + opt.rtol * ya.cwiseAbs().cwiseMax(yb.cwiseAbs()).array()).matrix();
    return std::sqrt((err.array() / scale.array()).square().mean());
  };

  double step = opt.initial_step;
  if (step <= 0) {
    const Vec scale = (opt.atol + opt.rtol * y.cwiseAbs().array()).matrix();
    const double d0 = std::sqrt((y.array() / scale.array()).square().mean());
    const double d1 = std::sqrt((k1.array() / scale.array()).square().mean());
    step = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  }
  step = std::min(std::abs(step), std::abs(span));

  double t = t0;
  Vec k2, k3, k4, k5, k6, k7, y_new;
  for (long n = 0; n < opt.max_steps; ++n) {
    const double remaining = (t1 - t) * dir;
    if (remaining <= 0) { return y; }
    double hs = std::min(step, remaining);
    if (hs < 1e-14 * std::max(1.0, std::abs(t))) { throw StepSizeUnderflow("dormand_prince: step size underflow"); }
    const double hd = hs * dir;

    k2    = f(t + c2 * hd, y + hd * (a21 * k1));
    k3    = f(t + c3 * hd, y + hd * (a31 * k1 + a32 * k2));
    k4    = f(t + c4 * hd, y + hd * (a41 * k1 + a42 * k2 + a43 * k3));
    k5    = f(t + c5 * hd, y + hd * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6    = f(t + hd, y + hd * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y_new = y + hd * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7    = f(t + hd, y_new);
    st.rhs_evals += 6;

    const Vec err     = hd * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double enorm = err_norm(err, y, y_new);
    if (enorm <= 1.0) {
      t = (hs == remaining) ? t1 : t + hd;
      y  = y_new;
      k1 = k7;
      ++st.accepted;
      const double grow = enorm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(enorm, -0.2));
      step              = hs * grow;
    } else {
      ++st.rejected;
      step = hs * std::max(0.2, 0.9 * std::pow(enorm, -0.2));
    }
  }
  throw StepSizeUnderflow("dormand_prince: max_steps exceeded");
}

}  // namespace rfempc
