#pragma once

// Shared fixtures for the unit tests. Every Optimal solve made through
// certified_solve is checked against the KKT residual bundle.

#include "rfempc/oracle.hpp"
#include "rfempc/random_problem.hpp"
#include "rfempc/solver.hpp"

#include <doctest.h>

namespace rfempc::testing {

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline Vector vec(std::initializer_list<double> v)
{
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) { out(i++) = x; }
  return out;
}

/// Weights all zero, n_x x n_x / n_u x n_u, N stages.
inline StageWeights zero_weights(int N, Index nx, Index nu)
{
  StageWeights w;
  for (int k = 0; k < N; ++k) {
    w.Q.push_back(Matrix::Zero(nx, nx));
    w.R.push_back(Matrix::Zero(nu, nu));
    w.M.push_back(Matrix::Zero(nx, nu));
  }
  for (int k = 0; k <= N; ++k) { w.V.push_back(Matrix::Zero(nu, nu)); }
  w.P = Matrix::Zero(nx, nx);
  return w;
}

inline StageConstraints no_constraints(int N, Index nx, Index nu)
{
  StageConstraints c;
  for (int k = 0; k < N; ++k) { c.stages.push_back({Vector(0), Matrix(0, nx), Matrix(0, nu), Matrix(0, nu)}); }
  c.terminal = {Vector(0), Matrix(0, nx), Matrix(0, nu)};
  return c;
}

/**
 * One-step scalar problem min u^2 with rows d - x - input*u >= 0 and theta = (1, 0),
 * so the lifted QP is min z^2 s.t. input*z <= d - 1 per row (H = 2, F = 0).
 */
inline ProblemDefinition scalar_rows(const std::vector<std::pair<double, double>> & rows_d_input)
{
  ProblemDefinition p;
  p.horizon            = 1;
  p.prediction_model.A = scalar(0);
  p.prediction_model.B = scalar(0);
  p.weights            = zero_weights(1, 1, 1);
  p.weights.R[0]       = scalar(1);
  p.constraints        = no_constraints(1, 1, 1);
  auto & s             = p.constraints.stages[0];
  const Index r        = static_cast<Index>(rows_d_input.size());
  s.d.resize(r);
  s.state = Matrix::Ones(r, 1);
  s.prev_input = Matrix::Zero(r, 1);
  s.input.resize(r, 1);
  for (Index i = 0; i < r; ++i) {
    s.d(i)        = rows_d_input[static_cast<std::size_t>(i)].first;
    s.input(i, 0) = rows_d_input[static_cast<std::size_t>(i)].second;
  }
  return p;
}

/// z >= 1 (d = 0, input = -1 with x = 1).
inline ProblemDefinition z_ge_1() { return scalar_rows({{0.0, -1.0}}); }

inline const Vector & unit_theta()
{
  static const Vector t = vec({1.0, 0.0});
  return t;
}

inline void require_certificate(const LiftedQP & qp, const Vector & theta, const SolveResult & r)
{
  if (r.status != SolveStatus::Optimal) { return; }
  const KktCertificate c = certify_kkt(qp, theta, r);
  INFO("stationarity " << c.stationarity << " equality " << c.active_equality << " slack " << c.min_slack
                       << " lambda " << c.min_lambda);
  CHECK(c.passes());
}

inline SolveResult certified_solve(const LiftedQP & qp, const Vector & theta, const ActiveSet & warm,
                                   const Tolerances & tol, const SolveOptions & options = {})
{
  SolveResult r = solve(qp, theta, warm, tol, options);
  require_certificate(qp, theta, r);
  return r;
}

inline SolveResult certified_solve(const LiftedQP & qp, const Vector & theta)
{
  return certified_solve(qp, theta, ActiveSet(static_cast<int>(qp.constraints().p_tilde())),
                         Tolerances::defaults_for(qp));
}

}  // namespace rfempc::testing
