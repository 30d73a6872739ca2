#pragma once

/**
 * @file
 * @brief Reference solvers for testing the active-set search.
 *
 * Neither routine is meant for production use: enumerate is exponential in p~,
 * dual_ascent needs a strictly feasible problem to converge.
 */

#include "rfempc/solver.hpp"

#include <stdexcept>

namespace rfempc::oracle {

class GuardError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxEnumerate = 20;

/**
 * @brief Try every LICQ subset with at most N n_u members in (cardinality, bitmask)
 * order; the first sufficient one is returned.
 *
 * @throws GuardError if p~ > 20.
 */
SolveResult enumerate(const LiftedQP & qp, const Vector & theta, const Tolerances & tol);

/**
 * @brief Cyclic projected coordinate ascent on the dual,
 *
 *   lambda_k <- max(0, lambda_k + (G z - W - S theta)_k / K_kk),   z = -H^{-1} G^T lambda,
 *
 * until the projected-gradient residual drops below tol.
 *
 * @throws ConvergenceError after max_iter sweeps.
 */
Vector dual_ascent(const LiftedQP & qp, const Vector & theta, int max_iter = 1000000, double tol = 1e-12);

}  // namespace rfempc::oracle
