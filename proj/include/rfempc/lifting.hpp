#pragma once

/**
 * @file
 * @brief Condensing of an MPC problem into the parametric QP
 *
 *   min_z 1/2 <H z, z>   s.t.   W + S theta - G z >= 0,   z = u' + H^{-1} F theta.
 */

#include "rfempc/problem.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace rfempc {

/// x~' = (x'_1..x'_N) = A_tilde x_n + B_tilde u'
struct LiftedDynamics
{
  Matrix A_tilde;  ///< N n_x x n_x
  Matrix B_tilde;  ///< N n_x x N n_u
  Matrix kernel;   ///< block lower triangular [I; A I; A^2 A I; ...], N n_x x N n_x
};

LiftedDynamics lift_dynamics(const PlantModel & model, int horizon);

struct QuadraticCost
{
  Matrix H;         ///< N n_u x N n_u
  Matrix F;         ///< N n_u x (n_x + n_u)
  Matrix const_op;  ///< diag(Q_0 + A~^T Q~_P A~, V_0)
  double eps = 0;   ///< smallest eigenvalue of H

  // Intermediate blocks, kept for inspection.
  Matrix Q_P;
  Matrix R_tilde;
  Matrix M_tilde;
  Matrix M0_tilde;
  Matrix V_tilde;
  Matrix V0_tilde;
};

/// Location of a lifted constraint row in the original stage data.
struct ConstraintRow
{
  int stage;  ///< 0..N-1, or N for the terminal block
  Index local_row;
};

struct ConstraintData
{
  Matrix G;  ///< p~ x N n_u
  Matrix S;  ///< p~ x (n_x + n_u)
  Vector W;  ///< p~
  std::vector<ConstraintRow> rows;
  /// True when any calE_k, calF_0 or E_hat is nonzero (theta enters the constraints directly).
  bool depends_on_parameter = false;

  /// Stage blocks, only retained with LiftOptions::keep_blocks.
  std::optional<Matrix> calE0_tilde;
  std::optional<Matrix> calE1_tilde;
  std::optional<Matrix> E_tilde;

  Index p_tilde() const { return W.size(); }
};

struct LiftedDims
{
  int horizon;
  Index state_dim;
  Index input_dim;

  Index decision_dim() const { return horizon * input_dim; }
  Index parameter_dim() const { return state_dim + input_dim; }
};

struct LiftOptions
{
  /// Keep calE0~, calE1~ and E~ in ConstraintData.
  bool keep_blocks = false;
};

class CoercivityError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Condensed pQP with a cached Cholesky factor of H.
 *
 * Immutable after construction. Besides H and F the object caches H^{-1} F,
 * H^{-1} G^T and the constraint Gram matrix G H^{-1} G^T, which is all the
 * active-set search needs.
 */
class LiftedQP
{
public:
  /// @throws CoercivityError when lambda_min(H) <= 1e-10 (1 + ||H||_2).
  static LiftedQP build(const ProblemDefinition & p, const LiftOptions & options = {});

  const LiftedDims & dims() const { return dims_; }
  const QuadraticCost & cost() const { return cost_; }
  const ConstraintData & constraints() const { return constraints_; }

  /// H^{-1} b via the Cholesky factor.
  Vector solve_H(const Vector & b) const { return llt_.solve(b); }
  Matrix solve_H(const Matrix & b) const { return llt_.solve(b); }

  const Matrix & Hinv_F() const { return hinv_f_; }
  const Matrix & Hinv_Gt() const { return hinv_gt_; }
  const Matrix & constraint_gram() const { return gram_; }

  /// W + S theta
  Vector rhs(const Vector & theta) const { return constraints_.W + constraints_.S * theta; }

private:
  LiftedDims dims_{};
  QuadraticCost cost_;
  ConstraintData constraints_;
  Eigen::LLT<Matrix> llt_;
  Matrix hinv_f_;
  Matrix hinv_gt_;
  Matrix gram_;
};

/// Smallest eigenvalue of a symmetric H.
template<typename Derived>
typename Derived::Scalar check_coercivity(const Eigen::MatrixBase<Derived> & H)
{
  return smallest_eigenvalue(H);
}

/// Tridiagonal rate-of-change block V~ from V_0..V_N.
Matrix rate_weight_operator(const std::vector<Matrix> & V, int horizon);

/// <const_op theta, theta> + <H u', u'> + 2 <u', F theta>
double evaluate_lifted_cost(const LiftedQP & qp, const Vector & inputs, const Vector & theta);

Vector to_z(const LiftedQP & qp, const Vector & inputs, const Vector & theta);
Vector from_z(const LiftedQP & qp, const Vector & z, const Vector & theta);

/// W + S theta - G z; entry k is nonnegative iff constraint k holds.
Vector eval_constraints(const LiftedQP & qp, const Vector & z, const Vector & theta);

/// Constraints free of x_n and u_{n-1} with strictly positive W: u' = 0, i.e. z = H^{-1} F theta,
/// is then a Slater point for every theta.
bool check_easy_slater(const LiftedQP & qp);

}  // namespace rfempc
