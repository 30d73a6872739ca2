#pragma once

/**
 * @file
 * @brief Constrained, time-varying linear-quadratic MPC problem data.
 *
 * The problem at time n is
 *
 *   J(u', theta) = <P x'_N, x'_N> + <V_N u'_{N-1}, u'_{N-1}>
 *                + sum_k <[Q_k M_k; M_k^T R_k] [x'_k; u'_k], [x'_k; u'_k]>
 *                + sum_k <V_k (u'_k - u'_{k-1}), u'_k - u'_{k-1}>
 *
 * with x'_{k+1} = A' x'_k + B' u'_k, x'_0 = x_n, u'_{-1} = u_{n-1}, and the
 * affine stage / terminal constraints
 *
 *   d_k - calE_k x'_k - calF_k u'_{k-1} - E_k u'_k >= 0,   k = 0..N-1
 *   d_hat - E_hat x'_N - F_hat u'_{N-1} >= 0.
 */

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfempc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index  = Eigen::Index;

/// Thrown when operands do not have consistent dimensions.
class DimensionError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// x_{k+1} = A x_k + B u_k
struct PlantModel
{
  Matrix A;
  Matrix B;

  Index state_dim() const { return A.rows(); }
  Index input_dim() const { return B.cols(); }
};

/// Per-stage weights. Constant weights are stored by repetition.
struct StageWeights
{
  std::vector<Matrix> Q;  ///< k = 0..N-1, n_x x n_x
  std::vector<Matrix> R;  ///< k = 0..N-1, n_u x n_u
  std::vector<Matrix> M;  ///< k = 0..N-1, n_x x n_u
  std::vector<Matrix> V;  ///< k = 0..N,   n_u x n_u
  Matrix P;               ///< terminal, n_x x n_x
};

/// d - state * x'_k - prev_input * u'_{k-1} - input * u'_k >= 0
struct StageConstraint
{
  Vector d;
  Matrix state;
  Matrix prev_input;
  Matrix input;

  Index rows() const { return d.size(); }
};

/// d - state * x'_N - input * u'_{N-1} >= 0; zero rows means no terminal condition.
struct TerminalConstraint
{
  Vector d;
  Matrix state;
  Matrix input;

  Index rows() const { return d.size(); }
};

struct StageConstraints
{
  std::vector<StageConstraint> stages;
  TerminalConstraint terminal;

  Index total_rows() const;
};

/// theta_n = [x_n; u_{n-1}]
struct Parameter
{
  Vector state;
  Vector previous_input;

  Vector stacked() const;
  static Parameter from_stacked(const Vector & theta, Index state_dim);
  /// u_{-1} = 0
  static Parameter initial(const Vector & x0, Index input_dim);
};

struct ProblemDefinition
{
  PlantModel prediction_model;
  /// Plant driven by the closed loop; the prediction model is used when absent.
  std::optional<PlantModel> plant;
  StageWeights weights;
  StageConstraints constraints;
  int horizon = 1;

  Index state_dim() const { return prediction_model.state_dim(); }
  Index input_dim() const { return prediction_model.input_dim(); }
  const PlantModel & true_plant() const { return plant ? *plant : prediction_model; }
};

struct ValidationReport
{
  std::vector<std::string> issues;

  bool ok() const { return issues.empty(); }
};

/// Default PSD band: eigenvalues >= -1e-10 (1 + ||X||_2) are accepted.
inline constexpr double kDefaultPsdTolerance = 1e-10;

/**
 * @brief Check dimensions, finiteness, semidefiniteness of every weight and of
 * each cross block [Q_k M_k; M_k^T R_k], and nonnegativity of the bounds.
 *
 * Returns one message per violated invariant; never throws.
 */
ValidationReport validate(const ProblemDefinition & p, double tol_psd = kDefaultPsdTolerance);

/// Cost of the stacked input sequence (N * n_u) by forward recursion of the prediction model.
double evaluate_cost(const ProblemDefinition & p, const Vector & inputs, const Parameter & theta);

struct AdmissibilityReport
{
  bool admissible = true;
  /// Stage rows for k = 0..N-1 followed by terminal rows.
  Vector slacks;
};

AdmissibilityReport check_admissible(const ProblemDefinition & p, const Vector & inputs, const Parameter & theta);

/// Predicted states x'_0..x'_N of the prediction model, one per column.
Matrix predict_states(const ProblemDefinition & p, const Vector & inputs, const Parameter & theta);

/// Smallest eigenvalue of a symmetric matrix.
template<typename Derived>
typename Derived::Scalar smallest_eigenvalue(const Eigen::MatrixBase<Derived> & X)
{
  using Scalar = typename Derived::Scalar;
  if (X.rows() == 0) { return Scalar(0); }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es(
    X.derived(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Spectral norm of a dense matrix.
template<typename Derived>
typename Derived::RealScalar spectral_norm(const Eigen::MatrixBase<Derived> & X)
{
  if (X.size() == 0) { return 0; }
  Eigen::JacobiSVD<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(X.derived());
  return svd.singularValues()(0);
}

template<typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived> & X, double tol = kDefaultPsdTolerance)
{
  const auto sym = (0.5 * (X + X.transpose())).eval();
  return smallest_eigenvalue(sym) >= -tol * (1.0 + spectral_norm(sym));
}

class LyapunovError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Solve A^T P A - P = -Q for a Schur-stable A.
 *
 * Squared Smith iteration P <- P + A_k^T P A_k, A_k <- A_k^2, which sums the series
 * sum_j (A^T)^j Q A^j with 2^k terms after k sweeps.
 *
 * @throws LyapunovError if the spectral radius of A is not below one.
 */
template<typename DerivedA, typename DerivedQ>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> solve_discrete_lyapunov(
  const Eigen::MatrixBase<DerivedA> & A, const Eigen::MatrixBase<DerivedQ> & Q)
{
  using Scalar = typename DerivedA::Scalar;
  using Mat    = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  if (A.rows() != A.cols() || Q.rows() != A.rows() || Q.cols() != A.cols()) {
    throw DimensionError("solve_discrete_lyapunov: A and Q must be square and of equal size");
  }
  if (A.rows() == 0) { return Mat(0, 0); }

  const Scalar radius = Eigen::EigenSolver<Mat>(A.derived(), false).eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius < Scalar(1))) {
    throw LyapunovError("solve_discrete_lyapunov: spectral radius " + std::to_string(double(radius)) + " >= 1");
  }

  Mat P  = Q;
  Mat Ak = A;
  for (int sweep = 0; sweep < 64; ++sweep) {
    const Mat increment = Ak.transpose() * P * Ak;
    P += increment;
    if (increment.norm() <= std::numeric_limits<Scalar>::epsilon() * P.norm()) { break; }
    Ak = (Ak * Ak).eval();
  }
  return (0.5 * (P + P.transpose())).eval();
}

}  // namespace rfempc
