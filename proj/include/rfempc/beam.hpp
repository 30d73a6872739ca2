#pragma once

/**
 * @file
 * @brief Cantilever Timoshenko beam, controlled at the free end xi = 1.
 *
 * State x = (shear strain, momentum, angular strain, angular momentum) on
 * [0, 1] in port-Hamiltonian form
 *
 *   x1' = (x2/rho)_xi - x4/I_rho,   x2' = (K x1)_xi,
 *   x3' = (x4/I_rho)_xi,            x4' = (EI x3)_xi + K x1,
 *
 * with x2(0) = x4(0) = 0, u1 = K x1(1), u2 = EI x3(1).
 * Spectral Galerkin in a shifted Legendre basis, Cayley time discretization.
 */

#include "rfempc/legendre.hpp"
#include "rfempc/problem.hpp"

#include <array>
#include <functional>
#include <vector>

namespace rfempc {

struct BeamParams
{
  double rho   = 1.0;
  double I_rho = 1.0;
  double EI    = 1.0;
  double K     = 1.0;
  int n_basis    = 9;   ///< functions per component
  int m_boundary = 12;  ///< exponent of the boundary function xi^m
};

/**
 * Components 1, 3: L_k - L_{k+1}, k = 0..n-2 (vanish at 1), plus xi^m.
 * Components 2, 4: L_k + L_{k+1}, k = 0..n-1 (vanish at 0).
 */
struct Basis
{
  std::array<std::vector<Vector>, 4> functions;
  std::array<Vector, 4> means;  ///< int_0^1 phi
  std::array<Index, 5> offsets{};
  int boundary_degree = 0;

  Index dim() const { return offsets[4]; }
  Index size(int component) const { return offsets[component + 1] - offsets[component]; }
  /// Component profile at xi from the full coefficient vector.
  double evaluate(const Vector & alpha, int component, double xi) const;
  /// Row r with r . alpha = int_0^1 x_component.
  Vector mean_row(int component) const;
};

Basis build_basis(const BeamParams & p);

/// M alpha' = K alpha + B u
struct GalerkinSystem
{
  Matrix mass;
  Matrix stiffness;
  Matrix input;  ///< n x 2
  Basis basis;
  BeamParams params;
  double condition = 0;  ///< 2-norm condition number of the mass matrix
};

/// @throws std::runtime_error on a singular mass matrix.
GalerkinSystem assemble(const BeamParams & p);

struct DiscretePlant
{
  Matrix A;
  Matrix B;
  double h     = 0;
  double sigma = 0;
};

class ResolventError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Cayley transform of M x' = K x + B u with sigma = 2/h:
 *
 *   A_d = (sigma + M^{-1}K)(sigma - M^{-1}K)^{-1},  B_d = sqrt(2 sigma)(sigma - M^{-1}K)^{-1} M^{-1} B.
 *
 * The physical input over a sampling interval is u_k / sqrt(h).
 */
template<typename DM, typename DK, typename DB>
DiscretePlant cayley_discretize(const Eigen::MatrixBase<DM> & M, const Eigen::MatrixBase<DK> & K,
                                const Eigen::MatrixBase<DB> & B, double h)
{
  const Index n = K.rows();
  if (M.rows() != n || M.cols() != n || K.cols() != n || B.rows() != n) {
    throw DimensionError("cayley_discretize: inconsistent dimensions");
  }
  if (!(h > 0)) { throw std::invalid_argument("cayley_discretize: h must be positive"); }
  const double sigma = 2.0 / h;
  Eigen::PartialPivLU<Matrix> mass(M.derived().template cast<double>());
  const Matrix Ac = mass.solve(K.derived().template cast<double>());
  const Matrix Bc = mass.solve(B.derived().template cast<double>());

  const Matrix I = Matrix::Identity(n, n);
  Eigen::FullPivLU<Matrix> resolvent(sigma * I - Ac);
  if (!resolvent.isInvertible()) { throw ResolventError("cayley_discretize: sigma is an eigenvalue of M^{-1}K"); }

  DiscretePlant plant;
  plant.h     = h;
  plant.sigma = sigma;
  plant.A     = resolvent.solve(sigma * I + Ac);
  plant.B     = std::sqrt(2.0 * sigma) * resolvent.solve(Bc);
  return plant;
}

DiscretePlant cayley_discretize(const GalerkinSystem & g, double h);

enum class BoundScaling
{
  Physical,  ///< sqrt(h) u_lo <= u'_k <= sqrt(h) u_hi, so u'_k / sqrt(h) stays in [u_lo, u_hi]
  Literal,   ///< bounds divided by sqrt(h)
};

enum class TerminalWeight
{
  Stage,  ///< P = Q
  Zero,
};

struct BenchmarkSettings
{
  BeamParams params;
  int horizon = 10;
  double h    = 1.0 / 128.0;
  double Qp   = 100.0;
  double Rp   = 1.0;
  double Vp   = 0.1;
  double u_lo  = -0.5;
  double u_hi  = 0.5;
  double x1_hi = 0.45;
  double x4_lo = -0.3;
  BoundScaling scaling    = BoundScaling::Physical;
  TerminalWeight terminal = TerminalWeight::Stage;
};

struct BeamBenchmark
{
  GalerkinSystem galerkin;
  DiscretePlant plant;
  ProblemDefinition problem;
  Vector initial_state;  ///< projection of the reference initial condition
  Vector mean_x1;        ///< mean_x1 . alpha = int_0^1 x1
  Vector mean_x4;
};

/**
 * @brief The closed-loop benchmark problem.
 *
 * Q = h Qp M, R = Rp I, V = Vp / h^2 I with V_N = 0. Stage 0 has the 4 input
 * rows; stages 1..N-1 add mean(x1) <= x1_hi and mean(x4) >= x4_lo; no terminal
 * rows, so p~ = 6N - 2.
 */
BeamBenchmark build_benchmark_problem(const BenchmarkSettings & s);

using Profile = std::function<double(double)>;

/// x1 = x4 = 0, x2 = sin(pi xi / 2), x3 = cos(pi xi / 2)
std::array<Profile, 4> reference_initial_profiles();

struct Projection
{
  Vector coefficients;
  double l2_error = 0;  ///< ||x - P x||_{L2}, all components
};

/// L2-orthogonal projection of each component onto its basis span.
Projection project_initial_condition(const GalerkinSystem & g, const std::array<Profile, 4> & profiles,
                                     int quadrature_nodes = 64);

struct BoundaryCheck
{
  double product_norm = 0;
  int rank            = 0;

  bool ok() const { return rank == 4 && product_norm <= 1e-14; }
};

/// W0 and WB of the boundary port description.
Matrix boundary_matrix_W0();
Matrix boundary_matrix_WB();

/// rank([W0; WB]) and ||[W0; WB] [0 I; I 0] [W0; WB]^T||.
BoundaryCheck check_boundary_matrices();
BoundaryCheck check_boundary_matrices(const Matrix & W0, const Matrix & WB);

}  // namespace rfempc
