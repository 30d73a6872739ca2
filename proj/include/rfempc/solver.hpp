#pragma once

/**
 * @file
 * @brief Warm-started search for a sufficient active set of
 *
 *   min_z 1/2 <H z, z>   s.t.   G z <= W + S theta.
 *
 * A candidate set A is sufficient when the equality-constrained KKT system on A
 * yields multipliers lambda_A >= 0 and a point z* that satisfies every other
 * constraint. The search pops candidates from a stack fed by facet flipping
 * (add violated rows, drop negative multipliers), prunes supersets of known
 * LICQ violators and falls back to enumeration by (cardinality, bitmask).
 */

#include "rfempc/active_set.hpp"
#include "rfempc/lifting.hpp"

#include <optional>
#include <unordered_set>
#include <vector>

namespace rfempc {

struct Tolerances
{
  double tol_violation = 1e-9;
  double tol_lambda    = 1e-9;
  /// K is singular when lambda_min(K) <= tol_singular * lambda_max(K).
  double tol_singular  = 1e-10;
  long max_kkt_solves  = 10000;

  /// tol_violation = tol_lambda = 1e-9 (1 + ||W||_inf)
  static Tolerances defaults_for(const LiftedQP & qp);
};

enum class SolveStatus
{
  Optimal,
  Infeasible,
  BudgetExhausted,
};

const char * to_string(SolveStatus s);

struct SolveStats
{
  long candidates_visited = 0;
  long licq_failures      = 0;
  long kkt_solves         = 0;
  double wall_time_s      = 0;
};

struct SolveResult
{
  SolveStatus status = SolveStatus::Infeasible;
  Vector u_first;  ///< n_u
  Vector u_seq;    ///< N n_u
  Vector z_star;
  Vector lambda;   ///< p~, zero outside active_set
  ActiveSet active_set;
  SolveStats stats;
};

struct KktSolution
{
  Vector z;
  Vector lambda_A;  ///< ordered as aset.indices()
};

/**
 * @brief Equality-constrained KKT solve on A.
 *
 * K = G_A H^{-1} G_A^T, lambda_A = -K^{-1}(W_A + S_A theta), z = -H^{-1} G_A^T lambda_A.
 * Returns nullopt when K is singular (LICQ fails). The empty set gives z = 0.
 */
std::optional<KktSolution> kkt_solve(const LiftedQP & qp, const ActiveSet & aset, const Vector & theta,
                                     double tol_singular = 1e-10);

/// LICQ test on A by the eigenvalues of K.
bool satisfies_licq(const LiftedQP & qp, const ActiveSet & aset, double tol_singular = 1e-10);

struct OptimalityCheck
{
  /// Inactive rows with slack < -tol_violation, most violated first (ties by index).
  std::vector<int> violations;
  /// Active rows with lambda < -tol_lambda, most negative first (ties by index).
  std::vector<int> negative_multipliers;

  bool optimal() const { return violations.empty() && negative_multipliers.empty(); }
};

OptimalityCheck check_optimality(const LiftedQP & qp, const Vector & z_star, const Vector & lambda_A,
                                 const ActiveSet & aset, const Vector & theta, const Tolerances & tol);

struct SolveOptions
{
  /// false reproduces the variant without a visited set; it can then only stop on the budget.
  bool track_visited = true;
};

/// Search state; one per solve.
class SolverState
{
public:
  SolverState(int p_tilde, bool track_visited);

  bool visited(const ActiveSet & a) const;
  void mark_visited(const ActiveSet & a);

  /// Some known LICQ violator is a subset of a.
  bool contains_violator(const ActiveSet & a) const;
  /// Insert a, dropping stored supersets of a.
  void add_violator(const ActiveSet & a);
  const std::vector<ActiveSet> & violators() const { return licq_; }

  std::vector<ActiveSet> stack;
  SolveStats stats;

private:
  bool track_;
  bool flat_;
  std::vector<bool> flat_visited_;
  std::unordered_set<ActiveSet, ActiveSet::Hash> hashed_visited_;
  std::vector<ActiveSet> licq_;
};

/**
 * @brief Find the minimizer for theta = [x_n; u_{n-1}] starting from warm.
 *
 * Candidates with more than N n_u members are never evaluated. Infeasible is
 * returned only after every admissible candidate has been tried;
 * BudgetExhausted when max_kkt_solves KKT systems have been solved first.
 */
SolveResult solve(const LiftedQP & qp, const Vector & theta, const ActiveSet & warm, const Tolerances & tol,
                  const SolveOptions & options = {});
SolveResult solve(const LiftedQP & qp, const Vector & theta, const Tolerances & tol);

class NotSufficientError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Shrink a sufficient active set to one that satisfies LICQ with the same minimizer.
 *
 * Takes nonnegative multipliers for A, then repeatedly moves them along a null
 * vector of K until one hits zero and drops that row (lowest index on ties).
 *
 * @throws NotSufficientError if A is not sufficient for theta.
 */
ActiveSet reduce_to_licq(const LiftedQP & qp, const ActiveSet & aset, const Vector & theta,
                         const Tolerances & tol);

/// Residuals of the optimality conditions at a solve result.
struct KktCertificate
{
  double stationarity    = 0;  ///< ||H z + G_A^T lambda_A||
  double active_equality = 0;  ///< ||G_A z - W_A - S_A theta||_inf
  double min_slack       = 0;  ///< min(W + S theta - G z), +inf when p~ = 0
  double min_lambda      = 0;  ///< +inf for the empty set
  double z_norm          = 0;

  /// stationarity <= 1e-8 (1 + ||z||), equality <= 1e-8, slack >= -1e-9, lambda >= -1e-9
  bool passes() const;
};

KktCertificate certify_kkt(const LiftedQP & qp, const Vector & theta, const SolveResult & result);

}  // namespace rfempc
