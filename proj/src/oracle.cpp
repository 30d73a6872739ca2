#include "rfempc/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace rfempc::oracle {

SolveResult enumerate(const LiftedQP & qp, const Vector & theta, const Tolerances & tol)
{
  const int p = static_cast<int>(qp.constraints().p_tilde());
  if (p > kMaxEnumerate) { throw GuardError("oracle::enumerate: p~ = " + std::to_string(p) + " exceeds 20"); }
  const int cap = std::min<int>(p, static_cast<int>(qp.dims().decision_dim()));

  SolveResult result;
  result.active_set = ActiveSet(p);
  for (int card = 0; card <= cap; ++card) {
    ActiveSet A(p);
    for (int i = 0; i < card; ++i) { A.set(i); }
    do {
      ++result.stats.candidates_visited;
      if (card > 0) { ++result.stats.kkt_solves; }
      const auto kkt = kkt_solve(qp, A, theta, tol.tol_singular);
      if (!kkt) {
        ++result.stats.licq_failures;
        continue;
      }
      if (!check_optimality(qp, kkt->z, kkt->lambda_A, A, theta, tol).optimal()) { continue; }
      result.status  = SolveStatus::Optimal;
      result.z_star  = kkt->z;
      result.u_seq   = kkt->z - qp.Hinv_F() * theta;
      result.u_first = result.u_seq.head(qp.dims().input_dim);
      result.lambda  = Vector::Zero(p);
      const auto idx = A.indices();
      for (std::size_t i = 0; i < idx.size(); ++i) { result.lambda(idx[i]) = kkt->lambda_A(static_cast<Index>(i)); }
      result.active_set = A;
      return result;
    } while (card > 0 && A.next_combination());
  }
  result.status = SolveStatus::Infeasible;
  return result;
}

Vector dual_ascent(const LiftedQP & qp, const Vector & theta, int max_iter, double tol)
{
  const auto & c = qp.constraints();
  const Index p  = c.p_tilde();
  if (p == 0) { return Vector::Zero(qp.dims().decision_dim()); }

  const Matrix & K    = qp.constraint_gram();
  const Matrix & HiGt = qp.Hinv_Gt();
  const Vector r      = qp.rhs(theta);
  const double scale  = 1.0 + r.cwiseAbs().maxCoeff();

  Vector lambda = Vector::Zero(p);
  Vector Gz     = Vector::Zero(p);  // G z with z = -H^{-1} G^T lambda, i.e. -K lambda
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    for (Index k = 0; k < p; ++k) {
      if (!(K(k, k) > 0.0)) { continue; }
      const double next = std::max(0.0, lambda(k) + (Gz(k) - r(k)) / K(k, k));
      const double step = next - lambda(k);
      if (step != 0.0) {
        Gz -= step * K.col(k);
        lambda(k) = next;
      }
    }
    // Projected gradient of the dual: stationarity for lambda_k > 0, primal feasibility otherwise.
    double worst = 0.0;
    for (Index k = 0; k < p; ++k) {
      const double f = Gz(k) - r(k);
      worst          = std::max(worst, lambda(k) > 0.0 ? std::abs(f) : std::max(0.0, f));
    }
    if (worst <= tol * scale) { return -(HiGt * lambda); }
  }
  throw ConvergenceError("oracle::dual_ascent: no convergence in " + std::to_string(max_iter) + " sweeps");
}

}  // namespace rfempc::oracle
