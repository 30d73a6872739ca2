#include "rfempc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace rfempc {

Tolerances Tolerances::defaults_for(const LiftedQP & qp)
{
  const Vector & W = qp.constraints().W;
  const double scale = 1.0 + (W.size() ? W.cwiseAbs().maxCoeff() : 0.0);
  Tolerances tol;
  tol.tol_violation = 1e-9 * scale;
  tol.tol_lambda    = 1e-9 * scale;
  return tol;
}

const char * to_string(SolveStatus s)
{
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::BudgetExhausted: return "budget_exhausted";
  }
  return "unknown";
}

namespace {

using Indices = std::vector<int>;

Vector gather(const Vector & v, const Indices & idx)
{
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) { out(static_cast<Index>(i)) = v(idx[i]); }
  return out;
}

Matrix gram_block(const LiftedQP & qp, const Indices & idx) { return qp.constraint_gram()(idx, idx); }

bool singular(const Eigen::SelfAdjointEigenSolver<Matrix> & es, double tol_singular)
{
  const auto & ev    = es.eigenvalues();
  const double top   = ev(ev.size() - 1);
  return !(top > 0.0) || ev(0) <= tol_singular * top;
}

// z = -H^{-1} G_A^T lambda_A through the factor of H.
Vector primal_from_multipliers(const LiftedQP & qp, const Indices & idx, const Vector & lambda_A)
{
  if (idx.empty()) { return Vector::Zero(qp.dims().decision_dim()); }
  const Matrix & G = qp.constraints().G;
  Vector g         = G(idx, Eigen::all).transpose() * lambda_A;
  return -qp.solve_H(g);
}

std::optional<KktSolution> kkt_solve_rhs(const LiftedQP & qp, const Indices & idx, const Vector & rhs,
                                         double tol_singular)
{
  if (idx.empty()) { return KktSolution{Vector::Zero(qp.dims().decision_dim()), Vector()}; }
  const Matrix K = gram_block(qp, idx);
  Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
  if (singular(es, tol_singular)) { return std::nullopt; }

  const Vector r = gather(rhs, idx);
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) { return std::nullopt; }
  Vector lambda = -llt.solve(r);
  lambda -= llt.solve(K * lambda + r);  // one refinement step
  return KktSolution{primal_from_multipliers(qp, idx, lambda), lambda};
}

OptimalityCheck check_rhs(const LiftedQP & qp, const Vector & z, const Vector & lambda_A, const ActiveSet & aset,
                          const Vector & rhs, const Tolerances & tol)
{
  OptimalityCheck out;
  const Vector slack = rhs - qp.constraints().G * z;
  std::vector<std::pair<double, int>> viol;
  for (Index k = 0; k < slack.size(); ++k) {
    if (!aset.test(static_cast<int>(k)) && slack(k) < -tol.tol_violation) {
      viol.emplace_back(slack(k), static_cast<int>(k));
    }
  }
  std::sort(viol.begin(), viol.end());
  for (const auto & [s, k] : viol) { out.violations.push_back(k); }

  const Indices idx = aset.indices();
  std::vector<std::pair<double, int>> neg;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double l = lambda_A(static_cast<Index>(i));
    if (l < -tol.tol_lambda) { neg.emplace_back(l, idx[i]); }
  }
  std::sort(neg.begin(), neg.end());
  for (const auto & [l, k] : neg) { out.negative_multipliers.push_back(k); }
  return out;
}

void require_theta(const LiftedQP & qp, const Vector & theta)
{
  if (theta.size() != qp.dims().parameter_dim()) { throw DimensionError("theta has wrong dimension"); }
}

// Subsets by (cardinality, numeric value), resumable across the solve.
class SequentialCursor
{
public:
  SequentialCursor(int p, int cap) : p_(p), cap_(std::min(p, cap)) {}

  std::optional<ActiveSet> next()
  {
    while (card_ <= cap_) {
      if (!started_) {
        current_ = ActiveSet(p_);
        for (int i = 0; i < card_; ++i) { current_.set(i); }
        started_ = true;
        return current_;
      }
      if (card_ > 0 && current_.next_combination()) { return current_; }
      ++card_;
      started_ = false;
    }
    return std::nullopt;
  }

private:
  int p_;
  int cap_;
  int card_     = 0;
  bool started_ = false;
  ActiveSet current_;
};

}  // namespace

std::optional<KktSolution> kkt_solve(const LiftedQP & qp, const ActiveSet & aset, const Vector & theta,
                                     double tol_singular)
{
  require_theta(qp, theta);
  return kkt_solve_rhs(qp, aset.indices(), qp.rhs(theta), tol_singular);
}

bool satisfies_licq(const LiftedQP & qp, const ActiveSet & aset, double tol_singular)
{
  const Indices idx = aset.indices();
  if (idx.empty()) { return true; }
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram_block(qp, idx), Eigen::EigenvaluesOnly);
  return !singular(es, tol_singular);
}

OptimalityCheck check_optimality(const LiftedQP & qp, const Vector & z_star, const Vector & lambda_A,
                                 const ActiveSet & aset, const Vector & theta, const Tolerances & tol)
{
  require_theta(qp, theta);
  return check_rhs(qp, z_star, lambda_A, aset, qp.rhs(theta), tol);
}

SolverState::SolverState(int p_tilde, bool track_visited) : track_(track_visited), flat_(p_tilde <= 24)
{
  if (track_ && flat_) { flat_visited_.assign(std::size_t{1} << p_tilde, false); }
}

bool SolverState::visited(const ActiveSet & a) const
{
  if (!track_) { return false; }
  if (flat_) { return flat_visited_[static_cast<std::size_t>(a.low_word())]; }
  return hashed_visited_.count(a) > 0;
}

void SolverState::mark_visited(const ActiveSet & a)
{
  if (!track_) { return; }
  if (flat_) {
    flat_visited_[static_cast<std::size_t>(a.low_word())] = true;
  } else {
    hashed_visited_.insert(a);
  }
}

bool SolverState::contains_violator(const ActiveSet & a) const
{
  return std::any_of(licq_.begin(), licq_.end(), [&](const ActiveSet & l) { return l.subset_of(a); });
}

void SolverState::add_violator(const ActiveSet & a)
{
  for (const auto & l : licq_) {
    if (l.subset_of(a)) { return; }
  }
  std::erase_if(licq_, [&](const ActiveSet & l) { return a.subset_of(l); });
  licq_.push_back(a);
}

SolveResult solve(const LiftedQP & qp, const Vector & theta, const ActiveSet & warm, const Tolerances & tol,
                  const SolveOptions & options)
{
  require_theta(qp, theta);
  const auto t0  = std::chrono::steady_clock::now();
  const int p    = static_cast<int>(qp.constraints().p_tilde());
  const int cap  = static_cast<int>(qp.dims().decision_dim());
  const Vector r = qp.rhs(theta);

  SolverState state(p, options.track_visited);
  SequentialCursor cursor(p, cap);
  SolveResult result;
  result.active_set = ActiveSet(p);

  auto eligible = [&](const ActiveSet & a) {
    return a.count() <= cap && !state.visited(a) && !state.contains_violator(a);
  };
  auto finish = [&](SolveStatus status) {
    result.status            = status;
    result.stats             = state.stats;
    result.stats.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
  };
  auto next_candidate = [&]() -> std::optional<ActiveSet> {
    while (!state.stack.empty()) {
      ActiveSet a = std::move(state.stack.back());
      state.stack.pop_back();
      if (eligible(a)) { return a; }
    }
    while (auto a = cursor.next()) {
      if (eligible(*a)) { return a; }
    }
    return std::nullopt;
  };

  std::optional<ActiveSet> candidate;
  if (warm.size() == p && eligible(warm)) {
    candidate = warm;
  } else {
    candidate = next_candidate();
  }

  while (candidate) {
    const ActiveSet A = std::move(*candidate);
    const Indices idx = A.indices();
    state.mark_visited(A);
    ++state.stats.candidates_visited;

    if (!idx.empty()) {
      if (state.stats.kkt_solves >= tol.max_kkt_solves) { return finish(SolveStatus::BudgetExhausted); }
      ++state.stats.kkt_solves;
    }
    const auto kkt = kkt_solve_rhs(qp, idx, r, tol.tol_singular);
    if (!kkt) {
      ++state.stats.licq_failures;
      state.add_violator(A);
      candidate = next_candidate();
      continue;
    }

    const OptimalityCheck check = check_rhs(qp, kkt->z, kkt->lambda_A, A, r, tol);
    if (check.optimal()) {
      result.z_star = kkt->z;
      result.u_seq  = kkt->z - qp.Hinv_F() * theta;
      result.u_first = result.u_seq.head(qp.dims().input_dim);
      result.lambda  = Vector::Zero(p);
      for (std::size_t i = 0; i < idx.size(); ++i) { result.lambda(idx[i]) = kkt->lambda_A(static_cast<Index>(i)); }
      result.active_set = A;
      return finish(SolveStatus::Optimal);
    }

    // Reverse order so the most violated / most negative ends on top; removals above additions.
    for (auto it = check.violations.rbegin(); it != check.violations.rend(); ++it) {
      ActiveSet next = A.with(*it);
      if (eligible(next)) { state.stack.push_back(std::move(next)); }
    }
    for (auto it = check.negative_multipliers.rbegin(); it != check.negative_multipliers.rend(); ++it) {
      ActiveSet next = A.without(*it);
      if (eligible(next)) { state.stack.push_back(std::move(next)); }
    }
    candidate = next_candidate();
  }
  return finish(SolveStatus::Infeasible);
}

SolveResult solve(const LiftedQP & qp, const Vector & theta, const Tolerances & tol)
{
  return solve(qp, theta, ActiveSet(static_cast<int>(qp.constraints().p_tilde())), tol);
}

namespace {

// Nonnegative lambda with K lambda = -r: minimum-norm solution if it is nonnegative,
// otherwise projected coordinate descent on min_{lambda >= 0} 1/2 <K lambda, lambda> + <r, lambda>.
Vector nonnegative_multipliers(const Matrix & K, const Vector & r, const Tolerances & tol)
{
  Eigen::SelfAdjointEigenSolver<Matrix> es(K);
  const Vector & ev = es.eigenvalues();
  const double cut  = tol.tol_singular * std::max(ev.maxCoeff(), 0.0);
  Vector inv        = Vector::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut) { inv(i) = 1.0 / ev(i); }
  }
  Vector lambda = -(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * r);
  if (lambda.minCoeff() >= -tol.tol_lambda) { return lambda.cwiseMax(0.0); }

  lambda          = lambda.cwiseMax(0.0);
  Vector Kl       = K * lambda;
  const double gate = 1e-14 * (1.0 + r.cwiseAbs().maxCoeff());
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double worst = 0.0;
    for (Index i = 0; i < lambda.size(); ++i) {
      if (!(K(i, i) > 0.0)) { continue; }
      const double g    = Kl(i) + r(i);
      const double next = std::max(0.0, lambda(i) - g / K(i, i));
      const double step = next - lambda(i);
      if (step != 0.0) {
        Kl += step * K.col(i);
        lambda(i) = next;
      }
      worst = std::max(worst, std::abs(std::min(lambda(i), g)));
    }
    if (worst <= gate) { break; }
  }
  return lambda;
}

}  // namespace

ActiveSet reduce_to_licq(const LiftedQP & qp, const ActiveSet & aset, const Vector & theta, const Tolerances & tol)
{
  require_theta(qp, theta);
  const Vector rhs = qp.rhs(theta);
  Indices cur      = aset.indices();
  if (cur.empty()) {
    if (!check_rhs(qp, Vector::Zero(qp.dims().decision_dim()), Vector(), aset, rhs, tol).optimal()) {
      throw NotSufficientError("reduce_to_licq: empty set is not sufficient");
    }
    return aset;
  }

  const Vector r = gather(rhs, cur);
  Vector lambda  = nonnegative_multipliers(gram_block(qp, cur), r, tol);
  {
    const Vector z   = primal_from_multipliers(qp, cur, lambda);
    const Vector res = qp.constraints().G(cur, Eigen::all) * z - r;
    if (res.cwiseAbs().maxCoeff() > 1e-7 * (1.0 + r.cwiseAbs().maxCoeff())) {
      throw NotSufficientError("reduce_to_licq: no nonnegative multipliers reproduce the active rows");
    }
    ActiveSet unchecked(aset.size());
    for (int k : cur) { unchecked.set(k); }
    if (!check_rhs(qp, z, lambda, unchecked, rhs, tol).violations.empty()) {
      throw NotSufficientError("reduce_to_licq: minimizer candidate violates inactive constraints");
    }
  }

  while (!cur.empty()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram_block(qp, cur));
    if (!singular(es, tol.tol_singular)) { break; }
    Vector v = es.eigenvectors().col(0);
    if (v.maxCoeff() <= 0.0) { v = -v; }

    double t = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < v.size(); ++i) {
      if (v(i) > 1e-12) { t = std::min(t, lambda(i) / v(i)); }
    }
    Index drop = -1;
    for (Index i = 0; i < v.size() && drop < 0; ++i) {
      if (v(i) > 1e-12 && lambda(i) / v(i) <= t + 1e-12 * (1.0 + std::abs(t))) { drop = i; }
    }
    lambda = (lambda - t * v).cwiseMax(0.0);
    cur.erase(cur.begin() + drop);
    Vector shrunk(lambda.size() - 1);
    shrunk << lambda.head(drop), lambda.tail(lambda.size() - drop - 1);
    lambda = shrunk;
  }

  ActiveSet out(aset.size());
  for (int k : cur) { out.set(k); }
  const auto kkt = kkt_solve_rhs(qp, cur, rhs, tol.tol_singular);
  if (!kkt || !check_rhs(qp, kkt->z, kkt->lambda_A, out, rhs, tol).optimal()) {
    throw NotSufficientError("reduce_to_licq: reduced set failed verification");
  }
  return out;
}

bool KktCertificate::passes() const
{
  return stationarity <= 1e-8 * (1.0 + z_norm) && active_equality <= 1e-8 && min_slack >= -1e-9
         && min_lambda >= -1e-9;
}

KktCertificate certify_kkt(const LiftedQP & qp, const Vector & theta, const SolveResult & result)
{
  require_theta(qp, theta);
  const auto & c = qp.constraints();
  const Vector & z = result.z_star;
  KktCertificate cert;
  cert.z_norm = z.norm();

  Vector lambda = result.lambda.size() ? result.lambda : Vector::Zero(c.p_tilde());
  cert.stationarity = (qp.cost().H * z + c.G.transpose() * lambda).norm();

  const Vector slack = qp.rhs(theta) - c.G * z;
  const double inf   = std::numeric_limits<double>::infinity();
  cert.min_slack     = slack.size() ? slack.minCoeff() : inf;
  cert.min_lambda    = inf;
  for (int k : result.active_set.indices()) {
    cert.active_equality = std::max(cert.active_equality, std::abs(slack(k)));
    cert.min_lambda      = std::min(cert.min_lambda, lambda(k));
  }
  return cert;
}

}  // namespace rfempc
