#include "rfempc/sim.hpp"

#include "rfempc/oracle.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace rfempc {

const char * to_string(Algorithm a)
{
  switch (a) {
    case Algorithm::EMPC: return "eMPC";
    case Algorithm::EMPCF: return "eMPCf";
    case Algorithm::DualAscent: return "dual";
  }
  return "unknown";
}

const char * to_string(PlantMode m) { return m == PlantMode::Perfect ? "perfect" : "fd"; }

LinearPlant::LinearPlant(PlantModel model, Vector x0, Matrix norm_weight)
  : model_(std::move(model)), x_(std::move(x0)), weight_(std::move(norm_weight))
{
  if (x_.size() != model_.state_dim()) { throw DimensionError("LinearPlant: initial state has wrong size"); }
  if (weight_.size() == 0) { weight_ = Matrix::Identity(x_.size(), x_.size()); }
}

void LinearPlant::set_monitor_rows(Vector mean_x1, Vector mean_x4)
{
  mean_x1_ = std::move(mean_x1);
  mean_x4_ = std::move(mean_x4);
}

void LinearPlant::apply(const Vector & u) { x_ = model_.A * x_ + model_.B * u; }

double LinearPlant::state_norm() const { return std::sqrt(std::max(0.0, x_.dot(weight_ * x_))); }

std::array<double, 2> LinearPlant::monitored_means() const
{
  if (mean_x1_.size() == 0) { return Plant::monitored_means(); }
  return {mean_x1_.dot(x_), mean_x4_.dot(x_)};
}

FdBeamPlant::FdBeamPlant(const FdPlant & fd, const Basis & basis, Vector X0, double h)
  : fd_(fd), observer_(fd, basis), X_(std::move(X0)), h_(h)
{
  if (X_.size() != fd.state_dim()) { throw DimensionError("FdBeamPlant: grid state has wrong size"); }
}

void FdBeamPlant::apply(const Vector & u) { X_ = fd_.step(X_, u / std::sqrt(h_), h_, &ode_); }

std::unique_ptr<Plant> make_beam_plant(const BeamBenchmark & bench, PlantMode mode, double h, const FdSettings & fd)
{
  if (mode == PlantMode::Perfect) {
    auto p = std::make_unique<LinearPlant>(bench.problem.true_plant(), bench.initial_state, bench.galerkin.mass);
    p->set_monitor_rows(bench.mean_x1, bench.mean_x4);
    return p;
  }
  FdPlant plant(bench.galerkin.params, fd);
  Vector X0 = plant.sample(reference_initial_profiles());
  return std::make_unique<FdBeamPlant>(plant, bench.galerkin.basis, std::move(X0), h);
}

long SimulationConfig::steps() const
{
  if (!(h > 0) || !(t_end >= 0)) { throw std::invalid_argument("SimulationConfig: need h > 0 and t_end >= 0"); }
  const double ratio = t_end / h;
  const double n     = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("SimulationConfig: t_end / h is not an integer");
  }
  return static_cast<long>(n);
}

namespace {

double stage_cost(const ProblemDefinition & p, const Vector & x, const Vector & u, const Vector & u_prev)
{
  const auto & w = p.weights;
  const Vector du = u - u_prev;
  return x.dot(w.Q[0] * x) + 2.0 * x.dot(w.M[0] * u) + u.dot(w.R[0] * u) + du.dot(w.V[0] * du);
}

}  // namespace

SimulationResult run_closed_loop(const SimulationConfig & cfg, const LiftedQP & qp, const ProblemDefinition & problem,
                                 Plant & plant)
{
  const long steps     = cfg.steps();
  const Index nu       = problem.input_dim();
  const int N          = problem.horizon;
  const int p          = static_cast<int>(qp.constraints().p_tilde());
  const Tolerances tol = cfg.tolerances ? *cfg.tolerances : Tolerances::defaults_for(qp);
  const SolveOptions options{cfg.algorithm != Algorithm::EMPCF};

  SimulationResult out;
  out.initial_norm = plant.state_norm();
  out.steps.reserve(static_cast<std::size_t>(steps));

  Vector u_prev = Vector::Zero(nu);
  ActiveSet warm(p);
  Vector plan;
  int plan_age = 0;

  for (long n = 0; n < steps; ++n) {
    const Vector x = plant.observe();
    Vector theta(x.size() + nu);
    theta << x, u_prev;

    StepLog log;
    log.step       = n;
    log.time       = static_cast<double>(n) * cfg.h;
    log.state_norm = plant.state_norm();
    const auto means = plant.monitored_means();
    log.mean_x1 = means[0];
    log.mean_x4 = means[1];

    SolveResult res;
    if (cfg.algorithm == Algorithm::DualAscent) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        res.z_star     = oracle::dual_ascent(qp, theta);
        res.status     = SolveStatus::Optimal;
        res.u_seq      = from_z(qp, res.z_star, theta);
        res.u_first    = res.u_seq.head(nu);
        res.active_set = ActiveSet(p);
      } catch (const oracle::ConvergenceError &) {
        res.status = SolveStatus::BudgetExhausted;
      }
      res.stats.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else {
      res = solve(qp, theta, cfg.cold_start ? ActiveSet(p) : warm, tol, options);
    }
    out.solve_time_s += res.stats.wall_time_s;

    Vector u;
    if (res.status == SolveStatus::Optimal) {
      if (cfg.on_solve && cfg.algorithm != Algorithm::DualAscent) { cfg.on_solve(theta, res); }
      u         = res.u_first;
      plan      = res.u_seq;
      plan_age  = 0;
      warm      = res.active_set;
      log.J_opt = evaluate_lifted_cost(qp, res.u_seq, theta);
    } else {
      const bool can_shift = cfg.on_infeasible == InfeasibilityPolicy::ShiftedTail && plan.size() > 0;
      if (!can_shift) {
        std::ostringstream os;
        os << "step " << n << " (t = " << log.time << "): solver returned " << to_string(res.status) << " after "
           << res.stats.kkt_solves << " KKT solves";
        if (n > 0 && cfg.mode == PlantMode::Perfect) {
          os << "; recursive feasibility violated after a feasible start";
        }
        out.aborted      = true;
        out.abort_status = res.status;
        out.diagnostic   = os.str();
        break;
      }
      ++out.fallback_steps;
      plan_age  = std::min(plan_age + 1, N - 1);
      u         = plan.segment(static_cast<Index>(plan_age) * nu, nu);
      log.J_opt = std::numeric_limits<double>::quiet_NaN();
    }

    out.J_d += stage_cost(problem, x, u, u_prev);
    log.cumulative         = out.J_d;
    log.u_physical         = cfg.input_scale * u;
    log.active_set         = res.active_set.size() ? res.active_set.hex() : std::string("-");
    log.candidates_visited = res.stats.candidates_visited;
    log.licq_failures      = res.stats.licq_failures;
    log.kkt_solves         = res.stats.kkt_solves;
    log.wall_time_s        = res.stats.wall_time_s;
    log.status             = res.status;
    out.steps.push_back(std::move(log));

    plant.apply(u);
    u_prev = u;
  }
  out.final_norm  = plant.state_norm();
  out.final_means = plant.monitored_means();
  return out;
}

SimulationResult run_closed_loop(const SimulationConfig & cfg, const ProblemDefinition & problem, Plant & plant)
{
  return run_closed_loop(cfg, LiftedQP::build(problem), problem, plant);
}

std::vector<BenchmarkRow> benchmark_sweep(const std::vector<int> & horizons, const std::vector<Algorithm> & algorithms,
                                          const SimulationConfig & cfg, const BenchmarkSettings & settings)
{
  std::vector<BenchmarkRow> rows;
  for (int N : horizons) {
    BenchmarkSettings s = settings;
    s.horizon           = N;
    s.h                 = cfg.h;
    const BeamBenchmark bench = build_benchmark_problem(s);
    const LiftedQP qp         = LiftedQP::build(bench.problem);
    for (Algorithm a : algorithms) {
      SimulationConfig c = cfg;
      c.horizon          = N;
      c.algorithm        = a;
      c.input_scale      = 1.0 / std::sqrt(cfg.h);
      auto plant         = make_beam_plant(bench, cfg.mode, cfg.h);
      const SimulationResult r = run_closed_loop(c, qp, bench.problem, *plant);

      BenchmarkRow row;
      row.N               = N;
      row.algorithm       = a;
      row.runtime_s       = r.solve_time_s;
      row.J_d             = r.J_d;
      row.p_tilde         = qp.constraints().p_tilde();
      row.log2_candidates = row.p_tilde;
      row.fallback_steps  = r.fallback_steps;
      row.aborted         = r.aborted;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace rfempc
