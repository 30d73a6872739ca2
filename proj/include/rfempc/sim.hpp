#pragma once

/**
 * @file
 * @brief Closed-loop MPC: lift once, solve once per sampling step with the
 * previous sufficient set as warm start, apply the first control to a plant.
 */

#include "rfempc/beam.hpp"
#include "rfempc/fd_plant.hpp"
#include "rfempc/solver.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace rfempc {

enum class PlantMode
{
  Perfect,           ///< plant = prediction model
  FiniteDifference,  ///< FD beam + grid observer
};

enum class Algorithm
{
  EMPC,        ///< active-set search with visited set
  EMPCF,       ///< same search without the visited set
  DualAscent,  ///< oracle::dual_ascent as a stand-in for a generic QP solver
};

const char * to_string(Algorithm a);
const char * to_string(PlantMode m);

/// What to do when a step has no certified solution.
enum class InfeasibilityPolicy
{
  Abort,        ///< stop the run with a diagnostic
  ShiftedTail,  ///< apply the next input of the last accepted plan
};

class Plant
{
public:
  virtual ~Plant() = default;

  /// State handed to the controller (coefficients for the FD plant).
  virtual Vector observe() const = 0;
  /// Apply the controller output u_n over one sampling interval.
  virtual void apply(const Vector & u) = 0;
  virtual double state_norm() const = 0;
  /// int x1, int x4 when the plant is a beam; NaN otherwise.
  virtual std::array<double, 2> monitored_means() const
  {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
};

/// x+ = A x + B u. The norm is sqrt(x^T W x).
class LinearPlant : public Plant
{
public:
  LinearPlant(PlantModel model, Vector x0, Matrix norm_weight = Matrix());
  /// Rows r1, r4 with r . x = monitored mean.
  void set_monitor_rows(Vector mean_x1, Vector mean_x4);

  Vector observe() const override { return x_; }
  void apply(const Vector & u) override;
  double state_norm() const override;
  std::array<double, 2> monitored_means() const override;

private:
  PlantModel model_;
  Vector x_;
  Matrix weight_;
  Vector mean_x1_, mean_x4_;
};

/// FD beam driven by the physical control u_n / sqrt(h).
class FdBeamPlant : public Plant
{
public:
  FdBeamPlant(const FdPlant & fd, const Basis & basis, Vector X0, double h);

  Vector observe() const override { return observer_.project(X_); }
  void apply(const Vector & u) override;
  double state_norm() const override { return fd_.l2_norm(X_); }
  std::array<double, 2> monitored_means() const override { return {fd_.mean(X_, 0), fd_.mean(X_, 3)}; }

  const Vector & grid_state() const { return X_; }
  const OdeStats & integration_stats() const { return ode_; }

private:
  FdPlant fd_;
  GridObserver observer_;
  Vector X_;
  double h_;
  OdeStats ode_;
};

std::unique_ptr<Plant> make_beam_plant(const BeamBenchmark & bench, PlantMode mode, double h,
                                       const FdSettings & fd = {});

struct SimulationConfig
{
  double t_end = 6.0;
  double h     = 1.0 / 128.0;
  PlantMode mode = PlantMode::Perfect;
  int horizon    = 10;
  std::optional<Tolerances> tolerances;  ///< Tolerances::defaults_for(qp) when empty
  Algorithm algorithm = Algorithm::EMPC;
  unsigned long long seed = 0;
  bool cold_start         = false;
  InfeasibilityPolicy on_infeasible = InfeasibilityPolicy::Abort;
  /// u_physical = input_scale * u_n; 1/sqrt(h) for the beam.
  double input_scale = 1.0;
  /// Called after every Optimal solve.
  std::function<void(const Vector & theta, const SolveResult &)> on_solve;

  /// round(t_end / h); throws if t_end / h is not integral within 1e-9.
  long steps() const;
};

struct StepLog
{
  long step   = 0;
  double time = 0;
  Vector u_physical;
  double J_opt      = 0;  ///< lifted cost at the minimizer incl. the constant term; NaN without a solution
  double cumulative = 0;
  double mean_x1    = 0;
  double mean_x4    = 0;
  std::string active_set;  ///< hex
  long candidates_visited = 0;
  long licq_failures      = 0;
  long kkt_solves         = 0;
  double wall_time_s      = 0;
  SolveStatus status      = SolveStatus::Optimal;
  double state_norm       = 0;
};

struct SimulationResult
{
  std::vector<StepLog> steps;
  double J_d          = 0;
  double initial_norm = 0;
  double final_norm   = 0;
  std::array<double, 2> final_means{};
  long fallback_steps = 0;  ///< steps without a certified solution
  bool aborted        = false;
  SolveStatus abort_status = SolveStatus::Optimal;
  std::string diagnostic;
  double solve_time_s = 0;
};

class SimulationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Run the loop from the plant's current state with u_{-1} = 0.
 *
 * J_d accumulates <Q x, x> + 2<x, M u> + <R u, u> + <V du, du> with the
 * stage-0 weights at every step, x being the observed state.
 */
SimulationResult run_closed_loop(const SimulationConfig & cfg, const LiftedQP & qp, const ProblemDefinition & problem,
                                 Plant & plant);
SimulationResult run_closed_loop(const SimulationConfig & cfg, const ProblemDefinition & problem, Plant & plant);

struct BenchmarkRow
{
  int N = 0;
  Algorithm algorithm = Algorithm::EMPC;
  double runtime_s    = 0;  ///< total solve time, lifting excluded
  double J_d          = 0;
  long p_tilde        = 0;
  long log2_candidates = 0;  ///< the candidate count is 2^p~
  long fallback_steps = 0;
  bool aborted        = false;
};

/// Closed-loop beam runs for every (N, algorithm) pair; cfg.horizon is ignored.
std::vector<BenchmarkRow> benchmark_sweep(const std::vector<int> & horizons, const std::vector<Algorithm> & algorithms,
                                          const SimulationConfig & cfg, const BenchmarkSettings & settings = {});

}  // namespace rfempc
