#pragma once

/**
 * @file
 * @brief Seeded random MPC instances for tests and the `generate` command.
 */

#include "rfempc/solver.hpp"

#include <random>

namespace rfempc {

using Rng = std::mt19937_64;

struct RandomProblemSpec
{
  int max_state_dim = 4;
  int max_input_dim = 2;
  int max_horizon   = 3;
  int max_rows      = 12;  ///< bound on p~
  double state_row_probability = 0.4;
  double prev_input_row_probability = 0.2;
  double theta_scale = 2.0;
};

struct RandomInstance
{
  ProblemDefinition problem;
  Vector theta;
};

/**
 * @brief Random problem with PSD weights, R_k positive definite, strictly
 * positive d, and a theta for which u' = 0 is strictly feasible.
 */
RandomInstance random_instance(Rng & rng, const RandomProblemSpec & spec = {});

/// Instance whose constraints at theta admit no input sequence, with exactly `rows` rows.
RandomInstance infeasible_instance(Rng & rng, int rows = 10);

struct DegenerateInstance
{
  RandomInstance instance;
  /// Optimal set of the original rows plus every appended dependent row; sufficient, LICQ fails.
  ActiveSet degenerate_set;
  int appended_rows = 0;
};

/**
 * @brief Random instance with rows appended that duplicate or positively combine
 * rows active at the optimum (same stage), so the active gradients are dependent.
 */
DegenerateInstance degenerate_instance(Rng & rng, const RandomProblemSpec & spec = {});

}  // namespace rfempc
