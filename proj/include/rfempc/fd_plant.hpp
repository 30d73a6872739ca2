#pragma once

/**
 * @file
 * @brief Finite-difference beam used as the "true" plant in the imperfect-model loop.
 *
 * Uniform grid on [0, 1] per component, central differences inside, first-order
 * one-sided differences at both ends. The nodes x2(0), x4(0), x1(1) = u1/K and
 * x3(1) = u2/EI are held fixed over a sampling interval (zero-order hold).
 * Integration is adaptive Dormand-Prince.
 */

#include "rfempc/beam.hpp"
#include "rfempc/ode.hpp"

namespace rfempc {

struct FdSettings
{
  int grid_points = 127;
  double rtol     = 1e-6;
  double atol     = 1e-9;
};

class FdPlant
{
public:
  explicit FdPlant(const BeamParams & params, const FdSettings & settings = {});

  int grid_points() const { return settings_.grid_points; }
  Index state_dim() const { return 4 * static_cast<Index>(settings_.grid_points); }
  const Vector & grid() const { return grid_; }
  const FdSettings & settings() const { return settings_; }

  /// Semidiscrete right-hand side; the fixed boundary nodes have zero derivative.
  Vector rhs(const Vector & X) const;

  /// Set the fixed boundary nodes for the physical control u.
  void impose_boundary(Vector & X, const Vector & u_physical) const;

  /// Hold u_physical over [0, h] and integrate.
  Vector step(const Vector & X, const Vector & u_physical, double h, OdeStats * stats = nullptr) const;

  Vector sample(const std::array<Profile, 4> & profiles) const;

  const Vector & trapezoid_weights() const { return weights_; }
  /// Trapezoidal int_0^1 of one component.
  double mean(const Vector & X, int component) const;
  /// sqrt(sum_l int x_l^2)
  double l2_norm(const Vector & X) const;
  /// 1/2 sum_l int H_l x_l^2 with H = diag(K, 1/rho, EI, 1/I_rho)
  double energy(const Vector & X) const;

private:
  BeamParams params_;
  FdSettings settings_;
  Vector grid_;
  Vector weights_;
  double dx_ = 0;
};

/// Trapezoidal L2 projection of the grid state onto the Galerkin basis.
class GridObserver
{
public:
  GridObserver(const FdPlant & plant, const Basis & basis);

  Vector project(const Vector & X) const;

private:
  Index grid_points_;
  std::array<Matrix, 4> maps_;
  std::array<Index, 5> offsets_{};
};

}  // namespace rfempc
