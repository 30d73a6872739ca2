#include "rfempc/fd_plant.hpp"

namespace rfempc {

FdPlant::FdPlant(const BeamParams & params, const FdSettings & settings) : params_(params), settings_(settings)
{
  const int n = settings.grid_points;
  if (n < 3) { throw std::invalid_argument("FdPlant: need at least 3 grid points"); }
  dx_      = 1.0 / (n - 1);
  grid_    = Vector::LinSpaced(n, 0.0, 1.0);
  weights_ = Vector::Constant(n, dx_);
  weights_(0) *= 0.5;
  weights_(n - 1) *= 0.5;
}

namespace {

void differentiate(const double * e, double * out, int n, double dx)
{
  out[0] = (e[1] - e[0]) / dx;
  for (int j = 1; j < n - 1; ++j) { out[j] = (e[j + 1] - e[j - 1]) / (2 * dx); }
  out[n - 1] = (e[n - 1] - e[n - 2]) / dx;
}

}  // namespace

Vector FdPlant::rhs(const Vector & X) const
{
  const int n = settings_.grid_points;
  if (X.size() != state_dim()) { throw DimensionError("FdPlant::rhs: wrong state size"); }
  const auto x1 = X.segment(0, n), x2 = X.segment(n, n), x3 = X.segment(2 * n, n), x4 = X.segment(3 * n, n);
  const Vector e1 = params_.K * x1, e2 = x2 / params_.rho, e3 = params_.EI * x3, e4 = x4 / params_.I_rho;

  Vector d(n), out(4 * n);
  differentiate(e2.data(), d.data(), n, dx_);
  out.segment(0, n) = d - e4;
  differentiate(e1.data(), d.data(), n, dx_);
  out.segment(n, n) = d;
  differentiate(e4.data(), d.data(), n, dx_);
  out.segment(2 * n, n) = d;
  differentiate(e3.data(), d.data(), n, dx_);
  out.segment(3 * n, n) = d + e1;

  out(n - 1)     = 0.0;  // x1(1)
  out(n)         = 0.0;  // x2(0)
  out(3 * n - 1) = 0.0;  // x3(1)
  out(3 * n)     = 0.0;  // x4(0)
  return out;
}

void FdPlant::impose_boundary(Vector & X, const Vector & u_physical) const
{
  const int n = settings_.grid_points;
  if (u_physical.size() != 2) { throw DimensionError("FdPlant: control has 2 entries"); }
  X(n - 1)     = u_physical(0) / params_.K;
  X(n)         = 0.0;
  X(3 * n - 1) = u_physical(1) / params_.EI;
  X(3 * n)     = 0.0;
}

Vector FdPlant::step(const Vector & X, const Vector & u_physical, double h, OdeStats * stats) const
{
  Vector Y = X;
  impose_boundary(Y, u_physical);
  OdeOptions opt;
  opt.rtol = settings_.rtol;
  opt.atol = settings_.atol;
  return dormand_prince([this](double, const Vector & y) { return rhs(y); }, 0.0, h, Y, opt, stats);
}

Vector FdPlant::sample(const std::array<Profile, 4> & profiles) const
{
  const int n = settings_.grid_points;
  Vector X(4 * n);
  for (int l = 0; l < 4; ++l) {
    for (int j = 0; j < n; ++j) { X(l * n + j) = profiles[l](grid_(j)); }
  }
  return X;
}

double FdPlant::mean(const Vector & X, int component) const
{
  const int n = settings_.grid_points;
  return weights_.dot(X.segment(component * n, n));
}

double FdPlant::l2_norm(const Vector & X) const
{
  const int n = settings_.grid_points;
  double s    = 0.0;
  for (int l = 0; l < 4; ++l) { s += weights_.dot(X.segment(l * n, n).cwiseAbs2()); }
  return std::sqrt(s);
}

double FdPlant::energy(const Vector & X) const
{
  const int n = settings_.grid_points;
  const double H[4] = {params_.K, 1.0 / params_.rho, params_.EI, 1.0 / params_.I_rho};
  double s = 0.0;
  for (int l = 0; l < 4; ++l) { s += H[l] * weights_.dot(X.segment(l * n, n).cwiseAbs2()); }
  return 0.5 * s;
}

GridObserver::GridObserver(const FdPlant & plant, const Basis & basis)
  : grid_points_(plant.grid_points()), offsets_(basis.offsets)
{
  const Vector & xi = plant.grid();
  const auto w      = plant.trapezoid_weights().asDiagonal();
  for (int l = 0; l < 4; ++l) {
    Matrix Phi(basis.size(l), grid_points_);
    for (Index i = 0; i < Phi.rows(); ++i) {
      for (Index j = 0; j < grid_points_; ++j) { Phi(i, j) = poly_eval(basis.functions[l][static_cast<std::size_t>(i)], xi(j)); }
    }
    const Matrix PW   = Phi * w;
    const Matrix gram = PW * Phi.transpose();
    maps_[l]          = gram.ldlt().solve(PW);
  }
}

Vector GridObserver::project(const Vector & X) const
{
  if (X.size() != 4 * grid_points_) { throw DimensionError("GridObserver::project: wrong grid state size"); }
  Vector alpha(offsets_[4]);
  for (int l = 0; l < 4; ++l) {
    alpha.segment(offsets_[l], offsets_[l + 1] - offsets_[l]) = maps_[l] * X.segment(l * grid_points_, grid_points_);
  }
  return alpha;
}

}  // namespace rfempc
