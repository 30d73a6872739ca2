#include "rfempc/beam.hpp"

#include <numbers>

namespace rfempc {

double Basis::evaluate(const Vector & alpha, int component, double xi) const
{
  double v = 0.0;
  const auto & f = functions[component];
  for (std::size_t i = 0; i < f.size(); ++i) { v += alpha(offsets[component] + static_cast<Index>(i)) * poly_eval(f[i], xi); }
  return v;
}

Vector Basis::mean_row(int component) const
{
  Vector row = Vector::Zero(dim());
  row.segment(offsets[component], size(component)) = means[component];
  return row;
}

Basis build_basis(const BeamParams & p)
{
  if (p.n_basis < 2) { throw std::invalid_argument("build_basis: n_basis must be >= 2"); }
  if (p.m_boundary < 1) { throw std::invalid_argument("build_basis: m_boundary must be >= 1"); }
  Basis b;
  b.boundary_degree = p.m_boundary;
  for (int l = 0; l < 4; ++l) {
    const bool clamped_at_one = (l == 0 || l == 2);
    const int count           = clamped_at_one ? p.n_basis - 1 : p.n_basis;
    const double sign         = clamped_at_one ? -1.0 : 1.0;
    for (int k = 0; k < count; ++k) {
      b.functions[l].push_back(poly_axpy(legendre_shifted_coefficients(k), sign, legendre_shifted_coefficients(k + 1)));
    }
    if (clamped_at_one) {
      Vector xm              = Vector::Zero(p.m_boundary + 1);
      xm(p.m_boundary)       = 1.0;
      b.functions[l].push_back(xm);
    }
    b.means[l].resize(static_cast<Index>(b.functions[l].size()));
    for (std::size_t i = 0; i < b.functions[l].size(); ++i) { b.means[l](static_cast<Index>(i)) = poly_mean(b.functions[l][i]); }
    b.offsets[l + 1] = b.offsets[l] + static_cast<Index>(b.functions[l].size());
  }
  return b;
}

GalerkinSystem assemble(const BeamParams & p)
{
  if (!(p.rho > 0 && p.I_rho > 0 && p.EI > 0 && p.K > 0)) {
    throw std::invalid_argument("assemble: physical coefficients must be positive");
  }
  GalerkinSystem g;
  g.params = p;
  g.basis  = build_basis(p);
  const Basis & b = g.basis;
  const Index n   = b.dim();

  const int degree = std::max(p.m_boundary, p.n_basis);
  const auto rule  = gauss_legendre(degree + 1);
  const Index nq   = rule.nodes.size();

  // Values and derivatives of every basis function at the nodes.
  std::array<Matrix, 4> val, der;
  for (int l = 0; l < 4; ++l) {
    val[l].resize(b.size(l), nq);
    der[l].resize(b.size(l), nq);
    for (Index i = 0; i < b.size(l); ++i) {
      const Vector & f = b.functions[l][static_cast<std::size_t>(i)];
      const Vector df  = poly_derivative(f);
      for (Index q = 0; q < nq; ++q) {
        val[l](i, q) = poly_eval(f, rule.nodes(q));
        der[l](i, q) = poly_eval(df, rule.nodes(q));
      }
    }
  }
  const auto w = rule.weights.asDiagonal();
  // <trial_k, test_m> placed at (test row m, trial column k)
  auto ip = [&](const Matrix & test, const Matrix & trial) -> Matrix { return test * w * trial.transpose(); };

  g.mass = Matrix::Zero(n, n);
  for (int l = 0; l < 4; ++l) { g.mass.block(b.offsets[l], b.offsets[l], b.size(l), b.size(l)) = ip(val[l], val[l]); }
  g.mass = 0.5 * (g.mass + g.mass.transpose());

  g.stiffness = Matrix::Zero(n, n);
  auto blk    = [&](int row, int col) { return g.stiffness.block(b.offsets[row], b.offsets[col], b.size(row), b.size(col)); };
  blk(0, 1) += ip(val[0], der[1]) / p.rho;      // <(x2/rho)', phi1>
  blk(0, 3) += -ip(val[0], val[3]) / p.I_rho;   // -<x4/I_rho, phi1>
  blk(1, 0) += -p.K * ip(der[1], val[0]);       // -<K x1, phi2'>, boundary term goes to the input
  blk(2, 3) += ip(val[2], der[3]) / p.I_rho;    // <(x4/I_rho)', phi3>
  blk(3, 2) += -p.EI * ip(der[3], val[2]);      // -<EI x3, phi4'>
  blk(3, 0) += p.K * ip(val[3], val[0]);        // <K x1, phi4>

  g.input = Matrix::Zero(n, 2);
  for (Index i = 0; i < b.size(1); ++i) { g.input(b.offsets[1] + i, 0) = poly_eval(b.functions[1][static_cast<std::size_t>(i)], 1.0); }
  for (Index i = 0; i < b.size(3); ++i) { g.input(b.offsets[3] + i, 1) = poly_eval(b.functions[3][static_cast<std::size_t>(i)], 1.0); }

  Eigen::SelfAdjointEigenSolver<Matrix> es(g.mass, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(n - 1);
  if (!(lo > 0.0)) { throw std::runtime_error("assemble: singular mass matrix"); }
  g.condition = hi / lo;
  return g;
}

DiscretePlant cayley_discretize(const GalerkinSystem & g, double h)
{
  return cayley_discretize(g.mass, g.stiffness, g.input, h);
}

BeamBenchmark build_benchmark_problem(const BenchmarkSettings & s)
{
  if (s.horizon < 1) { throw std::invalid_argument("build_benchmark_problem: horizon must be >= 1"); }
  if (s.u_lo > 0 || s.u_hi < 0 || s.x1_hi < 0 || s.x4_lo > 0) {
    throw std::invalid_argument("build_benchmark_problem: bounds must contain zero");
  }
  BeamBenchmark bench;
  bench.galerkin = assemble(s.params);
  bench.plant    = cayley_discretize(bench.galerkin, s.h);
  bench.mean_x1  = bench.galerkin.basis.mean_row(0);
  bench.mean_x4  = bench.galerkin.basis.mean_row(3);

  const int N    = s.horizon;
  const Index nx = bench.galerkin.basis.dim();
  const Index nu = 2;

  auto & p              = bench.problem;
  p.horizon             = N;
  p.prediction_model.A  = bench.plant.A;
  p.prediction_model.B  = bench.plant.B;

  const Matrix Q = s.h * s.Qp * bench.galerkin.mass;
  const Matrix R = s.Rp * Matrix::Identity(nu, nu);
  const Matrix V = s.Vp / (s.h * s.h) * Matrix::Identity(nu, nu);
  p.weights.Q.assign(N, Q);
  p.weights.R.assign(N, R);
  p.weights.M.assign(N, Matrix::Zero(nx, nu));
  p.weights.V.assign(N, V);
  p.weights.V.push_back(Matrix::Zero(nu, nu));
  p.weights.P = s.terminal == TerminalWeight::Stage ? Q : Matrix::Zero(nx, nx);

  const double scale = s.scaling == BoundScaling::Physical ? std::sqrt(s.h) : 1.0 / std::sqrt(s.h);
  for (int k = 0; k < N; ++k) {
    const Index rows = k == 0 ? 4 : 6;
    StageConstraint c;
    c.d          = Vector::Zero(rows);
    c.state      = Matrix::Zero(rows, nx);
    c.prev_input = Matrix::Zero(rows, nu);
    c.input      = Matrix::Zero(rows, nu);
    c.d.head(4) << scale * s.u_hi, scale * s.u_hi, -scale * s.u_lo, -scale * s.u_lo;
    c.input.topRows(2)    = Matrix::Identity(nu, nu);
    c.input.middleRows(2, 2) = -Matrix::Identity(nu, nu);
    if (k > 0) {
      c.d(4)         = s.x1_hi;
      c.state.row(4) = bench.mean_x1.transpose();
      c.d(5)         = -s.x4_lo;
      c.state.row(5) = -bench.mean_x4.transpose();
    }
    p.constraints.stages.push_back(std::move(c));
  }
  p.constraints.terminal = TerminalConstraint{Vector(0), Matrix(0, nx), Matrix(0, nu)};

  bench.initial_state = project_initial_condition(bench.galerkin, reference_initial_profiles()).coefficients;
  return bench;
}

std::array<Profile, 4> reference_initial_profiles()
{
  using std::numbers::pi;
  return {[](double) { return 0.0; }, [](double xi) { return std::sin(pi * xi / 2); },
          [](double xi) { return std::cos(pi * xi / 2); }, [](double) { return 0.0; }};
}

Projection project_initial_condition(const GalerkinSystem & g, const std::array<Profile, 4> & profiles,
                                     int quadrature_nodes)
{
  const Basis & b = g.basis;
  const auto rule = gauss_legendre(quadrature_nodes);
  Projection out;
  out.coefficients = Vector::Zero(b.dim());
  double err2      = 0.0;
  for (int l = 0; l < 4; ++l) {
    const Index nl = b.size(l);
    Vector rhs     = Vector::Zero(nl);
    for (Index q = 0; q < rule.nodes.size(); ++q) {
      const double fx = profiles[l](rule.nodes(q));
      for (Index i = 0; i < nl; ++i) { rhs(i) += rule.weights(q) * fx * poly_eval(b.functions[l][static_cast<std::size_t>(i)], rule.nodes(q)); }
    }
    const Matrix Ml = g.mass.block(b.offsets[l], b.offsets[l], nl, nl);
    out.coefficients.segment(b.offsets[l], nl) = Ml.ldlt().solve(rhs);
    for (Index q = 0; q < rule.nodes.size(); ++q) {
      const double r = profiles[l](rule.nodes(q)) - b.evaluate(out.coefficients, l, rule.nodes(q));
      err2 += rule.weights(q) * r * r;
    }
  }
  out.l2_error = std::sqrt(err2);
  return out;
}

Matrix boundary_matrix_W0()
{
  Matrix W(2, 8);
  W << -1, 0, 0, 0, 0, 1, 0, 0,  //
    0, 0, -1, 0, 0, 0, 0, 1;
  return W / std::sqrt(2.0);
}

Matrix boundary_matrix_WB()
{
  Matrix W(2, 8);
  W << 0, 1, 0, 0, 1, 0, 0, 0,  //
    0, 0, 0, 1, 0, 0, 1, 0;
  return W / std::sqrt(2.0);
}

BoundaryCheck check_boundary_matrices() { return check_boundary_matrices(boundary_matrix_W0(), boundary_matrix_WB()); }

BoundaryCheck check_boundary_matrices(const Matrix & W0, const Matrix & WB)
{
  if (W0.cols() != 8 || WB.cols() != 8) { throw DimensionError("check_boundary_matrices: expected 8 columns"); }
  Matrix W(W0.rows() + WB.rows(), 8);
  W << W0, WB;
  Matrix swap = Matrix::Zero(8, 8);
  swap.topRightCorner(4, 4)   = Matrix::Identity(4, 4);
  swap.bottomLeftCorner(4, 4) = Matrix::Identity(4, 4);
  BoundaryCheck c;
  c.product_norm = (W * swap * W.transpose()).norm();
  c.rank         = static_cast<int>(Eigen::FullPivLU<Matrix>(W).rank());
  return c;
}

}  // namespace rfempc
