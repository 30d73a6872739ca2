#include "rfempc/lifting.hpp"

#include <sstream>

namespace rfempc {

LiftedDynamics lift_dynamics(const PlantModel & model, int horizon)
{
  const Index nx = model.state_dim(), nu = model.input_dim();
  const int N    = horizon;

  std::vector<Matrix> powers(N + 1);
  powers[0] = Matrix::Identity(nx, nx);
  for (int k = 1; k <= N; ++k) { powers[k] = model.A * powers[k - 1]; }

  LiftedDynamics lifted;
  lifted.A_tilde = Matrix::Zero(N * nx, nx);
  lifted.B_tilde = Matrix::Zero(N * nx, N * nu);
  lifted.kernel  = Matrix::Zero(N * nx, N * nx);
  std::vector<Matrix> powers_B(N);
  for (int k = 0; k < N; ++k) { powers_B[k] = powers[k] * model.B; }
  for (int i = 0; i < N; ++i) {
    lifted.A_tilde.middleRows(i * nx, nx) = powers[i + 1];
    for (int j = 0; j <= i; ++j) {
      lifted.kernel.block(i * nx, j * nx, nx, nx)  = powers[i - j];
      lifted.B_tilde.block(i * nx, j * nu, nx, nu) = powers_B[i - j];
    }
  }
  return lifted;
}

Matrix rate_weight_operator(const std::vector<Matrix> & V, int horizon)
{
  const int N = horizon;
  if (static_cast<int>(V.size()) != N + 1) { throw DimensionError("rate_weight_operator: need V_0..V_N"); }
  const Index nu = V[0].rows();
  Matrix Vt      = Matrix::Zero(N * nu, N * nu);
  for (int k = 0; k < N; ++k) {
    Vt.block(k * nu, k * nu, nu, nu) = V[k] + V[k + 1];
    if (k + 1 < N) {
      Vt.block(k * nu, (k + 1) * nu, nu, nu) = -V[k + 1];
      Vt.block((k + 1) * nu, k * nu, nu, nu) = -V[k + 1];
    }
  }
  return Vt;
}

LiftedQP LiftedQP::build(const ProblemDefinition & p, const LiftOptions & options)
{
  if (const auto report = validate(p); !report.ok()) {
    std::ostringstream os;
    os << "LiftedQP::build: invalid problem:";
    for (const auto & issue : report.issues) { os << "\n  " << issue; }
    throw DimensionError(os.str());
  }

  const Index nx = p.state_dim(), nu = p.input_dim();
  const int N    = p.horizon;
  const auto & w = p.weights;

  LiftedQP qp;
  qp.dims_ = LiftedDims{N, nx, nu};

  const LiftedDynamics lifted = lift_dynamics(p.prediction_model, N);
  const Matrix & At           = lifted.A_tilde;
  const Matrix & Bt           = lifted.B_tilde;

  auto & cost = qp.cost_;
  cost.Q_P    = Matrix::Zero(N * nx, N * nx);
  for (int k = 1; k < N; ++k) { cost.Q_P.block((k - 1) * nx, (k - 1) * nx, nx, nx) = w.Q[k]; }
  cost.Q_P.bottomRightCorner(nx, nx) = w.P;

  cost.R_tilde = Matrix::Zero(N * nu, N * nu);
  for (int k = 0; k < N; ++k) { cost.R_tilde.block(k * nu, k * nu, nu, nu) = w.R[k]; }

  cost.M_tilde = Matrix::Zero(N * nx, N * nu);
  for (int k = 1; k < N; ++k) { cost.M_tilde.block((k - 1) * nx, k * nu, nx, nu) = w.M[k]; }
  cost.M0_tilde = Matrix::Zero(nx, N * nu);
  cost.M0_tilde.leftCols(nu) = w.M[0];

  cost.V_tilde  = rate_weight_operator(w.V, N);
  cost.V0_tilde = Matrix::Zero(N * nu, nu);
  cost.V0_tilde.topRows(nu) = -w.V[0];

  // Q~_P is block diagonal; apply it block by block.
  Matrix QB(N * nx, N * nu), QA(N * nx, nx);
  for (int k = 0; k < N; ++k) {
    const auto Qk        = cost.Q_P.block(k * nx, k * nx, nx, nx);
    QB.middleRows(k * nx, nx) = Qk * Bt.middleRows(k * nx, nx);
    QA.middleRows(k * nx, nx) = Qk * At.middleRows(k * nx, nx);
  }

  const Matrix MB = cost.M_tilde.transpose() * Bt;
  Matrix H        = Bt.transpose() * QB + cost.R_tilde + cost.V_tilde + MB + MB.transpose();
  cost.H          = 0.5 * (H + H.transpose());

  cost.F.resize(N * nu, nx + nu);
  cost.F << Bt.transpose() * QA + cost.M_tilde.transpose() * At + cost.M0_tilde.transpose(), cost.V0_tilde;

  cost.const_op = Matrix::Zero(nx + nu, nx + nu);
  Matrix top    = w.Q[0] + At.transpose() * QA;
  cost.const_op.topLeftCorner(nx, nx)     = 0.5 * (top + top.transpose());
  cost.const_op.bottomRightCorner(nu, nu) = w.V[0];

  cost.eps = check_coercivity(cost.H);
  const double tol_coercive = 1e-10 * (1.0 + spectral_norm(cost.H));
  if (!(cost.eps > tol_coercive)) {
    std::ostringstream os;
    os << "H not coercive: smallest eigenvalue " << cost.eps << " <= " << tol_coercive;
    throw CoercivityError(os.str());
  }

  // Constraint blocks.
  const Index pt = p.constraints.total_rows();
  Matrix E0t     = Matrix::Zero(pt, nx + nu);
  Matrix E1t     = Matrix::Zero(pt, N * nx);
  Matrix Et      = Matrix::Zero(pt, N * nu);
  auto & cons    = qp.constraints_;
  cons.W.resize(pt);
  cons.rows.reserve(static_cast<std::size_t>(pt));

  Index row = 0;
  for (int k = 0; k < N; ++k) {
    const auto & s = p.constraints.stages[k];
    const Index rk = s.rows();
    if (rk == 0) { continue; }
    cons.W.segment(row, rk) = s.d;
    if (k == 0) {
      E0t.block(row, 0, rk, nx)  = s.state;
      E0t.block(row, nx, rk, nu) = s.prev_input;
    } else {
      E1t.block(row, (k - 1) * nx, rk, nx) = s.state;
      Et.block(row, (k - 1) * nu, rk, nu)  = s.prev_input;
    }
    Et.block(row, k * nu, rk, nu) = s.input;
    for (Index r = 0; r < rk; ++r) { cons.rows.push_back({k, r}); }
    row += rk;
  }
  if (const auto & t = p.constraints.terminal; t.rows() > 0) {
    const Index rt = t.rows();
    cons.W.segment(row, rt)                = t.d;
    E1t.block(row, (N - 1) * nx, rt, nx)   = t.state;
    Et.block(row, (N - 1) * nu, rt, nu)    = t.input;
    for (Index r = 0; r < rt; ++r) { cons.rows.push_back({N, r}); }
  }
  cons.depends_on_parameter = (E0t.array() != 0.0).any() || (E1t.array() != 0.0).any();

  qp.llt_.compute(cost.H);
  if (qp.llt_.info() != Eigen::Success) { throw CoercivityError("H not coercive: Cholesky factorization failed"); }
  qp.hinv_f_ = qp.llt_.solve(cost.F);

  cons.G = E1t * Bt + Et;
  Matrix E1A(pt, nx + nu);
  E1A << E1t * At, Matrix::Zero(pt, nu);
  cons.S = cons.G * qp.hinv_f_ - E1A - E0t;

  qp.hinv_gt_ = qp.llt_.solve(cons.G.transpose());
  const Matrix gram = cons.G * qp.hinv_gt_;
  qp.gram_          = 0.5 * (gram + gram.transpose());

  if (options.keep_blocks) {
    cons.calE0_tilde = std::move(E0t);
    cons.calE1_tilde = std::move(E1t);
    cons.E_tilde     = std::move(Et);
  }
  return qp;
}

namespace {

void require(const LiftedQP & qp, const Vector & v, Index n, const char * what)
{
  (void)qp;
  if (v.size() != n) { throw DimensionError(std::string(what) + " has wrong dimension"); }
}

}  // namespace

double evaluate_lifted_cost(const LiftedQP & qp, const Vector & inputs, const Vector & theta)
{
  require(qp, inputs, qp.dims().decision_dim(), "input sequence");
  require(qp, theta, qp.dims().parameter_dim(), "theta");
  const auto & c = qp.cost();
  return theta.dot(c.const_op * theta) + inputs.dot(c.H * inputs) + 2.0 * inputs.dot(c.F * theta);
}

Vector to_z(const LiftedQP & qp, const Vector & inputs, const Vector & theta)
{
  require(qp, inputs, qp.dims().decision_dim(), "input sequence");
  require(qp, theta, qp.dims().parameter_dim(), "theta");
  return inputs + qp.Hinv_F() * theta;
}

Vector from_z(const LiftedQP & qp, const Vector & z, const Vector & theta)
{
  require(qp, z, qp.dims().decision_dim(), "z");
  require(qp, theta, qp.dims().parameter_dim(), "theta");
  return z - qp.Hinv_F() * theta;
}

Vector eval_constraints(const LiftedQP & qp, const Vector & z, const Vector & theta)
{
  require(qp, z, qp.dims().decision_dim(), "z");
  require(qp, theta, qp.dims().parameter_dim(), "theta");
  return qp.rhs(theta) - qp.constraints().G * z;
}

bool check_easy_slater(const LiftedQP & qp)
{
  const auto & c = qp.constraints();
  if (c.depends_on_parameter) { return false; }
  return c.W.size() == 0 || c.W.minCoeff() > 0.0;
}

}  // namespace rfempc
