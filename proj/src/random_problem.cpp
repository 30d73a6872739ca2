#include "rfempc/random_problem.hpp"

#include "rfempc/oracle.hpp"

#include <map>

namespace rfempc {

namespace {

int uniform_int(Rng & rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(Rng & rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
bool coin(Rng & rng, double p) { return std::bernoulli_distribution(p)(rng); }

Matrix randn(Rng & rng, Index rows, Index cols)
{
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) { m(i, j) = g(rng); }
  }
  return m;
}

Matrix random_psd(Rng & rng, Index n)
{
  const Index rank = uniform_int(rng, 0, static_cast<int>(n));
  if (rank == 0) { return Matrix::Zero(n, n); }
  const Matrix C = randn(rng, n, rank);
  return C * C.transpose() / static_cast<double>(n);
}

StageWeights random_weights(Rng & rng, int N, Index nx, Index nu)
{
  StageWeights w;
  for (int k = 0; k < N; ++k) {
    // [Q M; M^T R] = C C^T + diag(0, 0.5 I) keeps the cross block PSD.
    const Index n  = nx + nu;
    const Matrix C = randn(rng, n, uniform_int(rng, 1, static_cast<int>(n)));
    const Matrix block = C * C.transpose() / static_cast<double>(n);
    w.Q.push_back(block.topLeftCorner(nx, nx));
    w.M.push_back(block.topRightCorner(nx, nu));
    w.R.push_back(block.bottomRightCorner(nu, nu) + 0.5 * Matrix::Identity(nu, nu));
  }
  for (int k = 0; k <= N; ++k) { w.V.push_back(random_psd(rng, nu)); }
  w.P = random_psd(rng, nx);
  return w;
}

void append_row(StageConstraint & s, double d, const Vector & state, const Vector & prev, const Vector & input)
{
  const Index r = s.rows();
  s.d.conservativeResize(r + 1);
  s.state.conservativeResize(r + 1, state.size());
  s.prev_input.conservativeResize(r + 1, prev.size());
  s.input.conservativeResize(r + 1, input.size());
  s.d(r)             = d;
  s.state.row(r)     = state.transpose();
  s.prev_input.row(r) = prev.transpose();
  s.input.row(r)     = input.transpose();
}

void append_terminal_row(TerminalConstraint & t, double d, const Vector & state, const Vector & input)
{
  const Index r = t.rows();
  t.d.conservativeResize(r + 1);
  t.state.conservativeResize(r + 1, state.size());
  t.input.conservativeResize(r + 1, input.size());
  t.d(r)         = d;
  t.state.row(r) = state.transpose();
  t.input.row(r) = input.transpose();
}

StageConstraints empty_constraints(int N, Index nx, Index nu)
{
  StageConstraints c;
  for (int k = 0; k < N; ++k) {
    c.stages.push_back(StageConstraint{Vector(0), Matrix(0, nx), Matrix(0, nu), Matrix(0, nu)});
  }
  c.terminal = TerminalConstraint{Vector(0), Matrix(0, nx), Matrix(0, nu)};
  return c;
}

// Halve theta until u' = 0 is strictly feasible.
Vector slater_theta(Rng & rng, const ProblemDefinition & p, double scale)
{
  const Index nx = p.state_dim(), nu = p.input_dim();
  Vector theta   = scale * randn(rng, nx + nu, 1);
  const Vector zero = Vector::Zero(p.horizon * nu);
  double margin = std::numeric_limits<double>::infinity();
  for (const auto & s : p.constraints.stages) {
    if (s.rows()) { margin = std::min(margin, s.d.minCoeff()); }
  }
  if (p.constraints.terminal.rows()) { margin = std::min(margin, p.constraints.terminal.d.minCoeff()); }
  for (int i = 0; i < 60; ++i) {
    const auto adm = check_admissible(p, zero, Parameter::from_stacked(theta, nx));
    if (adm.slacks.size() == 0 || adm.slacks.minCoeff() > 0.05 * margin) { return theta; }
    theta *= 0.5;
  }
  return Vector::Zero(nx + nu);
}

}  // namespace

RandomInstance random_instance(Rng & rng, const RandomProblemSpec & spec)
{
  const Index nx = uniform_int(rng, 1, spec.max_state_dim);
  const Index nu = uniform_int(rng, 1, spec.max_input_dim);
  const int N    = uniform_int(rng, 1, spec.max_horizon);

  RandomInstance inst;
  ProblemDefinition & p = inst.problem;
  p.horizon             = N;
  p.prediction_model.A  = 0.9 * randn(rng, nx, nx) / std::sqrt(static_cast<double>(nx));
  p.prediction_model.B  = randn(rng, nx, nu);
  p.weights             = random_weights(rng, N, nx, nu);
  p.constraints         = empty_constraints(N, nx, nu);

  const int rows = uniform_int(rng, 1, spec.max_rows);
  for (int r = 0; r < rows; ++r) {
    const int stage    = uniform_int(rng, 0, N);  // N is the terminal block
    const double d     = uniform(rng, 0.2, 1.5);
    const Vector input = randn(rng, nu, 1);
    const Vector state = coin(rng, spec.state_row_probability) ? Vector(0.5 * randn(rng, nx, 1)) : Vector(Vector::Zero(nx));
    if (stage == N) {
      append_terminal_row(p.constraints.terminal, d, state, input);
    } else {
      const Vector prev =
        coin(rng, spec.prev_input_row_probability) ? Vector(0.5 * randn(rng, nu, 1)) : Vector(Vector::Zero(nu));
      append_row(p.constraints.stages[static_cast<std::size_t>(stage)], d, state, prev, input);
    }
  }
  inst.theta = slater_theta(rng, p, spec.theta_scale);
  return inst;
}

RandomInstance infeasible_instance(Rng & rng, int rows)
{
  if (rows < 2) { throw std::invalid_argument("infeasible_instance: need at least 2 rows"); }
  const Index nx = 1, nu = 2;
  const int N    = 2;
  RandomInstance inst;
  ProblemDefinition & p = inst.problem;
  p.horizon             = N;
  p.prediction_model.A  = Matrix::Constant(1, 1, uniform(rng, -0.9, 0.9));
  p.prediction_model.B  = randn(rng, nx, nu);
  p.weights             = random_weights(rng, N, nx, nu);
  p.constraints         = empty_constraints(N, nx, nu);

  // u0_1 <= 1 - x and u0_1 >= x - 1: empty for x > 1.
  const Vector e1 = Vector::Unit(nu, 0);
  append_row(p.constraints.stages[0], 1.0, Vector::Ones(nx), Vector::Zero(nu), e1);
  append_row(p.constraints.stages[0], 1.0, Vector::Ones(nx), Vector::Zero(nu), -e1);
  for (int r = 2; r < rows; ++r) {
    const int stage = uniform_int(rng, 0, N - 1);
    append_row(p.constraints.stages[static_cast<std::size_t>(stage)], uniform(rng, 0.2, 1.5), Vector::Zero(nx),
               Vector::Zero(nu), randn(rng, nu, 1));
  }
  inst.theta.resize(nx + nu);
  inst.theta << uniform(rng, 3.0, 5.0), randn(rng, nu, 1);
  return inst;
}

DegenerateInstance degenerate_instance(Rng & rng, const RandomProblemSpec & spec)
{
  for (int attempt = 0; attempt < 1000; ++attempt) {
    RandomInstance inst = random_instance(rng, spec);
    const LiftedQP qp   = LiftedQP::build(inst.problem);
    if (qp.constraints().p_tilde() + 3 > oracle::kMaxEnumerate) { continue; }
    const Tolerances tol = Tolerances::defaults_for(qp);
    const SolveResult base = oracle::enumerate(qp, inst.theta, tol);
    if (base.status != SolveStatus::Optimal || base.active_set.empty()) { continue; }

    // Active rows grouped by stage.
    std::map<int, std::vector<Index>> by_stage;
    for (int k : base.active_set.indices()) {
      const auto & row = qp.constraints().rows[static_cast<std::size_t>(k)];
      by_stage[row.stage].push_back(row.local_row);
    }
    auto it = by_stage.begin();
    std::advance(it, uniform_int(rng, 0, static_cast<int>(by_stage.size()) - 1));
    const int stage             = it->first;
    const std::vector<Index> & local = it->second;
    const int N                 = inst.problem.horizon;
    auto & c                    = inst.problem.constraints;

    const int extra = uniform_int(rng, 1, 3);
    for (int e = 0; e < extra; ++e) {
      const Index i = local[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(local.size()) - 1))];
      const Index j = local[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(local.size()) - 1))];
      const double a = uniform(rng, 0.3, 1.5);
      const double b = (i == j) ? 0.0 : uniform(rng, 0.3, 1.5);
      if (stage == N) {
        auto & t = c.terminal;
        append_terminal_row(t, a * t.d(i) + b * t.d(j), a * t.state.row(i).transpose() + b * t.state.row(j).transpose(),
                            a * t.input.row(i).transpose() + b * t.input.row(j).transpose());
      } else {
        auto & s = c.stages[static_cast<std::size_t>(stage)];
        append_row(s, a * s.d(i) + b * s.d(j), a * s.state.row(i).transpose() + b * s.state.row(j).transpose(),
                   a * s.prev_input.row(i).transpose() + b * s.prev_input.row(j).transpose(),
                   a * s.input.row(i).transpose() + b * s.input.row(j).transpose());
      }
    }

    const LiftedQP qp2 = LiftedQP::build(inst.problem);
    const auto & rows2 = qp2.constraints().rows;
    const Index original = stage == N ? c.terminal.rows() - extra : c.stages[static_cast<std::size_t>(stage)].rows() - extra;
    ActiveSet degenerate(static_cast<int>(qp2.constraints().p_tilde()));
    for (int k : base.active_set.indices()) {
      const auto & row = qp.constraints().rows[static_cast<std::size_t>(k)];
      for (std::size_t m = 0; m < rows2.size(); ++m) {
        if (rows2[m].stage == row.stage && rows2[m].local_row == row.local_row) { degenerate.set(static_cast<int>(m)); }
      }
    }
    for (std::size_t m = 0; m < rows2.size(); ++m) {
      if (rows2[m].stage == stage && rows2[m].local_row >= original) { degenerate.set(static_cast<int>(m)); }
    }
    if (satisfies_licq(qp2, degenerate)) { continue; }

    DegenerateInstance out;
    out.instance       = std::move(inst);
    out.degenerate_set = degenerate;
    out.appended_rows  = extra;
    return out;
  }
  throw std::runtime_error("degenerate_instance: no suitable instance after 1000 attempts");
}

}  // namespace rfempc
