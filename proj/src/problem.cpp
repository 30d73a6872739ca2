#include "rfempc/problem.hpp"

#include <sstream>

namespace rfempc {

Index StageConstraints::total_rows() const
{
  Index rows = terminal.rows();
  for (const auto & s : stages) { rows += s.rows(); }
  return rows;
}

Vector Parameter::stacked() const
{
  Vector theta(state.size() + previous_input.size());
  theta << state, previous_input;
  return theta;
}

Parameter Parameter::from_stacked(const Vector & theta, Index state_dim)
{
  if (state_dim > theta.size()) { throw DimensionError("Parameter::from_stacked: state_dim exceeds theta size"); }
  return Parameter{theta.head(state_dim), theta.tail(theta.size() - state_dim)};
}

Parameter Parameter::initial(const Vector & x0, Index input_dim) { return Parameter{x0, Vector::Zero(input_dim)}; }

namespace {

std::string indexed(const char * name, std::size_t k)
{
  std::ostringstream os;
  os << name << '[' << k << ']';
  return os.str();
}

class Checker
{
public:
  Checker(ValidationReport & report, double tol) : report_(report), tol_(tol) {}

  bool shape(const Matrix & X, Index rows, Index cols, const std::string & name)
  {
    if (X.rows() != rows || X.cols() != cols) {
      std::ostringstream os;
      os << name << " has shape " << X.rows() << "x" << X.cols() << ", expected " << rows << "x" << cols;
      report_.issues.push_back(os.str());
      return false;
    }
    if (!X.allFinite()) {
      report_.issues.push_back(name + " has non-finite entries");
      return false;
    }
    return true;
  }

  void weight(const Matrix & X, Index n, const std::string & name)
  {
    if (!shape(X, n, n, name)) { return; }
    if ((X - X.transpose()).norm() > tol_ * (1.0 + X.norm())) { report_.issues.push_back(name + " not symmetric"); }
    if (!is_psd(X, tol_)) { report_.issues.push_back(name + " not PSD"); }
  }

  void bound(const Vector & d, const std::string & name)
  {
    if (!d.allFinite()) {
      report_.issues.push_back(name + " has non-finite entries");
    } else if (d.size() > 0 && d.minCoeff() < 0.0) {
      report_.issues.push_back(name + " has negative entries");
    }
  }

private:
  ValidationReport & report_;
  double tol_;
};

void require_inputs(const ProblemDefinition & p, const Vector & inputs, const Parameter & theta)
{
  const Index nx = p.state_dim(), nu = p.input_dim();
  if (inputs.size() != p.horizon * nu) { throw DimensionError("input sequence must have N * n_u entries"); }
  if (theta.state.size() != nx || theta.previous_input.size() != nu) {
    throw DimensionError("parameter dimensions do not match the problem");
  }
  if (static_cast<int>(p.weights.Q.size()) != p.horizon || static_cast<int>(p.weights.V.size()) != p.horizon + 1
      || static_cast<int>(p.constraints.stages.size()) != p.horizon) {
    throw DimensionError("per-stage arrays do not match the horizon");
  }
}

}  // namespace

ValidationReport validate(const ProblemDefinition & p, double tol_psd)
{
  ValidationReport report;
  Checker check(report, tol_psd);

  const Index nx = p.state_dim(), nu = p.input_dim();
  const auto N   = static_cast<std::size_t>(std::max(p.horizon, 0));
  if (p.horizon < 1) { report.issues.push_back("horizon must be >= 1"); }
  check.shape(p.prediction_model.A, nx, nx, "prediction_model.A");
  check.shape(p.prediction_model.B, nx, nu, "prediction_model.B");
  if (p.plant) {
    check.shape(p.plant->A, nx, nx, "plant.A");
    check.shape(p.plant->B, nx, nu, "plant.B");
  }

  const auto & w = p.weights;
  if (w.Q.size() != N) { report.issues.push_back("weights.Q must have N entries"); }
  if (w.R.size() != N) { report.issues.push_back("weights.R must have N entries"); }
  if (w.M.size() != N) { report.issues.push_back("weights.M must have N entries"); }
  if (w.V.size() != N + 1) { report.issues.push_back("weights.V must have N+1 entries"); }
  for (std::size_t k = 0; k < w.Q.size(); ++k) { check.weight(w.Q[k], nx, indexed("Q", k)); }
  for (std::size_t k = 0; k < w.R.size(); ++k) { check.weight(w.R[k], nu, indexed("R", k)); }
  for (std::size_t k = 0; k < w.V.size(); ++k) { check.weight(w.V[k], nu, indexed("V", k)); }
  check.weight(w.P, nx, "P");

  const std::size_t cross = std::min({w.Q.size(), w.R.size(), w.M.size()});
  for (std::size_t k = 0; k < cross; ++k) {
    if (!check.shape(w.M[k], nx, nu, indexed("M", k))) { continue; }
    if (w.Q[k].rows() != nx || w.R[k].rows() != nu || w.Q[k].cols() != nx || w.R[k].cols() != nu) { continue; }
    Matrix block(nx + nu, nx + nu);
    block << w.Q[k], w.M[k], w.M[k].transpose(), w.R[k];
    if (!is_psd(block, tol_psd)) { report.issues.push_back("cross block of stage " + std::to_string(k) + " (Q, M, R) not PSD"); }
  }

  const auto & c = p.constraints;
  if (c.stages.size() != N) { report.issues.push_back("constraints.stages must have N entries"); }
  for (std::size_t k = 0; k < c.stages.size(); ++k) {
    const auto & s = c.stages[k];
    const Index rows = s.rows();
    const std::string name = indexed("constraints.stages", k);
    check.bound(s.d, name + ".d");
    check.shape(s.state, rows, nx, name + ".state");
    check.shape(s.prev_input, rows, nu, name + ".prev_input");
    check.shape(s.input, rows, nu, name + ".input");
  }
  check.bound(c.terminal.d, "constraints.terminal.d");
  check.shape(c.terminal.state, c.terminal.rows(), nx, "constraints.terminal.state");
  check.shape(c.terminal.input, c.terminal.rows(), nu, "constraints.terminal.input");

  return report;
}

Matrix predict_states(const ProblemDefinition & p, const Vector & inputs, const Parameter & theta)
{
  require_inputs(p, inputs, theta);
  const Index nu = p.input_dim();
  const auto & model = p.prediction_model;
  Matrix states(p.state_dim(), p.horizon + 1);
  states.col(0) = theta.state;
  for (int k = 0; k < p.horizon; ++k) {
    states.col(k + 1) = model.A * states.col(k) + model.B * inputs.segment(k * nu, nu);
  }
  return states;
}

double evaluate_cost(const ProblemDefinition & p, const Vector & inputs, const Parameter & theta)
{
  const Matrix x  = predict_states(p, inputs, theta);
  const Index nu  = p.input_dim();
  const auto & w  = p.weights;
  const int N     = p.horizon;
  auto u          = [&](int k) { return k < 0 ? Vector(theta.previous_input) : Vector(inputs.segment(k * nu, nu)); };

  double J = x.col(N).dot(w.P * x.col(N)) + u(N - 1).dot(w.V[N] * u(N - 1));
  for (int k = 0; k < N; ++k) {
    const Vector xk = x.col(k), uk = u(k);
    const Vector du = uk - u(k - 1);
    J += xk.dot(w.Q[k] * xk) + 2.0 * xk.dot(w.M[k] * uk) + uk.dot(w.R[k] * uk) + du.dot(w.V[k] * du);
  }
  return J;
}

AdmissibilityReport check_admissible(const ProblemDefinition & p, const Vector & inputs, const Parameter & theta)
{
  const Matrix x = predict_states(p, inputs, theta);
  const Index nu = p.input_dim();
  const int N    = p.horizon;
  auto u         = [&](int k) { return k < 0 ? Vector(theta.previous_input) : Vector(inputs.segment(k * nu, nu)); };

  AdmissibilityReport report;
  report.slacks.resize(p.constraints.total_rows());
  Index row = 0;
  for (int k = 0; k < N; ++k) {
    const auto & s = p.constraints.stages[k];
    if (s.rows() == 0) { continue; }
    report.slacks.segment(row, s.rows()) = s.d - s.state * x.col(k) - s.prev_input * u(k - 1) - s.input * u(k);
    row += s.rows();
  }
  const auto & t = p.constraints.terminal;
  if (t.rows() > 0) { report.slacks.segment(row, t.rows()) = t.d - t.state * x.col(N) - t.input * u(N - 1); }
  report.admissible = report.slacks.size() == 0 || report.slacks.minCoeff() >= 0.0;
  return report;
}

}  // namespace rfempc
