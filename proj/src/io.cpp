#include "rfempc/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rfempc::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string & where, const std::string & what)
{
  throw IoError(where + ": " + what);
}

const json & member(const json & j, const char * key, const std::string & where)
{
  if (!j.is_object() || !j.contains(key)) { fail(where, std::string("missing key \"") + key + "\""); }
  return j.at(key);
}

// cols is used for matrices with zero rows, which JSON cannot express.
Matrix to_matrix(const json & j, const std::string & where, Index cols = -1)
{
  if (!j.is_array()) { fail(where, "expected an array of rows"); }
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) { return Matrix(0, std::max<Index>(cols, 0)); }
  if (!j[0].is_array()) { fail(where, "expected nested arrays"); }
  const Index c = static_cast<Index>(j[0].size());
  Matrix m(rows, c);
  for (Index r = 0; r < rows; ++r) {
    const json & row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) { fail(where, "ragged rows"); }
    for (Index k = 0; k < c; ++k) {
      const json & v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) { fail(where, "non-numeric entry"); }
      m(r, k) = v.get<double>();
    }
  }
  return m;
}

Vector to_vector(const json & j, const std::string & where)
{
  if (!j.is_array()) { fail(where, "expected an array"); }
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) { fail(where, "non-numeric entry"); }
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

std::vector<Matrix> to_matrices(const json & j, const std::string & where)
{
  if (!j.is_array()) { fail(where, "expected an array of matrices"); }
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < j.size(); ++k) { out.push_back(to_matrix(j[k], where + "[" + std::to_string(k) + "]")); }
  return out;
}

json from_matrix(const Matrix & m)
{
  json j = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) { row.push_back(m(r, c)); }
    j.push_back(std::move(row));
  }
  return j;
}

json from_vector(const Vector & v)
{
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) { j.push_back(v(i)); }
  return j;
}

json from_matrices(const std::vector<Matrix> & ms)
{
  json j = json::array();
  for (const auto & m : ms) { j.push_back(from_matrix(m)); }
  return j;
}

PlantModel to_model(const json & j, const std::string & where)
{
  PlantModel m;
  m.A = to_matrix(member(j, "A", where), where + ".A");
  m.B = to_matrix(member(j, "B", where), where + ".B");
  return m;
}

}  // namespace

ProblemFile parse_problem(const std::string & json_text)
{
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error & e) {
    fail("problem", e.what());
  }

  ProblemFile out;
  ProblemDefinition & p = out.problem;
  const json & horizon  = member(doc, "horizon", "problem");
  if (!horizon.is_number_integer()) { fail("problem", "horizon must be an integer"); }
  p.horizon          = horizon.get<int>();
  p.prediction_model = to_model(member(doc, "prediction_model", "problem"), "prediction_model");
  if (doc.contains("plant") && !doc["plant"].is_null()) { p.plant = to_model(doc["plant"], "plant"); }
  const Index nx = p.state_dim(), nu = p.input_dim();

  const json & w = member(doc, "weights", "problem");
  p.weights.Q    = to_matrices(member(w, "Q", "weights"), "weights.Q");
  p.weights.R    = to_matrices(member(w, "R", "weights"), "weights.R");
  p.weights.M    = to_matrices(member(w, "M", "weights"), "weights.M");
  p.weights.V    = to_matrices(member(w, "V", "weights"), "weights.V");
  p.weights.P    = to_matrix(member(w, "P", "weights"), "weights.P");

  const json & c      = member(doc, "constraints", "problem");
  const json & stages = member(c, "stages", "constraints");
  if (!stages.is_array()) { fail("constraints.stages", "expected an array"); }
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const std::string where = "constraints.stages[" + std::to_string(k) + "]";
    StageConstraint s;
    s.d          = to_vector(member(stages[k], "d", where), where + ".d");
    s.state      = to_matrix(member(stages[k], "state", where), where + ".state", nx);
    s.prev_input = to_matrix(member(stages[k], "prev_input", where), where + ".prev_input", nu);
    s.input      = to_matrix(member(stages[k], "input", where), where + ".input", nu);
    p.constraints.stages.push_back(std::move(s));
  }
  if (c.contains("terminal") && !c["terminal"].is_null()) {
    const json & t = c["terminal"];
    p.constraints.terminal.d     = to_vector(member(t, "d", "terminal"), "constraints.terminal.d");
    p.constraints.terminal.state = to_matrix(member(t, "state", "terminal"), "constraints.terminal.state", nx);
    p.constraints.terminal.input = to_matrix(member(t, "input", "terminal"), "constraints.terminal.input", nu);
  } else {
    p.constraints.terminal = TerminalConstraint{Vector(0), Matrix(0, nx), Matrix(0, nu)};
  }
  if (doc.contains("initial_state")) { out.initial_state = to_vector(doc["initial_state"], "initial_state"); }
  if (doc.contains("theta")) { out.theta = to_vector(doc["theta"], "theta"); }
  if (doc.contains("input_scale")) {
    if (!doc["input_scale"].is_number()) { fail("input_scale", "expected a number"); }
    out.input_scale = doc["input_scale"].get<double>();
  }
  if (doc.contains("sampling_period")) {
    if (!doc["sampling_period"].is_number()) { fail("sampling_period", "expected a number"); }
    out.sampling_period = doc["sampling_period"].get<double>();
  }
  if (doc.contains("monitor")) {
    const json & m = doc["monitor"];
    out.monitor    = std::make_pair(to_vector(member(m, "mean_x1", "monitor"), "monitor.mean_x1"),
                                    to_vector(member(m, "mean_x4", "monitor"), "monitor.mean_x4"));
  }
  return out;
}

ProblemFile read_problem(const std::string & path)
{
  std::ifstream in(path);
  if (!in) { fail(path, "cannot open"); }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

std::string to_json(const ProblemFile & f, int indent)
{
  const ProblemDefinition & p = f.problem;
  json doc;
  doc["horizon"]          = p.horizon;
  doc["prediction_model"] = {{"A", from_matrix(p.prediction_model.A)}, {"B", from_matrix(p.prediction_model.B)}};
  if (p.plant) { doc["plant"] = {{"A", from_matrix(p.plant->A)}, {"B", from_matrix(p.plant->B)}}; }
  doc["weights"] = {{"Q", from_matrices(p.weights.Q)}, {"R", from_matrices(p.weights.R)},
                    {"M", from_matrices(p.weights.M)}, {"V", from_matrices(p.weights.V)},
                    {"P", from_matrix(p.weights.P)}};
  json stages = json::array();
  for (const auto & s : p.constraints.stages) {
    stages.push_back({{"d", from_vector(s.d)},
                      {"state", from_matrix(s.state)},
                      {"prev_input", from_matrix(s.prev_input)},
                      {"input", from_matrix(s.input)}});
  }
  const auto & t     = p.constraints.terminal;
  doc["constraints"] = {{"stages", stages},
                        {"terminal", {{"d", from_vector(t.d)}, {"state", from_matrix(t.state)}, {"input", from_matrix(t.input)}}}};
  if (f.initial_state) { doc["initial_state"] = from_vector(*f.initial_state); }
  if (f.theta) { doc["theta"] = from_vector(*f.theta); }
  if (f.input_scale) { doc["input_scale"] = *f.input_scale; }
  if (f.sampling_period) { doc["sampling_period"] = *f.sampling_period; }
  if (f.monitor) { doc["monitor"] = {{"mean_x1", from_vector(f.monitor->first)}, {"mean_x4", from_vector(f.monitor->second)}}; }
  return doc.dump(indent) + "\n";
}

std::string problem_to_json(const ProblemDefinition & p, int indent)
{
  ProblemFile f;
  f.problem = p;
  return to_json(f, indent);
}

void write_text(const std::string & path, const std::string & text)
{
  std::ofstream out(path);
  if (!out) { fail(path, "cannot open for writing"); }
  out << text;
  if (!out) { fail(path, "write failed"); }
}

void write_matrix(std::ostream & os, const Matrix & m)
{
  os << m.rows() << ' ' << m.cols() << '\n';
  os << std::setprecision(17);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) { os << (c ? " " : "") << m(r, c); }
    os << '\n';
  }
}

Matrix read_matrix(std::istream & is)
{
  Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) { fail("matrix", "bad header"); }
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (!(is >> m(r, c))) { fail("matrix", "truncated data"); }
    }
  }
  return m;
}

Vector parse_vector(const std::string & text)
{
  std::string s = text;
  for (char & ch : s) {
    if (ch == ',' || ch == '[' || ch == ']' || ch == ';') { ch = ' '; }
  }
  std::istringstream is(s);
  std::vector<double> vals;
  std::string tok;
  while (is >> tok) {
    std::size_t used = 0;
    double v         = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception &) {
      fail("vector", "bad number \"" + tok + "\"");
    }
    if (used != tok.size()) { fail("vector", "bad number \"" + tok + "\""); }
    vals.push_back(v);
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

void write_step_log(std::ostream & os, const std::vector<StepLog> & steps, bool with_timing)
{
  const Index nu = steps.empty() ? 0 : steps.front().u_physical.size();
  os << "# J_opt is the lifted optimal cost including the constant term; NaN marks steps without a certified solution\n";
  os << "step,time";
  for (Index i = 0; i < nu; ++i) { os << ",u" << (i + 1) << "_physical"; }
  os << ",J_opt,cumulative,mean_x1,mean_x4,active_set,candidates_visited,licq_failures,kkt_solves,wall_time_s,status,"
        "state_norm\n";
  os << std::setprecision(12);
  for (const auto & s : steps) {
    os << s.step << ',' << s.time;
    for (Index i = 0; i < s.u_physical.size(); ++i) { os << ',' << s.u_physical(i); }
    os << ',' << s.J_opt << ',' << s.cumulative << ',' << s.mean_x1 << ',' << s.mean_x4 << ',' << s.active_set << ','
       << s.candidates_visited << ',' << s.licq_failures << ',' << s.kkt_solves << ','
       << (with_timing ? s.wall_time_s : 0.0) << ',' << to_string(s.status) << ',' << s.state_norm << '\n';
  }
}

void write_benchmark(std::ostream & os, const std::vector<BenchmarkRow> & rows)
{
  os << "N,algorithm,runtime_s,J_d,p_tilde,log2_candidates\n";
  for (const auto & r : rows) {
    os << r.N << ',' << to_string(r.algorithm) << ',' << std::setprecision(6) << r.runtime_s << ','
       << std::setprecision(10) << r.J_d << ',' << r.p_tilde << ',' << r.log2_candidates << '\n';
  }
}

void write_profiles(std::ostream & os, const Vector & xi, const Matrix & values)
{
  if (values.rows() != xi.size() || values.cols() != 4) { throw DimensionError("write_profiles: expected |xi| x 4 values"); }
  os << "xi,x1,x2,x3,x4\n" << std::setprecision(12);
  for (Index i = 0; i < xi.size(); ++i) {
    os << xi(i);
    for (int l = 0; l < 4; ++l) { os << ',' << values(i, l); }
    os << '\n';
  }
}

}  // namespace rfempc::io
