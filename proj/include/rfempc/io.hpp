#pragma once

/**
 * @file
 * @brief Problem JSON, matrix dumps and CSV logs.
 *
 * Problem document:
 *
 *   { "horizon": N,
 *     "prediction_model": {"A": [[..]], "B": [[..]]},
 *     "plant": {...},                              (optional)
 *     "weights": {"Q": [..N], "R": [..N], "M": [..N], "V": [..N+1], "P": [[..]]},
 *     "constraints": {"stages": [{"d", "state", "prev_input", "input"} x N],
 *                     "terminal": {"d", "state", "input"}},   (terminal optional)
 *     "initial_state": [..],                       (optional)
 *     "theta": [..],                               (optional, [x; u_prev])
 *     "input_scale": s, "sampling_period": h,      (optional)
 *     "monitor": {"mean_x1": [..], "mean_x4": [..]} }   (optional)
 *
 * Matrices are row-major nested arrays.
 */

#include "rfempc/sim.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace rfempc::io {

/// Malformed input or unreadable/unwritable file.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct ProblemFile
{
  ProblemDefinition problem;
  std::optional<Vector> initial_state;
  std::optional<Vector> theta;
  std::optional<double> input_scale;
  std::optional<double> sampling_period;
  std::optional<std::pair<Vector, Vector>> monitor;
};

ProblemFile parse_problem(const std::string & json_text);
ProblemFile read_problem(const std::string & path);
std::string to_json(const ProblemFile & f, int indent = 1);
std::string problem_to_json(const ProblemDefinition & p, int indent = 1);
void write_text(const std::string & path, const std::string & text);

/// "rows cols" line, then rows of 17-significant-digit values.
void write_matrix(std::ostream & os, const Matrix & m);
Matrix read_matrix(std::istream & is);

/// Comma or whitespace separated numbers.
Vector parse_vector(const std::string & text);

/// Header comment line notes that J_opt includes the constant term.
void write_step_log(std::ostream & os, const std::vector<StepLog> & steps, bool with_timing);
void write_benchmark(std::ostream & os, const std::vector<BenchmarkRow> & rows);

/// xi grid rows with x1..x4 columns.
void write_profiles(std::ostream & os, const Vector & xi, const Matrix & values);

}  // namespace rfempc::io
