#pragma once

#include <iosfwd>
#include <string>

#include "stlgame/dynamics.hpp"

namespace stlgame::dyn {

/// Parse a scenario from its JSON text. See the bundled scenario files for
/// the schema; matrices are row-major arrays of arrays, c defaults to zero.
/// Throws InputError (with the offending field) on malformed input.
Scenario parse_scenario(const std::string& json_text);

/// Read and parse a scenario file.
Scenario load_scenario(const std::string& path);

/// Trajectory CSV. Header: t,x_0..x_{n-1},uL_0..,uF_0..; one row per
/// t = 0..N; input cells are empty on the final row (N states bracket N-1
/// input steps).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Trace read back from CSV. Input columns are optional: a bare state
/// table (t plus x_* columns) is accepted for monitoring.
struct CsvTrace {
  stl::Trace states;
  std::vector<Eigen::VectorXd> u_L;  // empty if the file has no uL columns
  std::vector<Eigen::VectorXd> u_F;
};

CsvTrace read_trace_csv(std::istream& in);

}  // namespace stlgame::dyn
