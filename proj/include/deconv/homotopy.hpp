#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "deconv/design.hpp"

#include "json.hpp"

namespace deconv {

enum class SolverKind { lasso, dantzig };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& s);

// One maximal interval (lambda_low, lambda_high) on which the solution's
// support and sign pattern are constant. solution_high is the full-length
// solution at the segment entry (lambda_high); the solution is affine in
// lambda inside the segment.
struct PathSegment {
  double lambda_high = 0.0;
  double lambda_low = 0.0;
  std::vector<Index> support;  // sorted
  std::vector<int> signs;      // aligned with support, entries +/-1
  VectorXd solution_high;
};

struct PathDiagnostics {
  bool rank_limited = false;
  Index tie_events = 0;       // simultaneous activation ties (smallest index took it)
  Index dual_tie_events = 0;  // dantzig dual-step ties
  Index factor_rebuilds = 0;
  Index iterations = 0;
};

// Full regularization path: transition points lambda0 > lambda_1 > ... >
// terminal_lambda with the piecewise description in `segments` (ordered by
// decreasing lambda, contiguous). For lambda > lambda0 the solution is zero.
// terminal_lambda is 0 unless the active set hit the rank of the design,
// in which case the path stops early and terminal_lambda > 0.
struct HomotopyPath {
  SolverKind solver_kind = SolverKind::lasso;
  double lambda0 = 0.0;
  double terminal_lambda = 0.0;
  VectorXd terminal_solution;
  std::vector<PathSegment> segments;
  PathDiagnostics diagnostics;

  Index length() const { return terminal_solution.size(); }
};

// Piecewise-linear path of minimizers of  lambda*||s||_1 + ||y - H s||_2^2,
// computed by the least-angle homotopy with coefficient-drop handling.
// Entry point lambda0 = 2*||H^T y||_inf.
HomotopyPath lasso_path(const LinearDesign& design, const VectorXd& y);

// Critical-value path for  min ||s||_1  s.t.  ||H^T(y - H s)||_inf <= lambda,
// computed by primal-dual homotopy. Every primal or dual support change is a
// segment boundary. Entry point lambda0 = ||H^T y||_inf.
HomotopyPath dantzig_path(const LinearDesign& design, const VectorXd& y);

// Solution at an arbitrary lambda: zero above lambda0, linear interpolation
// inside the containing segment, exact at transition points. Throws
// OutOfRangeError below terminal_lambda on a rank-limited path.
VectorXd solution_at(const HomotopyPath& path, double lambda);

// Export schema used by the CLI `path` subcommand and by test fixtures.
nlohmann::json path_to_json(const HomotopyPath& path);

// Structural mirror of the JSON export (solution vectors are not exported).
struct PathExport {
  std::string solver_kind;
  double lambda0 = 0.0;
  double terminal_lambda = 0.0;
  struct Segment {
    double lambda_high = 0.0;
    double lambda_low = 0.0;
    std::vector<Index> support;
    std::vector<int> signs;
  };
  std::vector<Segment> segments;
};

PathExport path_export_from_json(const nlohmann::json& j);

}  // namespace deconv
