#pragma once

#include <Eigen/Core>

namespace odds {

/// minimize c^T x  subject to  a_ub x <= b_ub,  a_eq x = b_eq,  x >= 0.
/// Either constraint block may have zero rows (its column count must still
/// match c).
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
};

struct LpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  int pivots = 0;
};

/// Dense two-phase tableau simplex with Bland's rule. The returned vertex is
/// re-solved from its basis by LU for accuracy. Throws InfeasibleError on an
/// empty feasible set, std::domain_error on an unbounded objective, and
/// ConvergenceError if the pivot cap is reached.
LpSolution solve_lp(const LinearProgram& lp, double pivot_tol = 1e-9);

}  // namespace odds
