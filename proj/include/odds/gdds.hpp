#pragma once

#include "odds/linalg.hpp"

namespace odds {

// Generalized denoising Dantzig selector:
//
//   minimize_beta ||beta||_1   subject to   ||Q^T (X beta - y)||_inf <= lambda.
//
// The standard Dantzig selector is the case Q = X.

struct RecoveryProblem {
  DenseMatrix x;  // n x m design
  RealVector y;   // n observations
  double lambda = 0.0;
  DenseMatrix q;  // n x m denoising matrix
};

/// Throws std::invalid_argument unless shapes agree, entries are finite and lambda >= 0.
void validate(const RecoveryProblem& problem);

struct SolverConfig {
  int max_iters = 50000;
  double primal_tol = 1e-7;
  double dual_tol = 1e-7;
  /// Initial augmented-Lagrangian penalty. Adapted at restarts, or by
  /// residual balancing when restarts are off.
  double penalty = 1.0;
  /// Restart from the running average when its KKT error has dropped enough.
  bool restarts = true;
};

struct Solution {
  RealVector beta;
  double objective = 0.0;             // ||beta||_1
  double constraint_violation = 0.0;  // max(0, ||Q^T (X beta - y)||_inf - lambda)
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Fills objective and constraint_violation for `beta` against `problem`.
Solution evaluate(const RecoveryProblem& problem, RealVector beta);

/// Linearized ADMM on the splitting z = W beta - c with W = Q^T X, c = Q^T y.
/// Non-convergence is reported through Solution::converged; a non-finite
/// iterate throws NumericError.
Solution solve_gdds(const RecoveryProblem& problem, const SolverConfig& config = {});

/// solve_gdds with Q = X.
Solution solve_ds(const DenseMatrix& x, const RealVector& y, double lambda,
                  const SolverConfig& config = {});

inline constexpr Eigen::Index kLpOracleMaxColumns = 200;

/// Exact vertex solution of the LP form (beta = u - v, u, v >= 0) by dense
/// simplex. Throws InfeasibleError when the constraint set is empty and
/// std::invalid_argument when m exceeds kLpOracleMaxColumns.
Solution lp_oracle(const RecoveryProblem& problem);

/// sign(v_i) * max(|v_i| - t, 0).
RealVector soft_threshold(const RealVector& v, double t);

/// Componentwise clamp to [-r, r].
RealVector project_linf_ball(const RealVector& z, double r);

}  // namespace odds
