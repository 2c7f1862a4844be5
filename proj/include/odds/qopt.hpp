#pragma once

#include <functional>

#include "odds/linalg.hpp"
#include "odds/random.hpp"

namespace odds {

// Denoising-matrix optimization:
//
//   minimize_Q  ||Q^T X - I||_F^2   subject to  ||Q_{.i}||_2 <= 1 for every column i.
//
// The problem is convex and separable over columns; it is solved by a monotone
// accelerated projected-gradient method started from the column-normalized X.

enum class StepMode { kFixedInverseLipschitz, kBacktracking };

struct QOptConfig {
  int max_iters = 5000;
  /// Stopping threshold on the projected-gradient (gradient mapping) norm.
  /// A value <= 0 selects the default 1e-6 * m.
  double grad_tol = 0.0;
  StepMode step_mode = StepMode::kFixedInverseLipschitz;
  /// Probability of resetting the momentum sequence at an iteration. The
  /// reset schedule is drawn from the seed passed to optimize_q; zero keeps
  /// the run deterministic regardless of seed.
  double restart_probability = 0.0;
};

struct QOptResult {
  DenseMatrix q;
  double objective = 0.0;
  /// Gradient-mapping norm L * ||Q - P(Q - grad/L)||_F at the returned Q.
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// ||Q^T X - I||_F^2.
double qopt_objective(const DenseMatrix& q, const DenseMatrix& x);

/// Gradient of qopt_objective with respect to Q: 2 X (X^T Q - I).
DenseMatrix qopt_gradient(const DenseMatrix& q, const DenseMatrix& x);

/// Euclidean projection onto {Q : every column norm <= 1}.
DenseMatrix project_unit_columns(const DenseMatrix& q);

/// Gradient-mapping norm of Q for step 1/L, with L = 2 ||X||_2^2.
double qopt_projected_gradient_norm(const DenseMatrix& q, const DenseMatrix& x);

/// Called once per iteration with the current reported iterate.
using QOptObserver = std::function<void(int iteration, const DenseMatrix& q)>;

QOptResult optimize_q(const DenseMatrix& x, const QOptConfig& config = {},
                      RngSeed seed = {}, const QOptObserver& observer = {});

}  // namespace odds
