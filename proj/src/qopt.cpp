#include "odds/qopt.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "odds/errors.hpp"

namespace odds {

namespace {

void require_same_shape(const DenseMatrix& q, const DenseMatrix& x, const char* what) {
  if (q.rows() != x.rows() || q.cols() != x.cols())
    throw std::invalid_argument(std::string(what) + ": Q and X must have the same shape");
  if (x.size() == 0) throw std::invalid_argument(std::string(what) + ": empty matrix");
}

template <typename Derived>
void project_columns_inplace(Eigen::MatrixBase<Derived>& z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double norm = z.col(j).norm();
    if (norm > 1.0) z.col(j) /= norm;
  }
}

// The objective in the eigenbasis of G = X X^T = U diag(ev) U^T. With
// Z = U^T Q and B = U^T X the problem reads
//   f(Z) = sum_k ev_k ||Z_k.||^2 - 2 <Z, B> + m,   grad f = 2 (diag(ev) Z - B),
// and column norms are unchanged by the rotation, so projection commutes.
class RotatedProblem {
 public:
  RotatedProblem(const Eigen::VectorXd& ev, const Eigen::MatrixXd& b) : ev_(ev), b_(b) {}

  double objective(const Eigen::MatrixXd& z) const {
    const double quad = (z.array().square().colwise() * ev_.array()).sum();
    const double lin = (z.array() * b_.array()).sum();
    return std::max(0.0, quad - 2.0 * lin + static_cast<double>(b_.cols()));
  }

  Eigen::MatrixXd gradient(const Eigen::MatrixXd& z) const {
    return 2.0 * (ev_.asDiagonal() * z - b_);
  }

 private:
  const Eigen::VectorXd& ev_;
  const Eigen::MatrixXd& b_;
};

}  // namespace

double qopt_objective(const DenseMatrix& q, const DenseMatrix& x) {
  require_same_shape(q, x, "qopt_objective");
  Eigen::MatrixXd r = q.transpose() * x;
  r.diagonal().array() -= 1.0;
  return r.squaredNorm();
}

DenseMatrix qopt_gradient(const DenseMatrix& q, const DenseMatrix& x) {
  require_same_shape(q, x, "qopt_gradient");
  Eigen::MatrixXd inner = x.transpose() * q;
  inner.diagonal().array() -= 1.0;
  return 2.0 * x * inner;
}

DenseMatrix project_unit_columns(const DenseMatrix& q) {
  if (q.size() == 0) throw std::invalid_argument("project_unit_columns: empty matrix");
  Eigen::MatrixXd out = q;
  project_columns_inplace(out);
  return out;
}

double qopt_projected_gradient_norm(const DenseMatrix& q, const DenseMatrix& x) {
  require_same_shape(q, x, "qopt_projected_gradient_norm");
  const double lipschitz = 2.0 * lipschitz_sq_bound(x);
  if (lipschitz == 0.0) return 0.0;
  const DenseMatrix step = project_unit_columns(q - qopt_gradient(q, x) / lipschitz);
  return lipschitz * (q - step).norm();
}

QOptResult optimize_q(const DenseMatrix& x, const QOptConfig& config, RngSeed seed,
                      const QOptObserver& observer) {
  require_valid(x, "optimize_q");
  if (config.max_iters < 1) throw std::invalid_argument("optimize_q: max_iters must be >= 1");
  if (!(config.restart_probability >= 0.0 && config.restart_probability <= 1.0))
    throw std::invalid_argument("optimize_q: restart_probability must lie in [0, 1]");
  const auto m = x.cols();
  const double tol = config.grad_tol > 0.0 ? config.grad_tol : 1e-6 * static_cast<double>(m);

  const Eigen::MatrixXd gram = x * x.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericError("optimize_q: eigendecomposition failed");
  const Eigen::MatrixXd& basis = eig.eigenvectors();
  const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd b = basis.transpose() * x;
  const RotatedProblem problem(ev, b);

  // Lipschitz constant of the gradient: 2 * lambda_max(X X^T) = 2 ||X||_2^2.
  const double lipschitz = 2.0 * ev.maxCoeff();

  const DenseMatrix q0 = normalize_columns(x);
  Eigen::MatrixXd current = basis.transpose() * q0;
  double f_current = problem.objective(current);

  const auto residual_at = [&](const Eigen::MatrixXd& z) {
    if (lipschitz == 0.0) return 0.0;
    Eigen::MatrixXd step = z - problem.gradient(z) / lipschitz;
    project_columns_inplace(step);
    return lipschitz * (z - step).norm();
  };

  Rng rng(seed);
  Eigen::MatrixXd extrapolated = current;
  double momentum = 1.0;
  double step_lipschitz = config.step_mode == StepMode::kBacktracking
                              ? std::max(lipschitz * 1e-3, 1e-300)
                              : lipschitz;
  double residual = residual_at(current);
  bool converged = residual <= tol;
  int iterations = 0;

  while (!converged && iterations < config.max_iters) {
    ++iterations;
    const Eigen::MatrixXd grad = problem.gradient(extrapolated);
    Eigen::MatrixXd candidate;
    if (config.step_mode == StepMode::kFixedInverseLipschitz) {
      candidate = extrapolated - grad / step_lipschitz;
      project_columns_inplace(candidate);
    } else {
      const double f_y = problem.objective(extrapolated);
      while (true) {
        candidate = extrapolated - grad / step_lipschitz;
        project_columns_inplace(candidate);
        const Eigen::MatrixXd diff = candidate - extrapolated;
        const double model = f_y + (grad.array() * diff.array()).sum() +
                             0.5 * step_lipschitz * diff.squaredNorm();
        if (problem.objective(candidate) <= model * (1.0 + 1e-12) + 1e-300) break;
        step_lipschitz *= 2.0;
        if (!std::isfinite(step_lipschitz) || step_lipschitz > 1e300)
          throw ConvergenceError("optimize_q: backtracking step size underflow");
      }
    }
    const double f_candidate = problem.objective(candidate);
    if (!std::isfinite(f_candidate)) throw NumericError("optimize_q: non-finite objective");

    // Monotone variant: the reported iterate only moves on descent.
    const bool accept = f_candidate <= f_current;
    const Eigen::MatrixXd previous = current;
    if (accept) {
      current = candidate;
      f_current = f_candidate;
    }
    double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    if (config.restart_probability > 0.0 && rng.uniform() < config.restart_probability) {
      next_momentum = 1.0;
      extrapolated = current;
    } else {
      extrapolated = current + (momentum / next_momentum) * (candidate - current) +
                     ((momentum - 1.0) / next_momentum) * (current - previous);
    }
    momentum = next_momentum;

    if (observer) observer(iterations, basis * current);
    residual = residual_at(current);
    converged = residual <= tol;
  }

  QOptResult result;
  result.q = basis * current;
  project_columns_inplace(result.q);  // rotation round-off can exceed 1 by an ulp
  result.objective = qopt_objective(result.q, x);
  const double f0 = qopt_objective(q0, x);
  if (result.objective > f0) {
    result.q = q0;
    result.objective = f0;
  }
  result.residual = lipschitz == 0.0 ? 0.0 : [&] {
    const DenseMatrix step = project_unit_columns(result.q - qopt_gradient(result.q, x) / lipschitz);
    return lipschitz * (result.q - step).norm();
  }();
  result.iterations = iterations;
  result.converged = converged;
  return result;
}

}  // namespace odds
