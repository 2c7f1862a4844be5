#include "odds/gdds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/QR>

#include "odds/errors.hpp"
#include "odds/simplex.hpp"

namespace odds {

namespace {

constexpr int kBalanceInterval = 50;
constexpr double kBalanceRatio = 10.0;
constexpr double kLinearizationSlack = 1.01;
constexpr int kRestartCheckInterval = 64;
constexpr double kSufficientDecay = 0.2;
constexpr double kNecessaryDecay = 0.8;
constexpr double kArtificialRestart = 0.36;
constexpr double kPrimalWeightSmoothing = 0.5;

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Primal infeasibility, dual infeasibility and relative gap of (beta, y) for
//   min ||beta||_1  s.t. ||W beta - c||_inf <= lambda
// whose dual is max -c'y - lambda ||y||_1  s.t. ||W'y||_inf <= 1.
double kkt_error(const Eigen::MatrixXd& w, const Eigen::VectorXd& c, double lambda,
                 const Eigen::VectorXd& beta, const Eigen::VectorXd& y) {
  const double pinf = std::max(0.0, inf_norm(w * beta - c) - lambda);
  const double dinf = std::max(0.0, inf_norm(w.transpose() * y) - 1.0);
  const double pobj = beta.cwiseAbs().sum();
  const double dobj = -c.dot(y) - lambda * y.cwiseAbs().sum();
  const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  return std::sqrt(pinf * pinf + dinf * dinf + gap * gap);
}

// Active-set polish: take the support of beta and the rows where the dual is
// nonzero, solve the two reduced KKT systems
//   W_AS beta_S = c_A + lambda sign(y_A),   W_AS' y_A = -sign(beta_S)
// and accept the pair only if it certifies optimality to tolerance.
std::optional<Eigen::VectorXd> polish(const Eigen::MatrixXd& w, const Eigen::VectorXd& c,
                                      double lambda, const Eigen::VectorXd& beta,
                                      const Eigen::VectorXd& y, const SolverConfig& config) {
  const double beta_max = inf_norm(beta), y_max = inf_norm(y);
  if (beta_max == 0.0 || y_max == 0.0) return std::nullopt;
  for (double cut : {1e-2, 1e-4, 1e-6, 1e-8}) {
    std::vector<Eigen::Index> support, active;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      if (std::abs(beta[j]) > cut * beta_max) support.push_back(j);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (std::abs(y[i]) > cut * y_max) active.push_back(i);
    const auto na = static_cast<Eigen::Index>(active.size());
    const auto ns = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd sub(na, ns);
    Eigen::VectorXd rhs(na), sign_beta(ns);
    for (Eigen::Index a = 0; a < na; ++a) {
      for (Eigen::Index k = 0; k < ns; ++k) sub(a, k) = w(active[a], support[k]);
      rhs[a] = c[active[a]] + lambda * (y[active[a]] > 0.0 ? 1.0 : -1.0);
    }
    const Eigen::VectorXd beta_s = sub.completeOrthogonalDecomposition().solve(rhs);
    for (Eigen::Index k = 0; k < ns; ++k)
      sign_beta[k] = (beta_s[k] != 0.0 ? beta_s[k] : beta[support[k]]) > 0.0 ? 1.0 : -1.0;
    const Eigen::VectorXd y_a = sub.transpose().completeOrthogonalDecomposition().solve(-sign_beta);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(beta.size());
    Eigen::VectorXd d = Eigen::VectorXd::Zero(y.size());
    for (Eigen::Index k = 0; k < ns; ++k) b[support[k]] = beta_s[k];
    for (Eigen::Index a = 0; a < na; ++a) d[active[a]] = y_a[a];
    if (!b.allFinite() || !d.allFinite()) continue;
    const double violation = std::max(0.0, inf_norm(w * b - c) - lambda);
    const double dual_norm = inf_norm(w.transpose() * d);
    if (violation > config.primal_tol || dual_norm > 1.0 + config.dual_tol) continue;
    // Scaling onto the dual feasible set keeps weak duality exact.
    if (dual_norm > 1.0) d /= dual_norm;
    const double pobj = b.cwiseAbs().sum();
    const double dobj = -c.dot(d) - lambda * d.cwiseAbs().sum();
    if (pobj - dobj <= std::max(config.primal_tol, config.dual_tol) * (1.0 + pobj)) return b;
  }
  return std::nullopt;
}

}  // namespace

void validate(const RecoveryProblem& p) {
  require_valid(p.x, "RecoveryProblem.x");
  require_valid(p.q, "RecoveryProblem.q");
  require_valid(p.y, "RecoveryProblem.y");
  if (p.q.rows() != p.x.rows() || p.q.cols() != p.x.cols())
    throw std::invalid_argument("RecoveryProblem: x and q must share dimensions");
  if (p.y.size() != p.x.rows())
    throw std::invalid_argument("RecoveryProblem: y length must equal rows of x");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda))
    throw std::invalid_argument("RecoveryProblem: lambda must be finite and >= 0");
}

Solution evaluate(const RecoveryProblem& p, RealVector beta) {
  Solution s;
  const RealVector correlated = p.q.transpose() * (p.x * beta - p.y);
  s.constraint_violation = std::max(0.0, inf_norm(correlated) - p.lambda);
  s.objective = beta.cwiseAbs().sum();
  s.beta = std::move(beta);
  return s;
}

RealVector soft_threshold(const RealVector& v, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("soft_threshold: t must be >= 0");
  return v.unaryExpr([t](double a) {
    const double mag = std::abs(a) - t;
    return mag > 0.0 ? std::copysign(mag, a) : 0.0;
  });
}

RealVector project_linf_ball(const RealVector& z, double r) {
  if (!(r >= 0.0)) throw std::invalid_argument("project_linf_ball: r must be >= 0");
  return z.cwiseMax(-r).cwiseMin(r);
}

Solution solve_gdds(const RecoveryProblem& problem, const SolverConfig& config) {
  validate(problem);
  if (config.max_iters < 1 || !(config.primal_tol > 0.0) || !(config.dual_tol > 0.0) ||
      !(config.penalty > 0.0))
    throw std::invalid_argument("solve_gdds: invalid solver configuration");

  const Eigen::Index m = problem.x.cols();
  const Eigen::MatrixXd w = problem.q.transpose() * problem.x;
  const Eigen::VectorXd c = problem.q.transpose() * problem.y;
  const double lambda = problem.lambda;

  // beta = 0 is feasible and l1-minimal.
  if (lambda >= inf_norm(c)) {
    Solution s = evaluate(problem, RealVector::Zero(m));
    s.converged = true;
    return s;
  }

  const double w_sq = lipschitz_sq_bound(w);
  if (w_sq == 0.0) {
    // W = 0: the constraint reduces to ||c||_inf <= lambda, which failed above.
    Solution s = evaluate(problem, RealVector::Zero(m));
    s.primal_residual = inf_norm(c) - lambda;
    s.converged = false;
    return s;
  }

  // With restarts the penalty follows the primal weight, which starts at
  // config.penalty in units where the operator norm of W is one.
  double rho = config.restarts ? config.penalty / std::sqrt(w_sq) : config.penalty;
  double tau = kLinearizationSlack * w_sq * rho;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd w_beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd z = project_linf_ball(-c, lambda);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);  // scaled dual

  double primal = inf_norm(w_beta - c - z);
  double dual = std::numeric_limits<double>::infinity();
  int it = 0;
  bool converged = false;

  // Running averages since the last restart, with the dual kept unscaled.
  Eigen::VectorXd sum_beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sum_y = Eigen::VectorXd::Zero(w.rows());
  int averaged = 0;
  int since_restart = 0;
  double restart_error = std::numeric_limits<double>::infinity();
  double last_check_error = std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta_at_restart = beta;
  Eigen::VectorXd y_at_restart = Eigen::VectorXd::Zero(w.rows());

  while (it < config.max_iters) {
    ++it;
    const Eigen::VectorXd grad = w.transpose() * (w_beta - c - z + u);
    Eigen::VectorXd beta_next = soft_threshold(beta - (rho / tau) * grad, 1.0 / tau);
    Eigen::VectorXd w_beta_next = w * beta_next;
    Eigen::VectorXd z_next = project_linf_ball(w_beta_next - c + u, lambda);
    const Eigen::VectorXd r = w_beta_next - c - z_next;
    u += r;
    primal = inf_norm(r);
    if (!std::isfinite(primal) || !beta_next.allFinite())
      throw NumericError("solve_gdds: non-finite iterate");

    const bool balance_now = !config.restarts && it % kBalanceInterval == 0;
    if (primal <= config.primal_tol || balance_now) {
      // Stationarity defect of the beta-step with respect to the updated dual.
      const Eigen::VectorXd dz = (w_beta_next - w_beta) - (z_next - z);
      dual = inf_norm(rho * (w.transpose() * dz) - tau * (beta_next - beta));
    }

    beta.swap(beta_next);
    w_beta.swap(w_beta_next);
    z.swap(z_next);

    if (primal <= config.primal_tol && dual <= config.dual_tol) {
      converged = true;
      break;
    }
    if (balance_now) {
      if (primal > kBalanceRatio * dual) {
        rho *= 2.0;
        u /= 2.0;
      } else if (dual > kBalanceRatio * primal) {
        rho /= 2.0;
        u *= 2.0;
      }
      tau = kLinearizationSlack * w_sq * rho;
    }

    if (!config.restarts) continue;
    sum_beta += beta;
    sum_y += rho * u;
    ++averaged;
    ++since_restart;
    if (it % kRestartCheckInterval != 0) continue;
    const Eigen::VectorXd avg_beta = sum_beta / averaged;
    const Eigen::VectorXd avg_y = sum_y / averaged;
    const double err_current = kkt_error(w, c, lambda, beta, rho * u);
    const double err_average = kkt_error(w, c, lambda, avg_beta, avg_y);
    const bool use_average = err_average < err_current;
    const double err = use_average ? err_average : err_current;
    const bool restart = err <= kSufficientDecay * restart_error ||
                         (err <= kNecessaryDecay * restart_error && err > last_check_error) ||
                         since_restart >= kArtificialRestart * it;
    last_check_error = err;
    if (!restart) continue;
    if (use_average) {
      beta = avg_beta;
      u = avg_y / rho;
      w_beta = w * beta;
    }
    // Rebalance the primal weight from the distance travelled since the last restart.
    const double moved_beta = (beta - beta_at_restart).norm();
    const double moved_y = (rho * u - y_at_restart).norm();
    if (moved_beta > 1e-10 && moved_y > 1e-10) {
      const double weight = rho * std::sqrt(w_sq);
      const double next = std::exp(kPrimalWeightSmoothing * std::log(moved_y / moved_beta) +
                                   (1.0 - kPrimalWeightSmoothing) * std::log(weight));
      const double y_now = rho;
      rho = next / std::sqrt(w_sq);
      u *= y_now / rho;
      tau = kLinearizationSlack * w_sq * rho;
    }
    beta_at_restart = beta;
    y_at_restart = rho * u;
    // Zero residual so the next linearization carries no extrapolation.
    z = w_beta - c;
    restart_error = err;
    sum_beta.setZero();
    sum_y.setZero();
    averaged = 0;
    since_restart = 0;
  }

  if (!converged) {
    if (auto polished = polish(w, c, lambda, beta, rho * u, config)) {
      beta = *polished;
      converged = true;
      primal = std::max(0.0, inf_norm(w * beta - c) - lambda);
      dual = 0.0;
    }
  }

  Solution s = evaluate(problem, beta);
  s.iterations = it;
  s.converged = converged;
  s.primal_residual = primal;
  s.dual_residual = dual;
  return s;
}

Solution solve_ds(const DenseMatrix& x, const RealVector& y, double lambda,
                  const SolverConfig& config) {
  return solve_gdds(RecoveryProblem{x, y, lambda, x}, config);
}

Solution lp_oracle(const RecoveryProblem& problem) {
  validate(problem);
  const Eigen::Index m = problem.x.cols();
  if (m > kLpOracleMaxColumns)
    throw std::invalid_argument("lp_oracle: too many columns for dense simplex");

  const Eigen::MatrixXd w = problem.q.transpose() * problem.x;
  const Eigen::VectorXd c = problem.q.transpose() * problem.y;

  // Variables [u; v], beta = u - v.
  //    W u - W v <= c + lambda
  //   -W u + W v <= lambda - c
  LinearProgram lp;
  lp.c = Eigen::VectorXd::Ones(2 * m);
  lp.a_ub.resize(2 * m, 2 * m);
  lp.a_ub << w, -w, -w, w;
  lp.b_ub.resize(2 * m);
  lp.b_ub << (c.array() + problem.lambda).matrix(), (problem.lambda - c.array()).matrix();
  lp.a_eq.resize(0, 2 * m);
  lp.b_eq.resize(0);

  const LpSolution sol = solve_lp(lp);
  Solution s = evaluate(problem, sol.x.head(m) - sol.x.tail(m));
  s.iterations = sol.pivots;
  s.converged = true;
  return s;
}

}  // namespace odds
