#include "odds/simplex.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "odds/errors.hpp"

namespace odds {

namespace {

constexpr int kMaxPivots = 200000;
constexpr int kRefactorInterval = 50;

// Tableau with the reduced-cost row stored last; its rhs entry holds -objective.
// The constraint data [A | b] is kept so the tableau can be rebuilt from the
// current basis, which stops round-off from accumulating across pivots.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd a, Eigen::VectorXd b, std::vector<Eigen::Index> basis, double tol)
      : a_(std::move(a)), b_(std::move(b)), basis_(std::move(basis)), tol_(tol) {
    t_ = Eigen::MatrixXd::Zero(a_.rows() + 1, a_.cols() + 1);
    cost_ = Eigen::VectorXd::Zero(a_.cols());
    refactor();
  }

  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index vars() const { return t_.cols() - 1; }
  Eigen::Index rhs_col() const { return t_.cols() - 1; }
  double objective() const { return -t_(rows(), rhs_col()); }
  const std::vector<Eigen::Index>& basis() const { return basis_; }
  const Eigen::MatrixXd& data() const { return t_; }
  int pivots() const { return pivots_; }

  void pivot(Eigen::Index r, Eigen::Index j) {
    t_.row(r) /= t_(r, j);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, j);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = j;
    ++since_refactor_;
    if (++pivots_ > kMaxPivots) throw ConvergenceError("solve_lp: pivot limit reached");
  }

  /// Sets the cost row to `cost` and prices out the current basis.
  void set_costs(const Eigen::VectorXd& cost) {
    cost_ = cost;
    price();
  }

  /// Rebuilds B^-1 [A | b] from the original data. Keeps the updated tableau
  /// if the basis matrix is numerically singular.
  void refactor() {
    since_refactor_ = 0;
    if (rows() == 0) {
      price();
      return;
    }
    Eigen::MatrixXd bmat(rows(), rows());
    for (Eigen::Index r = 0; r < rows(); ++r)
      bmat.col(r) = a_.col(basis_[static_cast<std::size_t>(r)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
    if (!lu.isInvertible()) return;
    Eigen::MatrixXd rebuilt(rows(), vars() + 1);
    rebuilt.leftCols(vars()) = lu.solve(a_);
    rebuilt.col(vars()) = lu.solve(b_);
    if (!rebuilt.allFinite()) return;
    t_.topRows(rows()) = rebuilt;
    price();
  }

  /// Runs Bland's-rule pivots over columns < `allowed_cols` until optimal.
  /// Optimality and unboundedness are only accepted on a freshly rebuilt
  /// tableau.
  void optimize(Eigen::Index allowed_cols) {
    while (true) {
      if (since_refactor_ >= kRefactorInterval) refactor();
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j) {
        if (t_(rows(), j) < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) {
        if (since_refactor_ == 0) return;
        refactor();
        continue;
      }
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < rows(); ++r) {
        const double a = t_(r, enter);
        if (a <= tol_) continue;
        const double ratio = std::max(0.0, t_(r, rhs_col())) / a;
        if (ratio < best - tol_ ||
            (ratio <= best + tol_ && leave >= 0 &&
             basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
          if (ratio < best) best = ratio;
          leave = r;
        }
      }
      if (leave < 0) {
        if (since_refactor_ == 0) throw std::domain_error("solve_lp: objective is unbounded below");
        refactor();
        continue;
      }
      pivot(leave, enter);
    }
  }

 private:
  void price() {
    t_.row(rows()).setZero();
    t_.row(rows()).head(vars()) = cost_.transpose();
    for (Eigen::Index r = 0; r < rows(); ++r) {
      const double cb = cost_[basis_[static_cast<std::size_t>(r)]];
      if (cb != 0.0) t_.row(rows()) -= cb * t_.row(r);
    }
  }

  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::MatrixXd t_;
  Eigen::VectorXd cost_;
  std::vector<Eigen::Index> basis_;
  double tol_;
  int pivots_ = 0;
  int since_refactor_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double pivot_tol) {
  const Eigen::Index n = lp.c.size();
  const Eigen::Index n_ub = lp.a_ub.rows();
  const Eigen::Index n_eq = lp.a_eq.rows();
  if (n == 0) throw std::invalid_argument("solve_lp: no variables");
  if ((n_ub > 0 && lp.a_ub.cols() != n) || lp.b_ub.size() != n_ub ||
      (n_eq > 0 && lp.a_eq.cols() != n) || lp.b_eq.size() != n_eq)
    throw std::invalid_argument("solve_lp: inconsistent dimensions");

  const Eigen::Index rows = n_ub + n_eq;
  // Equality standard form [A | slack] x = b with b >= 0 after sign flips.
  Eigen::MatrixXd a_std = Eigen::MatrixXd::Zero(rows, n + n_ub);
  Eigen::VectorXd b_std(rows);
  std::vector<bool> needs_artificial(static_cast<std::size_t>(rows), false);
  for (Eigen::Index i = 0; i < n_ub; ++i) {
    const double sign = lp.b_ub[i] < 0.0 ? -1.0 : 1.0;
    a_std.row(i).head(n) = sign * lp.a_ub.row(i);
    a_std(i, n + i) = sign;
    b_std[i] = sign * lp.b_ub[i];
    needs_artificial[static_cast<std::size_t>(i)] = sign < 0.0;
  }
  for (Eigen::Index i = 0; i < n_eq; ++i) {
    const double sign = lp.b_eq[i] < 0.0 ? -1.0 : 1.0;
    a_std.row(n_ub + i).head(n) = sign * lp.a_eq.row(i);
    b_std[n_ub + i] = sign * lp.b_eq[i];
    needs_artificial[static_cast<std::size_t>(n_ub + i)] = true;
  }
  Eigen::Index n_art = 0;
  for (bool a : needs_artificial) n_art += a ? 1 : 0;

  const Eigen::Index structural = n + n_ub;
  const Eigen::Index total = structural + n_art;
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(rows, total);
  full.leftCols(structural) = a_std;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
  Eigen::Index next_art = structural;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (needs_artificial[static_cast<std::size_t>(i)]) {
      full(i, next_art) = 1.0;
      basis[static_cast<std::size_t>(i)] = next_art++;
    } else {
      basis[static_cast<std::size_t>(i)] = n + i;  // slack
    }
  }

  Tableau tab(full, b_std, std::move(basis), pivot_tol);

  if (n_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
    phase1.tail(n_art).setOnes();
    tab.set_costs(phase1);
    tab.optimize(total);
    const double scale = std::max(1.0, b_std.cwiseAbs().maxCoeff());
    if (tab.objective() > 1e-8 * scale) throw InfeasibleError("solve_lp: infeasible");
    // Pivot zero-level artificials out of the basis where possible; rows
    // where that fails are redundant and keep their artificial at zero.
    for (Eigen::Index r = 0; r < tab.rows(); ++r) {
      if (tab.basis()[static_cast<std::size_t>(r)] < structural) continue;
      for (Eigen::Index j = 0; j < structural; ++j) {
        if (std::abs(tab.data()(r, j)) > pivot_tol) {
          tab.pivot(r, j);
          break;
        }
      }
    }
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(total);
  phase2.head(n) = lp.c;
  tab.set_costs(phase2);
  tab.optimize(structural);

  // Re-solve the final basis against the original data.
  Eigen::VectorXd x_all = Eigen::VectorXd::Zero(total);
  if (rows > 0) {
    Eigen::MatrixXd basis_cols(rows, rows);
    for (Eigen::Index r = 0; r < rows; ++r)
      basis_cols.col(r) = full.col(tab.basis()[static_cast<std::size_t>(r)]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_cols);
    Eigen::VectorXd xb = lu.solve(b_std);
    if (!xb.allFinite() || (basis_cols * xb - b_std).cwiseAbs().maxCoeff() >
                               1e-8 * std::max(1.0, b_std.cwiseAbs().maxCoeff())) {
      // Ill-conditioned basis; fall back to the tableau values.
      for (Eigen::Index r = 0; r < rows; ++r) xb[r] = tab.data()(r, total);
    }
    for (Eigen::Index r = 0; r < rows; ++r)
      x_all[tab.basis()[static_cast<std::size_t>(r)]] = std::max(0.0, xb[r]);
  }

  LpSolution out;
  out.x = x_all.head(n);
  out.objective = lp.c.dot(out.x);
  out.pivots = tab.pivots();
  return out;
}

}  // namespace odds
