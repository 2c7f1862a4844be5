#pragma once

// Independent reference computations for the unit tests. None of these call
// into the library's numerical routines beyond plain Eigen arithmetic.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

/// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a, double tol = 1e-15) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= tol * tol * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  return a.diagonal();
}

/// Column i of the optimal Q solves min ||X^T q - e_i||^2 s.t. ||q|| <= 1,
/// a trust-region subproblem. With G = X X^T = V diag(d) V^T and g = V^T x_i,
/// q(mu) = V (d + mu)^-1 g; mu >= 0 is found by bisection on ||q(mu)|| = 1.
inline Eigen::MatrixXd trust_region_q(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd g = x * x.transpose();
  // Eigenvectors by Jacobi with accumulated rotations.
  const Eigen::Index n = g.rows();
  Eigen::MatrixXd a = g;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  const Eigen::VectorXd d = a.diagonal().cwiseMax(0.0);
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const Eigen::VectorXd gi = v.transpose() * x.col(i);
    auto solve = [&](double mu) {
      Eigen::VectorXd z(gi.size());
      for (Eigen::Index k = 0; k < gi.size(); ++k)
        z[k] = d[k] + mu > 0.0 ? gi[k] / (d[k] + mu) : 0.0;
      return z;
    };
    auto norm_at = [&](double mu) { return solve(mu).norm(); };
    // Unconstrained minimizer if G is well conditioned and it is feasible.
    double mu = 0.0;
    if (d.minCoeff() <= 1e-12 || norm_at(0.0) > 1.0) {
      double lo = 0.0, hi = 1.0;
      while (norm_at(hi) > 1.0) hi *= 2.0;
      for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (norm_at(mid) > 1.0 ? lo : hi) = mid;
      }
      mu = hi;
    }
    out.col(i) = v * solve(mu);
  }
  return out;
}

/// Two-sided finite-difference derivative of f at t = 0 along a direction.
template <typename F>
double central_difference(const F& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

/// Angle in radians between the lines spanned by a and b.
inline double line_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::acos(std::min(1.0, c));
}

}  // namespace oracle
