#pragma once

#include <cstdint>
#include <vector>

#include "odds/linalg.hpp"
#include "odds/random.hpp"

namespace odds {

// Brute-force estimation of the general restricted (GR) constant
//
//   rho(Q, X, p, s) = min  ||Q^T X h||_inf / denom(h)
//                    over |T| <= s and h with ||h_{T^c}||_1 <= ||h_T||_1,
//
// where denom(h) is ||h||_p (full-vector mode) or ||h_T||_p
// (support-restricted mode). Sampling can only overshoot a minimum, so every
// estimate is an upper bound on the true constant.

enum class DenominatorMode { kFullVector, kSupportRestricted };

inline constexpr Eigen::Index kGrMaxColumns = 12;
inline constexpr int kGrMinBudget = 1000;
inline constexpr int kGrGridPoints = 1'000'000;

struct GrQuery {
  DenseMatrix q;
  DenseMatrix x;
  double p = 2.0;
  int s = 1;
  /// Random cone samples per support.
  int budget = 20000;
  DenominatorMode mode = DenominatorMode::kSupportRestricted;
  /// For m = 2, also scan a deterministic grid of kGrGridPoints directions.
  bool dense_grid = true;
};

struct GrEstimate {
  double value = 0.0;
  RealVector argmin_h;  // unit p-norm
  std::vector<Eigen::Index> argmin_support;
};

/// The GR ratio of a single direction h for support T.
double gr_ratio(const Eigen::MatrixXd& w, const RealVector& h,
                const std::vector<Eigen::Index>& support, double p, DenominatorMode mode);

/// True when ||h_{T^c}||_1 <= ||h_T||_1 + slack.
bool in_restricted_cone(const RealVector& h, const std::vector<Eigen::Index>& support,
                        double slack = 0.0);

GrEstimate estimate_gr_constant(const GrQuery& query, RngSeed seed);

struct BoundReport {
  double lhs = 0.0;  // ||beta_hat - beta_star||_p
  double rhs = 0.0;  // 2 ||Q^T eps||_inf / rho
  bool holds = false;
};

/// Evaluates the recovery bound ||beta_hat - beta*||_p <= 2 ||Q^T eps||_inf / rho.
BoundReport check_error_bound(const RealVector& beta_hat, const RealVector& beta_star,
                              const DenseMatrix& q, const RealVector& eps, double rho, double p);

struct ViolationReport {
  std::int64_t trials = 0;
  Eigen::Index m = 0;
  double sigma = 0.0;
  double threshold_proof = 0.0;  // 2 sigma sqrt(log m)
  double threshold_lemma = 0.0;  // sigma sqrt(log m)
  double freq_proof = 0.0;       // P(||Q^T eps||_inf > threshold_proof)
  double freq_lemma = 0.0;       // P(||Q^T eps||_inf > threshold_lemma)
  double stderr_proof = 0.0;
  double stderr_lemma = 0.0;
  /// Union bound 2 (m sigma / t) exp(-t^2 / 2 sigma^2) at t = threshold_proof.
  double analytic_bound_proof = 0.0;
};

/// Union-bound tail estimate 2 (m sigma / t) exp(-t^2 / (2 sigma^2)).
double gaussian_max_tail_bound(Eigen::Index m, double sigma, double t);

/// Monte-Carlo frequency with which ||Q^T eps||_inf exceeds the two
/// thresholds for eps ~ N(0, sigma^2 I). Columns of q must have unit norm.
ViolationReport noise_bound_trial(const DenseMatrix& q, double sigma, std::int64_t trials,
                                  RngSeed seed);

}  // namespace odds
