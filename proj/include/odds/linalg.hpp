#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <limits>

#include "odds/random.hpp"

namespace odds {

// Row-major so that the raw storage order matches the CSV interchange format.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

bool all_finite(const DenseMatrix& m);
bool all_finite(const RealVector& v);

/// Throws std::invalid_argument if `m` is empty or holds a non-finite entry.
void require_valid(const DenseMatrix& m, const char* what);
void require_valid(const RealVector& v, const char* what);

/// rows x cols matrix with i.i.d. N(0, sigma^2) entries, filled row by row.
DenseMatrix sample_gaussian_matrix(std::ptrdiff_t rows, std::ptrdiff_t cols, double sigma,
                                   RngSeed seed);
DenseMatrix sample_gaussian_matrix(std::ptrdiff_t rows, std::ptrdiff_t cols, double sigma,
                                   Rng& rng);
RealVector sample_gaussian_vector(std::ptrdiff_t len, double sigma, Rng& rng);

/// Scales every nonzero column to unit Euclidean norm; zero columns pass through.
DenseMatrix normalize_columns(const DenseMatrix& m);

inline constexpr int kSpectralNormMaxIters = 10000;

/// Largest singular value by power iteration on the smaller Gram matrix
/// (M^T M or M M^T). Stops when the Rayleigh quotient changes by less than
/// `tol` relative; throws ConvergenceError after kSpectralNormMaxIters.
double spectral_norm(const DenseMatrix& m, double tol = 1e-12);

/// Upper bound on the squared spectral norm suitable for a gradient step:
/// the power-iteration estimate inflated by 1e-6 relative, or the squared
/// Frobenius norm when power iteration does not settle.
double lipschitz_sq_bound(const DenseMatrix& m);

/// (sum |m_ij|^p)^(1/p); p = kInfNorm gives the max-abs entry.
double entrywise_p_norm(const DenseMatrix& m, double p);
double vector_p_norm(const RealVector& v, double p);

}  // namespace odds
