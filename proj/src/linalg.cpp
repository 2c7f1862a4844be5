#include "odds/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

#include "odds/errors.hpp"

namespace odds {

bool all_finite(const DenseMatrix& m) { return m.allFinite(); }
bool all_finite(const RealVector& v) { return v.allFinite(); }

void require_valid(const DenseMatrix& m, const char* what) {
  if (m.size() == 0) throw std::invalid_argument(std::string(what) + ": empty matrix");
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

void require_valid(const RealVector& v, const char* what) {
  if (v.size() == 0) throw std::invalid_argument(std::string(what) + ": empty vector");
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

DenseMatrix sample_gaussian_matrix(std::ptrdiff_t rows, std::ptrdiff_t cols, double sigma,
                                   Rng& rng) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("sample_gaussian_matrix: dimensions must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("sample_gaussian_matrix: sigma must be finite and >= 0");
  DenseMatrix out(rows, cols);
  double* data = out.data();
  for (std::ptrdiff_t k = 0; k < out.size(); ++k) data[k] = sigma * rng.normal();
  return out;
}

DenseMatrix sample_gaussian_matrix(std::ptrdiff_t rows, std::ptrdiff_t cols, double sigma,
                                   RngSeed seed) {
  Rng rng(seed);
  return sample_gaussian_matrix(rows, cols, sigma, rng);
}

RealVector sample_gaussian_vector(std::ptrdiff_t len, double sigma, Rng& rng) {
  if (len < 1) throw std::invalid_argument("sample_gaussian_vector: length must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sample_gaussian_vector: sigma < 0");
  RealVector out(len);
  for (std::ptrdiff_t k = 0; k < len; ++k) out[k] = sigma * rng.normal();
  return out;
}

DenseMatrix normalize_columns(const DenseMatrix& m) {
  if (m.size() == 0) throw std::invalid_argument("normalize_columns: empty matrix");
  DenseMatrix out = m;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (norm > 0.0) out.col(j) /= norm;
  }
  return out;
}

double spectral_norm(const DenseMatrix& m, double tol) {
  require_valid(m, "spectral_norm");
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm: tol must be positive");

  const Eigen::MatrixXd gram = m.rows() < m.cols()
                                   ? Eigen::MatrixXd(m * m.transpose())
                                   : Eigen::MatrixXd(m.transpose() * m);
  const double scale = gram.diagonal().sum();  // trace >= lambda_max
  if (scale == 0.0) return 0.0;

  // Fixed start stream: the estimate is a pure function of the matrix.
  Rng rng(RngSeed{0x5eedULL});
  Eigen::VectorXd v(gram.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();

  double lambda = v.dot(gram * v);
  for (int it = 0; it < kSpectralNormMaxIters; ++it) {
    Eigen::VectorXd w = gram * v;
    const double wn = w.norm();
    if (wn == 0.0) {
      // Start vector fell in the null space; restart from a fresh direction.
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
      v.normalize();
      continue;
    }
    v = w / wn;
    const double next = v.dot(gram * v);
    if (std::abs(next - lambda) <= tol * std::abs(next)) return std::sqrt(std::max(next, 0.0));
    lambda = next;
  }
  throw ConvergenceError("spectral_norm: power iteration did not converge");
}

double lipschitz_sq_bound(const DenseMatrix& m) {
  try {
    const double s = spectral_norm(m, 1e-10);
    return s * s * (1.0 + 1e-6);
  } catch (const ConvergenceError&) {
    // Clustered top eigenvalues stall power iteration; the Frobenius norm
    // would be a valid but very loose step bound, so solve the Gram exactly.
    const Eigen::MatrixXd gram = m.rows() < m.cols() ? Eigen::MatrixXd(m * m.transpose())
                                                     : Eigen::MatrixXd(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) return m.squaredNorm();
    return eig.eigenvalues().maxCoeff() * (1.0 + 1e-6);
  }
}

double entrywise_p_norm(const DenseMatrix& m, double p) {
  if (std::isnan(p) || p < 1.0) throw std::invalid_argument("entrywise_p_norm: p must be >= 1");
  const auto a = m.reshaped();
  if (std::isinf(p)) return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
  if (p == 1.0) return a.cwiseAbs().sum();
  if (p == 2.0) return m.norm();
  double acc = 0.0;
  for (double x : a) acc += std::pow(std::abs(x), p);
  return std::pow(acc, 1.0 / p);
}

double vector_p_norm(const RealVector& v, double p) {
  if (std::isnan(p) || p < 1.0) throw std::invalid_argument("vector_p_norm: p must be >= 1");
  if (v.size() == 0) return 0.0;
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  if (p == 1.0) return v.cwiseAbs().sum();
  if (p == 2.0) return v.norm();
  double acc = 0.0;
  for (double x : v) acc += std::pow(std::abs(x), p);
  return std::pow(acc, 1.0 / p);
}

}  // namespace odds
