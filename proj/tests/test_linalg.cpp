#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "odds/csv.hpp"
#include "odds/errors.hpp"
#include "odds/linalg.hpp"
#include "odds/random.hpp"
#include "oracles.hpp"

using namespace odds;

TEST(Random, SameSeedSameStream) {
  Rng a(RngSeed{17}), b(RngSeed{17});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(Random, DerivedStreamsDiffer) {
  EXPECT_NE(derive_seed(RngSeed{1}, 0).value, derive_seed(RngSeed{1}, 1).value);
  EXPECT_NE(derive_seed(RngSeed{1}, 0).value, derive_seed(RngSeed{2}, 0).value);
}

TEST(Random, NormalMoments) {
  Rng rng(RngSeed{3});
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s1 += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s1 / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Random, IndexCoversRangeUniformly) {
  Rng rng(RngSeed{4});
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.index(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5.0 * std::sqrt(n / 7.0));
  EXPECT_THROW(rng.index(0), std::invalid_argument);
}

TEST(Random, SampleWithoutReplacementDistinct) {
  Rng rng(RngSeed{5});
  const auto idx = rng.sample_without_replacement(20, 20);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 20u);
  EXPECT_THROW(rng.sample_without_replacement(3, 4), std::invalid_argument);
}

TEST(Linalg, GaussianMatrixDeterministicAndShaped) {
  const DenseMatrix a = sample_gaussian_matrix(5, 7, 2.0, RngSeed{9});
  const DenseMatrix b = sample_gaussian_matrix(5, 7, 2.0, RngSeed{9});
  EXPECT_EQ(a.rows(), 5);
  EXPECT_EQ(a.cols(), 7);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == sample_gaussian_matrix(5, 7, 2.0, RngSeed{10}));
}

TEST(Linalg, GaussianMatrixVariance) {
  const DenseMatrix a = sample_gaussian_matrix(300, 300, 0.5, RngSeed{11});
  const double var = a.squaredNorm() / static_cast<double>(a.size());
  EXPECT_NEAR(var, 0.25, 0.01);
}

TEST(Linalg, NormalizeColumnsUnitAndZeroPassThrough) {
  DenseMatrix x(3, 3);
  x << 3, 0, 1, 4, 0, 1, 0, 0, 1;
  const DenseMatrix y = normalize_columns(x);
  EXPECT_NEAR(y.col(0).norm(), 1.0, 1e-15);
  EXPECT_TRUE(y.col(1).isZero());
  EXPECT_NEAR(y.col(2).norm(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(y(0, 0), 0.6);
}

TEST(Linalg, SpectralNormSimple) {
  EXPECT_NEAR(spectral_norm(DenseMatrix::Identity(3, 3)), 1.0, 1e-12);
  DenseMatrix d = DenseMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 1.0;
  EXPECT_NEAR(spectral_norm(d), 2.0, 1e-12);
  EXPECT_EQ(spectral_norm(DenseMatrix::Zero(2, 3)), 0.0);
}

TEST(Linalg, SpectralNormMatchesJacobi) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseMatrix m = sample_gaussian_matrix(5, 7, 1.0, RngSeed{100 + s});
    const Eigen::MatrixXd gram = Eigen::MatrixXd(m.transpose()) * Eigen::MatrixXd(m);
    const double expected = std::sqrt(oracle::jacobi_eigenvalues(gram).maxCoeff());
    EXPECT_NEAR(spectral_norm(m), expected, 1e-8 * expected);
    EXPECT_NEAR(spectral_norm(m), spectral_norm(DenseMatrix(m.transpose())), 1e-10);
  }
}

TEST(Linalg, LipschitzBoundDominatesSpectralNorm) {
  const DenseMatrix m = sample_gaussian_matrix(30, 50, 1.0, RngSeed{7});
  const double s = spectral_norm(m);
  EXPECT_GE(lipschitz_sq_bound(m), s * s);
  EXPECT_LE(lipschitz_sq_bound(m), s * s * (1.0 + 1e-5));
}

TEST(Linalg, SpectralNormRejectsBadInput) {
  EXPECT_THROW(spectral_norm(DenseMatrix::Identity(2, 2), 0.0), std::invalid_argument);
  DenseMatrix bad = DenseMatrix::Identity(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(spectral_norm(bad), std::invalid_argument);
}

TEST(Linalg, EntrywisePNorm) {
  DenseMatrix m(2, 2);
  m << 1, -2, 3, -4;
  EXPECT_DOUBLE_EQ(entrywise_p_norm(m, 1.0), 10.0);
  EXPECT_NEAR(entrywise_p_norm(m, 2.0), std::sqrt(30.0), 1e-14);
  EXPECT_DOUBLE_EQ(entrywise_p_norm(m, kInfNorm), 4.0);
  EXPECT_NEAR(entrywise_p_norm(m, 3.0), std::cbrt(1.0 + 8 + 27 + 64), 1e-12);
  EXPECT_THROW(entrywise_p_norm(m, 0.5), std::invalid_argument);
  const DenseMatrix r = sample_gaussian_matrix(4, 6, 1.0, RngSeed{8});
  for (double p : {1.0, 1.5, 2.0, 4.0, 10.0})
    EXPECT_LE(entrywise_p_norm(r, kInfNorm), entrywise_p_norm(r, p) + 1e-14);
}

TEST(Linalg, VectorPNorm) {
  RealVector v(3);
  v << 3, -4, 0;
  EXPECT_DOUBLE_EQ(vector_p_norm(v, 2.0), 5.0);
  EXPECT_DOUBLE_EQ(vector_p_norm(v, 1.0), 7.0);
  EXPECT_DOUBLE_EQ(vector_p_norm(v, kInfNorm), 4.0);
}

TEST(Csv, RoundTripIsExact) {
  const DenseMatrix m = sample_gaussian_matrix(4, 3, 1e-3, RngSeed{12});
  const DenseMatrix back = parse_matrix_csv(to_csv(m));
  EXPECT_TRUE(back == m);
}

TEST(Csv, ParsesAndRejects) {
  const DenseMatrix m = parse_matrix_csv("1,2\n3,4\n");
  EXPECT_EQ(m.rows(), 2);
  EXPECT_DOUBLE_EQ(m(1, 0), 3.0);
  EXPECT_THROW(parse_matrix_csv("1,2\n3\n"), std::invalid_argument);
  EXPECT_THROW(parse_matrix_csv("1,x\n"), std::invalid_argument);
  EXPECT_THROW(parse_matrix_csv(""), std::invalid_argument);
}

TEST(Csv, VectorAcceptsRowOrColumn) {
  const auto dir = std::filesystem::temp_directory_path() / "odds_csv_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "col.csv", "1\n2\n3\n");
  write_file_atomic(dir / "row.csv", "1,2,3\n");
  EXPECT_EQ(read_vector_csv(dir / "col.csv"), read_vector_csv(dir / "row.csv"));
  EXPECT_FALSE(std::filesystem::exists(dir / "col.csv.tmp"));
  std::filesystem::remove_all(dir);
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) EXPECT_EQ(std::stod(format_double(v)), v);
}
