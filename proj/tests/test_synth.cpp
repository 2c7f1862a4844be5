#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "odds/synth.hpp"

using namespace odds;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.n = 30;
  s.m = 40;
  s.nnz = 3;
  s.sigma = 0.05;
  s.runs = 3;
  s.seed = RngSeed{21};
  return s;
}

}  // namespace

TEST(GenerateProblem, Structure) {
  const SynthSpec s = small_spec();
  const SynthProblem p = generate_problem(s, 0);
  EXPECT_LE((p.x.colwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_EQ((p.beta_star.array() != 0.0).count(), s.nnz);
  EXPECT_LE((p.y - p.x * p.beta_star - p.eps).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GenerateProblem, DeterministicPerTrial) {
  const SynthSpec s = small_spec();
  const SynthProblem a = generate_problem(s, 2);
  const SynthProblem b = generate_problem(s, 2);
  EXPECT_TRUE(a.x == b.x && a.y == b.y && a.beta_star == b.beta_star);
  EXPECT_FALSE(generate_problem(s, 3).x == a.x);
}

TEST(GenerateProblem, EdgeCases) {
  SynthSpec s = small_spec();
  s.sigma = 0.0;
  SynthProblem p = generate_problem(s, 0);
  EXPECT_TRUE(p.y == p.x * p.beta_star);
  s = small_spec();
  s.nnz = 0;
  p = generate_problem(s, 0);
  EXPECT_TRUE(p.beta_star.isZero());
  EXPECT_TRUE(p.y == p.eps);
  s.nnz = s.m + 1;
  EXPECT_THROW(generate_problem(s, 0), std::invalid_argument);
}

TEST(RunTrial, NoiselessOverdeterminedIsExact) {
  SynthSpec s;
  s.n = 20;
  s.m = 10;
  s.nnz = 1;
  s.sigma = 0.0;
  s.lambda_rule = LambdaRule::kFixed;
  s.lambda_value = 0.0;
  const TrialResult r = run_trial(s, 0, SolverConfig{}, QOptConfig{});
  EXPECT_LE(r.err_ds, 1e-6);
  EXPECT_LE(r.err_odds, 1e-6);
}

TEST(RunTrial, HugeLambdaGivesZeroEstimates) {
  SynthSpec s = small_spec();
  s.lambda_rule = LambdaRule::kFixed;
  s.lambda_value = 1e6;
  const TrialResult r = run_trial(s, 0, SolverConfig{}, QOptConfig{});
  const double norm = generate_problem(s, 0).beta_star.norm();
  EXPECT_NEAR(r.err_ds, norm, 1e-12);
  EXPECT_NEAR(r.err_odds, norm, 1e-12);
}

TEST(RunTrial, MseConsistentWithError) {
  const SynthSpec s = small_spec();
  const TrialResult r = run_trial(s, 1, SolverConfig{}, QOptConfig{});
  EXPECT_NEAR(r.err_ds * r.err_ds, s.m * r.mse_ds, 1e-10);
  EXPECT_NEAR(r.err_odds * r.err_odds, s.m * r.mse_odds, 1e-10);
}

TEST(RunTrial, TrueBetaFeasibleUnderNoiseRule) {
  const SynthSpec s = small_spec();
  const SynthProblem p = generate_problem(s, 0);
  const double lambda = lambda_for(s, p.x, p.eps);
  const RecoveryProblem rp{p.x, p.y, lambda, p.x};
  EXPECT_LE(evaluate(rp, p.beta_star).constraint_violation, 1e-12);
}

TEST(RunTrial, SolutionStaysInRestrictedCone) {
  SynthSpec s = small_spec();
  s.n = 12;
  s.m = 16;
  s.nnz = 2;
  const SynthProblem p = generate_problem(s, 0);
  const RecoveryProblem rp{p.x, p.y, lambda_for(s, p.x, p.eps), p.x};
  const Solution sol = lp_oracle(rp);
  const RealVector h = sol.beta - p.beta_star;
  double on = 0.0, off = 0.0;
  for (Eigen::Index j = 0; j < h.size(); ++j)
    (p.beta_star[j] != 0.0 ? on : off) += std::abs(h[j]);
  EXPECT_LE(off, on + 1e-6);
}

TEST(LambdaRule, ParseAndFormat) {
  EXPECT_EQ(parse_lambda_rule("sigma-sqrt-2logn"), LambdaRule::kSigmaSqrt2LogN);
  EXPECT_EQ(to_string(LambdaRule::kFixed, 0.5), "fixed:0.5");
  EXPECT_THROW(parse_lambda_rule("bogus"), std::invalid_argument);
  SynthSpec s = small_spec();
  s.lambda_rule = LambdaRule::kSigmaSqrt2LogN;
  EXPECT_DOUBLE_EQ(lambda_for(s, DenseMatrix(), RealVector()), 0.05 * std::sqrt(2.0 * std::log(30.0)));
}

TEST(RunSweep, SingleRunMatchesTrial) {
  SynthSpec s = small_spec();
  s.runs = 1;
  const auto results = run_sweep({s}, SolverConfig{}, QOptConfig{});
  const TrialResult t = run_trial(s, 0, SolverConfig{}, QOptConfig{});
  ASSERT_TRUE(results[0].mean.has_value());
  EXPECT_EQ(results[0].mean->err_ds, t.err_ds);
  EXPECT_FALSE(results[0].stddev.has_value());
  const std::string csv = sweep_to_csv(results);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kSweepCsvHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(RunSweep, ThreadCountDoesNotChangeOutput) {
  SynthSpec a = small_spec();
  SynthSpec b = small_spec();
  b.nnz = 5;
  b.seed = RngSeed{22};
  const auto one = run_sweep({a, b}, SolverConfig{}, QOptConfig{}, 1);
  const auto four = run_sweep({a, b}, SolverConfig{}, QOptConfig{}, 4);
  EXPECT_EQ(sweep_to_csv(one), sweep_to_csv(four));
  EXPECT_EQ(trials_to_csv(one), trials_to_csv(four));
}

TEST(RunSweep, FailedTrialsBecomeErrorRows) {
  SynthSpec good = small_spec();
  good.runs = 2;
  SolverConfig solver;
  int calls = 0;
  // An invalid QOptConfig makes every trial throw.
  QOptConfig bad;
  bad.max_iters = 0;
  const auto results = run_sweep({good}, solver, bad, 1, [&](std::size_t, int) { ++calls; });
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(results[0].errors.size(), 2u);
  EXPECT_FALSE(results[0].mean.has_value());
  const std::string csv = sweep_to_csv(results);
  EXPECT_NE(csv.find(",error,nan,nan,nan,nan"), std::string::npos);
}

TEST(Presets, Grids) {
  const auto small = small_scale_preset(5, RngSeed{1});
  EXPECT_EQ(small.size(), 12u);
  for (const auto& s : small) {
    EXPECT_EQ(s.n, 100);
    EXPECT_EQ(s.m, 150);
    EXPECT_EQ(s.runs, 5);
  }
  const auto medium = medium_scale_preset({700, 900}, 10, RngSeed{1});
  ASSERT_EQ(medium.size(), 2u);
  EXPECT_EQ(medium[1].m, 900);
  EXPECT_EQ(medium[0].lambda_rule, LambdaRule::kSigmaSqrt2LogN);
}
