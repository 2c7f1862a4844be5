#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "odds/rl.hpp"

using namespace odds;

TEST(ChainMdp, RowStochasticAndNearestGoal) {
  const ChainMdp mdp;
  const MdpModel model = build_chain_mdp(mdp);
  EXPECT_LE((model.p.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_GE(model.p.minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(model.p(1, 0), 0.9);
  EXPECT_DOUBLE_EQ(model.p(18, 19), 0.9);
  EXPECT_DOUBLE_EQ(model.p(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(model.transition_reward(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(model.transition_reward(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(model.r[1], 0.9);
  // State 2 moves toward goal 0 w.p. 0.9 and away to state 3 otherwise.
  EXPECT_DOUBLE_EQ(model.p(2, 1), 0.9);
  EXPECT_DOUBLE_EQ(model.p(2, 3), 0.1);
}

TEST(ChainMdp, RejectsInvalidSpecs) {
  ChainMdp mdp;
  mdp.move_prob = 0.0;
  EXPECT_THROW(build_chain_mdp(mdp), std::invalid_argument);
  mdp = {};
  mdp.goal_states = {0, 20};
  EXPECT_THROW(build_chain_mdp(mdp), std::invalid_argument);
  mdp = {};
  mdp.gamma = 1.0;
  EXPECT_THROW(validate(mdp), std::invalid_argument);
}

TEST(ExactValue, TrivialCases) {
  const DenseMatrix p = DenseMatrix::Identity(3, 3);
  EXPECT_TRUE(exact_value_function(p, RealVector::Zero(3), 0.9).isZero());
  const DenseMatrix one = DenseMatrix::Ones(1, 1);
  EXPECT_NEAR(exact_value_function(one, RealVector::Constant(1, 2.0), 0.9)[0], 20.0, 1e-12);
  EXPECT_THROW(exact_value_function(p, RealVector::Zero(3), 1.0), std::invalid_argument);
}

TEST(ExactValue, BellmanResidual) {
  const ChainMdp mdp;
  const MdpModel model = build_chain_mdp(mdp);
  const RealVector v = exact_value_function(model.p, model.r, mdp.gamma);
  const RealVector residual = v - model.r - mdp.gamma * model.p * v;
  EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ExactValue, MatchesMonteCarloRollouts) {
  const ChainMdp mdp;
  const MdpModel model = build_chain_mdp(mdp);
  const RealVector v = exact_value_function(model.p, model.r, mdp.gamma);
  std::mt19937_64 gen(12345);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  long steps = 0;
  for (int start : {1, 5, 9, 10, 14}) {
    const int episodes = 40000;
    double sum = 0.0, sum_sq = 0.0;
    for (int e = 0; e < episodes; ++e) {
      int s = start;
      double ret = 0.0, discount = 1.0;
      // Past 400 steps the remaining discount is below 1e-18.
      for (int t = 0; t < 400 && s != 0 && s != 19; ++t, ++steps) {
        const double u = unif(gen);
        double acc = 0.0;
        int next = s;
        for (int j = 0; j < mdp.num_states; ++j) {
          acc += model.p(s, j);
          if (u < acc) {
            next = j;
            break;
          }
        }
        ret += discount * model.transition_reward(s, next);
        discount *= mdp.gamma;
        s = next;
      }
      sum += ret;
      sum_sq += ret * ret;
    }
    const double mean = sum / episodes;
    const double se = std::sqrt(std::max(0.0, sum_sq / episodes - mean * mean) / episodes);
    EXPECT_NEAR(mean, v[start], 3.0 * se + 1e-12) << "state " << start;
  }
  EXPECT_GT(steps, 1000000);
}

TEST(Features, Layout) {
  FeatureSpec spec;
  const DenseMatrix phi = build_features(spec, 20, RngSeed{1});
  EXPECT_EQ(phi.cols(), 306);
  EXPECT_EQ(spec.dimension(), 306);
  EXPECT_TRUE((phi.col(0).array() == 1.0).all());
  // First RBF is centred at position 1 (state 0), the last at position 20.
  EXPECT_DOUBLE_EQ(phi(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(phi(19, 5), 1.0);
  EXPECT_TRUE(phi == build_features(spec, 20, RngSeed{1}));
  EXPECT_FALSE(phi == build_features(spec, 20, RngSeed{2}));
  spec.num_noise = 600;
  EXPECT_EQ(build_features(spec, 20, RngSeed{1}).cols(), 606);
}

TEST(Samples, CountsAndDeterministicMdp) {
  ChainMdp mdp;
  const DenseMatrix phi = build_features({}, 20, RngSeed{1});
  const SampleSet s = collect_samples(mdp, phi, 200, RngSeed{2});
  EXPECT_EQ(s.states.size(), 200u);
  EXPECT_EQ(s.phi.rows(), 200);
  mdp.move_prob = 1.0;
  const MdpModel model = build_chain_mdp(mdp);
  const SampleSet d = collect_samples(mdp, phi, 500, RngSeed{3});
  for (std::size_t i = 0; i < d.states.size(); ++i)
    EXPECT_EQ(model.p(d.states[i], d.next_states[i]), 1.0);
}

TEST(Samples, UniformStateVisitation) {
  const ChainMdp mdp;
  FeatureSpec spec;
  spec.num_noise = 1;
  const DenseMatrix phi = build_features(spec, 20, RngSeed{1});
  const int n = 100000;
  const SampleSet s = collect_samples(mdp, phi, n, RngSeed{4});
  std::vector<int> counts(20, 0);
  for (int st : s.states) ++counts[static_cast<std::size_t>(st)];
  const double p = 1.0 / 20.0;
  const double se = std::sqrt(n * p * (1.0 - p));
  for (int c : counts) EXPECT_NEAR(c, n * p, 3.0 * se);
}

TEST(TdProblem, AssemblyIdentities) {
  const ChainMdp mdp;
  const DenseMatrix phi = build_features({}, 20, RngSeed{1});
  const SampleSet s = collect_samples(mdp, phi, 50, RngSeed{5});
  const TdProblem zero = assemble_td_problem(s, 0.0, 0.1, QMode::kDs);
  EXPECT_TRUE(zero.a_mat == s.phi);
  EXPECT_TRUE(zero.q == s.phi);
  const TdProblem ds = assemble_td_problem(s, 0.9, 0.1, QMode::kDs);
  EXPECT_TRUE(ds.a_mat == DenseMatrix(s.phi - 0.9 * s.phi_next));
  // Adding gamma phi' back rounds, so that direction holds to an ulp.
  EXPECT_LE((ds.a_mat + 0.9 * s.phi_next - s.phi).cwiseAbs().maxCoeff(),
            1e-15 * (1.0 + s.phi.cwiseAbs().maxCoeff()));
  EXPECT_TRUE(ds.b_vec == s.rewards);
}

TEST(TdProblem, OddsQIsFeasibleAndBetterThanNormalizedA) {
  const ChainMdp mdp;
  const DenseMatrix phi = build_features({}, 20, RngSeed{1});
  const SampleSet s = collect_samples(mdp, phi, 200, RngSeed{6});
  const TdProblem od = assemble_td_problem(s, 0.9, 0.0, QMode::kOdds);
  EXPECT_LE(od.q.colwise().norm().maxCoeff(), 1.0 + 1e-12);
  const DenseMatrix baseline = normalize_columns(od.a_mat);
  EXPECT_LE(qopt_objective(od.q, od.a_mat), qopt_objective(baseline, od.a_mat));
}

TEST(SolveTd, LargeLambdaGivesZero) {
  const ChainMdp mdp;
  const DenseMatrix phi = build_features({}, 20, RngSeed{1});
  const SampleSet s = collect_samples(mdp, phi, 40, RngSeed{7});
  TdProblem td = assemble_td_problem(s, 0.9, 0.0, QMode::kDs);
  td.lambda = td_lambda(td.q, td.b_vec, 1.0);
  EXPECT_TRUE(solve_td(td).beta.isZero());
}

TEST(SolveTd, TabularExactSystemRecoversValue) {
  const ChainMdp mdp;
  const MdpModel model = build_chain_mdp(mdp);
  const DenseMatrix tabular = DenseMatrix::Identity(20, 20);
  const RealVector v = exact_value_function(model.p, model.r, mdp.gamma);
  for (QMode mode : {QMode::kDs, QMode::kOdds}) {
    const TdProblem td = expected_td_problem(model, tabular, mdp.gamma, 0.0, mode);
    const Solution sol = solve_td(td);
    EXPECT_LE((tabular * sol.beta - v).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ValueError, Examples) {
  const RealVector v = (RealVector(2) << 3, 4).finished();
  const DenseMatrix phi = DenseMatrix::Identity(2, 2);
  const RealVector w = RealVector::Constant(2, 0.5);
  EXPECT_EQ(value_error(v, phi, v, w), 0.0);
  EXPECT_EQ(value_error(RealVector::Zero(2), phi, v, RealVector::Zero(2)), 0.0);
  EXPECT_NEAR(value_error(RealVector::Zero(2), phi, v, w), v.norm() / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(value_error(v, phi, v, -w), std::invalid_argument);
}

TEST(RlExperiment, DeterministicAndThreadIndependent) {
  RlExperimentConfig c;
  c.features.num_noise = 20;
  c.samples = 60;
  const auto a = run_rl_experiment(c, RngSeed{3}, 3, 1);
  const auto b = run_rl_experiment(c, RngSeed{3}, 3, 3);
  EXPECT_EQ(rl_trials_to_csv(a), rl_trials_to_csv(b));
  EXPECT_EQ(rl_values_to_csv(a), rl_values_to_csv(b));
}
