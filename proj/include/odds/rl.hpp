#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "odds/gdds.hpp"
#include "odds/linalg.hpp"
#include "odds/qopt.hpp"
#include "odds/random.hpp"

namespace odds {

// Sparse temporal-difference value estimation on the corrupted chain.
// States are 0-based internally; goal states default to both chain ends.

struct ChainMdp {
  int num_states = 20;
  std::array<int, 2> goal_states{0, 19};
  double goal_reward = 1.0;
  /// Probability of stepping toward the nearest goal; otherwise one step away.
  double move_prob = 0.9;
  double gamma = 0.9;
};

void validate(const ChainMdp& mdp);

enum class ChainPolicy { kTowardNearestGoal };

struct MdpModel {
  DenseMatrix p;                  // row-stochastic transitions under the policy
  RealVector r;                   // expected one-step reward per state
  DenseMatrix transition_reward;  // reward of each (s, s') transition
};

/// Goal states are absorbing with zero self-reward; entering a goal from a
/// non-goal state pays goal_reward. Ties in goal distance step toward the
/// lower-index goal.
MdpModel build_chain_mdp(const ChainMdp& mdp, ChainPolicy policy = ChainPolicy::kTowardNearestGoal);

/// Solves (I - gamma P) V = R by LU. Throws NumericError if the system is
/// singular or the Bellman residual exceeds 1e-10.
RealVector exact_value_function(const DenseMatrix& p, const RealVector& r, double gamma);

struct FeatureSpec {
  int num_rbf = 5;
  /// Empty: centers evenly spaced over state positions [1, num_states].
  std::vector<double> rbf_centers;
  /// Non-positive: (num_states - 1) / (num_rbf + 1).
  double rbf_width = 0.0;
  int num_noise = 300;
  double noise_sigma = 1.0;
  bool include_constant = true;

  int dimension() const { return (include_constant ? 1 : 0) + num_rbf + num_noise; }
};

/// |S| x d feature matrix [1, RBF_1..RBF_k, noise_1..noise_r]. Noise entries
/// are fixed per (state, feature) and drawn from N(0, noise_sigma^2).
DenseMatrix build_features(const FeatureSpec& spec, int num_states, RngSeed seed);

struct SampleSet {
  std::vector<int> states;
  std::vector<int> next_states;
  DenseMatrix phi;       // n x d, rows phi(s_i)
  DenseMatrix phi_next;  // n x d, rows phi(s'_i)
  RealVector rewards;    // n
};

/// n transitions with s uniform over states and s' drawn from the policy.
SampleSet collect_samples(const ChainMdp& mdp, const DenseMatrix& features, int n, RngSeed seed);

enum class QMode { kDs, kOdds };

struct TdProblem {
  DenseMatrix a_mat;  // phi - gamma * phi_next
  RealVector b_vec;   // rewards
  DenseMatrix q;
  double lambda = 0.0;
};

/// A = phi - gamma phi_next, b = rewards; Q = phi (DS-TD) or optimize_q(A) (ODDS-TD).
TdProblem assemble_td_problem(const SampleSet& samples, double gamma, double lambda, QMode mode,
                              const QOptConfig& qopt = {}, RngSeed seed = {});

/// Same system built from the model's expected next features, one row per state.
TdProblem expected_td_problem(const MdpModel& model, const DenseMatrix& features, double gamma,
                              double lambda, QMode mode, const QOptConfig& qopt = {});

/// lambda_scale * ||Q^T b||_inf; scale 1 makes theta = 0 feasible.
double td_lambda(const DenseMatrix& q, const RealVector& b, double lambda_scale);

Solution solve_td(const TdProblem& problem, const SolverConfig& config = {});

/// sqrt(sum_i w_i (phi(s_i)^T theta - V_i)^2).
double value_error(const RealVector& theta, const DenseMatrix& features, const RealVector& v_true,
                   const RealVector& weights);

struct RlExperimentConfig {
  ChainMdp mdp;
  FeatureSpec features;
  int samples = 200;
  double lambda_scale = 0.1;
  SolverConfig solver;
  QOptConfig qopt;
};

struct RlTrial {
  std::uint64_t seed = 0;
  double err_ds = 0.0;
  double err_odds = 0.0;
  double lambda_ds = 0.0;
  double lambda_odds = 0.0;
  bool converged_ds = false;
  bool converged_odds = false;
  RealVector v_true;
  RealVector v_ds;
  RealVector v_odds;
};

/// One replication: features, samples, both TD solutions and their errors
/// under uniform state weights.
RlTrial run_rl_trial(const RlExperimentConfig& config, RngSeed seed);

/// Replications for seeds derive_seed(base, 0 .. count-1), spread over `jobs`
/// threads and returned in seed order.
std::vector<RlTrial> run_rl_experiment(const RlExperimentConfig& config, RngSeed base, int count,
                                       int jobs = 1);

/// seed,lambda_ds,lambda_odds,err_ds,err_odds,converged_ds,converged_odds
std::string rl_trials_to_csv(const std::vector<RlTrial>& trials);
/// seed,state,v_true,v_ds,v_odds (states 1-based, as in the chain layout).
std::string rl_values_to_csv(const std::vector<RlTrial>& trials);

}  // namespace odds
