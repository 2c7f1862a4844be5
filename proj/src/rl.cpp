#include "odds/rl.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <atomic>
#include <exception>
#include <sstream>
#include <thread>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "odds/csv.hpp"
#include "odds/errors.hpp"

namespace odds {

namespace {

bool is_goal(const ChainMdp& mdp, int s) {
  return s == mdp.goal_states[0] || s == mdp.goal_states[1];
}

}  // namespace

void validate(const ChainMdp& mdp) {
  if (mdp.num_states < 2) throw std::invalid_argument("ChainMdp: need at least two states");
  for (int g : mdp.goal_states)
    if (g < 0 || g >= mdp.num_states)
      throw std::invalid_argument("ChainMdp: goal state out of range");
  if (!(mdp.move_prob > 0.0 && mdp.move_prob <= 1.0))
    throw std::invalid_argument("ChainMdp: move_prob must lie in (0, 1]");
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0))
    throw std::invalid_argument("ChainMdp: gamma must lie in [0, 1)");
  if (!std::isfinite(mdp.goal_reward)) throw std::invalid_argument("ChainMdp: non-finite reward");
}

MdpModel build_chain_mdp(const ChainMdp& mdp, ChainPolicy policy) {
  validate(mdp);
  if (policy != ChainPolicy::kTowardNearestGoal)
    throw std::invalid_argument("build_chain_mdp: unsupported policy");
  const int n = mdp.num_states;
  MdpModel model;
  model.p = DenseMatrix::Zero(n, n);
  model.transition_reward = DenseMatrix::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    if (is_goal(mdp, s)) {
      model.p(s, s) = 1.0;
      continue;
    }
    const int d0 = std::abs(s - mdp.goal_states[0]);
    const int d1 = std::abs(s - mdp.goal_states[1]);
    int target = mdp.goal_states[0];
    if (d1 < d0 || (d1 == d0 && mdp.goal_states[1] < mdp.goal_states[0]))
      target = mdp.goal_states[1];
    const int dir = target > s ? 1 : -1;
    const int toward = std::clamp(s + dir, 0, n - 1);
    const int away = std::clamp(s - dir, 0, n - 1);
    model.p(s, toward) += mdp.move_prob;
    model.p(s, away) += 1.0 - mdp.move_prob;
    for (int next : {toward, away})
      if (is_goal(mdp, next)) model.transition_reward(s, next) = mdp.goal_reward;
  }
  model.r = model.p.cwiseProduct(model.transition_reward).rowwise().sum();
  return model;
}

RealVector exact_value_function(const DenseMatrix& p, const RealVector& r, double gamma) {
  require_valid(p, "exact_value_function");
  if (p.rows() != p.cols() || r.size() != p.rows())
    throw std::invalid_argument("exact_value_function: dimension mismatch");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("exact_value_function: gamma must lie in [0, 1)");
  const Eigen::MatrixXd lhs =
      Eigen::MatrixXd::Identity(p.rows(), p.cols()) - gamma * Eigen::MatrixXd(p);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
  if (!lu.isInvertible()) throw NumericError("exact_value_function: singular system");
  RealVector v = lu.solve(r);
  // One refinement step keeps the residual at round-off level.
  v += lu.solve(r - lhs * v);
  const double residual = (lhs * v - r).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10)) throw NumericError("exact_value_function: Bellman residual too large");
  return v;
}

DenseMatrix build_features(const FeatureSpec& spec, int num_states, RngSeed seed) {
  if (num_states < 1 || spec.num_rbf < 0 || spec.num_noise < 0 || !(spec.noise_sigma >= 0.0))
    throw std::invalid_argument("build_features: invalid feature spec");
  if (spec.dimension() < 1) throw std::invalid_argument("build_features: no features");
  std::vector<double> centers = spec.rbf_centers;
  if (centers.empty()) {
    for (int j = 0; j < spec.num_rbf; ++j)
      centers.push_back(spec.num_rbf == 1 ? 0.5 * (1.0 + num_states)
                                          : 1.0 + (num_states - 1.0) * j / (spec.num_rbf - 1.0));
  }
  if (static_cast<int>(centers.size()) != spec.num_rbf)
    throw std::invalid_argument("build_features: rbf_centers size must equal num_rbf");
  const double width =
      spec.rbf_width > 0.0 ? spec.rbf_width : (num_states - 1.0) / (spec.num_rbf + 1.0);
  if (spec.num_rbf > 0 && !(width > 0.0))
    throw std::invalid_argument("build_features: RBF width must be positive");

  DenseMatrix phi(num_states, spec.dimension());
  Rng rng(seed);
  for (int s = 0; s < num_states; ++s) {
    const double pos = s + 1.0;
    int col = 0;
    if (spec.include_constant) phi(s, col++) = 1.0;
    for (double c : centers) phi(s, col++) = std::exp(-(pos - c) * (pos - c) / (2.0 * width * width));
    for (int k = 0; k < spec.num_noise; ++k) phi(s, col++) = spec.noise_sigma * rng.normal();
  }
  return phi;
}

SampleSet collect_samples(const ChainMdp& mdp, const DenseMatrix& features, int n, RngSeed seed) {
  if (n < 1) throw std::invalid_argument("collect_samples: n must be >= 1");
  if (features.rows() != mdp.num_states)
    throw std::invalid_argument("collect_samples: feature rows must equal num_states");
  const MdpModel model = build_chain_mdp(mdp);
  Rng rng(seed);
  SampleSet out;
  out.phi.resize(n, features.cols());
  out.phi_next.resize(n, features.cols());
  out.rewards.resize(n);
  for (int i = 0; i < n; ++i) {
    const int s = static_cast<int>(rng.index(static_cast<std::size_t>(mdp.num_states)));
    const double u = rng.uniform();
    int next = mdp.num_states - 1;
    double cumulative = 0.0;
    for (int j = 0; j < mdp.num_states; ++j) {
      cumulative += model.p(s, j);
      if (u < cumulative) {
        next = j;
        break;
      }
    }
    // Guard against the cumulative sum falling short of 1 by round-off.
    while (model.p(s, next) == 0.0) --next;
    out.states.push_back(s);
    out.next_states.push_back(next);
    out.phi.row(i) = features.row(s);
    out.phi_next.row(i) = features.row(next);
    out.rewards[i] = model.transition_reward(s, next);
  }
  return out;
}

namespace {

TdProblem finish_td_problem(DenseMatrix a, RealVector b, const DenseMatrix& phi, double lambda,
                            QMode mode, const QOptConfig& qopt, RngSeed seed) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("TdProblem: lambda must be >= 0");
  TdProblem td;
  td.q = mode == QMode::kDs ? phi : optimize_q(a, qopt, seed).q;
  td.a_mat = std::move(a);
  td.b_vec = std::move(b);
  td.lambda = lambda;
  return td;
}

}  // namespace

TdProblem assemble_td_problem(const SampleSet& samples, double gamma, double lambda, QMode mode,
                              const QOptConfig& qopt, RngSeed seed) {
  if (samples.phi.rows() == 0) throw std::invalid_argument("assemble_td_problem: no samples");
  if (samples.phi.rows() != samples.phi_next.rows() ||
      samples.phi.cols() != samples.phi_next.cols() || samples.rewards.size() != samples.phi.rows())
    throw std::invalid_argument("assemble_td_problem: inconsistent sample set");
  DenseMatrix a = samples.phi - gamma * samples.phi_next;
  return finish_td_problem(std::move(a), samples.rewards, samples.phi, lambda, mode, qopt, seed);
}

TdProblem expected_td_problem(const MdpModel& model, const DenseMatrix& features, double gamma,
                              double lambda, QMode mode, const QOptConfig& qopt) {
  if (features.rows() != model.p.rows())
    throw std::invalid_argument("expected_td_problem: feature rows must equal states");
  DenseMatrix a = features - gamma * (model.p * features);
  return finish_td_problem(std::move(a), model.r, features, lambda, mode, qopt, RngSeed{});
}

double td_lambda(const DenseMatrix& q, const RealVector& b, double lambda_scale) {
  if (!(lambda_scale >= 0.0)) throw std::invalid_argument("td_lambda: scale must be >= 0");
  return lambda_scale * (q.transpose() * b).cwiseAbs().maxCoeff();
}

Solution solve_td(const TdProblem& problem, const SolverConfig& config) {
  return solve_gdds(RecoveryProblem{problem.a_mat, problem.b_vec, problem.lambda, problem.q},
                    config);
}

double value_error(const RealVector& theta, const DenseMatrix& features, const RealVector& v_true,
                   const RealVector& weights) {
  if (theta.size() != features.cols() || v_true.size() != features.rows() ||
      weights.size() != features.rows())
    throw std::invalid_argument("value_error: dimension mismatch");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("value_error: negative weight");
  const RealVector diff = features * theta - v_true;
  return std::sqrt((weights.array() * diff.array().square()).sum());
}

RlTrial run_rl_trial(const RlExperimentConfig& config, RngSeed seed) {
  const MdpModel model = build_chain_mdp(config.mdp);
  const DenseMatrix phi = build_features(config.features, config.mdp.num_states, derive_seed(seed, 0));
  const SampleSet samples = collect_samples(config.mdp, phi, config.samples, derive_seed(seed, 1));
  const RealVector weights =
      RealVector::Constant(config.mdp.num_states, 1.0 / config.mdp.num_states);

  RlTrial out;
  out.seed = seed.value;
  out.v_true = exact_value_function(model.p, model.r, config.mdp.gamma);

  TdProblem ds = assemble_td_problem(samples, config.mdp.gamma, 0.0, QMode::kDs);
  ds.lambda = out.lambda_ds = td_lambda(ds.q, ds.b_vec, config.lambda_scale);
  const Solution sol_ds = solve_td(ds, config.solver);

  TdProblem od = assemble_td_problem(samples, config.mdp.gamma, 0.0, QMode::kOdds, config.qopt,
                                     derive_seed(seed, 2));
  od.lambda = out.lambda_odds = td_lambda(od.q, od.b_vec, config.lambda_scale);
  const Solution sol_odds = solve_td(od, config.solver);

  out.v_ds = phi * sol_ds.beta;
  out.v_odds = phi * sol_odds.beta;
  out.err_ds = value_error(sol_ds.beta, phi, out.v_true, weights);
  out.err_odds = value_error(sol_odds.beta, phi, out.v_true, weights);
  out.converged_ds = sol_ds.converged;
  out.converged_odds = sol_odds.converged;
  return out;
}

std::vector<RlTrial> run_rl_experiment(const RlExperimentConfig& config, RngSeed base, int count,
                                       int jobs) {
  if (count < 1) throw std::invalid_argument("run_rl_experiment: need at least one seed");
  std::vector<RlTrial> out(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(out.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < out.size(); k = next++) {
      try {
        out[k] = run_rl_trial(config, derive_seed(base, k));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string rl_trials_to_csv(const std::vector<RlTrial>& trials) {
  std::ostringstream out;
  out << "seed,lambda_ds,lambda_odds,err_ds,err_odds,converged_ds,converged_odds\n";
  for (const auto& t : trials)
    out << t.seed << ',' << format_double(t.lambda_ds) << ',' << format_double(t.lambda_odds) << ','
        << format_double(t.err_ds) << ',' << format_double(t.err_odds) << ','
        << (t.converged_ds ? 1 : 0) << ',' << (t.converged_odds ? 1 : 0) << '\n';
  return out.str();
}

std::string rl_values_to_csv(const std::vector<RlTrial>& trials) {
  std::ostringstream out;
  out << "seed,state,v_true,v_ds,v_odds\n";
  for (const auto& t : trials)
    for (Eigen::Index s = 0; s < t.v_true.size(); ++s)
      out << t.seed << ',' << s + 1 << ',' << format_double(t.v_true[s]) << ','
          << format_double(t.v_ds[s]) << ',' << format_double(t.v_odds[s]) << '\n';
  return out.str();
}

}  // namespace odds
