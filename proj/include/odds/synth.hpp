#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "odds/gdds.hpp"
#include "odds/linalg.hpp"
#include "odds/qopt.hpp"
#include "odds/random.hpp"

namespace odds {

// Synthetic sparse-recovery experiments comparing the standard Dantzig
// selector (Q = X) against the optimized denoiser (Q from optimize_q).

enum class LambdaRule {
  kFixed,            // lambda = SynthSpec::lambda_value
  kSigmaSqrt2LogN,   // lambda = sigma * sqrt(2 log n)
  kNoiseCorrelation  // lambda = ||Q^T eps||_inf, per formulation
};

std::string to_string(LambdaRule rule, double value);
LambdaRule parse_lambda_rule(const std::string& name);

struct SynthSpec {
  int n = 100;
  int m = 150;
  int nnz = 10;
  double sigma = 0.1;
  LambdaRule lambda_rule = LambdaRule::kNoiseCorrelation;
  double lambda_value = 0.0;
  int runs = 10;
  RngSeed seed{};
};

void validate(const SynthSpec& spec);

struct SynthProblem {
  DenseMatrix x;  // unit-norm columns
  RealVector beta_star;
  RealVector y;
  RealVector eps;
};

/// Draws X (Gaussian, columns normalized), a uniformly placed nnz-sparse beta*
/// with N(0, 1) amplitudes, and eps ~ N(0, sigma^2 I). Deterministic in
/// (spec.seed, trial_index).
SynthProblem generate_problem(const SynthSpec& spec, int trial_index);

double lambda_for(const SynthSpec& spec, const DenseMatrix& q, const RealVector& eps);

struct TrialResult {
  double err_ds = 0.0;  // ||beta_ds - beta*||_2
  double err_odds = 0.0;
  double mse_ds = 0.0;  // err^2 / m
  double mse_odds = 0.0;
  double lambda_ds = 0.0;
  double lambda_odds = 0.0;
  bool converged_ds = false;
  bool converged_odds = false;
  RngSeed seed_used{};
};

TrialResult run_trial(const SynthSpec& spec, int trial_index, const SolverConfig& solver,
                      const QOptConfig& qopt);

struct Summary {
  double err_ds = 0.0;
  double err_odds = 0.0;
  double mse_ds = 0.0;
  double mse_odds = 0.0;
};

struct SpecResult {
  SynthSpec spec;
  std::vector<std::optional<TrialResult>> trials;  // nullopt: the trial threw
  std::vector<std::string> errors;                 // messages of failed trials
  std::optional<Summary> mean;
  std::optional<Summary> stddev;  // sample std, present with >= 2 successes
  /// Fraction of successful trials with err_odds <= err_ds.
  double frac_odds_le_ds = 0.0;
};

using TrialObserver = std::function<void(std::size_t spec_index, int trial_index)>;

/// Runs every trial of every spec. Work is spread over `jobs` threads; results
/// are gathered by index so the outcome does not depend on the thread count.
std::vector<SpecResult> run_sweep(const std::vector<SynthSpec>& specs, const SolverConfig& solver,
                                  const QOptConfig& qopt, int jobs = 1,
                                  const TrialObserver& on_trial_done = {});

inline constexpr const char* kSweepCsvHeader =
    "n,m,nnz,sigma,lambda_rule,stat,err_ds,err_odds,mse_ds,mse_odds";

/// One row per (spec, statistic): mean, std (when defined) and one `error`
/// row per failed trial.
std::string sweep_to_csv(const std::vector<SpecResult>& results);

/// One row per trial, for plotting.
std::string trials_to_csv(const std::vector<SpecResult>& results);

/// Small-scale grid: n = 100, m = 150, nnz in {10, 15, 20, 25}, sigma in {0.1, 0.2, 0.3}.
std::vector<SynthSpec> small_scale_preset(int runs, RngSeed seed);
/// Medium-scale grid: n = 500, nnz = 10, sigma = 0.01, lambda = sigma sqrt(2 log n).
std::vector<SynthSpec> medium_scale_preset(const std::vector<int>& ms, int runs, RngSeed seed);

}  // namespace odds
