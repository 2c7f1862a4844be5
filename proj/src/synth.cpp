#include "odds/synth.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "odds/csv.hpp"

namespace odds {

std::string to_string(LambdaRule rule, double value) {
  switch (rule) {
    case LambdaRule::kFixed:
      return "fixed:" + format_double(value);
    case LambdaRule::kSigmaSqrt2LogN:
      return "sigma-sqrt-2logn";
    case LambdaRule::kNoiseCorrelation:
      return "qt-eps";
  }
  return "unknown";
}

LambdaRule parse_lambda_rule(const std::string& name) {
  if (name == "fixed") return LambdaRule::kFixed;
  if (name == "sigma-sqrt-2logn") return LambdaRule::kSigmaSqrt2LogN;
  if (name == "qt-eps") return LambdaRule::kNoiseCorrelation;
  throw std::invalid_argument("unknown lambda rule '" + name +
                              "' (expected fixed, sigma-sqrt-2logn or qt-eps)");
}

void validate(const SynthSpec& spec) {
  if (spec.n < 1 || spec.m < 1) throw std::invalid_argument("SynthSpec: n and m must be positive");
  if (spec.nnz < 0 || spec.nnz > spec.m)
    throw std::invalid_argument("SynthSpec: nnz must lie in [0, m]");
  if (!(spec.sigma >= 0.0)) throw std::invalid_argument("SynthSpec: sigma must be >= 0");
  if (spec.runs < 1) throw std::invalid_argument("SynthSpec: runs must be >= 1");
  if (spec.lambda_rule == LambdaRule::kFixed && !(spec.lambda_value >= 0.0))
    throw std::invalid_argument("SynthSpec: fixed lambda must be >= 0");
}

SynthProblem generate_problem(const SynthSpec& spec, int trial_index) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(trial_index)));
  SynthProblem p;
  p.x = normalize_columns(sample_gaussian_matrix(spec.n, spec.m, 1.0, rng));
  p.beta_star = RealVector::Zero(spec.m);
  const auto support = rng.sample_without_replacement(static_cast<std::size_t>(spec.m),
                                                      static_cast<std::size_t>(spec.nnz));
  for (std::size_t j : support) p.beta_star[static_cast<Eigen::Index>(j)] = rng.normal();
  p.eps = RealVector(spec.n);
  for (Eigen::Index i = 0; i < p.eps.size(); ++i) p.eps[i] = spec.sigma * rng.normal();
  p.y = p.x * p.beta_star + p.eps;
  return p;
}

double lambda_for(const SynthSpec& spec, const DenseMatrix& q, const RealVector& eps) {
  switch (spec.lambda_rule) {
    case LambdaRule::kFixed:
      return spec.lambda_value;
    case LambdaRule::kSigmaSqrt2LogN:
      return spec.sigma * std::sqrt(2.0 * std::log(static_cast<double>(spec.n)));
    case LambdaRule::kNoiseCorrelation:
      return (q.transpose() * eps).cwiseAbs().maxCoeff();
  }
  throw std::logic_error("lambda_for: unhandled rule");
}

TrialResult run_trial(const SynthSpec& spec, int trial_index, const SolverConfig& solver,
                      const QOptConfig& qopt) {
  const SynthProblem p = generate_problem(spec, trial_index);
  TrialResult r;
  r.seed_used = derive_seed(spec.seed, static_cast<std::uint64_t>(trial_index));

  const double m = static_cast<double>(spec.m);
  r.lambda_ds = lambda_for(spec, p.x, p.eps);
  const Solution ds = solve_ds(p.x, p.y, r.lambda_ds, solver);
  r.err_ds = (ds.beta - p.beta_star).norm();
  r.mse_ds = r.err_ds * r.err_ds / m;
  r.converged_ds = ds.converged;

  const QOptResult q = optimize_q(p.x, qopt, r.seed_used);
  r.lambda_odds = lambda_for(spec, q.q, p.eps);
  const Solution od = solve_gdds(RecoveryProblem{p.x, p.y, r.lambda_odds, q.q}, solver);
  r.err_odds = (od.beta - p.beta_star).norm();
  r.mse_odds = r.err_odds * r.err_odds / m;
  r.converged_odds = od.converged;

  if (!std::isfinite(r.err_ds) || !std::isfinite(r.err_odds))
    throw std::runtime_error("run_trial: non-finite error");
  return r;
}

namespace {

void summarize(SpecResult& out) {
  std::vector<const TrialResult*> ok;
  for (const auto& t : out.trials)
    if (t) ok.push_back(&*t);
  if (ok.empty()) return;
  const double k = static_cast<double>(ok.size());
  Summary mean;
  int better = 0;
  for (const TrialResult* t : ok) {
    mean.err_ds += t->err_ds / k;
    mean.err_odds += t->err_odds / k;
    mean.mse_ds += t->mse_ds / k;
    mean.mse_odds += t->mse_odds / k;
    better += t->err_odds <= t->err_ds ? 1 : 0;
  }
  out.mean = mean;
  out.frac_odds_le_ds = better / k;
  if (ok.size() < 2) return;
  Summary var;
  for (const TrialResult* t : ok) {
    var.err_ds += std::pow(t->err_ds - mean.err_ds, 2) / (k - 1.0);
    var.err_odds += std::pow(t->err_odds - mean.err_odds, 2) / (k - 1.0);
    var.mse_ds += std::pow(t->mse_ds - mean.mse_ds, 2) / (k - 1.0);
    var.mse_odds += std::pow(t->mse_odds - mean.mse_odds, 2) / (k - 1.0);
  }
  out.stddev = Summary{std::sqrt(var.err_ds), std::sqrt(var.err_odds), std::sqrt(var.mse_ds),
                       std::sqrt(var.mse_odds)};
}

std::string spec_prefix(const SynthSpec& s) {
  return std::to_string(s.n) + ',' + std::to_string(s.m) + ',' + std::to_string(s.nnz) + ',' +
         format_double(s.sigma) + ',' + to_string(s.lambda_rule, s.lambda_value);
}

}  // namespace

std::vector<SpecResult> run_sweep(const std::vector<SynthSpec>& specs, const SolverConfig& solver,
                                  const QOptConfig& qopt, int jobs,
                                  const TrialObserver& on_trial_done) {
  if (specs.empty()) throw std::invalid_argument("run_sweep: no specs");
  std::vector<SpecResult> results(specs.size());
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    validate(specs[i]);
    results[i].spec = specs[i];
    results[i].trials.resize(static_cast<std::size_t>(specs[i].runs));
    for (int t = 0; t < specs[i].runs; ++t) tasks.emplace_back(i, t);
  }
  std::vector<std::string> failure(tasks.size());

  std::atomic<std::size_t> next{0};
  std::mutex observer_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const auto [spec_index, trial] = tasks[k];
      try {
        results[spec_index].trials[static_cast<std::size_t>(trial)] =
            run_trial(specs[spec_index], trial, solver, qopt);
      } catch (const std::exception& e) {
        failure[k] = e.what();
        if (failure[k].empty()) failure[k] = "unknown error";
      }
      if (on_trial_done) {
        std::lock_guard<std::mutex> lock(observer_mutex);
        on_trial_done(spec_index, trial);
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t k = 0; k < tasks.size(); ++k)
    if (!failure[k].empty()) results[tasks[k].first].errors.push_back(failure[k]);
  for (auto& r : results) summarize(r);
  return results;
}

std::string sweep_to_csv(const std::vector<SpecResult>& results) {
  std::ostringstream out;
  out << kSweepCsvHeader << '\n';
  const auto row = [&](const SpecResult& r, const char* stat, const Summary& s) {
    out << spec_prefix(r.spec) << ',' << stat << ',' << format_double(s.err_ds) << ','
        << format_double(s.err_odds) << ',' << format_double(s.mse_ds) << ','
        << format_double(s.mse_odds) << '\n';
  };
  for (const auto& r : results) {
    if (r.mean) row(r, "mean", *r.mean);
    if (r.stddev) row(r, "std", *r.stddev);
    for (std::size_t k = 0; k < r.errors.size(); ++k)
      out << spec_prefix(r.spec) << ",error,nan,nan,nan,nan\n";
  }
  return out.str();
}

std::string trials_to_csv(const std::vector<SpecResult>& results) {
  std::ostringstream out;
  out << "n,m,nnz,sigma,lambda_rule,trial,seed,lambda_ds,lambda_odds,err_ds,err_odds,mse_ds,"
         "mse_odds,converged_ds,converged_odds\n";
  for (const auto& r : results) {
    for (std::size_t t = 0; t < r.trials.size(); ++t) {
      const auto& tr = r.trials[t];
      out << spec_prefix(r.spec) << ',' << t << ',';
      if (!tr) {
        out << "nan,nan,nan,nan,nan,nan,nan,0,0\n";
        continue;
      }
      out << tr->seed_used.value << ',' << format_double(tr->lambda_ds) << ','
          << format_double(tr->lambda_odds) << ',' << format_double(tr->err_ds) << ','
          << format_double(tr->err_odds) << ',' << format_double(tr->mse_ds) << ','
          << format_double(tr->mse_odds) << ',' << (tr->converged_ds ? 1 : 0) << ','
          << (tr->converged_odds ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::vector<SynthSpec> small_scale_preset(int runs, RngSeed seed) {
  std::vector<SynthSpec> specs;
  std::uint64_t cell = 0;
  for (double sigma : {0.1, 0.2, 0.3}) {
    for (int nnz : {10, 15, 20, 25}) {
      SynthSpec s;
      s.n = 100;
      s.m = 150;
      s.nnz = nnz;
      s.sigma = sigma;
      s.lambda_rule = LambdaRule::kNoiseCorrelation;
      s.runs = runs;
      s.seed = derive_seed(seed, cell++);
      specs.push_back(s);
    }
  }
  return specs;
}

std::vector<SynthSpec> medium_scale_preset(const std::vector<int>& ms, int runs, RngSeed seed) {
  std::vector<SynthSpec> specs;
  std::uint64_t cell = 0;
  for (int m : ms) {
    SynthSpec s;
    s.n = 500;
    s.m = m;
    s.nnz = 10;
    s.sigma = 0.01;
    s.lambda_rule = LambdaRule::kSigmaSqrt2LogN;
    s.runs = runs;
    s.seed = derive_seed(seed, cell++);
    specs.push_back(s);
  }
  return specs;
}

}  // namespace odds
