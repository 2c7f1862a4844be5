#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "odds/csv.hpp"
#include "odds/errors.hpp"
#include "odds/gdds.hpp"
#include "odds/gr.hpp"
#include "odds/qopt.hpp"
#include "odds/rl.hpp"
#include "odds/synth.hpp"

namespace odds::cli {

namespace {

// Raised for bad flag values that CLI11 cannot check on its own.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double parse_p(const std::string& text) {
  if (text == "inf" || text == "infinity") return kInfNorm;
  double p = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), p);
  if (ec != std::errc{} || end != text.data() + text.size() || !(p >= 1.0))
    throw UsageError("--p must be a number >= 1 or 'inf'");
  return p;
}

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    int v = 0;
    const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || end != item.data() + item.size() || item.empty())
      throw UsageError(std::string(flag) + ": expected a comma-separated list of integers");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
  return out;
}

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty())
    out << contents;
  else
    write_file_atomic(path, contents);
}

// Splices `--config FILE` contents in front of the command-line flags so that
// later (command-line) values win under the take-last policy.
std::vector<std::string> expand_config(const std::vector<std::string>& argv) {
  std::vector<std::string> head;
  std::vector<std::string> tail;
  std::optional<std::string> config_path;
  std::size_t i = 0;
  for (; i < argv.size() && i < 2; ++i) head.push_back(argv[i]);
  for (; i < argv.size(); ++i) {
    const std::string& a = argv[i];
    if (a == "--config") {
      if (i + 1 >= argv.size()) throw UsageError("--config requires a file path");
      config_path = argv[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      tail.push_back(a);
    }
  }
  if (config_path) {
    std::ifstream in(*config_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file '" + *config_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    for (auto& a : config_file_args(buf.str())) head.push_back(std::move(a));
  }
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

struct RecoverArgs {
  std::string x, y, q, out;
  double lambda = 0.0;
  double tol = 1e-7;
  int max_iters = 50000;
  bool oracle = false;
};

struct QoptArgs {
  std::string x, out;
  int max_iters = 5000;
  double tol = 0.0;
  std::string step = "fixed";
  double restart = 0.0;
};

struct GrArgs {
  std::string x, q, out, p = "2", mode = "support";
  int s = 1;
  int budget = 20000;
  bool no_grid = false;
};

struct NoiseArgs {
  std::string q, out, threshold = "proof";
  int m = 100;
  double sigma = 1.0;
  std::int64_t trials = 100000;
};

struct ExperimentArgs {
  std::string preset, out, trials_out, ms = "700,900", lambda_rule;
  double lambda = 0.0;
  int runs = 10;
  int jobs = 1;
  int max_iters = 50000;
  double tol = 1e-7;
};

struct RlArgs {
  std::string out, values_out;
  int noise_features = 300;
  int samples = 200;
  double gamma = 0.9;
  int seeds = 20;
  double lambda_scale = 0.1;
  int jobs = 1;
  int max_iters = 50000;
};

int run_recover(const RecoverArgs& a, std::ostream& out, std::ostream& err) {
  RecoveryProblem problem;
  problem.x = read_matrix_csv(a.x);
  problem.y = read_vector_csv(a.y);
  problem.q = a.q.empty() ? normalize_columns(problem.x) : read_matrix_csv(a.q);
  problem.lambda = a.lambda;
  SolverConfig config;
  config.max_iters = a.max_iters;
  config.primal_tol = config.dual_tol = a.tol;
  const Solution sol = solve_gdds(problem, config);

  std::ostringstream diag;
  diag << "objective=" << format_double(sol.objective)
       << ",violation=" << format_double(sol.constraint_violation)
       << ",iterations=" << sol.iterations << ",converged=" << (sol.converged ? 1 : 0);
  if (a.oracle) {
    if (problem.x.cols() > kLpOracleMaxColumns) {
      diag << ",oracle=skipped";
    } else {
      const Solution lp = lp_oracle(problem);
      diag << ",oracle_objective=" << format_double(lp.objective)
           << ",oracle_gap=" << format_double(sol.objective - lp.objective);
    }
  }
  emit(a.out, to_csv(sol.beta), out);
  (a.out.empty() ? err : out) << diag.str() << '\n';
  if (!sol.converged) err << "warning: solver stopped at max-iters before reaching tolerance\n";
  return kExitOk;
}

int run_qopt(const QoptArgs& a, RngSeed seed, std::ostream& out, std::ostream& err) {
  QOptConfig config;
  config.max_iters = a.max_iters;
  config.grad_tol = a.tol;
  config.restart_probability = a.restart;
  if (a.step == "fixed")
    config.step_mode = StepMode::kFixedInverseLipschitz;
  else if (a.step == "backtracking")
    config.step_mode = StepMode::kBacktracking;
  else
    throw UsageError("--step must be 'fixed' or 'backtracking'");
  const QOptResult r = optimize_q(read_matrix_csv(a.x), config, seed);
  emit(a.out, to_csv(r.q), out);
  (a.out.empty() ? err : out) << "objective=" << format_double(r.objective)
                              << ",residual=" << format_double(r.residual)
                              << ",iterations=" << r.iterations
                              << ",converged=" << (r.converged ? 1 : 0) << '\n';
  return kExitOk;
}

int run_gr(const GrArgs& a, RngSeed seed, std::ostream& out) {
  GrQuery query;
  query.x = read_matrix_csv(a.x);
  query.q = a.q.empty() ? query.x : read_matrix_csv(a.q);
  query.p = parse_p(a.p);
  query.s = a.s;
  query.budget = a.budget;
  query.dense_grid = !a.no_grid;
  if (a.mode == "support")
    query.mode = DenominatorMode::kSupportRestricted;
  else if (a.mode == "full")
    query.mode = DenominatorMode::kFullVector;
  else
    throw UsageError("--mode must be 'support' or 'full'");
  const GrEstimate est = estimate_gr_constant(query, seed);

  const std::string hashed = "gr-const\n" + to_csv(query.q) + '\n' + to_csv(query.x) +
                             "\np=" + a.p + "\ns=" + std::to_string(a.s) +
                             (query.dense_grid ? "\ngrid" : "\nnogrid");
  std::ostringstream line;
  line << hex64(fnv1a(hashed)) << ',' << format_double(est.value) << ','
       << (query.mode == DenominatorMode::kSupportRestricted ? "support-restricted" : "full-vector")
       << ',' << a.budget << ',' << seed.value << '\n';
  emit(a.out, line.str(), out);
  return kExitOk;
}

int run_noise(const NoiseArgs& a, RngSeed seed, std::ostream& out, std::ostream& err) {
  if (a.threshold != "proof" && a.threshold != "lemma")
    throw UsageError("--threshold must be 'proof' or 'lemma'");
  DenseMatrix q;
  if (a.q.empty()) {
    if (a.m < 1) throw UsageError("--m must be positive");
    q = DenseMatrix::Identity(a.m, a.m);
  } else {
    q = read_matrix_csv(a.q);
  }
  const ViolationReport r = noise_bound_trial(q, a.sigma, a.trials, seed);
  const bool proof = a.threshold == "proof";

  const std::string hashed =
      "noise-bound\n" + to_csv(q) + "\nsigma=" + format_double(a.sigma) + '\n' + a.threshold;
  std::ostringstream line;
  line << hex64(fnv1a(hashed)) << ',' << format_double(proof ? r.freq_proof : r.freq_lemma)
       << ',' << a.threshold << ',' << a.trials << ',' << seed.value << '\n';
  emit(a.out, line.str(), out);
  err << "threshold=" << format_double(proof ? r.threshold_proof : r.threshold_lemma)
      << ",stderr=" << format_double(proof ? r.stderr_proof : r.stderr_lemma)
      << ",analytic_bound=" << format_double(r.analytic_bound_proof) << '\n';
  return kExitOk;
}

int run_experiment(const ExperimentArgs& a, RngSeed seed, std::ostream& out, std::ostream& err) {
  std::vector<SynthSpec> specs;
  if (a.preset == "small")
    specs = small_scale_preset(a.runs, seed);
  else if (a.preset == "medium")
    specs = medium_scale_preset(parse_int_list(a.ms, "--ms"), a.runs, seed);
  else
    throw UsageError("--preset must be 'small' or 'medium'");
  if (!a.lambda_rule.empty()) {
    const LambdaRule rule = parse_lambda_rule(a.lambda_rule);
    for (auto& s : specs) {
      s.lambda_rule = rule;
      s.lambda_value = a.lambda;
    }
  }
  SolverConfig solver;
  solver.max_iters = a.max_iters;
  solver.primal_tol = solver.dual_tol = a.tol;

  const auto results = run_sweep(specs, solver, QOptConfig{}, a.jobs);
  write_file_atomic(a.out, sweep_to_csv(results));
  if (!a.trials_out.empty()) write_file_atomic(a.trials_out, trials_to_csv(results));

  std::size_t failed = 0;
  for (const auto& r : results) failed += r.errors.size();
  out << "wrote " << a.out << " (" << specs.size() << " settings, " << a.runs
      << " runs each)\n";
  if (failed > 0) err << "warning: " << failed << " trial(s) failed; see error rows\n";
  return kExitOk;
}

int run_rl(const RlArgs& a, RngSeed seed, std::ostream& out) {
  RlExperimentConfig config;
  config.mdp.gamma = a.gamma;
  config.features.num_noise = a.noise_features;
  config.samples = a.samples;
  config.lambda_scale = a.lambda_scale;
  config.solver.max_iters = a.max_iters;
  const auto trials = run_rl_experiment(config, seed, a.seeds, a.jobs);
  write_file_atomic(a.out, rl_trials_to_csv(trials));
  if (!a.values_out.empty()) write_file_atomic(a.values_out, rl_values_to_csv(trials));
  int better = 0;
  for (const auto& t : trials) better += t.err_odds <= t.err_ds ? 1 : 0;
  out << "wrote " << a.out << " (odds <= ds in " << better << " of " << trials.size()
      << " seeds)\n";
  return kExitOk;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> config_file_args(std::string_view text) {
  std::vector<std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    const auto trim = [](std::string_view s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) return std::string_view{};
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    const std::string_view key = eq == std::string_view::npos ? line : trim(line.substr(0, eq));
    if (eq == std::string_view::npos || key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value");
    out.push_back("--" + std::string(key) + "=" + std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

int parse_and_dispatch(const std::vector<std::string>& argv_in, std::ostream& out,
                       std::ostream& err) {
  CLI::App app{"Optimized denoising Dantzig selector tools", "odds"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", "odds 1.0.0");

  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool seeded) {
    // Handled in expand_config; registered so it shows in --help.
    sub->add_option("--config", "key=value file; command-line flags take precedence");
    if (seeded)
      sub->add_option("--seed", seed, "RNG seed")->envname("ODDS_SEED")->capture_default_str();
  };

  RecoverArgs rec;
  auto* recover = app.add_subcommand("recover", "Solve min ||b||_1 s.t. ||Q^T(Xb - y)||_inf <= lambda");
  recover->add_option("--x", rec.x, "design matrix CSV")->required()->check(CLI::ExistingFile);
  recover->add_option("--y", rec.y, "observation vector CSV")->required()->check(CLI::ExistingFile);
  recover->add_option("--q", rec.q, "denoising matrix CSV (default: X with unit columns)")
      ->check(CLI::ExistingFile);
  recover->add_option("--lambda", rec.lambda, "constraint radius")->required()->check(CLI::NonNegativeNumber);
  recover->add_option("--tol", rec.tol, "primal and dual tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  recover->add_option("--max-iters", rec.max_iters)->capture_default_str()->check(CLI::PositiveNumber);
  recover->add_flag("--oracle", rec.oracle, "cross-check against the simplex oracle (m <= 200)");
  recover->add_option("--out", rec.out, "beta CSV (default: stdout)");
  add_common(recover, false);

  QoptArgs qo;
  auto* qopt = app.add_subcommand("qopt", "Optimize the denoising matrix for X");
  qopt->add_option("--x", qo.x, "design matrix CSV")->required()->check(CLI::ExistingFile);
  qopt->add_option("--out", qo.out, "Q CSV (default: stdout)");
  qopt->add_option("--max-iters", qo.max_iters)->capture_default_str()->check(CLI::PositiveNumber);
  qopt->add_option("--tol", qo.tol, "projected-gradient tolerance (0: 1e-6 * m)")->capture_default_str();
  qopt->add_option("--step", qo.step, "fixed | backtracking")->capture_default_str();
  qopt->add_option("--restart-prob", qo.restart, "per-iteration momentum restart probability")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  add_common(qopt, true);

  GrArgs gr;
  auto* grc = app.add_subcommand("gr-const", "Brute-force GR constant estimate (m <= 12)");
  grc->add_option("--x", gr.x, "design matrix CSV")->required()->check(CLI::ExistingFile);
  grc->add_option("--q", gr.q, "denoising matrix CSV (default: X)")->check(CLI::ExistingFile);
  grc->add_option("--p", gr.p, "denominator norm: number >= 1 or inf")->capture_default_str();
  grc->add_option("--s", gr.s, "sparsity level")->capture_default_str()->check(CLI::PositiveNumber);
  grc->add_option("--budget", gr.budget, "random samples per support")->capture_default_str();
  grc->add_option("--mode", gr.mode, "support | full")->capture_default_str();
  grc->add_flag("--no-grid", gr.no_grid, "skip the dense angular grid for m = 2");
  grc->add_option("--out", gr.out, "record CSV (default: stdout)");
  add_common(grc, true);

  NoiseArgs nb;
  auto* noise = app.add_subcommand("noise-bound", "Monte-Carlo check of the noise correlation bound");
  noise->add_option("--q", nb.q, "unit-column matrix CSV (default: identity of size --m)")
      ->check(CLI::ExistingFile);
  noise->add_option("--m", nb.m, "identity size when --q is absent")->capture_default_str();
  noise->add_option("--sigma", nb.sigma)->capture_default_str()->check(CLI::NonNegativeNumber);
  noise->add_option("--trials", nb.trials)->capture_default_str();
  noise->add_option("--threshold", nb.threshold, "proof (2 sigma sqrt(log m)) | lemma (sigma sqrt(log m))")
      ->capture_default_str();
  noise->add_option("--out", nb.out, "record CSV (default: stdout)");
  add_common(noise, true);

  ExperimentArgs ex;
  auto* exp = app.add_subcommand("experiment", "Synthetic DS vs ODDS sweeps");
  exp->add_option("--preset", ex.preset, "small | medium")->required();
  exp->add_option("--runs", ex.runs, "trials per setting")->capture_default_str()->check(CLI::PositiveNumber);
  exp->add_option("--ms", ex.ms, "medium preset: comma-separated m values")->capture_default_str();
  exp->add_option("--lambda-rule", ex.lambda_rule, "override: fixed | sigma-sqrt-2logn | qt-eps");
  exp->add_option("--lambda", ex.lambda, "value for --lambda-rule fixed")->check(CLI::NonNegativeNumber);
  exp->add_option("--jobs", ex.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  exp->add_option("--max-iters", ex.max_iters)->capture_default_str()->check(CLI::PositiveNumber);
  exp->add_option("--tol", ex.tol)->capture_default_str()->check(CLI::PositiveNumber);
  exp->add_option("--out", ex.out, "summary CSV")->required();
  exp->add_option("--trials-out", ex.trials_out, "per-trial CSV");
  add_common(exp, true);

  RlArgs rl;
  auto* rlc = app.add_subcommand("rl", "DS-TD vs ODDS-TD on the corrupted chain");
  rlc->add_option("--noise-features", rl.noise_features)->capture_default_str()->check(CLI::NonNegativeNumber);
  rlc->add_option("--samples", rl.samples)->capture_default_str()->check(CLI::PositiveNumber);
  rlc->add_option("--gamma", rl.gamma)->capture_default_str();
  rlc->add_option("--seeds", rl.seeds, "number of replications")->capture_default_str()->check(CLI::PositiveNumber);
  rlc->add_option("--lambda-scale", rl.lambda_scale, "lambda = scale * ||Q^T b||_inf")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  rlc->add_option("--jobs", rl.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  rlc->add_option("--max-iters", rl.max_iters)->capture_default_str()->check(CLI::PositiveNumber);
  rlc->add_option("--out", rl.out, "per-seed error CSV")->required();
  rlc->add_option("--values-out", rl.values_out, "per-state value CSV");
  add_common(rlc, true);

  try {
    std::vector<std::string> args = expand_config(argv_in);
    // CLI11 consumes arguments in reverse order.
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "odds: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "odds: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "odds: " << e.what() << '\n';
    return kExitFailure;
  }

  const RngSeed rng_seed{seed};
  try {
    if (recover->parsed()) return run_recover(rec, out, err);
    if (qopt->parsed()) return run_qopt(qo, rng_seed, out, err);
    if (grc->parsed()) return run_gr(gr, rng_seed, out);
    if (noise->parsed()) return run_noise(nb, rng_seed, out, err);
    if (exp->parsed()) return run_experiment(ex, rng_seed, out, err);
    if (rlc->parsed()) return run_rl(rl, rng_seed, out);
  } catch (const UsageError& e) {
    err << "odds: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "odds: " << e.what() << '\n';
    return kExitFailure;
  }
  err << "odds: no subcommand\n";
  return kExitUsage;
}

}  // namespace odds::cli
