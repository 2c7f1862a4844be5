#include "odds/gr.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace odds {

namespace {

constexpr int kRefineCandidates = 2;
constexpr int kMaxRefineSweeps = 4000;
constexpr double kInf = std::numeric_limits<double>::infinity();

double support_p_norm(const RealVector& h, const std::vector<Eigen::Index>& support, double p) {
  RealVector restricted(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k)
    restricted[static_cast<Eigen::Index>(k)] = h[support[k]];
  return vector_p_norm(restricted, p);
}

std::vector<bool> membership(Eigen::Index m, const std::vector<Eigen::Index>& support) {
  std::vector<bool> in(static_cast<std::size_t>(m), false);
  for (Eigen::Index j : support) in[static_cast<std::size_t>(j)] = true;
  return in;
}

// Random coordinate whose law makes the normalized vector spread over the
// unit p-sphere: Gaussian for p = 2, sign * Exp^(1/p) for other finite p,
// uniform for p = inf.
double sphere_coordinate(Rng& rng, double p) {
  if (p == 2.0) return rng.normal();
  if (std::isinf(p)) return 2.0 * rng.uniform() - 1.0;
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return sign * std::pow(rng.exponential(), 1.0 / p);
}

// Shrinks the off-support part so that ||h_{T^c}||_1 <= ||h_T||_1.
void repair_into_cone(RealVector& h, const std::vector<bool>& in_support) {
  double on = 0.0;
  double off = 0.0;
  for (Eigen::Index j = 0; j < h.size(); ++j)
    (in_support[static_cast<std::size_t>(j)] ? on : off) += std::abs(h[j]);
  if (off <= on) return;
  const double scale = on / off;
  for (Eigen::Index j = 0; j < h.size(); ++j)
    if (!in_support[static_cast<std::size_t>(j)]) h[j] *= scale;
  // Rounding can leave off a few ulps above on; trim until it does not.
  while (true) {
    double off2 = 0.0;
    for (Eigen::Index j = 0; j < h.size(); ++j)
      if (!in_support[static_cast<std::size_t>(j)]) off2 += std::abs(h[j]);
    if (off2 <= on) return;
    for (Eigen::Index j = 0; j < h.size(); ++j)
      if (!in_support[static_cast<std::size_t>(j)]) h[j] *= (1.0 - 1e-15);
  }
}

RealVector sample_cone_direction(Rng& rng, Eigen::Index m, const std::vector<bool>& in_support,
                                 double p) {
  RealVector h(m);
  double on = 0.0;
  double off = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    h[j] = sphere_coordinate(rng, p);
    (in_support[static_cast<std::size_t>(j)] ? on : off) += std::abs(h[j]);
  }
  if (off > 0.0) {
    // Half of the draws sit on the cone boundary, where minimizers concentrate.
    const double fill = rng.uniform() < 0.5 ? 1.0 : rng.uniform();
    const double scale = fill * on / off;
    for (Eigen::Index j = 0; j < m; ++j)
      if (!in_support[static_cast<std::size_t>(j)]) h[j] *= scale;
  }
  repair_into_cone(h, in_support);
  return h;
}

struct Candidate {
  double value = kInf;
  RealVector h;
  std::size_t support_index = 0;
};

void keep_best(std::vector<Candidate>& best, Candidate c, std::size_t capacity) {
  if (!(c.value < kInf)) return;
  best.push_back(std::move(c));
  std::sort(best.begin(), best.end(),
            [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  if (best.size() > capacity) best.resize(capacity);
}

// Coordinate descent on the ratio with a halving step, keeping h in the cone.
Candidate refine(const Eigen::MatrixXd& w, Candidate start,
                 const std::vector<Eigen::Index>& support, const std::vector<bool>& in_support,
                 double p, DenominatorMode mode) {
  RealVector h = start.h / start.h.cwiseAbs().maxCoeff();
  double value = gr_ratio(w, h, support, p, mode);
  double step = 0.5;
  int sweeps = 0;
  while (step > 1e-10 && sweeps < kMaxRefineSweeps) {
    ++sweeps;
    bool improved = false;
    for (Eigen::Index j = 0; j < h.size(); ++j) {
      for (const double dir : {1.0, -1.0}) {
        RealVector trial = h;
        trial[j] += dir * step;
        repair_into_cone(trial, in_support);
        const double peak = trial.cwiseAbs().maxCoeff();
        if (!(peak > 0.0)) continue;
        trial /= peak;
        const double v = gr_ratio(w, trial, support, p, mode);
        if (v < value) {
          value = v;
          h = std::move(trial);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  start.value = value;
  start.h = std::move(h);
  return start;
}

std::vector<std::vector<Eigen::Index>> supports_up_to(Eigen::Index m, int s) {
  std::vector<std::vector<Eigen::Index>> out;
  std::vector<Eigen::Index> current;
  // Depth-first enumeration in lexicographic order.
  auto recurse = [&](auto&& self, Eigen::Index next) -> void {
    if (!current.empty()) out.push_back(current);
    if (static_cast<int>(current.size()) == s) return;
    for (Eigen::Index j = next; j < m; ++j) {
      current.push_back(j);
      self(self, j + 1);
      current.pop_back();
    }
  };
  recurse(recurse, 0);
  return out;
}

}  // namespace

double gr_ratio(const Eigen::MatrixXd& w, const RealVector& h,
                const std::vector<Eigen::Index>& support, double p, DenominatorMode mode) {
  const double denom =
      mode == DenominatorMode::kFullVector ? vector_p_norm(h, p) : support_p_norm(h, support, p);
  if (!(denom > 0.0)) return kInf;
  return (w * h).cwiseAbs().maxCoeff() / denom;
}

bool in_restricted_cone(const RealVector& h, const std::vector<Eigen::Index>& support,
                        double slack) {
  const auto in = membership(h.size(), support);
  double on = 0.0;
  double off = 0.0;
  for (Eigen::Index j = 0; j < h.size(); ++j)
    (in[static_cast<std::size_t>(j)] ? on : off) += std::abs(h[j]);
  return off <= on + slack;
}

GrEstimate estimate_gr_constant(const GrQuery& query, RngSeed seed) {
  require_valid(query.q, "GrQuery.q");
  require_valid(query.x, "GrQuery.x");
  if (query.q.rows() != query.x.rows() || query.q.cols() != query.x.cols())
    throw std::invalid_argument("estimate_gr_constant: q and x must share dimensions");
  const Eigen::Index m = query.x.cols();
  if (m > kGrMaxColumns)
    throw std::invalid_argument("estimate_gr_constant: m exceeds the exhaustive-support guard");
  if (query.s < 1 || query.s > m)
    throw std::invalid_argument("estimate_gr_constant: s must lie in [1, m]");
  if (std::isnan(query.p) || query.p < 1.0)
    throw std::invalid_argument("estimate_gr_constant: p must be >= 1");
  if (query.budget < kGrMinBudget)
    throw std::invalid_argument("estimate_gr_constant: budget must be >= 1000");

  const Eigen::MatrixXd w = query.q.transpose() * query.x;
  const auto supports = supports_up_to(m, query.s);
  Rng rng(seed);

  Candidate overall;
  for (std::size_t t = 0; t < supports.size(); ++t) {
    const auto& support = supports[t];
    const auto in = membership(m, support);
    std::vector<Candidate> best;
    for (int k = 0; k < query.budget; ++k) {
      Candidate c;
      c.h = sample_cone_direction(rng, m, in, query.p);
      c.value = gr_ratio(w, c.h, support, query.p, query.mode);
      c.support_index = t;
      if (best.size() < kRefineCandidates || c.value < best.back().value)
        keep_best(best, std::move(c), kRefineCandidates);
    }
    for (Candidate& c : best) {
      Candidate r = refine(w, std::move(c), support, in, query.p, query.mode);
      if (r.value < overall.value) overall = std::move(r);
    }
  }

  if (m == 2 && query.dense_grid) {
    for (std::size_t t = 0; t < supports.size(); ++t) {
      const auto& support = supports[t];
      RealVector h(2);
      for (int k = 0; k < kGrGridPoints; ++k) {
        const double angle = std::numbers::pi * static_cast<double>(k) / kGrGridPoints;
        h << std::cos(angle), std::sin(angle);
        if (!in_restricted_cone(h, support)) continue;
        const double v = gr_ratio(w, h, support, query.p, query.mode);
        if (v < overall.value) {
          overall.value = v;
          overall.h = h;
          overall.support_index = t;
        }
      }
    }
  }

  GrEstimate out;
  if (!(overall.value < kInf)) throw std::logic_error("estimate_gr_constant: no finite ratio");
  const double norm = vector_p_norm(overall.h, query.p);
  out.argmin_h = overall.h / norm;
  out.argmin_support = supports[overall.support_index];
  out.value = gr_ratio(w, out.argmin_h, out.argmin_support, query.p, query.mode);
  assert(std::abs(gr_ratio(w, 10.0 * out.argmin_h, out.argmin_support, query.p, query.mode) -
                  out.value) <= 1e-12 * std::max(1.0, out.value));
  return out;
}

BoundReport check_error_bound(const RealVector& beta_hat, const RealVector& beta_star,
                              const DenseMatrix& q, const RealVector& eps, double rho, double p) {
  if (!(rho > 0.0)) throw std::invalid_argument("check_error_bound: rho must be positive");
  if (beta_hat.size() != beta_star.size() || beta_hat.size() != q.cols() || eps.size() != q.rows())
    throw std::invalid_argument("check_error_bound: dimension mismatch");
  BoundReport r;
  r.lhs = vector_p_norm(beta_hat - beta_star, p);
  const RealVector qe = q.transpose() * eps;
  r.rhs = 2.0 * (qe.size() ? qe.cwiseAbs().maxCoeff() : 0.0) / rho;
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

double gaussian_max_tail_bound(Eigen::Index m, double sigma, double t) {
  if (sigma == 0.0) return 0.0;
  if (!(t > 0.0)) return kInf;
  return 2.0 * (static_cast<double>(m) * sigma / t) * std::exp(-t * t / (2.0 * sigma * sigma));
}

ViolationReport noise_bound_trial(const DenseMatrix& q, double sigma, std::int64_t trials,
                                  RngSeed seed) {
  require_valid(q, "noise_bound_trial");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("noise_bound_trial: sigma must be finite and >= 0");
  if (trials < 1000) throw std::invalid_argument("noise_bound_trial: trials must be >= 1000");
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (std::abs(q.col(j).norm() - 1.0) > 1e-10)
      throw std::invalid_argument("noise_bound_trial: columns of q must have unit norm");

  ViolationReport r;
  r.trials = trials;
  r.m = q.cols();
  r.sigma = sigma;
  const double root_log = std::sqrt(std::log(static_cast<double>(r.m)));
  r.threshold_lemma = sigma * root_log;
  r.threshold_proof = 2.0 * sigma * root_log;
  r.analytic_bound_proof = gaussian_max_tail_bound(r.m, sigma, r.threshold_proof);

  const Eigen::MatrixXd qt = q.transpose();
  Rng rng(seed);
  Eigen::VectorXd eps(q.rows());
  std::int64_t over_proof = 0;
  std::int64_t over_lemma = 0;
  for (std::int64_t k = 0; k < trials; ++k) {
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = sigma * rng.normal();
    const double peak = (qt * eps).cwiseAbs().maxCoeff();
    over_proof += peak > r.threshold_proof ? 1 : 0;
    over_lemma += peak > r.threshold_lemma ? 1 : 0;
  }
  const double n = static_cast<double>(trials);
  r.freq_proof = static_cast<double>(over_proof) / n;
  r.freq_lemma = static_cast<double>(over_lemma) / n;
  r.stderr_proof = std::sqrt(r.freq_proof * (1.0 - r.freq_proof) / n);
  r.stderr_lemma = std::sqrt(r.freq_lemma * (1.0 - r.freq_lemma) / n);
  return r;
}

}  // namespace odds
