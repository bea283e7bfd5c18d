#pragma once

// Finite-size Monte-Carlo lab: synthetic data generation, a gradient-descent
// RERM fitter with Armijo backtracking, empirical error metrics, and a
// multi-trial driver with deterministic per-trial seeding.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "ermlimits/dists.hpp"
#include "ermlimits/errors.hpp"
#include "ermlimits/moreau.hpp"

namespace ermlimits {

inline int thread_budget() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("ERMLIMITS_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return static_cast<int>(n);
}

struct Dataset {
  Eigen::MatrixXd A;   // m x n, iid standard normal entries
  Eigen::VectorXd y;   // responses (linear) or labels in {-1, +1} (binary)
  Eigen::VectorXd x0;  // ground truth, unit norm
  bool binary = false;
};

inline Eigen::VectorXd random_unit_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = nd(rng);
  return x / x.norm();
}

inline Dataset generate_linear(int n, double delta, const NoiseModel& noise,
                               std::uint64_t seed) {
  if (n < 2 || !(delta > 0)) throw DomainError("generate_linear: bad n or delta");
  const int m = std::max(1, static_cast<int>(std::lround(delta * n)));
  auto rng = detail::make_rng(seed);
  Dataset d;
  d.x0 = random_unit_vector(n, rng);
  std::normal_distribution<double> nd(0.0, 1.0);
  d.A.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) d.A(i, j) = nd(rng);
  const std::vector<double> z = noise.sample(m, detail::splitmix64(seed ^ 0x9e3779b97f4a7c15ull));
  d.y = d.A * d.x0;
  for (int i = 0; i < m; ++i) d.y[i] += z[i];
  return d;
}

inline Dataset generate_binary(int n, double delta, const BinaryLink& link,
                               std::uint64_t seed) {
  if (n < 2 || !(delta > 0)) throw DomainError("generate_binary: bad n or delta");
  const int m = std::max(1, static_cast<int>(std::lround(delta * n)));
  auto rng = detail::make_rng(seed);
  Dataset d;
  d.binary = true;
  d.x0 = random_unit_vector(n, rng);
  std::normal_distribution<double> nd(0.0, 1.0);
  d.A.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) d.A(i, j) = nd(rng);
  const Eigen::VectorXd s = d.A * d.x0;
  std::vector<double> sv(s.data(), s.data() + m);
  const std::vector<int> labels =
      link.sample_labels(sv, detail::splitmix64(seed ^ 0x2545f4914f6cdd1dull));
  d.y.resize(m);
  for (int i = 0; i < m; ++i) d.y[i] = labels[i];
  return d;
}

struct FitResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimize (1/m) sum_i L(v_i(x)) + (lambda / (2 delta)) ||x||^2 by gradient
// descent with Armijo backtracking, where v_i = y_i - a_i^T x (linear) or
// v_i = y_i a_i^T x (binary).
inline FitResult fit_rerm(const Dataset& data, const Loss& loss, double lambda,
                          double delta, double grad_tol_scale = 1e-8,
                          int max_iters = 50000) {
  if (!loss.has_deriv()) {
    throw UnsupportedSampling("fit_rerm: loss must expose a derivative");
  }
  const int m = static_cast<int>(data.A.rows());
  const int n = static_cast<int>(data.A.cols());
  // Ridge coefficient in the finite-sample objective matching the lambda
  // normalization of the asymptotic solvers: lambda/delta for the linear
  // model, lambda itself for the binary model.
  const double ridge = data.binary ? lambda : lambda / delta;

  auto margins = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd v = data.A * x;
    if (data.binary) return data.y.cwiseProduct(v);
    return data.y - v;
  };
  auto objective = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += loss.eval(v[i]);
    return s / m + 0.5 * ridge * x.squaredNorm();
  };
  auto gradient = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    Eigen::VectorXd lp(m);
    for (int i = 0; i < m; ++i) lp[i] = loss.deriv(v[i]);
    Eigen::VectorXd g;
    if (data.binary) {
      g = data.A.transpose() * lp.cwiseProduct(data.y) / m;
    } else {
      g = -data.A.transpose() * lp / m;
    }
    g += ridge * x;
    return g;
  };

  // Spectral norm of A^T A / m by power iteration, for the initial step size.
  double spec = 0.0;
  {
    auto rng = detail::make_rng(0x5ca1ab1eull + static_cast<std::uint64_t>(m));
    Eigen::VectorXd u = random_unit_vector(n, rng);
    for (int it = 0; it < 30; ++it) {
      Eigen::VectorXd w = data.A.transpose() * (data.A * u) / m;
      spec = w.norm();
      if (spec <= 0) break;
      u = w / spec;
    }
  }
  // Curvature bound of the loss near the data scale.
  double curv = 1e-12;
  {
    const double h = 1e-4;
    for (double v : {-3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0}) {
      const double c = (loss.deriv(v + h) - loss.deriv(v - h)) / (2.0 * h);
      curv = std::max(curv, std::abs(c));
    }
  }
  double step = 1.0 / std::max(spec * curv + ridge, 1e-12);

  FitResult res;
  res.x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = margins(res.x);
  double f = objective(res.x, v);
  const double tol = grad_tol_scale * std::sqrt(static_cast<double>(n));
  const double armijo_c = 1e-4;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd g = gradient(res.x, v);
    res.grad_norm = g.norm();
    res.iterations = it;
    if (res.grad_norm <= tol) {
      res.converged = true;
      break;
    }
    const double g2 = g.squaredNorm();
    double t = step;
    Eigen::VectorXd xn;
    double fn = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      xn = res.x - t * g;
      const Eigen::VectorXd vn = margins(xn);
      fn = objective(xn, vn);
      if (fn <= f - armijo_c * t * g2) {
        res.x = std::move(xn);
        v = vn;
        f = fn;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      throw NoConvergence("fit_rerm: line search stalled (gradient norm " +
                          std::to_string(res.grad_norm) + ")");
    }
    // Gentle step growth so a conservative initial estimate recovers.
    step = std::min(step * 1.1, 2.0 * t * 4.0);
    step = std::max(step, t);
  }
  res.objective = f;
  if (!res.converged) {
    Eigen::VectorXd g = gradient(res.x, v);
    res.grad_norm = g.norm();
    res.converged = res.grad_norm <= tol;
  }
  if (!std::isfinite(f)) throw Diverged("fit_rerm: objective is not finite");
  return res;
}

// Closed-form ridge (square-loss) fit, as an independent check of fit_rerm.
inline Eigen::VectorXd fit_ridge_closed_form(const Dataset& data, double lambda,
                                             double delta) {
  const int m = static_cast<int>(data.A.rows());
  const int n = static_cast<int>(data.A.cols());
  // Objective (1/m) sum (y - a^T x)^2 + (lambda/(2 delta)) ||x||^2.
  Eigen::MatrixXd M = 2.0 * data.A.transpose() * data.A / m +
                      (lambda / delta) * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = 2.0 * data.A.transpose() * data.y / m;
  return M.ldlt().solve(rhs);
}

struct EmpiricalMetrics {
  double alpha_sq = 0.0;     // ||x - x0||^2 (linear)
  double mu = 0.0;           // x^T x0
  double sigma_sq = 0.0;     // (||x||^2 - (x^T x0)^2) / (x^T x0)^2
  double corr = 0.0;         // |x^T x0| / ||x||
  double class_error = 0.0;  // binary only, on fresh test points
};

inline EmpiricalMetrics empirical_metrics(const Dataset& data,
                                          const Eigen::VectorXd& x,
                                          const BinaryLink* link = nullptr,
                                          std::uint64_t test_seed = 1234567,
                                          int test_points = 100000) {
  EmpiricalMetrics em;
  const double dot = x.dot(data.x0);
  const double nx = x.norm();
  em.alpha_sq = (x - data.x0).squaredNorm();
  em.mu = dot;
  if (std::abs(dot) < 1e-12) {
    throw ZeroEstimate("empirical_metrics: estimate orthogonal to ground truth");
  }
  em.sigma_sq = (nx * nx - dot * dot) / (dot * dot);
  em.corr = std::abs(dot) / std::max(nx, 1e-300);
  if (data.binary && link != nullptr) {
    // P(sign(a^T x) != y) for fresh gaussian a: depends only on (mu, sigma).
    auto rng = detail::make_rng(test_seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const double sigma = std::sqrt(em.sigma_sq);
    std::vector<double> s(test_points);
    for (int i = 0; i < test_points; ++i) s[i] = nd(rng);
    const std::vector<int> labels =
        link->sample_labels(s, detail::splitmix64(test_seed ^ 0xdeadbeefull));
    int errors = 0;
    const double sgn_mu = em.mu >= 0 ? 1.0 : -1.0;
    for (int i = 0; i < test_points; ++i) {
      const double margin = sgn_mu * labels[i] * (s[i] + sigma * nd(rng));
      if (margin < 0) ++errors;
    }
    em.class_error = static_cast<double>(errors) / test_points;
  }
  return em;
}

struct TrialRecord {
  std::uint64_t seed = 0;
  EmpiricalMetrics metrics;
  int iterations = 0;
  bool converged = false;
};

struct MonteCarloResult {
  std::vector<TrialRecord> trials;
  double mean_alpha_sq = 0.0, se_alpha_sq = 0.0;
  double mean_sigma_sq = 0.0, se_sigma_sq = 0.0;
  double mean_mu = 0.0, se_mu = 0.0;
  double mean_class_error = 0.0, se_class_error = 0.0;
};

namespace detail {

inline void mean_se(const std::vector<double>& v, double& mean, double& se) {
  const std::size_t n = v.size();
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  se = n > 1 ? std::sqrt(ss / (static_cast<double>(n) * (n - 1.0))) : 0.0;
}

}  // namespace detail

// Runs `trials` independent fits; trial t uses seed splitmix64(master ^ t),
// so results are reproducible regardless of thread count.
inline MonteCarloResult run_monte_carlo(
    const std::function<TrialRecord(std::uint64_t trial_seed)>& run_trial,
    int trials, std::uint64_t master_seed) {
  if (trials < 1) throw DomainError("run_monte_carlo: trials must be >= 1");
  MonteCarloResult mc;
  mc.trials.resize(trials);
  std::atomic<int> next{0};
  std::vector<std::string> failures;
  std::mutex fail_mtx;
  auto worker = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= trials) return;
      const std::uint64_t seed =
          detail::splitmix64(master_seed ^ static_cast<std::uint64_t>(t + 1));
      try {
        mc.trials[t] = run_trial(seed);
        mc.trials[t].seed = seed;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(fail_mtx);
        failures.emplace_back(e.what());
      }
    }
  };
  const int nthreads = std::min(thread_budget(), trials);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (!failures.empty()) {
    throw NoConvergence("run_monte_carlo: " + std::to_string(failures.size()) +
                        " trial(s) failed; first: " + failures.front());
  }
  std::vector<double> a, s, mu, ce;
  for (const auto& tr : mc.trials) {
    a.push_back(tr.metrics.alpha_sq);
    s.push_back(tr.metrics.sigma_sq);
    mu.push_back(tr.metrics.mu);
    ce.push_back(tr.metrics.class_error);
  }
  detail::mean_se(a, mc.mean_alpha_sq, mc.se_alpha_sq);
  detail::mean_se(s, mc.mean_sigma_sq, mc.se_sigma_sq);
  detail::mean_se(mu, mc.mean_mu, mc.se_mu);
  detail::mean_se(ce, mc.mean_class_error, mc.se_class_error);
  return mc;
}

inline MonteCarloResult monte_carlo_linear(int n, double delta,
                                           const NoiseModel& noise,
                                           const Loss& loss, double lambda,
                                           int trials, std::uint64_t master_seed) {
  return run_monte_carlo(
      [&](std::uint64_t seed) {
        const Dataset d = generate_linear(n, delta, noise, seed);
        const FitResult fit = fit_rerm(d, loss, lambda, delta);
        TrialRecord tr;
        tr.metrics = empirical_metrics(d, fit.x);
        tr.iterations = fit.iterations;
        tr.converged = fit.converged;
        return tr;
      },
      trials, master_seed);
}

inline MonteCarloResult monte_carlo_binary(int n, double delta,
                                           const BinaryLink& link,
                                           const Loss& loss, double lambda,
                                           int trials, std::uint64_t master_seed) {
  return run_monte_carlo(
      [&](std::uint64_t seed) {
        const Dataset d = generate_binary(n, delta, link, seed);
        const FitResult fit = fit_rerm(d, loss, lambda, delta);
        TrialRecord tr;
        tr.metrics = empirical_metrics(d, fit.x, &link, detail::splitmix64(seed));
        tr.iterations = fit.iterations;
        tr.converged = fit.converged;
        return tr;
      },
      trials, master_seed);
}

}  // namespace ermlimits
