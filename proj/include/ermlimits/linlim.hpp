#pragma once

// Linear-model asymptotics: fixed-point solver for the (alpha, tau) system,
// the fundamental lower bound alpha_star, closed-form h_delta bounds,
// ridge-least-squares formulas, suboptimality ratios, the optimal loss
// constructor, and unregularized-gap bounds.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ermlimits/dists.hpp"
#include "ermlimits/errors.hpp"
#include "ermlimits/moreau.hpp"
#include "ermlimits/quadrature.hpp"
#include "ermlimits/rootfind.hpp"
#include "ermlimits/smooth.hpp"

namespace ermlimits {

// h_delta(x) = (1/2)(1 - x - delta + sqrt((1+delta+x)^2 - 4 delta)),
// strictly increasing in x >= 0.
inline double h_delta(double delta, double x) {
  if (!(delta > 0)) throw DomainError("h_delta: delta must be > 0");
  if (x < 0) throw DomainError("h_delta: x must be >= 0");
  const double s = 1.0 + delta + x;
  return 0.5 * (1.0 - x - delta + std::sqrt(s * s - 4.0 * delta));
}

// Closed-form ridge least-squares error (square loss), any lambda >= 0.
inline double rls_alpha_sq(double delta, double lambda, double second_moment) {
  if (!(delta > 0)) throw DomainError("rls_alpha_sq: delta must be > 0");
  if (lambda < 0) throw DomainError("rls_alpha_sq: lambda must be >= 0");
  if (lambda == 0.0 && delta <= 1.0) {
    throw DomainError("rls_alpha_sq: lambda = 0 requires delta > 1");
  }
  const double E = second_moment;
  const double root = std::sqrt((lambda + 2.0 * delta - 2.0) * (lambda + 2.0 * delta - 2.0) +
                                8.0 * lambda);
  return 0.5 * (1.0 - E - delta) +
         (E * (lambda + 2.0 * delta + 2.0) + 2.0 * (delta - 1.0) * (delta - 1.0) +
          lambda * (delta + 1.0)) /
             (2.0 * root);
}

struct LinearSolution {
  double alpha = 0.0;
  double tau = 0.0;
  double residual_norm = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  std::string loss;
  // Derived metric for convenience.
  double alpha_sq() const { return alpha * alpha; }
};

namespace detail {

struct LinearExpectations {
  double m2 = 0.0;   // E[(M')^2]
  double gm = 0.0;   // E[G M']
};

// Tensorized expectation over G ~ N(0,1) and Z ~ noise of the envelope
// x-derivative at alpha G + Z with parameter tau.
inline LinearExpectations linear_expectations(const Loss& loss, double alpha,
                                              double tau, const QuadRule& g_rule,
                                              const QuadRule& z_rule) {
  LinearExpectations e;
  for (std::size_t i = 0; i < g_rule.nodes.size(); ++i) {
    const double g = g_rule.nodes[i];
    const double wg = g_rule.weights[i];
    double m2 = 0.0, gm = 0.0;
    for (std::size_t j = 0; j < z_rule.nodes.size(); ++j) {
      const double x = alpha * g + z_rule.nodes[j];
      const double md = envelope_dx(loss, x, tau);
      m2 += z_rule.weights[j] * md * md;
      gm += z_rule.weights[j] * md;
    }
    e.m2 += wg * m2;
    e.gm += wg * g * gm;
  }
  return e;
}

}  // namespace detail

// Solve the linear-model fixed-point system for (alpha, tau).
inline LinearSolution solve_system_linear(const Loss& loss, double lambda,
                                          double delta, const NoiseModel& noise,
                                          int g_nodes = 48, int z_nodes = 48) {
  if (!(delta > 0)) throw DomainError("solve_system_linear: delta must be > 0");
  if (lambda < 0) throw DomainError("solve_system_linear: lambda must be >= 0");
  if (lambda == 0.0 && delta <= 1.0) {
    throw DomainError("solve_system_linear: lambda = 0 requires delta > 1");
  }
  const QuadRule& g_rule = gauss_hermite(g_nodes);
  const QuadRule z_rule = noise.expectation_rule(z_nodes);

  // The user-facing lambda follows the ridge-formula normalization (the one
  // in which the square-loss optimum sits at lambda = 2 E[Z^2]); the
  // fixed-point equations use ls = lambda / delta.
  const double ls = lambda / delta;

  // Unknowns u = (log alpha, v) where v parameterizes tau:
  //   lambda > 0: tau = sigmoid(v) / (ls delta)  (0 < tau < 1/(ls delta))
  //   lambda = 0: tau = exp(v)
  auto tau_of = [&](double v) {
    v = std::clamp(v, -40.0, 40.0);
    if (lambda > 0) return 1.0 / (1.0 + std::exp(-v)) / (ls * delta);
    return std::exp(v);
  };
  auto residual = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    const double alpha = std::exp(std::clamp(u[0], -40.0, 40.0));
    const double tau = tau_of(u[1]);
    const auto e = detail::linear_expectations(loss, alpha, tau, g_rule, z_rule);
    Eigen::VectorXd r(2);
    // Normalized by powers of alpha: the raw residuals vanish along the
    // degenerate ray alpha ~ tau -> 0, which would otherwise pass an
    // absolute tolerance.
    r[0] = (delta * tau * tau * e.m2 -
            (alpha * alpha - ls * ls * delta * delta * tau * tau)) /
           (alpha * alpha);
    r[1] = (delta * tau * e.gm - alpha * (1.0 - ls * delta * tau)) / alpha;
    return r;
  };

  const double a0 = std::sqrt(std::max(noise.second_moment(), 1e-2));
  std::vector<std::array<double, 2>> starts;
  for (double la : {std::log(a0), std::log(0.3 * a0), std::log(3.0 * a0), std::log(0.05 * a0)}) {
    for (double v : {0.0, 2.0}) starts.push_back({la, v});
  }

  bool any = false;
  Eigen::VectorXd sol(2);
  double sol_alpha = 0.0, sol_tau = 0.0, sol_res = 0.0;
  for (const auto& s : starts) {
    Eigen::VectorXd u(2);
    u << s[0], s[1];
    if (!newton_solve(residual, u, 1e-10, 300)) continue;
    // The closure of the reparameterization contains a degenerate root at
    // alpha = tau = 0; reject convergence to that corner.
    if (u[0] < -25.0 || u[1] < -25.0) continue;
    const double alpha = std::exp(u[0]);
    const double tau = tau_of(u[1]);
    const double rn = residual(u).lpNorm<Eigen::Infinity>();
    if (rn > 1e-7) continue;
    if (any) {
      if (std::abs(alpha - sol_alpha) > 1e-5 * (1.0 + sol_alpha) ||
          std::abs(tau - sol_tau) > 1e-5 * (1.0 + sol_tau)) {
        throw MultipleSolutions(
            "solve_system_linear: distinct fixed points found (alpha " +
            std::to_string(sol_alpha) + " vs " + std::to_string(alpha) + ")");
      }
    } else {
      any = true;
      sol = u;
      sol_alpha = alpha;
      sol_tau = tau;
      sol_res = rn;
    }
  }
  if (!any) {
    throw NoConvergence("solve_system_linear: no start converged (loss " +
                        loss.name() + ", lambda " + std::to_string(lambda) +
                        ", delta " + std::to_string(delta) + ")");
  }
  LinearSolution out;
  out.alpha = sol_alpha;
  out.tau = sol_tau;
  out.residual_norm = sol_res;
  out.lambda = lambda;
  out.delta = delta;
  out.loss = loss.name();
  return out;
}

// Psi(a, x) = (a^2 - x^2 delta^2) I(V_a) / (1 - x delta)^2; the bound's
// defining equation is Psi = 1/delta.
inline double psi(double a, double x, double delta, const NoiseModel& noise) {
  if (!(x >= 0 && x < 1.0 / delta)) {
    throw DomainError("psi: x must lie in [0, 1/delta)");
  }
  const double I = fisher_of_Va(noise, a);
  const double num = (a * a - x * x * delta * delta) * I;
  const double den = (1.0 - x * delta) * (1.0 - x * delta);
  return num / den;
}

struct LinearBound {
  double alpha_star = 0.0;
  double x_star = 0.0;  // reported as the optimal ridge parameter
  double fisher_at_star = 0.0;
  // Scan diagnostics: (a, criterion value) pairs along the root search.
  std::vector<std::pair<double, double>> diagnostics;
  double alpha_star_sq() const { return alpha_star * alpha_star; }
};

// Fundamental lower bound alpha_star. The 2D minimization over x collapses
// to a 1D first-root problem: for fixed a the crossing condition is a
// quadratic in x whose discriminant vanishes exactly when
//   C(a) = delta a^2 I(V_a) - 1 + 1/(delta I(V_a) + 1) = 0,
// and the minimizing x is x = 1/(delta (delta I(V_a) + 1)).
inline LinearBound alpha_star(double delta, const NoiseModel& noise) {
  if (!(delta > 0)) throw DomainError("alpha_star: delta must be > 0");
  LinearBound out;
  auto criterion = [&](double a) {
    const double I = fisher_of_Va(noise, a);
    const double val = delta * a * a * I - 1.0 + 1.0 / (delta * I + 1.0);
    out.diagnostics.emplace_back(a, val);
    return val;
  };
  const double scale = std::sqrt(noise.second_moment());
  double a0 = 1e-3 * scale;
  while (criterion(a0) > 0 && a0 > 1e-12 * scale) a0 *= 0.1;
  double a;
  try {
    a = first_root_geometric(criterion, a0, 1.2, 1e4 * scale, 1e-14);
  } catch (const NoConvergence&) {
    throw GlobalInfeasible("alpha_star: no feasible crossing found");
  }
  const double I = fisher_of_Va(noise, a);
  out.alpha_star = a;
  out.fisher_at_star = I;
  out.x_star = 1.0 / (delta * (delta * I + 1.0));
  return out;
}

// Literal 2D computation of the bound: per-x smallest root of
// Psi(a, x) = 1/delta on a Chebyshev x-grid, then golden-section refinement
// of the outer minimization. Slower than alpha_star; retained as a
// cross-check oracle.
inline std::pair<double, double> alpha_star_grid(double delta,
                                                 const NoiseModel& noise,
                                                 int nx = 64) {
  const double target = 1.0 / delta;
  const double scale = std::sqrt(noise.second_moment());
  auto root_for_x = [&](double x) -> double {
    auto f = [&](double a) { return psi(a, x, delta, noise) - target; };
    double lo = std::max(x * delta * (1.0 + 1e-9), 1e-4 * scale);
    double flo = f(lo);
    if (flo > 0) return std::numeric_limits<double>::quiet_NaN();
    for (double hi = lo * 1.05; hi < 1e4 * scale; hi *= 1.05) {
      const double fhi = f(hi);
      if (fhi >= 0) return find_root(f, lo, hi, flo, fhi, 1e-13);
      lo = hi;
      flo = fhi;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double xmax = (1.0 - 1e-6) / delta;
  double best_a = std::numeric_limits<double>::infinity();
  double best_x = 0.0;
  bool feasible = false;
  std::vector<double> xs(nx);
  for (int k = 0; k < nx; ++k) {
    // Chebyshev points on [0, xmax].
    xs[k] = 0.5 * xmax * (1.0 - std::cos(kPi * k / (nx - 1)));
  }
  for (double x : xs) {
    const double a = root_for_x(x);
    if (std::isfinite(a)) {
      feasible = true;
      if (a < best_a) {
        best_a = a;
        best_x = x;
      }
    }
  }
  if (!feasible) throw GlobalInfeasible("alpha_star_grid: no x admits a root");
  const double span = xmax / (nx - 1);
  const double lo = std::max(0.0, best_x - 2.0 * span);
  const double hi = std::min(xmax, best_x + 2.0 * span);
  auto obj = [&](double x) {
    const double a = root_for_x(x);
    return std::isfinite(a) ? a : 1e30;
  };
  auto r = minimize(obj, lo, hi, 40);
  if (r.second < best_a) {
    best_a = r.second;
    best_x = r.first;
  }
  return {best_a, best_x};
}

struct OmegaResult {
  double omega = 1.0;        // h_delta(1/I(Z)) / h_delta(E[Z^2])
  double lower_overparam = 0.0;  // 1 - delta
  double lower_fisher = 0.0;     // 1/(I(Z) E[Z^2])
};

inline OmegaResult omega_delta(double delta, const NoiseModel& noise) {
  OmegaResult r;
  const double I = noise.fisher();
  const double E = noise.second_moment();
  r.omega = h_delta(delta, 1.0 / I) / h_delta(delta, E);
  r.lower_overparam = 1.0 - delta;
  r.lower_fisher = 1.0 / (I * E);
  return r;
}

struct UnregGapLinear {
  double ratio_lower = 0.0;       // lower bound on alpha_star^2 / alpha_ureg^2
  double ratio_upper = 0.0;       // upper bound on the same ratio
  double alpha_ureg_sq_lower = 0.0;
};

inline UnregGapLinear unreg_gap_linear(double delta, const NoiseModel& noise) {
  if (!(delta > 1.0)) throw DomainError("unreg_gap_linear: requires delta > 1");
  const double I = noise.fisher();
  UnregGapLinear g;
  g.ratio_lower = (delta - 1.0) * h_delta(delta, 1.0 / I) / noise.second_moment();
  g.ratio_upper = std::min((delta - 1.0) * I, 1.0);
  g.alpha_ureg_sq_lower = 1.0 / ((delta - 1.0) * I);
  return g;
}

struct OptimalLinearLoss {
  TabulatedLoss loss;
  double lambda_star = 0.0;
  double c = 0.0;
  double alpha_star = 0.0;
  // Deviation of the re-solved system from (alpha_star, 1).
  double verify_alpha_dev = 0.0;
  double verify_tau_dev = 0.0;
};

// Construct the error-optimal loss: L*(v) = -envelope(c log p_{V*}; v; 1)
// with c = (alpha*^2 - lstar^2 delta^2) / (1 - lstar delta), lstar = x_star.
inline OptimalLinearLoss optimal_loss_linear(double delta, const NoiseModel& noise,
                                             int grid_points = 4001,
                                             bool verify = true) {
  const LinearBound bound = alpha_star(delta, noise);
  const double as = bound.alpha_star;
  const double ls = bound.x_star;
  const double c = (as * as - ls * ls * delta * delta) / (1.0 - ls * delta);
  auto density = convolve(noise, as);

  const double L = density->halfwidth();
  // Coercivity: the inner objective (x-v)^2/2 + c log p(v) must grow at the
  // tails; estimate the quadratic decay rate of c log p there.
  {
    const double v0 = 0.9 * L, hh = 1e-3 * L;
    const double k = -c *
                     (density->log_pdf(v0 + hh) - 2.0 * density->log_pdf(v0) +
                      density->log_pdf(v0 - hh)) /
                     (hh * hh);
    if (k >= 1.0 - 1e-9) {
      throw NonCoercive("optimal_loss_linear: inner envelope diverges (tail rate " +
                        std::to_string(k) + ")");
    }
  }

  // Pre-tabulate log p for speed, then tabulate the loss by continuation.
  const int dn = 4001;
  HermiteTable logp;
  logp.xmin = -L;
  logp.dx = 2.0 * L / (dn - 1);
  logp.vals.resize(dn);
  logp.ders.resize(dn);
  for (int i = 0; i < dn; ++i) {
    const double v = -L + i * logp.dx;
    logp.vals[i] = density->log_pdf(v);
    logp.ders[i] = density->score(v);
  }
  logp.curv_lo = (logp.ders[1] - logp.ders[0]) / logp.dx;
  logp.curv_hi = (logp.ders[dn - 1] - logp.ders[dn - 2]) / logp.dx;

  auto inner = [&](double v) { return c * logp.eval(v); };

  std::vector<double> vals(grid_points), ders(grid_points);
  const double step = 2.0 * L / (grid_points - 1);
  double vprev = -L;
  for (int i = 0; i < grid_points; ++i) {
    const double x = -L + i * step;
    // Minimize q(v) = (x-v)^2/2 + c log p(v), warm-started at the previous
    // minimizer (the minimizer moves continuously in x).
    double lo = std::min(vprev, x) - 1.0 - 4.0 * step;
    double hi = std::max(vprev, x) + 1.0 + 4.0 * step;
    auto q = [&](double v) {
      const double d = x - v;
      return 0.5 * d * d + inner(v);
    };
    for (int round = 0; round < 60; ++round) {
      const double eps = 1e-6 * (hi - lo);
      // The bracket holds a minimum when q decreases moving inward from both
      // ends.
      const bool ok_lo = q(lo) > q(lo + eps);
      const bool ok_hi = q(hi) > q(hi - eps);
      if (ok_lo && ok_hi) break;
      const double w = hi - lo;
      if (!ok_lo) lo -= w;
      if (!ok_hi) hi += w;
      if (hi - lo > 1e7) {
        throw NonCoercive("optimal_loss_linear: inner minimization diverges");
      }
    }
    auto r = minimize(q, lo, hi, 48);
    vprev = r.first;
    vals[i] = -r.second;
    ders[i] = r.first - x;
  }
  TabulatedLoss loss = TabulatedLoss::from_samples(-L, L, std::move(vals),
                                                   std::move(ders),
                                                   "optimal-linear");

  // lambda_star is reported in the same user-facing normalization accepted
  // by solve_system_linear, i.e. delta times the bound's x_star.
  OptimalLinearLoss out{std::move(loss), ls * delta, c, as, 0.0, 0.0};
  if (verify) {
    const LinearSolution sol =
        solve_system_linear(out.loss, out.lambda_star, delta, noise);
    out.verify_alpha_dev = std::abs(sol.alpha - as);
    out.verify_tau_dev = std::abs(sol.tau - 1.0);
  }
  return out;
}

// Map a problem with ||x0|| = r to the canonical unit-norm problem:
// noise scale divides by r (the loss and ridge rescalings are
// Ltilde(t) = L(r t), lambda_tilde = r^2 lambda).
inline NoiseModel rescale_noise(const NoiseModel& noise, double r) {
  if (!(r > 0)) throw DomainError("rescale_noise: r must be > 0");
  switch (noise.kind()) {
    case NoiseKind::Gaussian:
      return NoiseModel::gaussian(noise.param() / (r * r));
    case NoiseKind::Laplace:
      return NoiseModel::laplace(noise.param() / r);
    case NoiseKind::Custom:
      throw DomainError("rescale_noise: custom noise cannot be rescaled");
  }
  throw DomainError("rescale_noise: unknown noise kind");
}

}  // namespace ermlimits
