#pragma once

// Binary-model asymptotics: fixed-point solver for (alpha, mu, tau),
// correlation and classification-error maps, the sigma_star lower bound,
// H_delta closed forms, ridge-least-squares formulas, the optimal binary
// loss, the averaging estimator, and unregularized-gap bounds.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
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

// H_delta(x) = 2 / (-delta - x + delta x + sqrt((-delta-x+delta x)^2
//              + 4 delta (x-1))), strictly decreasing on x > 1.
inline double H_delta(double delta, double x) {
  if (!(delta > 0)) throw DomainError("H_delta: delta must be > 0");
  if (!(x > 1.0)) throw DomainError("H_delta: requires x > 1");
  const double t = -delta - x + delta * x;
  return 2.0 / (t + std::sqrt(t * t + 4.0 * delta * (x - 1.0)));
}

// Closed-form ridge least-squares error on binary margins, any lambda >= 0.
inline double rls_sigma_sq(double delta, double lambda, double nu) {
  if (!(delta > 0)) throw DomainError("rls_sigma_sq: delta must be > 0");
  if (lambda < 0) throw DomainError("rls_sigma_sq: lambda must be >= 0");
  if (lambda == 0.0 && delta <= 1.0) {
    throw DomainError("rls_sigma_sq: lambda = 0 requires delta > 1");
  }
  const double nu2 = nu * nu;
  const double root = std::sqrt(4.0 + 4.0 * delta * (lambda - 2.0) +
                                delta * delta * (lambda + 2.0) * (lambda + 2.0));
  return (1.0 - delta * nu2 +
          (2.0 + 2.0 * delta + lambda * delta +
           delta * nu2 * ((2.0 + lambda) * delta - 6.0)) /
              root) /
         (2.0 * delta * nu2);
}

inline double rls_lambda_opt_binary(double delta, double nu) {
  return 2.0 * (1.0 - nu * nu) / (delta * nu * nu);
}

// Classification error P(sigma G + Sf(S) < 0).
inline double classification_error(double sigma, const BinaryLink& link) {
  if (!(sigma > 0)) throw DomainError("classification_error: sigma must be > 0");
  return integrate(
      [&](double s) {
        const double fh = link.fhat(s);
        return norm_pdf(s) *
               (fh * norm_cdf(-s / sigma) + (1.0 - fh) * norm_cdf(s / sigma));
      },
      -12.0, 12.0, 1e-11);
}

struct BinarySolution {
  double alpha = 0.0;
  double mu = 0.0;
  double tau = 0.0;
  double sigma = 0.0;  // alpha / |mu|
  double rho = 0.0;    // 1 / sqrt(1 + sigma^2)
  double class_error = 0.0;
  double residual_norm = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  std::string loss;
};

namespace detail {

struct BinaryExpectations {
  double sfm = 0.0;  // E[Sf(S) M']
  double m2 = 0.0;   // E[(M')^2]
  double gm = 0.0;   // E[G M']
};

inline BinaryExpectations binary_expectations(const Loss& loss,
                                              const BinaryLink& link,
                                              double alpha, double mu, double tau,
                                              const QuadRule& g_rule,
                                              const QuadRule& s_rule) {
  BinaryExpectations e;
  for (std::size_t j = 0; j < s_rule.nodes.size(); ++j) {
    const double s = s_rule.nodes[j];
    const double ws = s_rule.weights[j] * norm_pdf(s);
    const double fh = link.fhat(s);
    double sfm = 0.0, m2 = 0.0, gm = 0.0;
    for (std::size_t i = 0; i < g_rule.nodes.size(); ++i) {
      const double g = g_rule.nodes[i];
      const double wg = g_rule.weights[i];
      // Sf(S) = +s with prob fhat(s), -s with prob 1 - fhat(s).
      const double mp = envelope_dx(loss, alpha * g + mu * s, tau);
      const double mm = envelope_dx(loss, alpha * g - mu * s, tau);
      sfm += wg * (fh * s * mp - (1.0 - fh) * s * mm);
      m2 += wg * (fh * mp * mp + (1.0 - fh) * mm * mm);
      gm += wg * g * (fh * mp + (1.0 - fh) * mm);
    }
    e.sfm += ws * sfm;
    e.m2 += ws * m2;
    e.gm += ws * gm;
  }
  return e;
}

}  // namespace detail

// Solve the binary-model fixed-point system for (alpha, mu, tau).
inline BinarySolution solve_system_binary(const Loss& loss, double lambda,
                                          double delta, const BinaryLink& link,
                                          int g_nodes = 48, int s_nodes = 48) {
  if (!(delta > 0)) throw DomainError("solve_system_binary: delta must be > 0");
  if (lambda < 0) throw DomainError("solve_system_binary: lambda must be >= 0");
  if (lambda == 0.0 && delta <= 1.0) {
    throw DomainError("solve_system_binary: lambda = 0 requires delta > 1");
  }
  const double nu = nu_f(link);
  if (std::abs(nu) < 1e-10) {
    throw AssumptionViolated("solve_system_binary: nu_f is (numerically) zero");
  }
  if (loss.has_deriv() && std::abs(loss.deriv(0.0)) < 1e-12) {
    throw AssumptionViolated("solve_system_binary: loss has L'(0) = 0");
  }

  const QuadRule& g_rule = gauss_hermite(g_nodes);
  // Split the S-quadrature at 0: the sign link (and near-sign links) make
  // the integrand kinked there.
  QuadRule s_rule = gauss_legendre(s_nodes, -12.0, 0.0);
  {
    const QuadRule pos = gauss_legendre(s_nodes, 0.0, 12.0);
    s_rule.nodes.insert(s_rule.nodes.end(), pos.nodes.begin(), pos.nodes.end());
    s_rule.weights.insert(s_rule.weights.end(), pos.weights.begin(),
                          pos.weights.end());
  }

  auto tau_of = [&](double v) {
    v = std::clamp(v, -40.0, 40.0);
    if (lambda > 0) return 1.0 / (1.0 + std::exp(-v)) / (lambda * delta);
    return std::exp(v);
  };
  auto residual = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    const double alpha = std::exp(std::clamp(u[0], -40.0, 40.0));
    const double mu = u[1];
    const double tau = tau_of(u[2]);
    const auto e = detail::binary_expectations(loss, link, alpha, mu, tau, g_rule, s_rule);
    Eigen::VectorXd r(3);
    // r[1], r[2] are normalized by powers of alpha so that the degenerate
    // ray alpha ~ tau -> 0 cannot pass an absolute tolerance.
    r[0] = e.sfm + lambda * mu;
    r[1] = (tau * tau * delta * e.m2 - alpha * alpha) / (alpha * alpha);
    r[2] = (tau * delta * e.gm - alpha * (1.0 - lambda * tau * delta)) / alpha;
    return r;
  };

  const double mu0 = std::abs(nu);
  std::vector<std::array<double, 3>> starts = {
      {std::log(0.5), mu0, 0.0},  {std::log(0.1), mu0, 0.0},
      {std::log(2.0), mu0, 0.0},  {std::log(0.5), 0.5 * mu0, 1.5},
      {std::log(0.5), 2.0 * mu0, -1.5}, {std::log(0.05), mu0, 1.5},
      {std::log(1.0), -mu0, 0.0}, {std::log(0.2), mu0, -1.5}};

  bool any = false;
  double sol_alpha = 0, sol_mu = 0, sol_tau = 0, sol_res = 0;
  for (const auto& s : starts) {
    Eigen::VectorXd u(3);
    u << s[0], s[1], s[2];
    if (!newton_solve(residual, u, 1e-10, 300)) continue;
    // The closure of the reparameterization contains a degenerate root at
    // alpha = tau = 0; reject convergence to that corner.
    if (u[0] < -25.0 || u[2] < -25.0) continue;
    double alpha = std::exp(u[0]);
    double mu = u[1];
    const double tau = tau_of(u[2]);
    const double rn = residual(u).lpNorm<Eigen::Infinity>();
    if (rn > 1e-7) continue;
    // Canonicalize mu > 0 when nu_f > 0 (mirror solutions report the same
    // sigma).
    if (nu > 0 && mu < 0) mu = -mu;
    if (any) {
      if (std::abs(alpha - sol_alpha) > 1e-5 * (1.0 + sol_alpha) ||
          std::abs(mu - sol_mu) > 1e-5 * (1.0 + std::abs(sol_mu)) ||
          std::abs(tau - sol_tau) > 1e-5 * (1.0 + sol_tau)) {
        throw MultipleSolutions("solve_system_binary: distinct fixed points found");
      }
    } else {
      any = true;
      sol_alpha = alpha;
      sol_mu = mu;
      sol_tau = tau;
      sol_res = rn;
    }
  }
  if (!any) {
    throw NoConvergence("solve_system_binary: no start converged (loss " +
                        loss.name() + ", lambda " + std::to_string(lambda) +
                        ", delta " + std::to_string(delta) + ")");
  }
  BinarySolution out;
  out.alpha = sol_alpha;
  out.mu = sol_mu;
  out.tau = sol_tau;
  out.sigma = sol_alpha / std::abs(sol_mu);
  out.rho = 1.0 / std::sqrt(1.0 + out.sigma * out.sigma);
  out.class_error = classification_error(out.sigma, link);
  out.residual_norm = sol_res;
  out.lambda = lambda;
  out.delta = delta;
  out.loss = loss.name();
  return out;
}

// Phi(s, x); the bound's defining equation is Phi = 1.
inline double phi(double s, double x, double delta, const BinaryLink& link) {
  if (!(s > 0)) throw DomainError("phi: s must be > 0");
  if (!(x >= 0 && x < 1.0 / delta)) throw DomainError("phi: x must lie in [0, 1/delta)");
  const double I = fisher_of_Ws(link, s);
  const double s2 = s * s;
  const double A = (1.0 - s2 * (1.0 - s2 * I)) / (delta * s2 * (s2 * I + I - 1.0));
  return A - 2.0 * x + x * x * delta * (1.0 + 1.0 / s2);
}

struct BinaryBound {
  double sigma_star = 0.0;
  double x_star = 0.0;
  double eta = 0.0;
  double fisher_at_star = 0.0;
  std::vector<std::pair<double, double>> diagnostics;
  double sigma_star_sq() const { return sigma_star * sigma_star; }
};

// Fundamental lower bound sigma_star; same 1D collapse as alpha_star:
//   C(s) = A(s) - s^2 / (delta (1 + s^2)) - 1 = 0, first root in s,
//   x_star = s^2 / (delta (1 + s^2)).
inline BinaryBound sigma_star(double delta, const BinaryLink& link) {
  if (!(delta > 0)) throw DomainError("sigma_star: delta must be > 0");
  const double nu = nu_f(link);
  if (std::abs(nu) < 1e-10) {
    throw AssumptionViolated("sigma_star: nu_f is (numerically) zero");
  }
  BinaryBound out;
  auto criterion = [&](double s) {
    const double I = fisher_of_Ws(link, s);
    const double s2 = s * s;
    const double A = (1.0 - s2 * (1.0 - s2 * I)) / (delta * s2 * (s2 * I + I - 1.0));
    const double val = A - s2 / (delta * (1.0 + s2)) - 1.0;
    out.diagnostics.emplace_back(s, val);
    return val;
  };
  double s0 = 1e-2;
  while (criterion(s0) < 0 && s0 > 1e-10) s0 *= 0.5;
  double s;
  try {
    // Criterion starts positive (A -> +inf as s -> 0) and first crosses zero
    // at sigma_star; negate so the scan finds a minus-to-plus crossing.
    auto neg = [&](double t) { return -criterion(t); };
    s = first_root_geometric(neg, s0, 1.2, 1e4, 1e-14);
  } catch (const NoConvergence&) {
    throw GlobalInfeasible("sigma_star: no feasible crossing found");
  }
  const double I = fisher_of_Ws(link, s);
  out.sigma_star = s;
  out.fisher_at_star = I;
  out.x_star = s * s / (delta * (1.0 + s * s));
  const double ld = out.x_star * delta;
  out.eta = 1.0 - I * (s * s - s * s * ld - ld) - ld;
  return out;
}

// Literal 2D computation (per-x smallest root of Phi = 1 on a Chebyshev grid
// plus golden-section refinement); cross-check oracle for sigma_star.
inline std::pair<double, double> sigma_star_grid(double delta,
                                                 const BinaryLink& link,
                                                 int nx = 64) {
  auto root_for_x = [&](double x) -> double {
    auto f = [&](double s) { return 1.0 - phi(s, x, delta, link); };
    double lo = 1e-3;
    double flo = f(lo);
    if (flo > 0) return std::numeric_limits<double>::quiet_NaN();
    for (double hi = lo * 1.05; hi < 1e4; hi *= 1.05) {
      const double fhi = f(hi);
      if (fhi >= 0) return find_root(f, lo, hi, flo, fhi, 1e-13);
      lo = hi;
      flo = fhi;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double xmax = (1.0 - 1e-6) / delta;
  double best_s = std::numeric_limits<double>::infinity();
  double best_x = 0.0;
  bool feasible = false;
  for (int k = 0; k < nx; ++k) {
    const double x = 0.5 * xmax * (1.0 - std::cos(kPi * k / (nx - 1)));
    const double s = root_for_x(x);
    if (std::isfinite(s)) {
      feasible = true;
      if (s < best_s) {
        best_s = s;
        best_x = x;
      }
    }
  }
  if (!feasible) throw GlobalInfeasible("sigma_star_grid: no x admits a root");
  const double span = xmax / (nx - 1);
  auto obj = [&](double x) {
    const double s = root_for_x(x);
    return std::isfinite(s) ? s : 1e30;
  };
  auto r = minimize(obj, std::max(0.0, best_x - 2.0 * span),
                    std::min(xmax, best_x + 2.0 * span), 40);
  if (r.second < best_s) {
    best_s = r.second;
    best_x = r.first;
  }
  return {best_s, best_x};
}

struct OmegaBigResult {
  double omega = 0.0;             // H_delta(I(SfS)) / H_delta(1/(1-nu^2))
  double sigma_star_sq_lower = 0.0;  // H_delta(I(SfS))
  double fisher_sfs = 0.0;
  double nu = 0.0;
};

inline OmegaBigResult omega_big_delta(double delta, const BinaryLink& link) {
  OmegaBigResult r;
  r.nu = nu_f(link);
  r.fisher_sfs = effective_label_density(link).fisher();
  const double rls = H_delta(delta, 1.0 / (1.0 - r.nu * r.nu));
  if (!std::isfinite(r.fisher_sfs)) {
    // A density jump (sign link) gives infinite information: the closed-form
    // lower bound degenerates to zero.
    r.omega = 0.0;
    r.sigma_star_sq_lower = 0.0;
    return r;
  }
  if (r.fisher_sfs <= 1.0) {
    throw DomainError("omega_big_delta: I(Sf(S)) must exceed 1");
  }
  r.sigma_star_sq_lower = H_delta(delta, r.fisher_sfs);
  r.omega = r.sigma_star_sq_lower / rls;
  return r;
}

struct AveragingResult {
  double sigma_ave_sq = 0.0;   // 1/(delta nu^2)
  double crossover_delta = 0.0;  // nu^{-2}
  double sandwich_lower = 0.0;   // delta nu^2 H_delta(I(SfS)), or 0 if I = inf
};

inline AveragingResult averaging(double delta, const BinaryLink& link) {
  AveragingResult r;
  const double nu = nu_f(link);
  if (std::abs(nu) < 1e-10) {
    throw AssumptionViolated("averaging: nu_f is (numerically) zero");
  }
  r.sigma_ave_sq = 1.0 / (delta * nu * nu);
  r.crossover_delta = 1.0 / (nu * nu);
  const double I = effective_label_density(link).fisher();
  r.sandwich_lower =
      std::isfinite(I) ? delta * nu * nu * H_delta(delta, I) : 0.0;
  return r;
}

struct UnregGapBinary {
  double ratio_lower = 0.0;
  double ratio_upper = 0.0;
};

inline UnregGapBinary unreg_gap_binary(double delta, const BinaryLink& link) {
  if (!(delta > 1.0)) throw DomainError("unreg_gap_binary: requires delta > 1");
  const double nu = nu_f(link);
  const double nu2 = nu * nu;
  const double I = effective_label_density(link).fisher();
  UnregGapBinary g;
  if (std::isfinite(I)) {
    g.ratio_lower = (delta - 1.0) * nu2 * H_delta(delta, I) / (1.0 - nu2);
    g.ratio_upper = std::min((delta - 1.0) / delta * (I - 1.0) / nu2, 1.0);
  } else {
    g.ratio_lower = 0.0;
    g.ratio_upper = 1.0;
  }
  return g;
}

struct OptimalBinaryLoss {
  TabulatedLoss loss;
  double lambda_star = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double eta = 0.0;
  double sigma_star = 0.0;
  double verify_alpha_dev = 0.0;
  double verify_mu_dev = 0.0;
  double verify_tau_dev = 0.0;
};

// Construct the correlation-optimal binary loss:
// L*(x) = -envelope(c1 Q + c2 log p_{W*}; x; 1), Q(w) = w^2/2,
// c1 = eta (lstar delta - 1) / (delta (eta - I(W*))),
// c2 = (lstar delta - 1) / (delta (eta - I(W*))).
inline OptimalBinaryLoss optimal_loss_binary(double delta, const BinaryLink& link,
                                             int grid_points = 4001,
                                             bool verify = true) {
  const BinaryBound bound = sigma_star(delta, link);
  const double ss = bound.sigma_star;
  const double ls = bound.x_star;
  const double I = bound.fisher_at_star;
  const double eta = bound.eta;
  if (std::abs(eta - I) < 1e-10) {
    throw DegenerateEta("optimal_loss_binary: eta is numerically equal to I(W*)");
  }
  const double c2 = (ls * delta - 1.0) / (delta * (eta - I));
  const double c1 = eta * c2;
  auto density = convolve(link, ss);

  const double L = density->halfwidth();
  {
    // Coercivity check at the tails of the inner objective
    // (x-v)^2/2 + c1 v^2/2 + c2 log p(v).
    const double v0 = 0.9 * L, hh = 1e-3 * L;
    const double k =
        -c1 - c2 *
                  (density->log_pdf(v0 + hh) - 2.0 * density->log_pdf(v0) +
                   density->log_pdf(v0 - hh)) /
                  (hh * hh);
    if (k >= 1.0 - 1e-9) {
      throw NonCoercive("optimal_loss_binary: inner envelope diverges (tail rate " +
                        std::to_string(k) + ")");
    }
  }

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

  auto inner = [&](double v) { return 0.5 * c1 * v * v + c2 * logp.eval(v); };

  std::vector<double> vals(grid_points), ders(grid_points);
  const double step = 2.0 * L / (grid_points - 1);
  double vprev = -L;
  for (int i = 0; i < grid_points; ++i) {
    const double x = -L + i * step;
    double lo = std::min(vprev, x) - 1.0 - 4.0 * step;
    double hi = std::max(vprev, x) + 1.0 + 4.0 * step;
    auto q = [&](double v) {
      const double d = x - v;
      return 0.5 * d * d + inner(v);
    };
    for (int round = 0; round < 60; ++round) {
      const double eps = 1e-6 * (hi - lo);
      const bool ok_lo = q(lo) > q(lo + eps);
      const bool ok_hi = q(hi) > q(hi - eps);
      if (ok_lo && ok_hi) break;
      const double w = hi - lo;
      if (!ok_lo) lo -= w;
      if (!ok_hi) hi += w;
      if (hi - lo > 1e7) {
        throw NonCoercive("optimal_loss_binary: inner minimization diverges");
      }
    }
    auto r = minimize(q, lo, hi, 48);
    vprev = r.first;
    vals[i] = -r.second;
    ders[i] = r.first - x;
  }
  TabulatedLoss loss = TabulatedLoss::from_samples(-L, L, std::move(vals),
                                                   std::move(ders),
                                                   "optimal-binary");

  OptimalBinaryLoss out{std::move(loss), ls, c1, c2, eta, ss, 0.0, 0.0, 0.0};
  if (verify) {
    const BinarySolution sol = solve_system_binary(out.loss, ls, delta, link);
    out.verify_alpha_dev = std::abs(sol.alpha - ss);
    out.verify_mu_dev = std::abs(sol.mu - 1.0);
    out.verify_tau_dev = std::abs(sol.tau - 1.0);
  }
  return out;
}

}  // namespace ermlimits
