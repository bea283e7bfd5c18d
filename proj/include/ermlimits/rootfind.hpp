#pragma once

// 1D root finding / minimization helpers and a damped Newton solver for small
// nonlinear systems (finite-difference Jacobian, Eigen linear solve).

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "ermlimits/errors.hpp"

namespace ermlimits {

// Root of f on [a, b] with f(a), f(b) of opposite sign.
template <typename F>
double find_root(F&& f, double a, double b, double fa, double fb,
                 double rel_tol = 1e-13) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0)) {
    throw NoConvergence("find_root: endpoints do not bracket a root");
  }
  auto tol = [rel_tol](double lo, double hi) {
    return hi - lo <= rel_tol * (std::abs(lo) + std::abs(hi)) + 1e-300;
  };
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (r.first + r.second);
}

template <typename F>
double find_root(F&& f, double a, double b, double rel_tol = 1e-13) {
  return find_root(f, a, b, f(a), f(b), rel_tol);
}

// First root of f along a geometric scan a0 * grow^k, k = 0..; f is expected
// to start with one sign and eventually flip.
template <typename F>
double first_root_geometric(F&& f, double a0, double grow, double a_max,
                            double rel_tol = 1e-13) {
  double lo = a0;
  double flo = f(lo);
  if (flo == 0.0) return lo;
  for (double hi = lo * grow; hi <= a_max * grow; hi *= grow) {
    const double fhi = f(hi);
    if ((flo > 0) != (fhi > 0)) {
      return find_root(f, lo, hi, flo, fhi, rel_tol);
    }
    lo = hi;
    flo = fhi;
  }
  throw NoConvergence("first_root_geometric: no sign change up to a_max");
}

// Minimize a unimodal function on [a, b] (Brent).
template <typename F>
std::pair<double, double> minimize(F&& f, double a, double b, int bits = 40) {
  auto r = boost::math::tools::brent_find_minima(f, a, b, bits);
  return {r.first, r.second};
}

// Damped Newton with finite-difference Jacobian for small systems.
// Returns true on convergence (residual inf-norm < tol).
inline bool newton_solve(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    Eigen::VectorXd& u, double tol = 1e-11, int max_iters = 200) {
  const int n = static_cast<int>(u.size());
  Eigen::VectorXd r = residual(u);
  if (!r.allFinite()) return false;
  double rn = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iters; ++it) {
    if (rn < tol) return true;
    Eigen::MatrixXd J(n, n);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(u[j]));
      Eigen::VectorXd up = u;
      up[j] += h;
      Eigen::VectorXd rp = residual(up);
      if (!rp.allFinite()) return false;
      J.col(j) = (rp - r) / h;
    }
    Eigen::VectorXd step = J.fullPivLu().solve(-r);
    if (!step.allFinite()) return false;
    // Trust-region cap: reparameterized unknowns live on O(1) scales, so a
    // huge Newton step signals a near-singular Jacobian.
    const double sn = step.lpNorm<Eigen::Infinity>();
    if (sn > 5.0) step *= 5.0 / sn;
    // Backtracking on the residual norm.
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd ut = u + t * step;
      Eigen::VectorXd rt = residual(ut);
      if (rt.allFinite()) {
        const double rtn = rt.lpNorm<Eigen::Infinity>();
        if (rtn < rn * (1.0 - 1e-4 * t) || rtn < tol) {
          u = ut;
          r = rt;
          rn = rtn;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) return rn < 10 * tol;
  }
  return rn < tol;
}

}  // namespace ermlimits
