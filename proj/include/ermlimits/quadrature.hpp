#pragma once

// Quadrature utilities: adaptive Gauss-Kronrod wrappers and fixed Gaussian
// rules (Hermite / Legendre) generated by Golub-Welsch.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "ermlimits/errors.hpp"
#include "ermlimits/special.hpp"

namespace ermlimits {

// Adaptive Gauss-Kronrod integration on [a, b].
template <typename F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 unsigned max_depth = 15) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double error = 0.0;
  const double val = GK::integrate(f, a, b, max_depth, rel_tol, &error);
  if (!std::isfinite(val)) {
    throw QuadratureFailure("integrate: non-finite result");
  }
  return val;
}

// Integration with interior breakpoints (integrand kinks / jumps).
template <typename F>
double integrate_segmented(F&& f, double a, double b,
                           const std::vector<double>& breaks,
                           double rel_tol = 1e-10, unsigned max_depth = 15) {
  std::vector<double> pts;
  pts.push_back(a);
  for (double p : breaks) {
    if (p > a && p < b) pts.push_back(p);
  }
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += integrate(f, pts[i], pts[i + 1], rel_tol, max_depth);
  }
  return total;
}

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <typename F>
  double sum(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

namespace detail {

// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
// matrix; weights are mu0 * (first eigenvector component)^2.
inline QuadRule golub_welsch(const std::vector<double>& diag,
                             const std::vector<double>& offdiag, double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) J(i, i) = diag[i];
  for (int i = 0; i + 1 < n; ++i) {
    J(i, i + 1) = offdiag[i];
    J(i + 1, i) = offdiag[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace detail

// Probabilists' Gauss-Hermite rule: sum w_i f(x_i) ~ E[f(G)], G ~ N(0,1).
inline const QuadRule& gauss_hermite(int n) {
  thread_local std::map<int, QuadRule> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<double> diag(n, 0.0), off(n - 1);
    for (int i = 0; i + 1 < n; ++i) off[i] = std::sqrt(i + 1.0);
    it = cache.emplace(n, detail::golub_welsch(diag, off, 1.0)).first;
  }
  return it->second;
}

// Gauss-Legendre rule on [a, b].
inline QuadRule gauss_legendre(int n, double a, double b) {
  thread_local std::map<int, QuadRule> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<double> diag(n, 0.0), off(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
      const double k = i + 1.0;
      off[i] = k / std::sqrt(4.0 * k * k - 1.0);
    }
    it = cache.emplace(n, detail::golub_welsch(diag, off, 2.0)).first;
  }
  QuadRule rule = it->second;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

}  // namespace ermlimits
