#pragma once

// Loss abstraction with proximal operator, Moreau envelope, envelope
// derivatives, and envelope inversion.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ermlimits/errors.hpp"
#include "ermlimits/rootfind.hpp"

namespace ermlimits {

// Cubic Hermite interpolation on a uniform grid with quadratic continuation
// (matched value and slope) beyond the ends.
struct HermiteTable {
  double xmin = 0.0, dx = 1.0;
  std::vector<double> vals, ders;
  // Curvature of the quadratic continuation on each side.
  double curv_lo = 0.0, curv_hi = 0.0;

  double xmax() const { return xmin + dx * (vals.size() - 1); }

  double eval(double x) const {
    if (x <= xmin) {
      const double d = x - xmin;
      return vals.front() + ders.front() * d + 0.5 * curv_lo * d * d;
    }
    if (x >= xmax()) {
      const double d = x - xmax();
      return vals.back() + ders.back() * d + 0.5 * curv_hi * d * d;
    }
    const auto [i, t] = locate(x);
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    return h00 * vals[i] + h10 * dx * ders[i] + h01 * vals[i + 1] +
           h11 * dx * ders[i + 1];
  }

  double deriv(double x) const {
    if (x <= xmin) return ders.front() + curv_lo * (x - xmin);
    if (x >= xmax()) return ders.back() + curv_hi * (x - xmax());
    const auto [i, t] = locate(x);
    const double g00 = 6 * t * (t - 1);
    const double g10 = (1 - t) * (1 - 3 * t);
    const double g01 = -g00;
    const double g11 = t * (3 * t - 2);
    return g00 * vals[i] / dx + g10 * ders[i] + g01 * vals[i + 1] / dx +
           g11 * ders[i + 1];
  }

 private:
  std::pair<std::size_t, double> locate(double x) const {
    double u = (x - xmin) / dx;
    std::size_t i = static_cast<std::size_t>(u);
    if (i >= vals.size() - 1) i = vals.size() - 2;
    return {i, u - static_cast<double>(i)};
  }
};

class Loss {
 public:
  virtual ~Loss() = default;
  virtual double eval(double v) const = 0;
  virtual bool has_deriv() const { return true; }
  virtual double deriv(double v) const = 0;
  virtual std::optional<double> prox_closed_form(double /*x*/, double /*tau*/) const {
    return std::nullopt;
  }
  virtual bool convex() const { return true; }
  virtual bool lower_bounded() const { return true; }
  virtual std::string name() const = 0;
};

class SquareLoss final : public Loss {
 public:
  double eval(double v) const override { return v * v; }
  double deriv(double v) const override { return 2.0 * v; }
  std::optional<double> prox_closed_form(double x, double tau) const override {
    return x / (1.0 + 2.0 * tau);
  }
  std::string name() const override { return "square"; }
};

// (t - 1)^2, the least-squares loss on binary margins.
class ShiftedSquareLoss final : public Loss {
 public:
  double eval(double v) const override { return (v - 1.0) * (v - 1.0); }
  double deriv(double v) const override { return 2.0 * (v - 1.0); }
  std::optional<double> prox_closed_form(double x, double tau) const override {
    return (x + 2.0 * tau) / (1.0 + 2.0 * tau);
  }
  std::string name() const override { return "square-margin"; }
};

class AbsLoss final : public Loss {
 public:
  double eval(double v) const override { return std::abs(v); }
  double deriv(double v) const override { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }
  std::optional<double> prox_closed_form(double x, double tau) const override {
    if (x > tau) return x - tau;
    if (x < -tau) return x + tau;
    return 0.0;
  }
  std::string name() const override { return "abs"; }
};

class HuberLoss final : public Loss {
 public:
  explicit HuberLoss(double kappa = 1.0) : kappa_(kappa) {}
  double eval(double v) const override {
    const double a = std::abs(v);
    return a <= kappa_ ? 0.5 * v * v : kappa_ * (a - 0.5 * kappa_);
  }
  double deriv(double v) const override {
    return std::clamp(v, -kappa_, kappa_);
  }
  std::optional<double> prox_closed_form(double x, double tau) const override {
    if (std::abs(x) <= kappa_ * (1.0 + tau)) return x / (1.0 + tau);
    return x - kappa_ * tau * (x > 0 ? 1.0 : -1.0);
  }
  std::string name() const override { return "huber"; }

 private:
  double kappa_;
};

// log(1 + exp(-t)), the logistic loss on binary margins.
class LogisticLoss final : public Loss {
 public:
  double eval(double v) const override {
    return v > 0 ? std::log1p(std::exp(-v)) : -v + std::log1p(std::exp(v));
  }
  double deriv(double v) const override {
    return v > 0 ? -std::exp(-v) / (1.0 + std::exp(-v)) : -1.0 / (1.0 + std::exp(v));
  }
  std::string name() const override { return "logistic"; }
};

// A loss defined by values and derivatives on a uniform grid.
class TabulatedLoss final : public Loss {
 public:
  TabulatedLoss(HermiteTable table, bool convex_on_grid, std::string label)
      : table_(std::move(table)), convex_(convex_on_grid), name_(std::move(label)) {}

  static TabulatedLoss from_samples(double vmin, double vmax,
                                    std::vector<double> vals,
                                    std::vector<double> ders,
                                    std::string label) {
    if (vals.size() != ders.size() || vals.size() < 4) {
      throw DomainError("tabulated loss: need >= 4 samples");
    }
    HermiteTable t;
    t.xmin = vmin;
    t.dx = (vmax - vmin) / static_cast<double>(vals.size() - 1);
    t.vals = std::move(vals);
    t.ders = std::move(ders);
    const std::size_t n = t.vals.size();
    // Edge curvature from the boundary derivative differences, clamped so the
    // continuation stays convex and coercive.
    t.curv_lo = std::clamp((t.ders[1] - t.ders[0]) / t.dx, 1e-2, 1e4);
    t.curv_hi = std::clamp((t.ders[n - 1] - t.ders[n - 2]) / t.dx, 1e-2, 1e4);
    // Convexity on the grid: second differences of the values.
    bool convex_on_grid = true;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (t.vals[i + 1] - 2.0 * t.vals[i] + t.vals[i - 1] < -1e-8) {
        convex_on_grid = false;
        break;
      }
    }
    return TabulatedLoss(std::move(t), convex_on_grid, std::move(label));
  }

  double eval(double v) const override { return table_.eval(v); }
  double deriv(double v) const override { return table_.deriv(v); }
  bool convex() const override { return convex_; }
  std::string name() const override { return name_; }

  const HermiteTable& table() const { return table_; }

 private:
  HermiteTable table_;
  bool convex_;
  std::string name_;
};

// A loss wrapping arbitrary callables, searched on a bounded range.
class FunctionLoss final : public Loss {
 public:
  FunctionLoss(std::function<double(double)> f,
               std::function<double(double)> df, bool is_convex,
               std::string label)
      : f_(std::move(f)), df_(std::move(df)), convex_(is_convex),
        name_(std::move(label)) {}

  double eval(double v) const override { return f_(v); }
  bool has_deriv() const override { return static_cast<bool>(df_); }
  double deriv(double v) const override {
    if (df_) return df_(v);
    const double h = 1e-6 * (1.0 + std::abs(v));
    return (f_(v + h) - f_(v - h)) / (2.0 * h);
  }
  bool convex() const override { return convex_; }
  std::string name() const override { return name_; }

 private:
  std::function<double(double)> f_, df_;
  bool convex_;
  std::string name_;
};

// argmin_v (x-v)^2/(2 tau) + L(v).
inline double prox(const Loss& loss, double x, double tau, double hint = std::numeric_limits<double>::quiet_NaN()) {
  if (!(tau > 0)) throw DomainError("prox: tau must be > 0");
  if (auto cf = loss.prox_closed_form(x, tau)) return *cf;

  auto objective = [&](double v) {
    const double d = x - v;
    return d * d / (2.0 * tau) + loss.eval(v);
  };

  if (loss.convex() && loss.has_deriv()) {
    // Stationarity: g(v) = v - x + tau L'(v), nondecreasing in v.
    auto g = [&](double v) { return v - x + tau * loss.deriv(v); };
    double w = 10.0 * tau * (1.0 + std::abs(loss.deriv(x))) + 1.0;
    double lo = x - w, hi = x + w;
    double glo = g(lo), ghi = g(hi);
    int guard = 0;
    while (glo > 0 && guard++ < 80) {
      w *= 2.0;
      lo = x - w;
      glo = g(lo);
      if (w > 1e9) throw NonCoercive("prox: objective unbounded below (left)");
    }
    guard = 0;
    while (ghi < 0 && guard++ < 80) {
      w *= 2.0;
      hi = x + w;
      ghi = g(hi);
      if (w > 1e9) throw NonCoercive("prox: objective unbounded below (right)");
    }
    return find_root(g, lo, hi, glo, ghi, 1e-13);
  }

  // Derivative-free / nonconvex path: coarse scan plus local refinement.
  double center = std::isfinite(hint) ? hint : x;
  double radius = 2.0 * (1.0 + tau) * (1.0 + std::abs(x - center)) + 2.0;
  double best_v = center, best_f = objective(center);
  for (int round = 0; round < 24; ++round) {
    const int n = 96;
    double cand_v = best_v, cand_f = best_f;
    for (int i = 0; i <= n; ++i) {
      const double v = center - radius + 2.0 * radius * i / n;
      const double fv = objective(v);
      if (fv < cand_f) {
        cand_f = fv;
        cand_v = v;
      }
    }
    const bool interior = std::abs(cand_v - (center - radius)) > 1e-12 &&
                          std::abs(cand_v - (center + radius)) > 1e-12;
    if (interior) {
      const double h = 2.0 * radius / n;
      auto r = minimize(objective, cand_v - h, cand_v + h, 45);
      return r.first;
    }
    center = cand_v;
    radius *= 2.0;
    best_v = cand_v;
    best_f = cand_f;
    if (radius > 1e9) throw NonCoercive("prox: objective unbounded below");
  }
  return best_v;
}

inline double envelope(const Loss& loss, double x, double tau,
                       double hint = std::numeric_limits<double>::quiet_NaN()) {
  const double p = prox(loss, x, tau, hint);
  const double d = x - p;
  return d * d / (2.0 * tau) + loss.eval(p);
}

inline double envelope_dx(const Loss& loss, double x, double tau,
                          double hint = std::numeric_limits<double>::quiet_NaN()) {
  return (x - prox(loss, x, tau, hint)) / tau;
}

inline double envelope_dtau(const Loss& loss, double x, double tau) {
  const double d = envelope_dx(loss, x, tau);
  return -0.5 * d * d;
}

inline double envelope_ddx(const Loss& loss, double x, double tau) {
  const double p = prox(loss, x, tau);
  const double h = 1e-5 * (1.0 + std::abs(p));
  const double ldd = (loss.deriv(p + h) - loss.deriv(p - h)) / (2.0 * h);
  return ldd / (1.0 + tau * ldd);
}

// Envelope inversion: given g = envelope of some convex lsc f at parameter
// tau, recover f as f(x) = -envelope(-g; x; tau), i.e.
// f(x) = max_v [ g(v) - (x-v)^2/(2 tau) ]  (concave inner problem).
template <typename G>
double inverted_envelope_eval(G&& g, double tau, double x) {
  auto h = [&](double v) {
    const double d = x - v;
    return g(v) - d * d / (2.0 * tau);
  };
  double radius = 1.0 + tau;
  double lo = x - radius, hi = x + radius;
  // Expand until the concave h decreases at both ends.
  for (int round = 0; round < 80; ++round) {
    const double eps = 1e-6 * (1.0 + radius);
    const bool rising_lo = h(lo) > h(lo + eps);
    const bool rising_hi = h(hi) > h(hi - eps);
    if (!rising_lo && !rising_hi) break;
    if (rising_lo) lo = x - (x - lo) * 2.0;
    if (rising_hi) hi = x + (hi - x) * 2.0;
    radius *= 2.0;
    if (radius > 1e8) {
      throw NonCoercive("invert_envelope: inner maximization diverges at x=" +
                        std::to_string(x));
    }
  }
  auto r = minimize([&](double v) { return -h(v); }, lo, hi, 48);
  return -r.second;
}

// Materialized inversion as a Loss object.
class InvertedEnvelopeLoss final : public Loss {
 public:
  InvertedEnvelopeLoss(std::function<double(double)> g, double tau,
                       std::string label)
      : g_(std::move(g)), tau_(tau), name_(std::move(label)) {}

  double eval(double v) const override {
    return inverted_envelope_eval(g_, tau_, v);
  }
  bool has_deriv() const override { return false; }
  double deriv(double v) const override {
    const double h = 1e-5 * (1.0 + std::abs(v));
    return (eval(v + h) - eval(v - h)) / (2.0 * h);
  }
  std::string name() const override { return name_; }

 private:
  std::function<double(double)> g_;
  double tau_;
  std::string name_;
};

inline InvertedEnvelopeLoss invert_envelope(std::function<double(double)> g,
                                            double tau,
                                            std::string label = "inverted") {
  if (!(tau > 0)) throw DomainError("invert_envelope: tau must be > 0");
  return InvertedEnvelopeLoss(std::move(g), tau, std::move(label));
}

}  // namespace ermlimits
