#pragma once

// Gaussian-convolved densities V_a = aG + Z and W_s = sG + Sf(S):
// evaluation of p, p', score, and Fisher information, with closed forms for
// Gaussian / Laplace noise and the sign link, and numeric convolution
// otherwise. Fisher values are memoized for solver reuse.

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ermlimits/dists.hpp"
#include "ermlimits/errors.hpp"
#include "ermlimits/quadrature.hpp"
#include "ermlimits/special.hpp"

namespace ermlimits {

// A smooth (everywhere-positive) density with derivative and score.
class SmoothDensity {
 public:
  virtual ~SmoothDensity() = default;

  virtual double pdf(double v) const = 0;
  virtual double pdf_deriv(double v) const = 0;
  // Half-width of the numerically relevant support around 0.
  virtual double halfwidth() const = 0;
  virtual double second_moment() const = 0;
  // Interior points the quadrature must not skip over (kinks and narrow
  // features; e.g. the O(s)-wide transition of a near-jump density).
  virtual std::vector<double> quad_breaks() const { return {0.0}; }

  double score(double v) const {
    return pdf_deriv(v) / std::max(pdf(v), 1e-300);
  }

  double log_pdf(double v) const { return std::log(std::max(pdf(v), 1e-300)); }

  double normalization(double rel_tol = 1e-9) const {
    const double L = halfwidth();
    return integrate_segmented([this](double v) { return pdf(v); }, -L, L,
                               quad_breaks(), rel_tol);
  }

  // I = integral of p'^2 / p.
  double fisher(double rel_tol = 1e-8) const {
    const double L = halfwidth();
    const double val = integrate_segmented(
        [this](double v) {
          const double p = pdf(v);
          const double dp = pdf_deriv(v);
          return dp * dp / std::max(p, 1e-300);
        },
        -L, L, quad_breaks(), rel_tol);
    if (!std::isfinite(val) || val <= 0) {
      throw QuadratureFailure("fisher: integration failed");
    }
    return val;
  }
};

namespace detail {

class GaussianSmooth final : public SmoothDensity {
 public:
  explicit GaussianSmooth(double variance) : var_(variance), sd_(std::sqrt(variance)) {}
  double pdf(double v) const override { return norm_pdf(v, sd_); }
  double pdf_deriv(double v) const override { return -v / var_ * norm_pdf(v, sd_); }
  double halfwidth() const override { return 10.0 * sd_ + 1.0; }
  double second_moment() const override { return var_; }

 private:
  double var_, sd_;
};

// Laplace(scale b) + N(0, a^2), in closed form via scaled erfc.
class LaplaceSmooth final : public SmoothDensity {
 public:
  LaplaceSmooth(double a, double b) : a_(a), b_(b) {}

  double pdf(double v) const override {
    const double c = a_ * a_ / (2.0 * b_ * b_);
    const double u1 = (v / a_ + a_ / b_) / kSqrt2;
    const double u2 = (-v / a_ + a_ / b_) / kSqrt2;
    return (expw_erfc(v / b_ + c, u1) + expw_erfc(-v / b_ + c, u2)) / (4.0 * b_);
  }

  double pdf_deriv(double v) const override {
    const double c = a_ * a_ / (2.0 * b_ * b_);
    const double u1 = (v / a_ + a_ / b_) / kSqrt2;
    const double u2 = (-v / a_ + a_ / b_) / kSqrt2;
    const double t1 = expw_erfc(v / b_ + c, u1) / b_;
    const double t2 = -expw_erfc(-v / b_ + c, u2) / b_;
    const double g = 2.0 / std::sqrt(kPi) / (a_ * kSqrt2);
    const double e1 = -g * std::exp(v / b_ + c - u1 * u1);
    const double e2 = g * std::exp(-v / b_ + c - u2 * u2);
    return (t1 + t2 + e1 + e2) / (4.0 * b_);
  }

  double halfwidth() const override {
    return 10.0 * std::sqrt(a_ * a_ + 2.0 * b_ * b_) + 10.0;
  }
  double second_moment() const override { return a_ * a_ + 2.0 * b_ * b_; }

 private:
  double a_, b_;
};

// Numeric convolution of a custom noise density with N(0, a^2).
class CustomNoiseSmooth final : public SmoothDensity {
 public:
  CustomNoiseSmooth(NoiseModel noise, double a)
      : noise_(std::move(noise)), a_(a) {
    auto [lo, hi] = noise_.support();
    lo_ = lo;
    hi_ = hi;
    breaks_ = noise_.breakpoints();
  }

  double pdf(double v) const override { return conv(v, false); }
  double pdf_deriv(double v) const override { return conv(v, true); }
  double halfwidth() const override {
    return 10.0 * std::sqrt(a_ * a_ + noise_.second_moment()) + 2.0 +
           std::max(std::abs(lo_), std::abs(hi_));
  }
  double second_moment() const override {
    return a_ * a_ + noise_.second_moment();
  }

 private:
  double conv(double v, bool deriv) const {
    const double lo = std::max(lo_, v - 10.0 * a_);
    const double hi = std::min(hi_, v + 10.0 * a_);
    if (lo >= hi) return 0.0;
    auto f = [&](double z) {
      const double k = norm_pdf(v - z, a_) * noise_.pdf(z);
      return deriv ? -(v - z) / (a_ * a_) * k : k;
    };
    return integrate_segmented(f, lo, hi, breaks_, 1e-9, 12);
  }

  NoiseModel noise_;
  double a_, lo_, hi_;
  std::vector<double> breaks_;
};

// sG + Sf(S) for the sign link: skew-normal closed form
// p(v) = 2 phi_nu(v) Phi(v / (s nu)), nu = sqrt(1+s^2).
class SignLinkSmooth final : public SmoothDensity {
 public:
  explicit SignLinkSmooth(double s) : s_(s), nu_(std::sqrt(1.0 + s * s)) {}

  double pdf(double v) const override {
    return 2.0 * norm_pdf(v, nu_) * norm_cdf(v / (s_ * nu_));
  }

  double pdf_deriv(double v) const override {
    return -v / (nu_ * nu_) * pdf(v) +
           2.0 * norm_pdf(v, nu_) * norm_pdf(v / (s_ * nu_)) / (s_ * nu_);
  }

  double halfwidth() const override { return 10.0 * nu_ + 2.0; }
  double second_moment() const override { return s_ * s_ + 1.0; }
  std::vector<double> quad_breaks() const override {
    const double w = 5.0 * s_ * nu_;
    return {-w, -s_, 0.0, s_, w};
  }

 private:
  double s_, nu_;
};

// sG + Sf(S) for a smooth link: p(v) = phi_nu(v) E[F(z)] with
// z ~ N(v/nu^2, s^2/nu^2) and F(z) = 1 + fhat(z) - fhat(-z).
class SmoothLinkSmooth final : public SmoothDensity {
 public:
  SmoothLinkSmooth(BinaryLink link, double s)
      : link_(std::move(link)), s_(s), nu_(std::sqrt(1.0 + s * s)) {}

  double pdf(double v) const override {
    const double m = v / (nu_ * nu_);
    return norm_pdf(v, nu_) * inner_expectation(m, [&](double z) { return F(z); });
  }

  double pdf_deriv(double v) const override {
    const double m = v / (nu_ * nu_);
    return norm_pdf(v, nu_) *
           inner_expectation(m, [&](double z) {
             return -(v - z) / (s_ * s_) * F(z);
           });
  }

  double halfwidth() const override { return 10.0 * nu_ + 2.0; }
  double second_moment() const override { return s_ * s_ + 1.0; }
  std::vector<double> quad_breaks() const override {
    const double w = 5.0 * s_ * nu_;
    return {-w, -s_, 0.0, s_, w};
  }

 private:
  double F(double z) const { return 1.0 + link_.fhat(z) - link_.fhat(-z); }

  template <typename G>
  double inner_expectation(double m, G&& g) const {
    const double t = s_ / nu_;
    // Break at z = 0 (u = -m/t), where near-sign links are steepest.
    const double u0 = -m / t;
    auto f = [&](double u) { return norm_pdf(u) * g(m + t * u); };
    return integrate_segmented(f, -10.0, 10.0, {u0}, 1e-9, 12);
  }

  BinaryLink link_;
  double s_, nu_;
};

inline std::string memo_key(const std::string& fp, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), ":%.12g", a);
  return fp + buf;
}

inline double memo_lookup_or_compute(const std::string& key,
                                     const std::function<double()>& compute) {
  static std::unordered_map<std::string, double> cache;
  static std::mutex mtx;
  {
    std::lock_guard<std::mutex> lk(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double val = compute();
  {
    std::lock_guard<std::mutex> lk(mtx);
    cache.emplace(key, val);
  }
  return val;
}

}  // namespace detail

// V_a = aG + Z.
inline std::unique_ptr<SmoothDensity> convolve(const NoiseModel& noise, double a) {
  if (!(a > 0)) throw DomainError("convolve: mixing parameter a must be > 0");
  switch (noise.kind()) {
    case NoiseKind::Gaussian:
      return std::make_unique<detail::GaussianSmooth>(a * a + noise.param());
    case NoiseKind::Laplace:
      return std::make_unique<detail::LaplaceSmooth>(a, noise.param());
    case NoiseKind::Custom:
      return std::make_unique<detail::CustomNoiseSmooth>(noise, a);
  }
  throw DomainError("convolve: unknown noise kind");
}

// W_s = sG + Sf(S).
inline std::unique_ptr<SmoothDensity> convolve(const BinaryLink& link, double s) {
  if (!(s > 0)) throw DomainError("convolve: mixing parameter s must be > 0");
  if (link.kind() == LinkKind::Sign) {
    return std::make_unique<detail::SignLinkSmooth>(s);
  }
  return std::make_unique<detail::SmoothLinkSmooth>(link, s);
}

inline std::unique_ptr<SmoothDensity> convolve(const EffectiveLabelDensity& d,
                                               double s) {
  return convolve(d.link(), s);
}

// Memoized Fisher information of V_a.
inline double fisher_of_Va(const NoiseModel& noise, double a) {
  if (noise.kind() == NoiseKind::Gaussian) {
    return 1.0 / (a * a + noise.param());
  }
  return detail::memo_lookup_or_compute(
      detail::memo_key(noise.fingerprint(), a),
      [&] { return convolve(noise, a)->fisher(); });
}

// Memoized Fisher information of W_s.
inline double fisher_of_Ws(const BinaryLink& link, double s) {
  return detail::memo_lookup_or_compute(
      detail::memo_key(link.fingerprint(), s),
      [&] { return convolve(link, s)->fisher(); });
}

}  // namespace ermlimits
