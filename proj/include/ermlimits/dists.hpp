#pragma once

// Noise models for linear observations, binary link functions, and the
// induced density of S * f(S).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ermlimits/errors.hpp"
#include "ermlimits/quadrature.hpp"
#include "ermlimits/special.hpp"

namespace ermlimits {

namespace detail {

// splitmix64: derive per-stream seeds from a master seed deterministically.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

}  // namespace detail

enum class NoiseKind { Gaussian, Laplace, Custom };

// A zero-mean noise distribution with density, second moment and sampler.
class NoiseModel {
 public:
  static NoiseModel gaussian(double zeta_sq) {
    if (zeta_sq <= 0) throw DomainError("gaussian noise: variance must be > 0");
    NoiseModel m;
    m.kind_ = NoiseKind::Gaussian;
    m.param_ = zeta_sq;
    m.second_moment_ = zeta_sq;
    m.fisher_ = 1.0 / zeta_sq;
    return m;
  }

  static NoiseModel laplace(double scale_b) {
    if (scale_b <= 0) throw DomainError("laplace noise: scale must be > 0");
    NoiseModel m;
    m.kind_ = NoiseKind::Laplace;
    m.param_ = scale_b;
    m.second_moment_ = 2.0 * scale_b * scale_b;
    m.fisher_ = 1.0 / (scale_b * scale_b);
    return m;
  }

  // Custom density on an increasing grid; normalized internally, must be
  // (numerically) zero-mean.
  static NoiseModel custom(std::vector<double> x, std::vector<double> p) {
    if (x.size() != p.size() || x.size() < 4) {
      throw DomainError("custom noise: need >= 4 (x,p) pairs");
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      if (x[i + 1] <= x[i]) throw DomainError("custom noise: x must increase");
    }
    for (double v : p) {
      if (!(v >= 0) || !std::isfinite(v)) {
        throw DomainError("custom noise: density values must be finite, >= 0");
      }
    }
    NoiseModel m;
    m.kind_ = NoiseKind::Custom;
    m.grid_x_ = std::move(x);
    m.grid_p_ = std::move(p);
    m.init_custom();
    return m;
  }

  NoiseKind kind() const { return kind_; }
  double param() const { return param_; }
  double second_moment() const { return second_moment_; }
  std::optional<double> closed_form_fisher() const {
    if (kind_ == NoiseKind::Custom) return std::nullopt;
    return fisher_;
  }

  // Fisher information of the (un-convolved) noise density.
  double fisher() const { return fisher_; }

  double pdf(double z) const {
    switch (kind_) {
      case NoiseKind::Gaussian:
        return norm_pdf(z, std::sqrt(param_));
      case NoiseKind::Laplace:
        return std::exp(-std::abs(z) / param_) / (2.0 * param_);
      case NoiseKind::Custom:
        return custom_pdf(z);
    }
    return 0.0;
  }

  // Truncated support covering all but ~1e-12 tail mass and at least
  // +-10 standard deviations.
  std::pair<double, double> support() const {
    const double sd = std::sqrt(second_moment_);
    switch (kind_) {
      case NoiseKind::Gaussian: {
        const double l = std::max(8.0 * std::sqrt(param_), 10.0 * sd);
        return {-l, l};
      }
      case NoiseKind::Laplace: {
        const double l = std::max(30.0 * param_, 10.0 * sd);
        return {-l, l};
      }
      case NoiseKind::Custom: {
        const double lo = std::min(grid_x_.front() - 5.0 * tail_len_lo_, -10.0 * sd);
        const double hi = std::max(grid_x_.back() + 5.0 * tail_len_hi_, 10.0 * sd);
        return {lo, hi};
      }
    }
    return {-10 * sd, 10 * sd};
  }

  // Density kinks (quadrature breakpoints).
  std::vector<double> breakpoints() const {
    if (kind_ == NoiseKind::Laplace) return {0.0};
    if (kind_ == NoiseKind::Custom) return grid_x_;
    return {};
  }

  std::vector<double> sample(std::size_t n, std::uint64_t seed) const {
    auto rng = detail::make_rng(seed);
    std::vector<double> out(n);
    switch (kind_) {
      case NoiseKind::Gaussian: {
        std::normal_distribution<double> d(0.0, std::sqrt(param_));
        for (auto& v : out) v = d(rng);
        break;
      }
      case NoiseKind::Laplace: {
        std::exponential_distribution<double> d(1.0);
        for (auto& v : out) v = param_ * (d(rng) - d(rng));
        break;
      }
      case NoiseKind::Custom: {
        if (cdf_.empty()) {
          throw UnsupportedSampling("custom noise: no quantile table");
        }
        std::uniform_real_distribution<double> d(0.0, 1.0);
        for (auto& v : out) v = custom_quantile(d(rng));
        break;
      }
    }
    return out;
  }

  // Nodes/weights so that sum_i w_i g(z_i) ~ E[g(Z)].
  QuadRule expectation_rule(int n_per_segment = 48) const {
    auto [lo, hi] = support();
    std::vector<double> seg{lo};
    for (double b : breakpoints()) {
      if (b > lo && b < hi) seg.push_back(b);
    }
    seg.push_back(hi);
    std::sort(seg.begin(), seg.end());
    QuadRule rule;
    for (std::size_t i = 0; i + 1 < seg.size(); ++i) {
      // Keep total node count bounded for many-segment custom grids.
      const int n = (seg.size() > 8) ? std::max(6, n_per_segment / 4) : n_per_segment;
      QuadRule gl = gauss_legendre(n, seg[i], seg[i + 1]);
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double w = gl.weights[k] * pdf(gl.nodes[k]);
        if (w > 0) {
          rule.nodes.push_back(gl.nodes[k]);
          rule.weights.push_back(w);
        }
      }
    }
    return rule;
  }

  std::string fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case NoiseKind::Gaussian:
        os << "gaussian:" << param_;
        break;
      case NoiseKind::Laplace:
        os << "laplace:" << param_;
        break;
      case NoiseKind::Custom:
        os << "custom:" << grid_x_.size() << ":" << grid_x_.front() << ":"
           << grid_x_.back() << ":" << second_moment_;
        break;
    }
    return os.str();
  }

 private:
  NoiseModel() = default;

  void init_custom() {
    // Normalize, then validate zero mean; build log-density segments with
    // exponential tails fitted over the last decade of density.
    const std::size_t n = grid_x_.size();
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      mass += 0.5 * (grid_p_[i] + grid_p_[i + 1]) * (grid_x_[i + 1] - grid_x_[i]);
    }
    if (mass <= 0) throw DomainError("custom noise: density has no mass");
    for (auto& v : grid_p_) v /= mass;
    logp_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      logp_[i] = std::log(std::max(grid_p_[i], 1e-300));
    }
    // Tail decay rates from the last factor-10 drop of the density.
    auto tail_rate = [&](bool upper) -> double {
      const double p_end = std::max(upper ? grid_p_.back() : grid_p_.front(), 1e-300);
      double best = 1.0;
      if (upper) {
        for (std::size_t i = n - 1; i-- > 0;) {
          if (grid_p_[i] >= 10.0 * p_end) {
            best = (logp_[i] - logp_[n - 1]) / (grid_x_[n - 1] - grid_x_[i]);
            break;
          }
        }
      } else {
        for (std::size_t i = 1; i < n; ++i) {
          if (grid_p_[i] >= 10.0 * p_end) {
            best = (logp_[i] - logp_[0]) / (grid_x_[i] - grid_x_[0]);
            break;
          }
        }
      }
      return std::max(best, 1e-2);
    };
    tail_rate_hi_ = tail_rate(true);
    tail_rate_lo_ = tail_rate(false);
    tail_len_hi_ = 30.0 / tail_rate_hi_;
    tail_len_lo_ = 30.0 / tail_rate_lo_;

    auto [lo, hi] = support();
    const auto self = [this](double z) { return custom_pdf(z); };
    const double total = integrate_segmented(self, lo, hi, grid_x_, 1e-10);
    // Tolerances admit the discretization error inherent to any tabulated
    // density (trapezoid normalization plus fitted exponential tails).
    if (std::abs(total - 1.0) > 5e-4) {
      throw DomainError("custom noise: density does not integrate to 1");
    }
    const double mean =
        integrate_segmented([&](double z) { return z * self(z); }, lo, hi, grid_x_, 1e-10);
    if (std::abs(mean) > 1e-4) {
      throw DomainError("custom noise: density mean is not zero");
    }
    second_moment_ =
        integrate_segmented([&](double z) { return z * z * self(z); }, lo, hi, grid_x_, 1e-10);
    if (!(second_moment_ > 0)) {
      throw DomainError("custom noise: second moment must be positive");
    }
    // Fisher information of the piecewise log-linear density:
    // integral of slope(x)^2 p(x) dx, segment by segment.
    double fish = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double slope = (logp_[i + 1] - logp_[i]) / (grid_x_[i + 1] - grid_x_[i]);
      const double seg_mass =
          0.5 * (grid_p_[i] + grid_p_[i + 1]) * (grid_x_[i + 1] - grid_x_[i]);
      fish += slope * slope * seg_mass;
    }
    fish += tail_rate_hi_ * tail_rate_hi_ *
            (grid_p_.back() / tail_rate_hi_);
    fish += tail_rate_lo_ * tail_rate_lo_ *
            (grid_p_.front() / tail_rate_lo_);
    fisher_ = fish;
    // Quantile table for sampling.
    cdf_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      cdf_[i] = cdf_[i - 1] +
                0.5 * (grid_p_[i] + grid_p_[i - 1]) * (grid_x_[i] - grid_x_[i - 1]);
    }
    const double c_end = cdf_.back();
    for (auto& c : cdf_) c /= c_end;
  }

  double custom_pdf(double z) const {
    if (z <= grid_x_.front()) {
      return grid_p_.front() * std::exp(-tail_rate_lo_ * (grid_x_.front() - z));
    }
    if (z >= grid_x_.back()) {
      return grid_p_.back() * std::exp(-tail_rate_hi_ * (z - grid_x_.back()));
    }
    const auto it = std::upper_bound(grid_x_.begin(), grid_x_.end(), z);
    const std::size_t i = static_cast<std::size_t>(it - grid_x_.begin()) - 1;
    const double t = (z - grid_x_[i]) / (grid_x_[i + 1] - grid_x_[i]);
    return std::exp((1.0 - t) * logp_[i] + t * logp_[i + 1]);
  }

  double custom_quantile(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    if (i == 0) return grid_x_.front();
    if (i >= cdf_.size()) return grid_x_.back();
    const double span = cdf_[i] - cdf_[i - 1];
    const double t = span > 0 ? (u - cdf_[i - 1]) / span : 0.5;
    return grid_x_[i - 1] + t * (grid_x_[i] - grid_x_[i - 1]);
  }

  NoiseKind kind_ = NoiseKind::Gaussian;
  double param_ = 1.0;
  double second_moment_ = 1.0;
  double fisher_ = 1.0;
  std::vector<double> grid_x_, grid_p_, logp_, cdf_;
  double tail_rate_lo_ = 1.0, tail_rate_hi_ = 1.0;
  double tail_len_lo_ = 0.0, tail_len_hi_ = 0.0;
};

enum class LinkKind { Sign, Logistic, Probit, Custom };

// Binary link via fhat(x) = P(f(x) = +1).
class BinaryLink {
 public:
  static BinaryLink sign_link() {
    BinaryLink l;
    l.kind_ = LinkKind::Sign;
    return l;
  }

  static BinaryLink logistic(double r) {
    if (r <= 0) throw DomainError("logistic link: strength r must be > 0");
    BinaryLink l;
    l.kind_ = LinkKind::Logistic;
    l.r_ = r;
    return l;
  }

  static BinaryLink probit(double r) {
    if (r <= 0) throw DomainError("probit link: strength r must be > 0");
    BinaryLink l;
    l.kind_ = LinkKind::Probit;
    l.r_ = r;
    return l;
  }

  static BinaryLink custom(std::vector<double> x, std::vector<double> fhat) {
    if (x.size() != fhat.size() || x.size() < 2) {
      throw DomainError("custom link: need >= 2 (x,fhat) pairs");
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      if (x[i + 1] <= x[i]) throw DomainError("custom link: x must increase");
    }
    for (double v : fhat) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError("custom link: fhat values must lie in [0,1]");
      }
    }
    BinaryLink l;
    l.kind_ = LinkKind::Custom;
    l.grid_x_ = std::move(x);
    l.grid_f_ = std::move(fhat);
    return l;
  }

  LinkKind kind() const { return kind_; }
  double strength() const { return r_; }

  double fhat(double x) const {
    switch (kind_) {
      case LinkKind::Sign:
        return x > 0 ? 1.0 : (x < 0 ? 0.0 : 0.5);
      case LinkKind::Logistic: {
        const double t = r_ * x;
        return t >= 0 ? 1.0 / (1.0 + std::exp(-t))
                      : std::exp(t) / (1.0 + std::exp(t));
      }
      case LinkKind::Probit:
        return norm_cdf(r_ * x);
      case LinkKind::Custom: {
        if (x <= grid_x_.front()) return grid_f_.front();
        if (x >= grid_x_.back()) return grid_f_.back();
        const auto it = std::upper_bound(grid_x_.begin(), grid_x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - grid_x_.begin()) - 1;
        const double t = (x - grid_x_[i]) / (grid_x_[i + 1] - grid_x_[i]);
        return (1.0 - t) * grid_f_[i] + t * grid_f_[i + 1];
      }
    }
    return 0.5;
  }

  double fhat_deriv(double x) const {
    switch (kind_) {
      case LinkKind::Sign:
        return 0.0;  // a.e.; the jump is handled by callers
      case LinkKind::Logistic: {
        const double f = fhat(x);
        return r_ * f * (1.0 - f);
      }
      case LinkKind::Probit:
        return r_ * norm_pdf(r_ * x);
      case LinkKind::Custom: {
        if (x <= grid_x_.front() || x >= grid_x_.back()) return 0.0;
        const auto it = std::upper_bound(grid_x_.begin(), grid_x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - grid_x_.begin()) - 1;
        return (grid_f_[i + 1] - grid_f_[i]) / (grid_x_[i + 1] - grid_x_[i]);
      }
    }
    return 0.0;
  }

  // True when fhat is continuous (the induced Sf(S) density has no jump).
  bool smooth() const { return kind_ != LinkKind::Sign; }

  std::vector<int> sample_labels(const std::vector<double>& inner_products,
                                 std::uint64_t seed) const {
    auto rng = detail::make_rng(seed ^ 0x6c696e6bULL);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<int> out(inner_products.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = d(rng) < fhat(inner_products[i]) ? +1 : -1;
    }
    return out;
  }

  std::string fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case LinkKind::Sign:
        os << "sign";
        break;
      case LinkKind::Logistic:
        os << "logistic:" << r_;
        break;
      case LinkKind::Probit:
        os << "probit:" << r_;
        break;
      case LinkKind::Custom:
        os << "customlink:" << grid_x_.size() << ":" << grid_x_.front() << ":"
           << grid_x_.back() << ":" << grid_f_.front() << ":" << grid_f_.back();
        break;
    }
    return os.str();
  }

 private:
  BinaryLink() = default;
  LinkKind kind_ = LinkKind::Sign;
  double r_ = 1.0;
  std::vector<double> grid_x_, grid_f_;
};

// nu_f = E[S f(S)] = integral of s phi(s) (2 fhat(s) - 1) ds.
inline double nu_f(const BinaryLink& link) {
  const double val = integrate(
      [&](double s) { return s * norm_pdf(s) * (2.0 * link.fhat(s) - 1.0); },
      -12.0, 12.0, 1e-12);
  if (!std::isfinite(val)) throw QuadratureFailure("nu_f: quadrature failed");
  return val;
}

// Density of S f(S): p(x) = (1 + fhat(x) - fhat(-x)) phi(x).
class EffectiveLabelDensity {
 public:
  explicit EffectiveLabelDensity(BinaryLink link) : link_(std::move(link)) {}

  const BinaryLink& link() const { return link_; }

  double pdf(double x) const {
    return (1.0 + link_.fhat(x) - link_.fhat(-x)) * norm_pdf(x);
  }

  double pdf_deriv(double x) const {
    const double F = 1.0 + link_.fhat(x) - link_.fhat(-x);
    const double dF = link_.fhat_deriv(x) + link_.fhat_deriv(-x);
    return dF * norm_pdf(x) - x * F * norm_pdf(x);
  }

  double score(double x) const {
    const double p = pdf(x);
    return pdf_deriv(x) / std::max(p, 1e-300);
  }

  double mean() const { return nu_f(link_); }
  // E[(S f(S))^2] = E[S^2] = 1.
  double second_moment() const { return 1.0; }
  double variance() const {
    const double nu = mean();
    return 1.0 - nu * nu;
  }

  // Fisher information of Sf(S); infinite when the density has a jump
  // (e.g. the sign link, whose density vanishes on x<0).
  double fisher() const {
    if (!link_.smooth()) return std::numeric_limits<double>::infinity();
    const double val = integrate(
        [&](double x) {
          const double p = pdf(x);
          // Far in the tails 1 + fhat(x) - fhat(-x) cancels to zero in
          // floating point while the derivative term does not; those regions
          // contribute nothing to the integral.
          if (p <= 1e-280) return 0.0;
          const double dp = pdf_deriv(x);
          return dp * dp / p;
        },
        -12.0, 12.0, 1e-10);
    if (!std::isfinite(val)) {
      throw QuadratureFailure("effective label density: Fisher quadrature failed");
    }
    return val;
  }

 private:
  BinaryLink link_;
};

inline EffectiveLabelDensity effective_label_density(const BinaryLink& link) {
  return EffectiveLabelDensity(link);
}

}  // namespace ermlimits
