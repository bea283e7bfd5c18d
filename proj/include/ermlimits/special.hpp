#pragma once

// Small special-function helpers shared across the library.

#include <cmath>

namespace ermlimits {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

// Standard normal pdf.
inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

// N(0, sd^2) pdf.
inline double norm_pdf(double x, double sd) {
  const double u = x / sd;
  return std::exp(-0.5 * u * u) / (kSqrt2Pi * sd);
}

// Standard normal cdf.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Scaled complementary error function erfcx(u) = exp(u^2) erfc(u).
// Direct evaluation below u = 5 (no overflow there); asymptotic continued
// series beyond, accurate to ~1e-14 relative.
inline double erfcx(double u) {
  if (u < 5.0) {
    return std::exp(u * u) * std::erfc(u);
  }
  // erfcx(u) ~ 1/(u sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2u^2)^k
  const double inv2u2 = 1.0 / (2.0 * u * u);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 12; ++k) {
    term *= -(2.0 * k - 1.0) * inv2u2;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / (u * std::sqrt(kPi));
}

// exp(w) * erfc(u), computed without overflow/underflow cancellation.
// For u >= 0 use erfcx; for u < 0 use erfc(u) = 2 - erfc(-u).
inline double expw_erfc(double w, double u) {
  if (u >= 0.0) {
    return erfcx(u) * std::exp(w - u * u);
  }
  return 2.0 * std::exp(w) - erfcx(-u) * std::exp(w - u * u);
}

}  // namespace ermlimits
