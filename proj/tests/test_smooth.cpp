#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ermlimits/dists.hpp"
#include "ermlimits/quadrature.hpp"
#include "ermlimits/smooth.hpp"

using Catch::Approx;
namespace el = ermlimits;

namespace {

// Brute-force convolution of a noise density with N(0, a^2), as an
// independent check of the closed-form paths.
double conv_pdf(const el::NoiseModel& noise, double a, double v) {
  auto [lo, hi] = noise.support();
  return el::integrate_segmented(
      [&](double z) { return el::norm_pdf(v - z, a) * noise.pdf(z); },
      std::max(lo, v - 10.0 * a), std::min(hi, v + 10.0 * a),
      noise.breakpoints(), 1e-11);
}

}  // namespace

TEST_CASE("gaussian plus gaussian stays gaussian", "[smooth]") {
  const auto noise = el::NoiseModel::gaussian(0.5);
  const auto d = el::convolve(noise, 0.8);
  const double var = 0.8 * 0.8 + 0.5;
  CHECK(d->second_moment() == Approx(var));
  CHECK(d->pdf(0.3) == Approx(el::norm_pdf(0.3, std::sqrt(var))).epsilon(1e-13));
  CHECK(d->score(0.3) == Approx(-0.3 / var).epsilon(1e-12));
  CHECK(el::fisher_of_Va(noise, 0.8) == Approx(1.0 / var).epsilon(1e-13));
}

TEST_CASE("laplace convolution closed form matches quadrature", "[smooth]") {
  const auto noise = el::NoiseModel::laplace(1.3);
  const double a = 0.6;
  const auto d = el::convolve(noise, a);
  for (double v : {-4.0, -1.0, 0.0, 0.5, 2.0, 6.0}) {
    CHECK(d->pdf(v) == Approx(conv_pdf(noise, a, v)).epsilon(1e-8));
  }
  const double h = 1e-5;
  for (double v : {-1.0, 0.7, 3.0}) {
    CHECK(d->pdf_deriv(v) ==
          Approx((d->pdf(v + h) - d->pdf(v - h)) / (2.0 * h)).epsilon(1e-6));
  }
  CHECK(d->normalization() == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("laplace convolution information against references", "[smooth]") {
  const auto noise = el::NoiseModel::laplace(1.0);
  CHECK(el::fisher_of_Va(noise, 0.2) == Approx(0.8025132801607481).epsilon(1e-8));
  CHECK(el::fisher_of_Va(noise, 0.463) == Approx(0.6108021441751651).epsilon(1e-8));
  CHECK(el::fisher_of_Va(noise, 1.0) == Approx(0.3684744227231759).epsilon(1e-8));
  // Memoized lookups must be bitwise stable.
  CHECK(el::fisher_of_Va(noise, 1.0) == el::fisher_of_Va(noise, 1.0));
}

TEST_CASE("custom noise convolution matches the laplace closed form", "[smooth]") {
  std::vector<double> x, p;
  for (int i = 0; i <= 1200; ++i) {
    const double v = -14.0 + 28.0 * i / 1200.0;
    x.push_back(v);
    p.push_back(0.5 * std::exp(-std::abs(v)));
  }
  const auto custom = el::NoiseModel::custom(x, p);
  const auto ref = el::convolve(el::NoiseModel::laplace(1.0), 0.7);
  const auto d = el::convolve(custom, 0.7);
  for (double v : {-2.0, 0.0, 1.5}) {
    CHECK(d->pdf(v) == Approx(ref->pdf(v)).epsilon(1e-4));
  }
  CHECK(d->fisher() == Approx(ref->fisher()).epsilon(1e-3));
}

TEST_CASE("sign link convolution closed form matches quadrature", "[smooth]") {
  const double s = 0.9;
  const auto d = el::convolve(el::BinaryLink::sign_link(), s);
  // Direct convolution with the half-normal label density.
  auto direct = [&](double v) {
    return el::integrate(
        [&](double w) { return el::norm_pdf(v - w, s) * 2.0 * el::norm_pdf(w); },
        0.0, 12.0, 1e-12);
  };
  for (double v : {-2.0, -0.3, 0.0, 0.4, 1.0, 3.0}) {
    CHECK(d->pdf(v) == Approx(direct(v)).epsilon(1e-9));
  }
  CHECK(d->second_moment() == Approx(1.0 + s * s));
  CHECK(d->normalization() == Approx(1.0).epsilon(1e-8));
  const double h = 1e-5;
  CHECK(d->pdf_deriv(0.6) ==
        Approx((d->pdf(0.6 + h) - d->pdf(0.6 - h)) / (2.0 * h)).epsilon(1e-7));
}

TEST_CASE("smooth link convolution is a valid density", "[smooth]") {
  const auto link = el::BinaryLink::logistic(10.0);
  const double s = 0.8;
  const auto d = el::convolve(link, s);
  CHECK(d->normalization() == Approx(1.0).epsilon(1e-7));
  const double h = 1e-5;
  CHECK(d->pdf_deriv(0.5) ==
        Approx((d->pdf(0.5 + h) - d->pdf(0.5 - h)) / (2.0 * h)).epsilon(1e-5));
  // As the logistic steepness grows the density approaches the sign-link one.
  const auto steep = el::convolve(el::BinaryLink::logistic(500.0), s);
  const auto sgn = el::convolve(el::BinaryLink::sign_link(), s);
  CHECK(steep->pdf(0.7) == Approx(sgn->pdf(0.7)).epsilon(1e-2));
}

TEST_CASE("information obeys the convolution inequalities", "[smooth]") {
  // Combining an independent gaussian can only reduce information, and the
  // variance bound caps it from below.
  const auto noise = el::NoiseModel::laplace(1.0);
  for (double a : {0.3, 0.7, 1.5}) {
    const double I = el::fisher_of_Va(noise, a);
    const double Ig = 1.0 / (a * a);
    const double Iz = noise.fisher();
    CHECK(I <= Ig * Iz / (Ig + Iz) + 1e-9);
    CHECK(I >= 1.0 / (a * a + noise.second_moment()) - 1e-9);
  }
  const auto link = el::BinaryLink::logistic(1.0);
  const double Isfs = el::effective_label_density(link).fisher();
  for (double s : {0.5, 1.0, 2.0}) {
    const double I = el::fisher_of_Ws(link, s);
    const double Ig = 1.0 / (s * s);
    CHECK(I <= Ig * Isfs / (Ig + Isfs) + 1e-7);
    CHECK(I >= 1.0 / (s * s + 1.0) - 1e-9);
  }
  // Jump density: no finite information bound from above, but the variance
  // bound still holds.
  const auto sgn = el::BinaryLink::sign_link();
  for (double s : {0.5, 1.5}) {
    const double I = el::fisher_of_Ws(sgn, s);
    CHECK(I <= 1.0 / (s * s) + 1e-9);
    CHECK(I >= 1.0 / (s * s + 1.0) - 1e-9);
  }
}

TEST_CASE("scaled information approaches its limits", "[smooth]") {
  const auto noise = el::NoiseModel::laplace(1.0);
  CHECK(1e-4 * el::fisher_of_Va(noise, 1e-2) < 0.01);
  CHECK(900.0 * el::fisher_of_Va(noise, 30.0) == Approx(1.0).margin(0.01));
  const auto link = el::BinaryLink::logistic(1.0);
  CHECK(1e-4 * el::fisher_of_Ws(link, 1e-2) < 0.015);
  CHECK(900.0 * el::fisher_of_Ws(link, 30.0) == Approx(1.0).margin(0.01));
}

TEST_CASE("convolution rejects bad parameters", "[smooth]") {
  CHECK_THROWS_AS(el::convolve(el::NoiseModel::gaussian(1.0), 0.0), el::DomainError);
  CHECK_THROWS_AS(el::convolve(el::BinaryLink::sign_link(), -1.0), el::DomainError);
}
