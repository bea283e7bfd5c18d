#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ermlimits/dists.hpp"

using Catch::Approx;
namespace el = ermlimits;

TEST_CASE("gaussian noise model basics", "[dists]") {
  const auto m = el::NoiseModel::gaussian(0.25);
  CHECK(m.second_moment() == Approx(0.25));
  CHECK(m.fisher() == Approx(4.0));
  CHECK(m.pdf(0.0) == Approx(1.0 / std::sqrt(2.0 * el::kPi * 0.25)));
  CHECK_THROWS_AS(el::NoiseModel::gaussian(-1.0), el::DomainError);
  CHECK_THROWS_AS(el::NoiseModel::gaussian(0.0), el::DomainError);
}

TEST_CASE("laplace noise model basics", "[dists]") {
  const auto m = el::NoiseModel::laplace(2.0);
  CHECK(m.second_moment() == Approx(8.0));
  CHECK(m.fisher() == Approx(0.25));
  CHECK(m.pdf(0.0) == Approx(0.25));
  CHECK(m.pdf(2.0) == Approx(std::exp(-1.0) / 4.0));
  CHECK_THROWS_AS(el::NoiseModel::laplace(0.0), el::DomainError);
}

TEST_CASE("expectation rule integrates moments", "[dists]") {
  for (const auto& m : {el::NoiseModel::gaussian(1.0), el::NoiseModel::laplace(1.0)}) {
    const el::QuadRule r = m.expectation_rule();
    CHECK(r.sum([](double) { return 1.0; }) == Approx(1.0).epsilon(1e-10));
    CHECK(r.sum([](double z) { return z; }) == Approx(0.0).margin(1e-10));
    CHECK(r.sum([](double z) { return z * z; }) ==
          Approx(m.second_moment()).epsilon(1e-9));
  }
}

TEST_CASE("noise sampling is deterministic and calibrated", "[dists]") {
  const auto m = el::NoiseModel::laplace(1.5);
  const auto a = m.sample(20000, 7);
  const auto b = m.sample(20000, 7);
  REQUIRE(a == b);
  double mean = 0.0, m2 = 0.0;
  for (double v : a) {
    mean += v;
    m2 += v * v;
  }
  mean /= a.size();
  m2 /= a.size();
  CHECK(std::abs(mean) < 0.05);
  CHECK(m2 == Approx(m.second_moment()).epsilon(0.05));
}

TEST_CASE("custom noise density from a grid", "[dists]") {
  // Discretized Laplace(1): the custom path should recover its moments.
  std::vector<double> x, p;
  for (int i = 0; i <= 800; ++i) {
    const double v = -10.0 + 20.0 * i / 800.0;
    x.push_back(v);
    p.push_back(0.5 * std::exp(-std::abs(v)));
  }
  const auto m = el::NoiseModel::custom(x, p);
  CHECK(m.second_moment() == Approx(2.0).epsilon(1e-3));
  CHECK(m.fisher() == Approx(1.0).epsilon(0.05));
  CHECK(m.pdf(0.5) == Approx(0.5 * std::exp(-0.5)).epsilon(1e-3));
  const auto s = m.sample(20000, 3);
  double m2 = 0.0;
  for (double v : s) m2 += v * v;
  CHECK(m2 / s.size() == Approx(2.0).epsilon(0.05));
}

TEST_CASE("custom noise rejects malformed input", "[dists]") {
  CHECK_THROWS_AS(el::NoiseModel::custom({0.0, 1.0}, {1.0, 1.0}), el::DomainError);
  CHECK_THROWS_AS(el::NoiseModel::custom({0.0, 1.0, 0.5, 2.0}, {1.0, 1.0, 1.0, 1.0}),
                  el::DomainError);
  // Clearly asymmetric density: nonzero mean must be rejected.
  std::vector<double> x, p;
  for (int i = 0; i <= 100; ++i) {
    const double v = -5.0 + 10.0 * i / 100.0;
    x.push_back(v);
    p.push_back(std::exp(-std::abs(v - 1.5)));
  }
  CHECK_THROWS_AS(el::NoiseModel::custom(x, p), el::DomainError);
}

TEST_CASE("binary links evaluate correctly", "[dists]") {
  const auto sg = el::BinaryLink::sign_link();
  CHECK(sg.fhat(2.0) == 1.0);
  CHECK(sg.fhat(-2.0) == 0.0);
  CHECK(sg.fhat(0.0) == 0.5);
  CHECK_FALSE(sg.smooth());

  const auto lg = el::BinaryLink::logistic(3.0);
  CHECK(lg.fhat(0.0) == Approx(0.5));
  CHECK(lg.fhat(1.0) + lg.fhat(-1.0) == Approx(1.0).epsilon(1e-14));
  const double h = 1e-6;
  CHECK(lg.fhat_deriv(0.4) ==
        Approx((lg.fhat(0.4 + h) - lg.fhat(0.4 - h)) / (2.0 * h)).epsilon(1e-6));
  CHECK(lg.smooth());

  const auto pb = el::BinaryLink::probit(2.0);
  CHECK(pb.fhat(0.0) == Approx(0.5));
  CHECK(pb.fhat_deriv(0.3) ==
        Approx((pb.fhat(0.3 + h) - pb.fhat(0.3 - h)) / (2.0 * h)).epsilon(1e-6));

  CHECK_THROWS_AS(el::BinaryLink::logistic(0.0), el::DomainError);
  CHECK_THROWS_AS(el::BinaryLink::probit(-1.0), el::DomainError);
}

TEST_CASE("custom link interpolation", "[dists]") {
  const auto l = el::BinaryLink::custom({-1.0, 0.0, 1.0}, {0.0, 0.5, 1.0});
  CHECK(l.fhat(-5.0) == 0.0);
  CHECK(l.fhat(5.0) == 1.0);
  CHECK(l.fhat(0.5) == Approx(0.75));
  CHECK_THROWS_AS(el::BinaryLink::custom({0.0, 1.0}, {0.2, 1.5}), el::DomainError);
}

TEST_CASE("link first moment nu against references", "[dists]") {
  CHECK(el::nu_f(el::BinaryLink::sign_link()) ==
        Approx(std::sqrt(2.0 / el::kPi)).epsilon(1e-11));
  CHECK(el::nu_f(el::BinaryLink::logistic(10.0)) == Approx(0.7851912).margin(1e-6));
  CHECK(el::nu_f(el::BinaryLink::logistic(1.0)) == Approx(0.4132423).margin(1e-6));
}

TEST_CASE("effective label density moments and information", "[dists]") {
  const auto sg = el::effective_label_density(el::BinaryLink::sign_link());
  CHECK(sg.second_moment() == Approx(1.0));
  CHECK(std::isinf(sg.fisher()));
  // Sign: density is the half-normal, vanishing on the negative axis.
  CHECK(sg.pdf(-0.5) == Approx(0.0).margin(1e-12));
  CHECK(sg.pdf(0.5) == Approx(2.0 * el::norm_pdf(0.5)).epsilon(1e-12));

  const auto l1 = el::effective_label_density(el::BinaryLink::logistic(1.0));
  CHECK(l1.fisher() == Approx(1.2066213).margin(2e-6));
  CHECK(el::integrate([&](double x) { return l1.pdf(x); }, -12.0, 12.0, 1e-11) ==
        Approx(1.0).epsilon(1e-9));
  CHECK(el::integrate([&](double x) { return x * l1.pdf(x); }, -12.0, 12.0, 1e-11) ==
        Approx(l1.mean()).epsilon(1e-9));

  const auto l10 = el::effective_label_density(el::BinaryLink::logistic(10.0));
  CHECK(l10.fisher() == Approx(4.9259561).margin(2e-5));
  CHECK(l10.variance() == Approx(1.0 - l10.mean() * l10.mean()).epsilon(1e-12));
}

TEST_CASE("label sampling matches the link probabilities", "[dists]") {
  const auto l = el::BinaryLink::logistic(2.0);
  std::vector<double> s(40000, 0.7);
  const auto labels = l.sample_labels(s, 11);
  double frac = 0.0;
  for (int v : labels) frac += (v > 0);
  frac /= labels.size();
  CHECK(frac == Approx(l.fhat(0.7)).margin(0.01));
  CHECK(labels == l.sample_labels(s, 11));
}
