#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>

#include "ermlimits/binlim.hpp"
#include "ermlimits/linlim.hpp"
#include "ermlimits/simlab.hpp"

using Catch::Approx;
namespace el = ermlimits;

TEST_CASE("thread budget respects the environment cap", "[simlab]") {
  setenv("ERMLIMITS_THREADS", "1", 1);
  CHECK(el::thread_budget() == 1);
  unsetenv("ERMLIMITS_THREADS");
  CHECK(el::thread_budget() >= 1);
}

TEST_CASE("data generation shapes and determinism", "[simlab]") {
  const auto noise = el::NoiseModel::gaussian(0.5);
  const auto d = el::generate_linear(40, 2.0, noise, 5);
  CHECK(d.A.rows() == 80);
  CHECK(d.A.cols() == 40);
  CHECK(d.y.size() == 80);
  CHECK(d.x0.norm() == Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(d.binary);
  const auto d2 = el::generate_linear(40, 2.0, noise, 5);
  CHECK(d.A == d2.A);
  CHECK(d.y == d2.y);
  const auto d3 = el::generate_linear(40, 2.0, noise, 6);
  CHECK(d.y != d3.y);

  const auto link = el::BinaryLink::sign_link();
  const auto b = el::generate_binary(40, 1.5, link, 5);
  CHECK(b.A.rows() == 60);
  CHECK(b.binary);
  for (int i = 0; i < b.y.size(); ++i) {
    CHECK(std::abs(b.y[i]) == Approx(1.0));
  }
  // The sign link is deterministic given the margins.
  for (int i = 0; i < b.y.size(); ++i) {
    const double s = b.A.row(i).dot(b.x0);
    if (std::abs(s) > 1e-12) CHECK(b.y[i] == (s > 0 ? 1.0 : -1.0));
  }
  CHECK_THROWS_AS(el::generate_linear(1, 2.0, noise, 0), el::DomainError);
}

TEST_CASE("gradient fitter matches the ridge closed form", "[simlab]") {
  const auto noise = el::NoiseModel::laplace(1.0);
  const auto d = el::generate_linear(60, 2.0, noise, 17);
  const el::SquareLoss sq;
  const auto fit = el::fit_rerm(d, sq, 0.7, 2.0);
  CHECK(fit.converged);
  const auto xcf = el::fit_ridge_closed_form(d, 0.7, 2.0);
  CHECK((fit.x - xcf).norm() < 1e-6);
}

TEST_CASE("gradient fitter handles non-quadratic losses", "[simlab]") {
  const auto noise = el::NoiseModel::laplace(1.0);
  const auto d = el::generate_linear(50, 2.0, noise, 23);
  const el::HuberLoss hb(1.0);
  const auto fit = el::fit_rerm(d, hb, 0.5, 2.0);
  CHECK(fit.converged);
  CHECK(fit.grad_norm < 1e-6);

  const auto link = el::BinaryLink::sign_link();
  const auto b = el::generate_binary(50, 2.0, link, 29);
  const el::LogisticLoss lg;
  const auto bfit = el::fit_rerm(b, lg, 0.5, 2.0);
  CHECK(bfit.converged);
}

TEST_CASE("empirical metrics identities", "[simlab]") {
  const auto noise = el::NoiseModel::gaussian(1.0);
  const auto d = el::generate_linear(30, 2.0, noise, 3);
  const auto em = el::empirical_metrics(d, d.x0);
  CHECK(em.alpha_sq == Approx(0.0).margin(1e-12));
  CHECK(em.mu == Approx(1.0).epsilon(1e-12));
  CHECK(em.sigma_sq == Approx(0.0).margin(1e-12));
  CHECK(em.corr == Approx(1.0).epsilon(1e-12));
  const auto em2 = el::empirical_metrics(d, 2.0 * d.x0);
  CHECK(em2.alpha_sq == Approx(1.0).epsilon(1e-12));
  CHECK(em2.sigma_sq == Approx(0.0).margin(1e-12));
  // Orthogonal estimates carry no directional information.
  Eigen::VectorXd orth = Eigen::VectorXd::Zero(30);
  orth[0] = d.x0[1];
  orth[1] = -d.x0[0];
  CHECK_THROWS_AS(el::empirical_metrics(d, orth), el::ZeroEstimate);
}

TEST_CASE("monte carlo runs are reproducible", "[simlab]") {
  const auto noise = el::NoiseModel::gaussian(1.0);
  const el::SquareLoss sq;
  const auto a = el::monte_carlo_linear(40, 2.0, noise, sq, 1.0, 6, 99);
  const auto b = el::monte_carlo_linear(40, 2.0, noise, sq, 1.0, 6, 99);
  CHECK(a.mean_alpha_sq == b.mean_alpha_sq);
  CHECK(a.se_alpha_sq == b.se_alpha_sq);
  REQUIRE(a.trials.size() == 6);
  CHECK(a.trials[3].seed == b.trials[3].seed);
  CHECK_THROWS_AS(el::run_monte_carlo([](std::uint64_t) { return el::TrialRecord{}; },
                                      0, 1),
                  el::DomainError);
}

TEST_CASE("linear monte carlo concentrates near the asymptotic value", "[simlab]") {
  const auto noise = el::NoiseModel::gaussian(1.0);
  const el::SquareLoss sq;
  const double delta = 2.0, lambda = 4.0;  // optimally tuned ridge
  const auto mc = el::monte_carlo_linear(80, delta, noise, sq, lambda, 10, 7);
  const double theory = el::rls_alpha_sq(delta, lambda, 1.0);
  CHECK(mc.mean_alpha_sq == Approx(theory).margin(0.08));
  CHECK(mc.se_alpha_sq < 0.05);
}

TEST_CASE("binary monte carlo concentrates near the asymptotic value", "[simlab]") {
  const auto link = el::BinaryLink::sign_link();
  const el::ShiftedSquareLoss ssq;
  const double delta = 2.0, lambda = 0.7;
  const auto mc = el::monte_carlo_binary(80, delta, link, ssq, lambda, 10, 7);
  const double nu = std::sqrt(2.0 / el::kPi);
  const double theory = el::rls_sigma_sq(delta, lambda, nu);
  CHECK(mc.mean_sigma_sq == Approx(theory).margin(0.12));
  const double err_theory =
      el::classification_error(std::sqrt(theory), link);
  CHECK(mc.mean_class_error == Approx(err_theory).margin(0.03));
}
