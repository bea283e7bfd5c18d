#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ermlimits/linlim.hpp"

using Catch::Approx;
namespace el = ermlimits;

TEST_CASE("h function: monotonicity and domain", "[linlim]") {
  CHECK(el::h_delta(2.0, 0.0) == Approx(0.0).margin(1e-12));
  double prev = -1.0;
  for (double x : {0.1, 0.5, 1.0, 2.0, 8.0}) {
    const double v = el::h_delta(2.0, x);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(el::h_delta(0.0, 1.0), el::DomainError);
  CHECK_THROWS_AS(el::h_delta(2.0, -0.1), el::DomainError);
}

TEST_CASE("ridge formula: optimum and limits", "[linlim]") {
  const double E = 2.0;  // noise second moment
  for (double delta : {0.5, 2.0, 5.0}) {
    // The optimally tuned value equals h evaluated at the second moment.
    CHECK(el::rls_alpha_sq(delta, 2.0 * E, E) ==
          Approx(el::h_delta(delta, E)).epsilon(1e-12));
    // And the optimum really is a minimum over lambda.
    const double at_opt = el::rls_alpha_sq(delta, 2.0 * E, E);
    CHECK(el::rls_alpha_sq(delta, 1.2 * 2.0 * E, E) >= at_opt - 1e-12);
    CHECK(el::rls_alpha_sq(delta, 0.8 * 2.0 * E, E) >= at_opt - 1e-12);
  }
  // Unregularized limit needs more samples than parameters.
  CHECK_THROWS_AS(el::rls_alpha_sq(0.5, 0.0, 1.0), el::DomainError);
  CHECK(el::rls_alpha_sq(2.0, 0.0, 1.0) == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("square-loss solver agrees with the ridge closed form", "[linlim]") {
  const el::SquareLoss sq;
  const auto noise = el::NoiseModel::laplace(1.0);
  const double E = noise.second_moment();
  for (double delta : {0.5, 2.0}) {
    for (double lambda : {0.7, 2.0 * E}) {
      const auto sol = el::solve_system_linear(sq, lambda, delta, noise);
      CHECK(sol.alpha_sq() ==
            Approx(el::rls_alpha_sq(delta, lambda, E)).epsilon(1e-8));
      CHECK(sol.tau > 0.0);
      CHECK(sol.tau < 1.0 / lambda + 1e-9);
    }
  }
  const auto g = el::NoiseModel::gaussian(1.0);
  const auto sol = el::solve_system_linear(sq, 2.0, 2.0, g);
  CHECK(sol.alpha_sq() == Approx(el::h_delta(2.0, 1.0)).epsilon(1e-8));
}

TEST_CASE("solver input validation", "[linlim]") {
  const el::SquareLoss sq;
  const auto noise = el::NoiseModel::gaussian(1.0);
  CHECK_THROWS_AS(el::solve_system_linear(sq, -1.0, 2.0, noise), el::DomainError);
  CHECK_THROWS_AS(el::solve_system_linear(sq, 1.0, 0.0, noise), el::DomainError);
  CHECK_THROWS_AS(el::solve_system_linear(sq, 0.0, 0.5, noise), el::DomainError);
}

TEST_CASE("gaussian lower bound matches the closed form", "[linlim]") {
  for (double z2 : {0.5, 1.0, 4.0}) {
    const auto noise = el::NoiseModel::gaussian(z2);
    for (double delta : {0.5, 2.0, 8.0}) {
      const auto bd = el::alpha_star(delta, noise);
      CHECK(bd.alpha_star_sq() == Approx(el::h_delta(delta, z2)).margin(1e-9));
    }
  }
}

TEST_CASE("laplace lower bound matches the 2d grid oracle", "[linlim]") {
  const auto noise = el::NoiseModel::laplace(1.0);
  for (double delta : {0.5, 2.0}) {
    const auto bd = el::alpha_star(delta, noise);
    const auto [a2d, x2d] = el::alpha_star_grid(delta, noise);
    CHECK(bd.alpha_star == Approx(a2d).margin(1e-6));
    CHECK(bd.x_star == Approx(x2d).margin(1e-4));
    CHECK(bd.x_star > 0.0);
    CHECK(bd.x_star < 1.0 / delta);
    CHECK_FALSE(bd.diagnostics.empty());
  }
}

TEST_CASE("tuned-ridge suboptimality ratio stays in range", "[linlim]") {
  for (double b : {0.5, 1.0, 2.0}) {
    const auto noise = el::NoiseModel::laplace(b);
    for (double delta : {0.25, 1.0, 4.0}) {
      const auto r = el::omega_delta(delta, noise);
      CHECK(r.omega <= 1.0 + 1e-12);
      CHECK(r.omega >= 0.5);
    }
  }
  // Gaussian noise: ridge is exactly optimal.
  const auto r = el::omega_delta(2.0, el::NoiseModel::gaussian(1.0));
  CHECK(r.omega == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("no convex loss beats the lower bound", "[linlim]") {
  const auto noise = el::NoiseModel::laplace(1.0);
  const double delta = 2.0;
  const double as2 = el::alpha_star(delta, noise).alpha_star_sq();
  const el::SquareLoss sq;
  const el::HuberLoss hb(1.0);
  const el::AbsLoss ab;
  for (const el::Loss* loss : {static_cast<const el::Loss*>(&sq),
                               static_cast<const el::Loss*>(&hb),
                               static_cast<const el::Loss*>(&ab)}) {
    for (double lambda : {0.3, 1.0, 4.0}) {
      const auto sol = el::solve_system_linear(*loss, lambda, delta, noise);
      CHECK(sol.alpha_sq() >= as2 - 1e-7);
    }
  }
}

TEST_CASE("unregularized gap bounds are consistent", "[linlim]") {
  const auto noise = el::NoiseModel::laplace(1.0);
  CHECK_THROWS_AS(el::unreg_gap_linear(0.8, noise), el::DomainError);
  for (double delta : {1.5, 3.0, 6.0}) {
    const auto g = el::unreg_gap_linear(delta, noise);
    CHECK(g.ratio_lower <= g.ratio_upper + 1e-12);
    CHECK(g.ratio_upper <= 1.0 + 1e-12);
    CHECK(g.alpha_ureg_sq_lower > 0.0);
    // The true ratio sits inside the sandwich.
    const double ureg =
        el::rls_alpha_sq(delta, 0.0, noise.second_moment());
    const double ratio = el::alpha_star(delta, noise).alpha_star_sq() / ureg;
    CHECK(ratio >= g.ratio_lower - 1e-9);
    CHECK(ratio <= g.ratio_upper + 1e-9);
  }
}

TEST_CASE("designed loss reattains the lower bound", "[linlim]") {
  const double delta = 2.0;
  const auto noise = el::NoiseModel::laplace(1.0);
  const auto opt = el::optimal_loss_linear(delta, noise, 2001, true);
  CHECK(opt.verify_alpha_dev < 1e-5);
  CHECK(opt.verify_tau_dev < 1e-5);
  CHECK(opt.lambda_star > 0.0);
  CHECK(opt.loss.convex());
}

TEST_CASE("noise rescaling maps to the unit-norm problem", "[linlim]") {
  const auto n = el::rescale_noise(el::NoiseModel::laplace(2.0), 4.0);
  CHECK(n.param() == Approx(0.5));
  const auto g = el::rescale_noise(el::NoiseModel::gaussian(2.0), 2.0);
  CHECK(g.param() == Approx(0.5));
  CHECK_THROWS_AS(el::rescale_noise(el::NoiseModel::gaussian(1.0), 0.0),
                  el::DomainError);
}
