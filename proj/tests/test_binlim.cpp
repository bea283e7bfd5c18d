#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ermlimits/binlim.hpp"

using Catch::Approx;
namespace el = ermlimits;

TEST_CASE("H function: monotonicity and domain", "[binlim]") {
  double prev = 1e300;
  for (double x : {1.1, 1.5, 2.0, 4.0, 10.0}) {
    const double v = el::H_delta(2.0, x);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(el::H_delta(0.0, 2.0), el::DomainError);
  CHECK_THROWS_AS(el::H_delta(2.0, 1.0), el::DomainError);
}

TEST_CASE("binary ridge formula: optimum and limits", "[binlim]") {
  const double nu = std::sqrt(2.0 / el::kPi);
  for (double delta : {0.5, 2.0, 5.0}) {
    const double lopt = el::rls_lambda_opt_binary(delta, nu);
    const double at_opt = el::rls_sigma_sq(delta, lopt, nu);
    CHECK(at_opt ==
          Approx(el::H_delta(delta, 1.0 / (1.0 - nu * nu))).epsilon(1e-10));
    CHECK(el::rls_sigma_sq(delta, 1.3 * lopt, nu) >= at_opt - 1e-12);
    CHECK(el::rls_sigma_sq(delta, 0.7 * lopt, nu) >= at_opt - 1e-12);
    // Infinite regularization collapses to the averaging estimator.
    CHECK(el::rls_sigma_sq(delta, 1e9, nu) ==
          Approx(1.0 / (nu * nu * delta)).epsilon(1e-6));
  }
  // Unregularized limit, interpolation regime excluded.
  CHECK_THROWS_AS(el::rls_sigma_sq(0.5, 0.0, nu), el::DomainError);
  CHECK(el::rls_sigma_sq(3.0, 0.0, nu) ==
        Approx((1.0 / (nu * nu) - 1.0) / 2.0).epsilon(1e-10));
}

TEST_CASE("classification error closed form and monotonicity", "[binlim]") {
  const auto sgn = el::BinaryLink::sign_link();
  // For the sign link the error is the angle fraction atan(sigma)/pi.
  for (double sigma : {0.3, 1.0, 2.5}) {
    CHECK(el::classification_error(sigma, sgn) ==
          Approx(std::atan(sigma) / el::kPi).margin(1e-9));
  }
  for (const auto& link : {sgn, el::BinaryLink::logistic(10.0),
                           el::BinaryLink::probit(2.0)}) {
    double prev = -1.0;
    for (double sigma : {0.2, 0.5, 1.0, 2.0, 5.0}) {
      const double e = el::classification_error(sigma, link);
      CHECK(e > prev);
      CHECK(e < 0.5);
      prev = e;
    }
  }
  CHECK_THROWS_AS(el::classification_error(0.0, sgn), el::DomainError);
}

TEST_CASE("square-margin solver agrees with the ridge closed form", "[binlim]") {
  const el::ShiftedSquareLoss sq;
  const auto sgn = el::BinaryLink::sign_link();
  const double nu = std::sqrt(2.0 / el::kPi);
  for (double delta : {0.5, 2.0}) {
    for (double lambda : {0.7, el::rls_lambda_opt_binary(delta, nu)}) {
      const auto sol = el::solve_system_binary(sq, lambda, delta, sgn);
      CHECK(sol.sigma * sol.sigma ==
            Approx(el::rls_sigma_sq(delta, lambda, nu)).epsilon(1e-7));
      CHECK(sol.mu > 0.0);
      CHECK(sol.rho == Approx(1.0 / std::sqrt(1.0 + sol.sigma * sol.sigma)));
      CHECK(sol.class_error ==
            Approx(std::atan(sol.sigma) / el::kPi).margin(1e-8));
    }
  }
}

TEST_CASE("binary solver input validation", "[binlim]") {
  const el::ShiftedSquareLoss ssq;
  const el::SquareLoss sq;
  const auto sgn = el::BinaryLink::sign_link();
  CHECK_THROWS_AS(el::solve_system_binary(ssq, -1.0, 2.0, sgn), el::DomainError);
  CHECK_THROWS_AS(el::solve_system_binary(ssq, 0.0, 0.5, sgn), el::DomainError);
  // A symmetric loss with vanishing slope at the origin cannot align.
  CHECK_THROWS_AS(el::solve_system_binary(sq, 1.0, 2.0, sgn),
                  el::AssumptionViolated);
  // An even link carries no usable signal.
  const auto even = el::BinaryLink::custom({-1.0, 0.0, 1.0}, {0.8, 0.2, 0.8});
  CHECK_THROWS_AS(el::solve_system_binary(ssq, 1.0, 2.0, even),
                  el::AssumptionViolated);
}

TEST_CASE("sign lower bound matches frozen references", "[binlim]") {
  const auto sgn = el::BinaryLink::sign_link();
  const struct {
    double delta, s2, xs;
  } ref[] = {
      {0.5, 2.567278624080287, 1.439348531258716},
      {2.0, 0.3730639945833697, 0.13585091301464391},
      {4.0, 0.11079353958231358, 0.024935673379945733},
      {8.0, 0.029413396547684607, 0.0035716210618503105},
  };
  for (const auto& r : ref) {
    const auto bd = el::sigma_star(r.delta, sgn);
    CHECK(bd.sigma_star_sq() == Approx(r.s2).epsilon(1e-8));
    CHECK(bd.x_star == Approx(r.xs).epsilon(1e-6));
  }
}

TEST_CASE("sign lower bound matches the 2d grid oracle", "[binlim]") {
  const auto sgn = el::BinaryLink::sign_link();
  for (double delta : {0.5, 2.0}) {
    const auto bd = el::sigma_star(delta, sgn);
    const auto [s2d, x2d] = el::sigma_star_grid(delta, sgn);
    CHECK(bd.sigma_star == Approx(s2d).margin(1e-6));
    CHECK(bd.x_star == Approx(x2d).margin(1e-4));
  }
}

TEST_CASE("no convex loss beats the binary lower bound", "[binlim]") {
  const auto sgn = el::BinaryLink::sign_link();
  const double delta = 2.0;
  const double ss = el::sigma_star(delta, sgn).sigma_star;
  const el::ShiftedSquareLoss ssq;
  const el::LogisticLoss lg;
  for (const el::Loss* loss : {static_cast<const el::Loss*>(&ssq),
                               static_cast<const el::Loss*>(&lg)}) {
    for (double lambda : {0.3, 1.0, 4.0}) {
      const auto sol = el::solve_system_binary(*loss, lambda, delta, sgn);
      CHECK(sol.sigma >= ss - 1e-6);
    }
  }
}

TEST_CASE("closed-form sandwich for smooth links", "[binlim]") {
  const auto l1 = el::BinaryLink::logistic(1.0);
  for (double delta : {0.5, 2.0, 8.0}) {
    const auto r = el::omega_big_delta(delta, l1);
    CHECK(r.fisher_sfs == Approx(1.2066213).margin(2e-6));
    CHECK(r.omega > 0.0);
    CHECK(r.omega <= 1.0 + 1e-12);
    // The closed form really is a lower bound on the computed value.
    const double s2 = el::sigma_star(delta, l1).sigma_star_sq();
    CHECK(s2 >= r.sigma_star_sq_lower - 1e-7);
  }
  // A density jump degenerates the closed-form bound to zero.
  const auto rs = el::omega_big_delta(2.0, el::BinaryLink::sign_link());
  CHECK(rs.omega == 0.0);
  CHECK(rs.sigma_star_sq_lower == 0.0);
}

TEST_CASE("averaging estimator formulas", "[binlim]") {
  const auto sgn = el::BinaryLink::sign_link();
  const auto a = el::averaging(2.0, sgn);
  CHECK(a.sigma_ave_sq == Approx(el::kPi / 4.0).margin(1e-9));
  CHECK(a.crossover_delta == Approx(el::kPi / 2.0).margin(1e-9));
  CHECK(a.sandwich_lower == 0.0);
  const auto l10 = el::BinaryLink::logistic(10.0);
  const auto b = el::averaging(3.0, l10);
  CHECK(b.sigma_ave_sq > 0.0);
  CHECK(b.sandwich_lower > 0.0);
  CHECK(b.sandwich_lower <= 1.0 + 1e-9);
}

TEST_CASE("binary unregularized gap bounds are consistent", "[binlim]") {
  const auto l10 = el::BinaryLink::logistic(10.0);
  CHECK_THROWS_AS(el::unreg_gap_binary(0.9, l10), el::DomainError);
  const double nu = el::nu_f(l10);
  for (double delta : {1.5, 3.0}) {
    const auto g = el::unreg_gap_binary(delta, l10);
    CHECK(g.ratio_lower <= g.ratio_upper + 1e-12);
    const double ureg = el::rls_sigma_sq(delta, 0.0, nu);
    const double ratio = el::sigma_star(delta, l10).sigma_star_sq() / ureg;
    CHECK(ratio >= g.ratio_lower - 1e-7);
    CHECK(ratio <= g.ratio_upper + 1e-7);
  }
}

TEST_CASE("designed binary loss reattains the lower bound", "[binlim]") {
  const auto sgn = el::BinaryLink::sign_link();
  const auto opt = el::optimal_loss_binary(2.0, sgn, 2001, true);
  CHECK(opt.verify_alpha_dev < 1e-5);
  CHECK(opt.verify_mu_dev < 1e-5);
  CHECK(opt.verify_tau_dev < 1e-5);
  CHECK(opt.lambda_star > 0.0);
}
