// ermlimits command-line tool: asymptotic bounds, fixed-point solutions,
// optimal loss design, Monte-Carlo simulation, and canned reproduction
// targets. Emits CSV/JSON artifacts with an embedded metadata block.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ermlimits/binlim.hpp"
#include "ermlimits/dists.hpp"
#include "ermlimits/io.hpp"
#include "ermlimits/linlim.hpp"
#include "ermlimits/moreau.hpp"
#include "ermlimits/simlab.hpp"
#include "ermlimits/smooth.hpp"

namespace el = ermlimits;

namespace {

struct CommonOpts {
  std::string model = "linear";
  std::string noise = "gaussian:1";
  std::string link = "sign";
  std::string delta = "2";
  std::string lambda = "opt";
  std::string loss;
  std::string out = ".";
  std::uint64_t seed = 1;
  double tol = 1e-9;
  int trials = 50;
  int n = 100;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw el::DomainError("cannot parse " + what + " value '" + s + "'");
  }
}

// --delta accepts a single value, a comma list, or a range a:b:step.
std::vector<double> parse_delta(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) {
      throw el::DomainError("--delta range must be a:b:step, got '" + spec + "'");
    }
    const double a = parse_double(parts[0], "delta");
    const double b = parse_double(parts[1], "delta");
    const double step = parse_double(parts[2], "delta step");
    if (!(step > 0) || b < a) throw el::DomainError("bad --delta range '" + spec + "'");
    for (double d = a; d <= b + 1e-12; d += step) out.push_back(d);
  } else {
    for (const auto& tok : split(spec, ',')) {
      if (!tok.empty()) out.push_back(parse_double(tok, "delta"));
    }
  }
  if (out.empty()) throw el::DomainError("--delta produced an empty list");
  for (double d : out) {
    if (!(d > 0)) throw el::DomainError("delta must be > 0");
  }
  return out;
}

el::NoiseModel parse_noise(const std::string& spec) {
  const auto parts = split(spec, ':');
  const std::string& kind = parts[0];
  if (kind == "gaussian") {
    const double z = parts.size() > 1 ? parse_double(parts[1], "noise param") : 1.0;
    return el::NoiseModel::gaussian(z);
  }
  if (kind == "laplace") {
    const double b = parts.size() > 1 ? parse_double(parts[1], "noise param") : 1.0;
    return el::NoiseModel::laplace(b);
  }
  if (kind == "custom") {
    if (parts.size() < 2) throw el::DomainError("--noise custom requires custom:PATH");
    auto [x, p] = el::read_xy_csv(parts[1]);
    return el::NoiseModel::custom(std::move(x), std::move(p));
  }
  throw el::DomainError("unknown noise kind '" + kind + "' (gaussian|laplace|custom)");
}

el::BinaryLink parse_link(const std::string& spec) {
  const auto parts = split(spec, ':');
  const std::string& kind = parts[0];
  if (kind == "sign") return el::BinaryLink::sign_link();
  if (kind == "logistic") {
    const double r = parts.size() > 1 ? parse_double(parts[1], "link param") : 1.0;
    return el::BinaryLink::logistic(r);
  }
  if (kind == "probit") {
    const double r = parts.size() > 1 ? parse_double(parts[1], "link param") : 1.0;
    return el::BinaryLink::probit(r);
  }
  if (kind == "custom") {
    if (parts.size() < 2) throw el::DomainError("--link custom requires custom:PATH");
    auto [x, f] = el::read_xy_csv(parts[1]);
    return el::BinaryLink::custom(std::move(x), std::move(f));
  }
  throw el::DomainError("unknown link kind '" + kind + "' (sign|logistic|probit|custom)");
}

std::unique_ptr<el::Loss> parse_loss(const std::string& spec, bool binary) {
  const auto parts = split(spec, ':');
  const std::string& kind = parts[0];
  if (kind == "square") {
    if (binary) return std::make_unique<el::ShiftedSquareLoss>();
    return std::make_unique<el::SquareLoss>();
  }
  if (kind == "abs") return std::make_unique<el::AbsLoss>();
  if (kind == "huber") {
    const double k = parts.size() > 1 ? parse_double(parts[1], "huber kappa") : 1.0;
    return std::make_unique<el::HuberLoss>(k);
  }
  if (kind == "logistic") return std::make_unique<el::LogisticLoss>();
  if (spec.find(".csv") != std::string::npos) {
    return std::make_unique<el::TabulatedLoss>(
        el::load_tabulated_loss(spec, "table:" + spec));
  }
  throw el::DomainError("unknown loss '" + spec +
                        "' (square|abs|huber[:k]|logistic|PATH.csv|optimal)");
}

double lambda_or_opt_linear(const std::string& spec, const el::NoiseModel& noise,
                            double delta) {
  (void)delta;
  if (spec == "opt") return 2.0 * noise.second_moment();
  return parse_double(spec, "lambda");
}

double lambda_or_opt_binary(const std::string& spec, const el::BinaryLink& link,
                            double delta) {
  if (spec == "opt") return el::rls_lambda_opt_binary(delta, el::nu_f(link));
  return parse_double(spec, "lambda");
}

std::string out_path(const CommonOpts& o, const std::string& name) {
  if (o.out.empty() || o.out == ".") return name;
  return o.out + "/" + name;
}

// ---------------------------------------------------------------------------
// bound

int cmd_bound(const CommonOpts& o) {
  const el::WallClock clock;
  el::RunMetadata meta;
  meta.seed = o.seed;
  meta.tol = o.tol;
  const auto deltas = parse_delta(o.delta);
  std::vector<std::vector<double>> rows;
  if (o.model == "linear") {
    const el::NoiseModel noise = parse_noise(o.noise);
    const double E = noise.second_moment();
    const double I = noise.fisher();
    std::printf("# linear bound: noise=%s  E[Z^2]=%.6g  I(Z)=%.6g\n",
                o.noise.c_str(), E, I);
    std::printf("%8s %14s %12s %14s %14s %10s\n", "delta", "alpha_star_sq",
                "x_star", "closed_lower", "rls_opt", "ratio");
    for (double d : deltas) {
      const el::LinearBound b = el::alpha_star(d, noise);
      const double closed = el::h_delta(d, 1.0 / I);
      const double rls = el::h_delta(d, E);
      const double a2 = b.alpha_star * b.alpha_star;
      std::printf("%8.4g %14.8f %12.6f %14.8f %14.8f %10.6f\n", d, a2, b.x_star,
                  closed, rls, a2 / rls);
      rows.push_back({d, a2, b.x_star, closed, rls, a2 / rls});
    }
    meta.wall_seconds = clock.seconds();
    el::write_csv(out_path(o, "bound_linear.csv"),
                  {"delta", "alpha_star_sq", "x_star", "closed_lower",
                   "rls_opt_alpha_sq", "ratio"},
                  rows, meta);
  } else if (o.model == "binary") {
    const el::BinaryLink link = parse_link(o.link);
    const double nu = el::nu_f(link);
    std::printf("# binary bound: link=%s  nu_f=%.6g\n", o.link.c_str(), nu);
    std::printf("%8s %14s %12s %14s %14s %10s %12s\n", "delta", "sigma_star_sq",
                "x_star", "closed_lower", "rls_opt", "ratio", "sigma_ave_sq");
    for (double d : deltas) {
      const el::BinaryBound b = el::sigma_star(d, link);
      const double rls = el::H_delta(d, 1.0 / (1.0 - nu * nu));
      const el::OmegaBigResult om = el::omega_big_delta(d, link);
      const el::AveragingResult av = el::averaging(d, link);
      const double s2 = b.sigma_star_sq();
      std::printf("%8.4g %14.8f %12.6f %14.8f %14.8f %10.6f %12.6f\n", d, s2,
                  b.x_star, om.sigma_star_sq_lower, rls, s2 / rls,
                  av.sigma_ave_sq);
      rows.push_back({d, s2, b.x_star, om.sigma_star_sq_lower, rls, s2 / rls,
                      av.sigma_ave_sq});
    }
    meta.wall_seconds = clock.seconds();
    el::write_csv(out_path(o, "bound_binary.csv"),
                  {"delta", "sigma_star_sq", "x_star", "closed_lower",
                   "rls_opt_sigma_sq", "ratio", "sigma_ave_sq"},
                  rows, meta);
  } else {
    throw el::DomainError("--model must be linear or binary");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// solve

int cmd_solve(const CommonOpts& o) {
  const el::WallClock clock;
  el::RunMetadata meta;
  meta.seed = o.seed;
  meta.tol = o.tol;
  const auto deltas = parse_delta(o.delta);
  const std::string loss_spec = o.loss.empty() ? "square" : o.loss;
  std::vector<std::vector<double>> rows;
  if (o.model == "linear") {
    const el::NoiseModel noise = parse_noise(o.noise);
    const auto loss = parse_loss(loss_spec, false);
    std::printf("%8s %10s %14s %12s %12s\n", "delta", "lambda", "alpha_sq",
                "tau", "residual");
    for (double d : deltas) {
      const double lam = lambda_or_opt_linear(o.lambda, noise, d);
      const el::LinearSolution s = el::solve_system_linear(*loss, lam, d, noise);
      std::printf("%8.4g %10.5g %14.8f %12.6f %12.3g\n", d, lam, s.alpha_sq(),
                  s.tau, s.residual_norm);
      rows.push_back({d, lam, s.alpha_sq(), s.tau, s.residual_norm});
    }
    meta.wall_seconds = clock.seconds();
    el::write_csv(out_path(o, "solve_linear.csv"),
                  {"delta", "lambda", "alpha_sq", "tau", "residual"}, rows, meta);
  } else if (o.model == "binary") {
    const el::BinaryLink link = parse_link(o.link);
    const auto loss = parse_loss(loss_spec, true);
    std::printf("%8s %10s %14s %10s %10s %10s %12s\n", "delta", "lambda",
                "sigma_sq", "mu", "rho", "class_err", "residual");
    for (double d : deltas) {
      const double lam = lambda_or_opt_binary(o.lambda, link, d);
      const el::BinarySolution s = el::solve_system_binary(*loss, lam, d, link);
      std::printf("%8.4g %10.5g %14.8f %10.6f %10.6f %10.6f %12.3g\n", d, lam,
                  s.sigma * s.sigma, s.mu, s.rho, s.class_error,
                  s.residual_norm);
      rows.push_back({d, lam, s.sigma * s.sigma, s.mu, s.rho, s.class_error,
                      s.residual_norm});
    }
    meta.wall_seconds = clock.seconds();
    el::write_csv(out_path(o, "solve_binary.csv"),
                  {"delta", "lambda", "sigma_sq", "mu", "rho", "class_error",
                   "residual"},
                  rows, meta);
  } else {
    throw el::DomainError("--model must be linear or binary");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// design-loss

int cmd_design_loss(const CommonOpts& o) {
  const el::WallClock clock;
  el::RunMetadata meta;
  meta.seed = o.seed;
  meta.tol = o.tol;
  const auto deltas = parse_delta(o.delta);
  if (deltas.size() != 1) {
    throw el::DomainError("design-loss expects a single --delta value");
  }
  const double d = deltas[0];
  nlohmann::json sidecar;
  if (o.model == "linear") {
    const el::NoiseModel noise = parse_noise(o.noise);
    el::OptimalLinearLoss ol = el::optimal_loss_linear(d, noise);
    // Near-quadratic diagnostic: constancy of the second difference of the
    // designed loss across the central grid.
    const auto& t = ol.loss.table();
    double dmin = 1e300, dmax = -1e300;
    const std::size_t q = t.vals.size() / 4;
    for (std::size_t i = q; i + 1 < 3 * q; ++i) {
      const double second =
          (t.vals[i + 1] - 2.0 * t.vals[i] + t.vals[i - 1]) / (t.dx * t.dx);
      dmin = std::min(dmin, second);
      dmax = std::max(dmax, second);
    }
    sidecar = {{"model", "linear"},
               {"delta", d},
               {"lambda_star", ol.lambda_star},
               {"alpha_or_sigma_star", ol.alpha_star},
               {"grid_range", {t.xmin, t.xmin + t.dx * (t.vals.size() - 1)}},
               {"created", el::iso_timestamp()},
               {"noise", o.noise},
               {"near_quadratic", dmax - dmin < 1e-4},
               {"second_difference_spread", dmax - dmin}};
    meta.wall_seconds = clock.seconds();
    el::write_loss_table(out_path(o, "loss_linear.csv"), ol.loss, sidecar, meta);
    std::printf("designed linear loss: delta=%g lambda_star=%.8g alpha_star=%.8g\n",
                d, ol.lambda_star, ol.alpha_star);
    std::printf("verification deviation: alpha %.3g, tau %.3g\n",
                ol.verify_alpha_dev, ol.verify_tau_dev);
  } else if (o.model == "binary") {
    const el::BinaryLink link = parse_link(o.link);
    el::OptimalBinaryLoss ob = el::optimal_loss_binary(d, link);
    const auto& t = ob.loss.table();
    sidecar = {{"model", "binary"},
               {"delta", d},
               {"lambda_star", ob.lambda_star},
               {"alpha_or_sigma_star", ob.sigma_star},
               {"grid_range", {t.xmin, t.xmin + t.dx * (t.vals.size() - 1)}},
               {"created", el::iso_timestamp()},
               {"link", o.link},
               {"eta", ob.eta}};
    meta.wall_seconds = clock.seconds();
    el::write_loss_table(out_path(o, "loss_binary.csv"), ob.loss, sidecar, meta);
    std::printf("designed binary loss: delta=%g lambda_star=%.8g sigma_star=%.8g\n",
                d, ob.lambda_star, ob.sigma_star);
    std::printf("verification deviation: alpha %.3g, mu %.3g, tau %.3g\n",
                ob.verify_alpha_dev, ob.verify_mu_dev, ob.verify_tau_dev);
  } else {
    throw el::DomainError("--model must be linear or binary");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimRow {
  double delta, lambda, theory, emp_mean, emp_se;
  int trials;
};

int cmd_simulate(const CommonOpts& o) {
  const el::WallClock clock;
  el::RunMetadata meta;
  meta.seed = o.seed;
  meta.tol = o.tol;
  const auto deltas = parse_delta(o.delta);
  if (o.n < 10) throw el::DomainError("--n must be >= 10");
  if (o.trials < 1) throw el::DomainError("--trials must be >= 1");
  const std::string loss_spec = o.loss.empty() ? "square" : o.loss;
  const bool optimal_loss = loss_spec == "optimal";
  std::vector<std::vector<double>> rows;
  std::printf("%8s %10s %14s %14s %12s\n", "delta", "lambda", "theory",
              "empirical", "std_err");
  if (o.model == "linear") {
    const el::NoiseModel noise = parse_noise(o.noise);
    for (double d : deltas) {
      std::unique_ptr<el::Loss> loss;
      double lam = 0.0, theory = 0.0;
      if (optimal_loss) {
        el::OptimalLinearLoss ol = el::optimal_loss_linear(d, noise, 4001, false);
        lam = ol.lambda_star;
        theory = ol.alpha_star * ol.alpha_star;
        loss = std::make_unique<el::TabulatedLoss>(std::move(ol.loss));
      } else {
        loss = parse_loss(loss_spec, false);
        lam = lambda_or_opt_linear(o.lambda, noise, d);
        theory = el::solve_system_linear(*loss, lam, d, noise).alpha_sq();
      }
      const el::MonteCarloResult mc =
          el::monte_carlo_linear(o.n, d, noise, *loss, lam, o.trials, o.seed);
      std::printf("%8.4g %10.5g %14.8f %14.8f %12.6f\n", d, lam, theory,
                  mc.mean_alpha_sq, mc.se_alpha_sq);
      rows.push_back({d, lam, theory, mc.mean_alpha_sq, mc.se_alpha_sq,
                      static_cast<double>(o.trials)});
    }
    meta.wall_seconds = clock.seconds();
    el::write_csv(out_path(o, "simulate_linear.csv"),
                  {"delta", "lambda", "alpha_sq_theory", "alpha_sq_empirical",
                   "std_err", "trials"},
                  rows, meta);
  } else if (o.model == "binary") {
    const el::BinaryLink link = parse_link(o.link);
    for (double d : deltas) {
      std::unique_ptr<el::Loss> loss;
      double lam = 0.0, theory = 0.0;
      if (optimal_loss) {
        el::OptimalBinaryLoss ob = el::optimal_loss_binary(d, link, 4001, false);
        lam = ob.lambda_star;
        theory = ob.sigma_star * ob.sigma_star;
        loss = std::make_unique<el::TabulatedLoss>(std::move(ob.loss));
      } else {
        loss = parse_loss(loss_spec, true);
        lam = lambda_or_opt_binary(o.lambda, link, d);
        const el::BinarySolution s = el::solve_system_binary(*loss, lam, d, link);
        theory = s.sigma * s.sigma;
      }
      const el::MonteCarloResult mc =
          el::monte_carlo_binary(o.n, d, link, *loss, lam, o.trials, o.seed);
      std::printf("%8.4g %10.5g %14.8f %14.8f %12.6f\n", d, lam, theory,
                  mc.mean_sigma_sq, mc.se_sigma_sq);
      rows.push_back({d, lam, theory, mc.mean_sigma_sq, mc.se_sigma_sq,
                      static_cast<double>(o.trials)});
    }
    meta.wall_seconds = clock.seconds();
    el::write_csv(out_path(o, "simulate_binary.csv"),
                  {"delta", "lambda", "sigma_sq_theory", "sigma_sq_empirical",
                   "std_err", "trials"},
                  rows, meta);
  } else {
    throw el::DomainError("--model must be linear or binary");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// reproduce

// Reference optimal-vs-RLS ratios published for these four model rows
// (delta = 0.5, 2, 4, 6, 8).
struct Table1Block {
  const char* label;
  std::array<double, 5> reference;
};

int cmd_reproduce_table1(const CommonOpts& o) {
  const el::WallClock clock;
  el::RunMetadata meta;
  meta.seed = o.seed;
  meta.tol = o.tol;
  const std::array<double, 5> deltas = {0.5, 2, 4, 6, 8};
  const Table1Block blocks[] = {
      {"laplace_b1", {0.9798, 0.9103, 0.8332, 0.7690, 0.7447}},
      {"laplace_b2", {0.9832, 0.9329, 0.8796, 0.8371, 0.8043}},
      {"sign", {0.9934, 0.8531, 0.6199, 0.4602, 0.3618}},
      {"logistic_r10", {0.9826, 0.8721, 0.7116, 0.6211, 0.5712}},
  };
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::printf("%-14s %6s %12s %12s %10s\n", "model", "delta", "computed",
              "reference", "abs_diff");
  auto emit = [&](const char* label, int block, int j, double ratio) {
    const double ref = blocks[block].reference[j];
    std::printf("%-14s %6.3g %12.6f %12.6f %10.2e\n", label, deltas[j], ratio,
                ref, std::abs(ratio - ref));
    labels.push_back(label);
    rows.push_back({deltas[j], ratio, ref, std::abs(ratio - ref)});
  };
  // Linear rows. The "b2" row matches the scale-parameter reading of its
  // label (b = 2, E[Z^2] = 8); we also emit the variance-style alternative
  // (b = sqrt(2)) so the convention choice is visible in the artifact.
  for (int blk = 0; blk < 2; ++blk) {
    const double b = blk == 0 ? 1.0 : 2.0;
    const el::NoiseModel noise = el::NoiseModel::laplace(b);
    const double rls_arg = noise.second_moment();
    for (int j = 0; j < 5; ++j) {
      const el::LinearBound bd = el::alpha_star(deltas[j], noise);
      const double ratio = bd.alpha_star * bd.alpha_star /
                           el::h_delta(deltas[j], rls_arg);
      emit(blocks[blk].label, blk, j, ratio);
    }
  }
  {
    const el::NoiseModel alt = el::NoiseModel::laplace(std::sqrt(2.0));
    for (int j = 0; j < 5; ++j) {
      const el::LinearBound bd = el::alpha_star(deltas[j], alt);
      const double ratio = bd.alpha_star * bd.alpha_star /
                           el::h_delta(deltas[j], alt.second_moment());
      std::printf("%-14s %6.3g %12.6f %12s %10s\n", "laplace_var2", deltas[j],
                  ratio, "-", "-");
      labels.push_back("laplace_var2");
      rows.push_back({deltas[j], ratio, -1.0, -1.0});
    }
  }
  // Binary rows.
  const el::BinaryLink links[] = {el::BinaryLink::sign_link(),
                                  el::BinaryLink::logistic(10.0)};
  for (int blk = 0; blk < 2; ++blk) {
    const el::BinaryLink& link = links[blk];
    const double nu = el::nu_f(link);
    for (int j = 0; j < 5; ++j) {
      const el::BinaryBound bd = el::sigma_star(deltas[j], link);
      const double ratio = bd.sigma_star_sq() /
                           el::H_delta(deltas[j], 1.0 / (1.0 - nu * nu));
      emit(blocks[2 + blk].label, 2 + blk, j, ratio);
    }
  }
  meta.wall_seconds = clock.seconds();
  std::ofstream f(out_path(o, "table1.csv"));
  if (!f) throw el::DomainError("cannot open table1.csv for writing");
  f << meta.to_comment_block()
    << "model,delta,ratio_computed,ratio_reference,abs_diff\n";
  f.precision(10);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    f << labels[i];
    for (double v : rows[i]) f << "," << v;
    f << "\n";
  }
  return 0;
}

int cmd_reproduce_fig(const CommonOpts& o, const std::string& target) {
  const el::WallClock clock;
  el::RunMetadata meta;
  meta.seed = o.seed;
  meta.tol = o.tol;
  std::vector<double> deltas;
  for (double d = 0.25; d <= 8.0 + 1e-9; d += 0.25) deltas.push_back(d);
  std::vector<std::vector<double>> rows;
  if (target == "fig1-left") {
    const el::NoiseModel noise = el::NoiseModel::laplace(1.0);
    const double E = noise.second_moment();
    for (double d : deltas) {
      const el::LinearBound b = el::alpha_star(d, noise);
      const double rls_small = el::rls_alpha_sq(d, 0.05, E);
      const double rls_large = el::rls_alpha_sq(d, 10.0, E);
      const double rls_opt = el::h_delta(d, E);
      const double ureg =
          d > 1.0 ? 1.0 / ((d - 1.0) * noise.fisher()) : -1.0;
      rows.push_back({d, b.alpha_star * b.alpha_star, rls_opt, rls_small,
                      rls_large, ureg});
    }
    meta.wall_seconds = clock.seconds();
    el::write_csv(out_path(o, "fig1_left.csv"),
                  {"delta", "alpha_star_sq", "rls_opt", "rls_lambda_0.05",
                   "rls_lambda_10", "ureg_lower"},
                  rows, meta);
  } else if (target == "fig1-middle") {
    const el::BinaryLink link = el::BinaryLink::sign_link();
    const double nu = el::nu_f(link);
    for (double d : deltas) {
      const el::BinaryBound b = el::sigma_star(d, link);
      const double rls_opt = el::H_delta(d, 1.0 / (1.0 - nu * nu));
      const double rls_small = el::rls_sigma_sq(d, 0.05, nu);
      const double rls_large = el::rls_sigma_sq(d, 10.0, nu);
      const el::AveragingResult av = el::averaging(d, link);
      rows.push_back({d, b.sigma_star_sq(), rls_opt, rls_small, rls_large,
                      av.sigma_ave_sq});
    }
    meta.wall_seconds = clock.seconds();
    el::write_csv(out_path(o, "fig1_middle.csv"),
                  {"delta", "sigma_star_sq", "rls_opt", "rls_lambda_0.05",
                   "rls_lambda_10", "sigma_ave_sq"},
                  rows, meta);
  } else if (target == "fig1-right") {
    const el::BinaryLink link = el::BinaryLink::logistic(10.0);
    const double nu = el::nu_f(link);
    for (double d : deltas) {
      const el::BinaryBound b = el::sigma_star(d, link);
      const double rls_opt_s2 = el::H_delta(d, 1.0 / (1.0 - nu * nu));
      const double rls_small_s2 = el::rls_sigma_sq(d, 0.05, nu);
      const el::AveragingResult av = el::averaging(d, link);
      rows.push_back(
          {d, el::classification_error(b.sigma_star, link),
           el::classification_error(std::sqrt(rls_opt_s2), link),
           el::classification_error(std::sqrt(rls_small_s2), link),
           el::classification_error(std::sqrt(av.sigma_ave_sq), link)});
    }
    meta.wall_seconds = clock.seconds();
    el::write_csv(out_path(o, "fig1_right.csv"),
                  {"delta", "class_err_star", "class_err_rls_opt",
                   "class_err_rls_lambda_0.05", "class_err_averaging"},
                  rows, meta);
  } else {
    throw el::DomainError("unknown reproduce target '" + target +
                          "' (table1|fig1-left|fig1-middle|fig1-right)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ermlimits: high-dimensional asymptotics of ridge-regularized "
               "empirical risk minimization"};
  app.set_config("--config");
  app.require_subcommand(1);

  CommonOpts o;
  std::string target;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "linear|binary");
    sub->add_option("--noise", o.noise, "gaussian:var | laplace:b | custom:PATH");
    sub->add_option("--link", o.link, "sign | logistic[:r] | probit[:r] | custom:PATH");
    sub->add_option("--delta", o.delta, "single value, comma list, or a:b:step");
    sub->add_option("--lambda", o.lambda, "value or 'opt'");
    sub->add_option("--loss", o.loss, "square|abs|huber[:k]|logistic|optimal|PATH.csv");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--tol", o.tol, "tolerance recorded in metadata");
    sub->add_option("--trials", o.trials, "Monte-Carlo trials");
    sub->add_option("--n", o.n, "problem dimension");
  };
  CLI::App* bound = app.add_subcommand("bound", "fundamental lower bounds per delta");
  CLI::App* solve = app.add_subcommand("solve", "fixed-point solution for a given loss");
  CLI::App* design = app.add_subcommand("design-loss", "construct the optimal loss");
  CLI::App* simulate = app.add_subcommand("simulate", "finite-size Monte-Carlo runs");
  CLI::App* reproduce = app.add_subcommand("reproduce", "canned reproduction targets");
  for (CLI::App* sub : {bound, solve, design, simulate, reproduce}) add_common(sub);
  reproduce->add_option("target", target, "table1|fig1-left|fig1-middle|fig1-right")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (bound->parsed()) return cmd_bound(o);
    if (solve->parsed()) return cmd_solve(o);
    if (design->parsed()) return cmd_design_loss(o);
    if (simulate->parsed()) return cmd_simulate(o);
    if (reproduce->parsed()) {
      if (target == "table1") return cmd_reproduce_table1(o);
      return cmd_reproduce_fig(o, target);
    }
  } catch (const el::AssumptionViolated& e) {
    std::fprintf(stderr, "assumption violated: %s\n", e.what());
    return 2;
  } catch (const el::UnsupportedSampling& e) {
    std::fprintf(stderr, "unsupported operation: %s\n", e.what());
    return 2;
  } catch (const el::DomainError& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return 2;
  } catch (const el::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
