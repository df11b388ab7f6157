#include <cmath>
#include <numbers>

#include "chmix/errors.hpp"
#include "chmix/linear_solver.hpp"
#include "doctest.h"

using namespace chmix;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

LinParams params(int alpha, double gamma, FlowSpec flow, int n = 16) {
  LinParams p;
  p.alpha = alpha;
  p.gamma = gamma;
  p.grid = TorusGrid(2, n);
  p.flow = flow;
  return p;
}
}  // namespace

TEST_CASE("flow-free dissipation time closed form") {
  CHECK(flow_free_dissipation_time(1, 0.01) ==
        doctest::Approx(std::log(2.0) / (0.01 * kTwoPi * kTwoPi)));
  CHECK(flow_free_dissipation_time(2, 0.01) ==
        doctest::Approx(std::log(2.0) / (0.01 * std::pow(kTwoPi, 4))));
}

TEST_CASE("zero flow decays every mode exactly") {
  auto p = params(2, 0.02, FlowSpec());
  SpectralField f(p.grid);
  f.set_coefficient({1, 2, 0}, {0.3, -0.1});
  auto g = evolve(f, 0.0, 0.4, p);
  const double decay = std::exp(-0.02 * std::pow(kTwoPi * kTwoPi * 5.0, 2) * 0.4);
  CHECK(std::abs(g.coefficient({1, 2, 0}) - decay * Complex(0.3, -0.1)) < 1e-15);
  CHECK(operator_norm(0.0, 0.4, p, 1e-8) ==
        doctest::Approx(std::exp(-0.02 * std::pow(kTwoPi, 4) * 0.4)).epsilon(1e-8));
}

TEST_CASE("adjoint is the transpose of evolve") {
  for (const FlowSpec& f : {FlowSpec(SteadyShear{ShearDirection::horizontal, 1, 0.4, 1.0}),
                            FlowSpec(AlternatingShear{2.0, 0.3, 9}),
                            FlowSpec(CellularFlow{1.5, 1})}) {
    for (int alpha : {1, 2}) {
      auto p = params(alpha, 0.03, f);
      auto a = random_band_limited(p.grid, 1, 7);
      auto b = random_band_limited(p.grid, 2, 7);
      const double lhs = inner_product(evolve(a, 0.2, 1.1, p), b);
      const double rhs = inner_product(a, adjoint_evolve(b, 0.2, 1.1, p));
      CHECK(std::abs(lhs - rhs) < 1e-13 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("evolution contracts and keeps the mean at zero") {
  auto p = params(1, 0.02, FlowSpec(CellularFlow{2.0, 1}));
  auto f = random_band_limited(p.grid, 4, 6);
  auto g = evolve(f, 0.0, 0.5, p);
  CHECK(std::abs(g.mean()) < 1e-15);
  CHECK(sobolev_norm(g, 0.0) <=
        std::exp(-0.02 * kTwoPi * kTwoPi * 0.5) * sobolev_norm(f, 0.0) * (1 + 1e-8));
}

TEST_CASE("operator norm brackets") {
  auto p = params(2, 0.02, FlowSpec(SteadyShear{}));
  NormOptions o;
  o.tol = 1e-8;
  const auto est = operator_norm_estimate(0.0, 0.3, p, o);
  CHECK(est.value <= std::exp(-0.02 * std::pow(kTwoPi, 4) * 0.3) * (1 + 1e-7));
  CHECK(est.value > 0.0);
  CHECK(operator_norm(0.5, 0.5, p) == 1.0);
  CHECK_THROWS_AS(operator_norm(0.5, 0.2, p), ConfigError);
}

TEST_CASE("dissipation time without flow") {
  auto p = params(2, 0.05, FlowSpec());
  const auto est = dissipation_time(p, {0.0});
  CHECK(est.tau_star == doctest::Approx(flow_free_dissipation_time(2, 0.05)).epsilon(1e-4));
  CHECK(est.monotone);
  CHECK(est.t_lo < est.t_hi);
}

TEST_CASE("stirring never lengthens the dissipation time") {
  auto p = params(1, 0.05, FlowSpec(CellularFlow{3.0, 1}));
  const auto est = dissipation_time(p, {0.0});
  CHECK(est.tau_star <= flow_free_dissipation_time(1, 0.05) * (1 + 1e-4));
}

TEST_CASE("tau relation arithmetic") {
  DissipationTimeEstimate e1, e2;
  e1.tau_star = 0.5;
  e1.alpha = 1;
  e2.tau_star = 0.01;
  e2.alpha = 2;
  const auto r = check_tau_relation(e1, e2, 2.0, 0.02);
  CHECK(r.C_hat == doctest::Approx(0.01 / (0.5 * 2.0)));
  CHECK(r.holds);
}
