#include <cmath>
#include <numbers>

#include "chmix/errors.hpp"
#include "chmix/mixing_rates.hpp"
#include "doctest.h"

using namespace chmix;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("transport without flow is the identity") {
  TorusGrid g(2, 16);
  auto f = random_band_limited(g, 3, 5);
  auto r = transport_evolve(f, 0.0, 1.0, FlowSpec());
  CHECK(sobolev_norm(r.field - f, 0.0) == 0.0);
}

TEST_CASE("steady shear transport matches characteristics") {
  TorusGrid g(2, 128);
  const FlowSpec flow(SteadyShear{ShearDirection::horizontal, 1, 0.0, 1.0});
  auto phi0 = from_function(g, [](double x, double, double) { return std::sin(kTwoPi * x); });
  for (double t : {0.5, 2.0}) {
    auto r = transport_evolve(phi0, 0.0, t, flow);
    auto exact = from_function(g, [&](double x, double y, double) {
      return std::sin(kTwoPi * (x - t * std::sin(kTwoPi * y)));
    });
    CHECK(sobolev_norm(r.field - exact, 0.0) < 1e-3);
    CHECK(std::abs(r.field.mean()) < 1e-14);
  }
}

TEST_CASE("zero flow is not mixing") {
  auto est = measure_rate(FlowSpec(), RateKind::strong, 1.0, TorusGrid(2, 16));
  CHECK_FALSE(est.decays);
  for (std::size_t i = 1; i < est.samples.size(); ++i)
    CHECK(est.samples[i].second <= est.samples[i - 1].second);
}

TEST_CASE("test set has unit H1 seminorm") {
  auto set = lowest_mode_test_set(TorusGrid(2, 16), 6);
  REQUIRE(set.size() == 6);
  for (const auto& f : set) CHECK(sobolev_norm(f, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("t* worked examples") {
  auto h = [](double t) { return std::exp(-t); };
  const auto strong = solve_t_star(h, RateKind::strong, 1.0, 1.0, 2);
  CHECK(strong.residual <= 1e-10);
  CHECK(strong.t_star == doctest::Approx(0.763442370043).epsilon(1e-10));
  const auto slower = solve_t_star(h, RateKind::strong, 0.25, 1.0, 2);
  CHECK(slower.t_star > strong.t_star);
  const auto weak = solve_t_star([](double t) { return 1.0 / t; }, RateKind::weak, 1.0, 1.0, 2);
  CHECK(weak.t_star == doctest::Approx(std::pow(std::pow(2.0, 2.0 / 3.0), 0.3)).epsilon(1e-10));
  CHECK(strong.tau2_bound == doctest::Approx(strong.t_star + strong.t_star * strong.t_star));
}

TEST_CASE("t* without a crossing") {
  CHECK_THROWS_AS(solve_t_star([](double) { return 1.0; }, RateKind::strong, 1.0, 1.0, 2, {},
                               0.1),
                  EstimationError);
}

TEST_CASE("C1 calibration") {
  CHECK(calibrate_C1(0.5, 0.6, 1.0) == 0.0);
  const double C1 = calibrate_C1(1.0, 0.5, 2.0);
  CHECK(0.5 + C1 * 2.0 * 0.25 == doctest::Approx(1.0));
}

TEST_CASE("transport difference without flow") {
  TorusGrid g(2, 16);
  auto theta0 = random_band_limited(g, 8, 3);
  auto rep = transport_difference(theta0, FlowSpec(), 0.01, 0.0, 0.1, 4, 8);
  REQUIRE(rep.samples.size() == 4);
  CHECK(rep.samples.back().t == doctest::Approx(0.1));
  CHECK(rep.holds(1.0));
  CHECK(rep.samples.back().diff_sq > 0.0);
}
