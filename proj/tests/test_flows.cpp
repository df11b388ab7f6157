#include <cmath>
#include <numbers>

#include "chmix/flows.hpp"
#include "doctest.h"

using namespace chmix;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("every flow is divergence free") {
  TorusGrid g2(2, 32), g3(3, 16);
  for (const FlowSpec& f : {FlowSpec(SteadyShear{ShearDirection::vertical, 2, 0.3, 1.5}),
                            FlowSpec(AlternatingShear{2.0, 0.5, 4}),
                            FlowSpec(CellularFlow{1.0, 2})}) {
    CHECK(relative_divergence(sample_flow(f, 0.7, g2)) < 1e-12);
  }
  CHECK(relative_divergence(sample_flow(FlowSpec(AlternatingShear{1.0, 1.0, 1}), 2.5, g3)) < 1e-12);
}

TEST_CASE("steady shear values") {
  const FlowSpec f(SteadyShear{ShearDirection::horizontal, 1, 0.0, 2.0});
  const auto u = velocity_at(f, 3.0, 3.0, {0.1, 0.25, 0.0}, 2);
  CHECK(u[0] == doctest::Approx(2.0));
  CHECK(u[1] == 0.0);
  CHECK(breakpoints(f, 0.0, 10.0).empty());
  CHECK(default_start_times(f, 4.0).size() == 1);
}

TEST_CASE("alternating shear switches and is reproducible") {
  const FlowSpec f(AlternatingShear{1.0, 1.0, 42});
  auto bp = breakpoints(f, 0.0, 3.5);
  REQUIRE(bp.size() == 3);
  CHECK(bp[0] == doctest::Approx(1.0));
  TorusGrid g(2, 16);
  auto a = sample_flow(f, 0.5, g);
  auto b = sample_flow(f, 1.5, g);
  CHECK(a.component_is_zero(1));
  CHECK(b.component_is_zero(0));
  CHECK(piece_id(f, 0.2) == piece_id(f, 0.9));
  CHECK(piece_id(f, 0.2) != piece_id(f, 1.2));
  const auto again = sample_flow(FlowSpec(AlternatingShear{1.0, 1.0, 42}), 1.5, g);
  CHECK(again.components[1] == b.components[1]);
  const auto other = sample_flow(FlowSpec(AlternatingShear{1.0, 1.0, 43}), 1.5, g);
  CHECK(other.components[1] != b.components[1]);
}

TEST_CASE("rescaled flow") {
  const FlowSpec v(AlternatingShear{1.0, 1.0, 5});
  const auto r = FlowSpec::rescaled(FlowSpec::rescaled(v, 2.0), 3.0);
  const auto& rv = std::get<RescaledFlow>(r.variant());
  CHECK(rv.factor == doctest::Approx(6.0));
  const auto ur = velocity_at(r, 0.1, 0.1, {0.3, 0.2, 0}, 2);
  const auto uv = velocity_at(v, 0.6, 0.6, {0.3, 0.2, 0}, 2);
  CHECK(ur[0] == doctest::Approx(6.0 * uv[0]));
  CHECK(ur[1] == doctest::Approx(6.0 * uv[1]));
  auto bp = breakpoints(r, 0.0, 1.0);
  REQUIRE(!bp.empty());
  CHECK(bp[0] == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("time reversal negates the mirrored velocity") {
  const FlowSpec v(AlternatingShear{1.5, 1.0, 8});
  const auto r = FlowSpec::time_reversed(v, 3.0);
  const auto a = velocity_at(r, 0.4, 0.4, {0.2, 0.7, 0}, 2);
  const auto b = velocity_at(v, 2.6, 2.6, {0.2, 0.7, 0}, 2);
  CHECK(a[0] == doctest::Approx(-b[0]));
  CHECK(a[1] == doctest::Approx(-b[1]));
}

TEST_CASE("C2 norm of shears matches the closed form") {
  const FlowSpec f(SteadyShear{ShearDirection::horizontal, 1, 0.0, 1.0});
  FlowNorms closed;
  REQUIRE(shear_closed_form_norms(f, closed));
  CHECK(closed.c2 == doctest::Approx(1.0 + kTwoPi + kTwoPi * kTwoPi));
  CHECK(closed.grad_sup == doctest::Approx(kTwoPi));
  const auto measured = flow_norms(FlowSpec(CellularFlow{1.0, 1}), 1.0, 2, TorusGrid(2, 64));
  CHECK(measured.grad_sup > 0.0);
  CHECK(flow_norms(FlowSpec(), 1.0, 2, TorusGrid(2, 16)).c2 == 0.0);
}
