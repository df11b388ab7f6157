#include <cmath>
#include <limits>

#include "chmix/errors.hpp"
#include "chmix/thresholds.hpp"
#include "doctest.h"

using namespace chmix;

TEST_CASE("T0 worked example") {
  ThresholdInputs in;
  const auto t = compute_T0(in);
  CHECK(t.prime == doctest::Approx(1.25e-5).epsilon(1e-12));
  CHECK(t.value == doctest::Approx(1.25e-5).epsilon(1e-12));
}

TEST_CASE("T0 small-B limit and doubling B") {
  ThresholdInputs in;
  in.B = 1e-9;
  CHECK(compute_T0(in).prime == doctest::Approx(0.01 * 0.01 / 4.0).epsilon(1e-12));
  in.B = 3.0;
  const double a = compute_T0(in).prime;
  in.B = 6.0;
  CHECK(compute_T0(in).prime <= 0.5 * a);
}

TEST_CASE("T1 worked example") {
  ThresholdInputs in;
  in.dim = 3;
  in.gamma = 0.1;
  const auto t = compute_T1(in);
  const double first = (0.75 - std::sqrt(2.0) / 2.0) * std::pow(0.1, 3.5) / 2.0;
  CHECK(first == doctest::Approx(6.782e-6).epsilon(1e-4));
  CHECK(t.prime == doctest::Approx(first).epsilon(1e-12));
  CHECK(t.value == doctest::Approx(first).epsilon(1e-12));
  in.beta = 2.5;
  CHECK_THROWS_AS(compute_T1(in), ConfigError);
}

TEST_CASE("dimension is enforced") {
  ThresholdInputs in;
  in.dim = 3;
  CHECK_THROWS_AS(compute_T0(in), ConfigError);
  in.dim = 2;
  CHECK_THROWS_AS(compute_T1(in), ConfigError);
  CHECK_THROWS_AS(hypothesis_check(in, 1.0, 3), ConfigError);
}

TEST_CASE("lower bound on tau2") {
  CHECK(lower_bound_tau2(1.0, 0.01) == doctest::Approx(std::log(101.0)));
  CHECK(lower_bound_tau2(2.0, 0.01) < lower_bound_tau2(1.0, 0.01));
  CHECK(lower_bound_tau2(0.0, 0.01) == doctest::Approx(100.0));
  CHECK(lower_bound_tau2(1.0, 1e8) < 1e-7);
}

TEST_CASE("hypothesis check examples") {
  ThresholdInputs in;
  const auto no = hypothesis_check(in, 0.0445, 2);
  CHECK_FALSE(no.theorem_applies);
  CHECK(no.margin == doctest::Approx(3560.0).epsilon(1e-3));
  const auto yes = hypothesis_check(in, 1.25e-5 / 2.0, 2);
  CHECK(yes.theorem_applies);
  CHECK(yes.margin == doctest::Approx(0.5));
  in.dim = 3;
  in.gamma = 0.1;
  const double T1 = compute_T1(in).value;
  CHECK(hypothesis_check(in, 0.9 * T1, 3).theorem_applies);
  in.grad_u_sup = 3.0;
  CHECK_FALSE(hypothesis_check(in, 0.9 * T1, 3).theorem_applies);
}

TEST_CASE("C_dim calibration meets every fixture") {
  std::vector<LowerBoundFixture> fx = {{10.0, 0.01, 0.5}, {50.0, 0.01, 0.05}};
  const double C = calibrate_C_dim(fx);
  for (const auto& f : fx) CHECK(lower_bound_tau2(f.c2_norm, f.gamma, C) <= f.tau2 * (1 + 1e-10));
  CHECK(lower_bound_tau2(50.0, 0.01, 0.9 * C) > 0.05);
  CHECK_THROWS_AS(calibrate_C_dim({{0.0, 0.01, 0.5}}), ConfigError);
}

TEST_CASE("C_beta_mu calibration") {
  ThresholdInputs in;
  HypothesisFixture a{in, 1e-6, true, "a"};
  HypothesisFixture b{in, 1e-4, false, "b"};
  const auto cal = calibrate_C_beta_mu({a, b});
  REQUIRE(cal.critical.size() == 2);
  CHECK(cal.critical[0] > cal.critical[1]);
  in.C_beta_mu = 0.999 * cal.critical[0];
  CHECK(hypothesis_check(in, 1e-6, 2).theorem_applies);
}
