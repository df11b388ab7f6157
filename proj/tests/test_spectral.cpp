#include <cmath>
#include <numbers>
#include <vector>

#include "chmix/spectral.hpp"
#include "doctest.h"

using namespace chmix;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}
}  // namespace

TEST_CASE("grid rejects bad sizes") {
  CHECK_THROWS(TorusGrid(2, 12));
  CHECK_THROWS(TorusGrid(4, 16));
  CHECK_THROWS(TorusGrid(2, 4));
  TorusGrid g(3, 8);
  CHECK(g.num_points() == 512);
  CHECK(g.num_modes() == 5u * 8 * 8);
}

TEST_CASE("mode indexing round trips") {
  TorusGrid g(2, 16);
  for (std::size_t m = 0; m < g.num_modes(); ++m) CHECK(g.mode_index(g.wavevector(m)) == m);
  const auto k = g.wavevector(g.mode_index({3, -5, 0}));
  CHECK(k[0] == 3);
  CHECK(k[1] == -5);
  CHECK(g.k_squared(g.mode_index({3, -5, 0})) == 34.0);
}

TEST_CASE("transform round trip and Parseval") {
  for (int dim : {2, 3}) {
    TorusGrid g(dim, dim == 2 ? 32 : 8);
    auto f = random_noise_field(g, 11, 1.0, 0.3);
    const auto x = to_physical(f);
    const auto back = to_physical(to_spectral(x, g));
    CHECK(max_diff(x, back) < 1e-13);
    double sum = 0.0;
    for (double v : x) sum += v * v;
    CHECK(sobolev_norm(f, 0.0) == doctest::Approx(std::sqrt(sum / x.size())).epsilon(1e-12));
    CHECK(f.mean() == doctest::Approx(0.3).epsilon(1e-12));
  }
}

TEST_CASE("norms of a single mode") {
  TorusGrid g(2, 16);
  auto f = from_function(g, [](double x, double, double) { return std::sin(kTwoPi * x); });
  const double l2 = 1.0 / std::sqrt(2.0);
  CHECK(sobolev_norm(f, 0.0) == doctest::Approx(l2).epsilon(1e-12));
  CHECK(sobolev_norm(f, 1.0) == doctest::Approx(kTwoPi * l2).epsilon(1e-12));
  CHECK(sobolev_norm(f, 2.0) == doctest::Approx(kTwoPi * kTwoPi * l2).epsilon(1e-12));
  CHECK(sobolev_norm(f, -1.0) == doctest::Approx(l2 / kTwoPi).epsilon(1e-12));
  CHECK(max_abs(f) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("derivatives match closed forms") {
  TorusGrid g(2, 32);
  auto f = from_function(g, [](double x, double y, double) {
    return std::sin(kTwoPi * x) * std::cos(2 * kTwoPi * y);
  });
  auto dx = to_physical(partial_derivative(f, 0));
  auto dy = to_physical(partial_derivative(f, 1));
  auto lap = to_physical(laplacian(f));
  double ex = 0, ey = 0, el = 0;
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    const auto p = g.point(i);
    ex = std::max(ex, std::abs(dx[i] - kTwoPi * std::cos(kTwoPi * p[0]) * std::cos(2 * kTwoPi * p[1])));
    ey = std::max(ey, std::abs(dy[i] + 2 * kTwoPi * std::sin(kTwoPi * p[0]) *
                                            std::sin(2 * kTwoPi * p[1])));
    el = std::max(el, std::abs(lap[i] + 5 * kTwoPi * kTwoPi * std::sin(kTwoPi * p[0]) *
                                            std::cos(2 * kTwoPi * p[1])));
  }
  CHECK(ex < 1e-11);
  CHECK(ey < 1e-11);
  CHECK(el < 1e-9);
}

TEST_CASE("dealiased cube is exact for band-limited data") {
  TorusGrid g(2, 16);
  auto f = random_band_limited(g, 3, 5);
  auto cube = dealiased_product(f, f, f);
  // oracle: direct product on a 4x refined grid, then truncate
  TorusGrid fine = g.refined(4);
  SpectralField ff(fine);
  for (std::size_t m = 0; m < g.num_modes(); ++m) {
    const auto& k = g.wavevector(m);
    if (g.is_nyquist(m)) continue;
    ff.set_coefficient(k, f.coeffs()[m]);
  }
  auto x = to_physical(ff);
  for (double& v : x) v = v * v * v;
  auto fine_cube = to_spectral(x, fine);
  double err = 0.0;
  for (std::size_t m = 0; m < g.num_modes(); ++m) {
    if (g.is_nyquist(m)) continue;
    err = std::max(err, std::abs(cube.coeffs()[m] - fine_cube.coefficient(g.wavevector(m))));
  }
  CHECK(err < 1e-13);
}

TEST_CASE("band-limited fields are mean zero and Hermitian") {
  TorusGrid g(2, 16);
  auto f = random_band_limited(g, 9, 3);
  CHECK(std::abs(f.mean()) == 0.0);
  const auto c = f.coefficient({0, 2, 0});
  CHECK(std::abs(f.coefficient({0, -2, 0}) - std::conj(c)) < 1e-15);
  CHECK(inner_product(f, f) == doctest::Approx(std::pow(sobolev_norm(f, 0.0), 2)).epsilon(1e-12));
}
