// Acceptance suite. Usage: acceptance [criterion]; prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chmix/ch_solver.hpp"
#include "chmix/linear_solver.hpp"
#include "chmix/mixing_rates.hpp"
#include "chmix/rng.hpp"
#include "chmix/thresholds.hpp"
#include "fixtures/constants.hpp"

using namespace chmix;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ---- 1: flow-free dissipation times ----

bool criterion1() {
  const auto t0 = Clock::now();
  bool ok = true;
  for (int alpha : {1, 2}) {
    LinParams p;
    p.alpha = alpha;
    p.gamma = 0.01;
    p.grid = TorusGrid(2, 64);
    const auto est = dissipation_time(p, {0.0});
    const double exact = std::log(2.0) / (0.01 * std::pow(kTwoPi, 2 * alpha));
    const double r = rel(est.tau_star, exact);
    std::printf("  tau*_%d = %.10g  closed form %.10g  rel %.2e\n", alpha, est.tau_star, exact, r);
    ok = ok && r <= 1e-4;
  }
  const double secs = seconds_since(t0);
  std::printf("  runtime %.2f s (limit 10 s)\n", secs);
  return ok && secs < 10.0;
}

// ---- 2: dense oracle ----

double dense_top_singular_value(double s, double t, const LinParams& p) {
  const std::size_t N = p.grid.num_points();
  Eigen::MatrixXd M(N, N);
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> e(N, -1.0 / static_cast<double>(N));
    e[i] += 1.0;
    const auto col = to_physical(evolve(to_spectral(e, p.grid), s, t, p));
    for (std::size_t j = 0; j < N; ++j) M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = col[j];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

bool criterion2() {
  const auto t0 = Clock::now();
  bool ok = true;
  const std::vector<std::pair<std::string, FlowSpec>> flows = {
      {"zero", FlowSpec()},
      {"steady shear A=1", FlowSpec(SteadyShear{ShearDirection::horizontal, 1, 0.3, 1.0})},
      {"cellular A=2", FlowSpec(CellularFlow{2.0, 1})}};
  for (int alpha : {1, 2}) {
    for (const auto& [name, flow] : flows) {
      LinParams p;
      p.alpha = alpha;
      p.gamma = 0.02;
      p.grid = TorusGrid(2, 8);
      p.flow = flow;
      const double t = alpha == 1 ? 0.5 : 0.05;
      const double dense = dense_top_singular_value(0.1, 0.1 + t, p);
      NormOptions o;
      o.tol = 1e-10;
      const double est = operator_norm_estimate(0.1, 0.1 + t, p, o).value;
      const double d = std::abs(est - dense);
      std::printf("  alpha=%d %-17s dense %.12f  lanczos %.12f  diff %.1e\n", alpha, name.c_str(),
                  dense, est, d);
      ok = ok && d <= 1e-6;
    }
  }
  const double secs = seconds_since(t0);
  std::printf("  runtime %.2f s (limit 60 s)\n", secs);
  return ok && secs < 60.0;
}

// ---- 3: energy decay bound ----

bool criterion3() {
  const std::vector<FlowSpec> flows = {FlowSpec(SteadyShear{ShearDirection::vertical, 1, 0.0, 1.5}),
                                       FlowSpec(AlternatingShear{2.0, 0.25, 17}),
                                       FlowSpec(CellularFlow{1.0, 1})};
  double worst = 0.0;
  int checked = 0;
  for (int alpha : {1, 2}) {
    for (std::size_t fi = 0; fi < flows.size(); ++fi) {
      LinParams p;
      p.alpha = alpha;
      p.gamma = 0.01;
      p.grid = TorusGrid(2, 32);
      p.flow = flows[fi];
      const double rate = std::pow(kTwoPi, 2 * alpha) * p.gamma;
      for (int k = 0; k < 20; ++k) {
        const auto theta0 = random_band_limited(p.grid, 1000 * fi + k, 1 + k % 8);
        const double s = 0.13 * (k % 4);
        const double n0 = sobolev_norm(theta0, 0.0);
        SpectralField th = theta0;
        double prev = s;
        for (int j = 1; j <= 8; ++j) {
          const double t = 0.05 * j;
          th = evolve(th, prev, s + t, p);
          prev = s + t;
          const double ratio = sobolev_norm(th, 0.0) / (std::exp(-rate * t) * n0);
          worst = std::max(worst, ratio);
          ++checked;
        }
      }
    }
  }
  std::printf("  %d samples (20 data x 3 flows x alpha in {1,2} x 8 times), max ratio %.12f\n",
              checked, worst);
  return worst <= 1.0 + 1e-8;
}

// ---- 4: CH structural suite ----

struct Fixture {
  std::string name;
  CHParams params;
  SpectralField c0;
};

std::vector<Fixture> ch_fixtures() {
  std::vector<Fixture> out;
  {
    CHParams p;  // spinodal coarsening, slow mobility
    p.gamma = 0.01 / (kTwoPi * kTwoPi);
    p.mobility = 0.001;
    p.grid = TorusGrid(2, 128);
    p.dt_policy = default_ch_step_policy(p.gamma);
    p.t_end = 20.0;
    p.sample_interval = 0.04;
    out.push_back({"coarsening u=0", p, default_initial_data(p.grid, 1, 0.1, 0.0)});
  }
  {
    CHParams p;
    p.gamma = 0.02;
    p.grid = TorusGrid(2, 64);
    p.dt_policy = default_ch_step_policy(p.gamma);
    p.t_end = 1.0;
    p.sample_interval = 0.003;
    out.push_back({"u=0 gamma=0.02", p, default_initial_data(p.grid, 2, 0.1, 0.1)});
  }
  {
    CHParams p;
    p.gamma = 0.02;
    p.grid = TorusGrid(2, 64);
    p.dt_policy = default_ch_step_policy(p.gamma);
    p.flow = FlowSpec(SteadyShear{ShearDirection::horizontal, 1, 0.0, 1.0});
    p.t_end = 1.0;
    p.sample_interval = 0.003;
    out.push_back({"steady shear A=1", p, default_initial_data(p.grid, 3, 0.1, 0.0)});
  }
  {
    CHParams p;
    p.gamma = 0.0252;
    p.grid = TorusGrid(2, 64);
    p.dt_policy = default_ch_step_policy(p.gamma);
    p.flow = FlowSpec(AlternatingShear{2.0, 1.0, 7});
    p.t_end = 3.0;
    p.sample_interval = 0.004;
    out.push_back({"alternating A=2", p, default_initial_data(p.grid, 7, 0.1, 0.0)});
  }
  return out;
}

bool criterion4() {
  bool ok = true;
  for (const auto& f : ch_fixtures()) {
    const auto t0 = Clock::now();
    const auto res = simulate(f.params, f.c0);
    const auto& r = res.records;
    const auto mean = check_mean_conservation(r, 1e-10);
    double mean_drift = 0.0;
    for (const auto& x : r) mean_drift = std::max(mean_drift, std::abs(x.mean - r.front().mean));
    const auto growth = check_growth_bound(r, f.params.gamma, f.params.mobility);
    const auto dbl = check_doubling(r, f.params.gamma, 2.0, f.params.mobility);
    bool local = mean.holds && growth.holds && dbl.holds && dbl.precondition_ok;
    std::printf("  %-18s %zu samples  mean drift %.1e  growth max ratio %.3g  doubling max ratio %.6f%s",
                f.name.c_str(), r.size(), mean_drift, growth.max_ratio, dbl.max_ratio,
                dbl.precondition_ok ? "" : " (precondition failed)");
    if (f.params.flow.is_zero()) {
      const auto e = check_energy_monotone(r, 1e-9);
      std::printf("  energy monotone %s", e.holds ? "yes" : "no");
      local = local && e.holds;
    }
    std::printf("  (%.1f s)\n", seconds_since(t0));
    ok = ok && local;
  }
  return ok;
}

// ---- 5: linear-stability rates ----

bool criterion5() {
  bool ok = true;
  for (double gamma : {0.01, 0.05}) {
    CHParams p;
    p.gamma = gamma;
    p.grid = TorusGrid(2, 32);
    p.dt_policy = default_ch_step_policy(gamma);
    p.t_end = 0.2;
    p.sample_interval = 0.2;
    const double eps = 1e-6;
    const auto c0 =
        from_function(p.grid, [&](double x, double, double) { return eps * std::sin(kTwoPi * x); });
    const auto res = simulate(p, c0);
    const double measured =
        std::log(res.records.back().l2_var / res.records.front().l2_var) / p.t_end;
    const double expected = kTwoPi * kTwoPi - gamma * std::pow(kTwoPi, 4);
    const double r = rel(measured, expected);
    std::printf("  gamma=%.2f (%s): measured %.6f expected %.6f rel %.2e\n", gamma,
                expected > 0 ? "growth" : "decay", measured, expected, r);
    ok = ok && r <= 0.01;
  }
  return ok;
}

// ---- 6: stirred phase separation ----

bool criterion6() {
  const auto t0 = Clock::now();
  auto run = [](double A) {
    CHParams p;
    p.gamma = 0.0252;
    p.grid = TorusGrid(2, 128);
    p.dt_policy = default_ch_step_policy(p.gamma);
    p.flow = FlowSpec(AlternatingShear{A, 1.0, 7});
    p.t_end = 40.0;
    p.sample_interval = 0.5;
    return simulate(p, default_initial_data(p.grid, 7, 0.1, 0.0)).records;
  };
  const auto weak = run(0.5);
  const double ratio = weak.back().l2_var / weak.front().l2_var;
  std::printf("  A=0.5: l2_var(40)/l2_var(0) = %.4f (need >= 0.1)\n", ratio);

  const auto strong = run(2.0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(strong.size());
  for (const auto& r : strong) {
    const double y = std::log(r.l2_var);
    sx += r.t;
    sy += y;
    sxx += r.t * r.t;
    sxy += r.t * y;
    syy += y * y;
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  const double r2 = cov * cov / (vx * vy);
  const double drop = strong.front().l2_var / strong.back().l2_var;
  std::printf("  A=2: log-linear fit over [0, 40] slope %.4f R^2 %.4f, drop %.3g (need R^2 >= 0.9, "
              "drop >= 1e3)\n",
              cov / vx, r2, drop);
  const double secs = seconds_since(t0);
  std::printf("  runtime %.1f s (limit 900 s)\n", secs);
  return ratio >= 0.1 && r2 >= 0.9 && drop >= 1e3 && secs <= 900.0;
}

// ---- 7: rescaling identity ----

bool criterion7() {
  const auto t0 = Clock::now();
  LinParams base;
  base.grid = TorusGrid(2, 32);
  const auto rep = check_rescaling_identity(
      FlowSpec(SteadyShear{ShearDirection::horizontal, 1, 0.0, 1.0}), 4.0, 0.05, base, 0.05);
  const double secs = seconds_since(t0);
  std::printf("  tau2(u_4, 0.05) = %.8g  tau2(v, 0.0125)/4 = %.8g  rel %.2e  (%.1f s, limit 600 s)\n",
              rep.lhs, rep.rhs, rep.relative_difference, secs);
  return rep.holds && secs <= 600.0;
}

// ---- 8: tau1-tau2 relation ----

bool criterion8() {
  const std::vector<std::pair<std::string, FlowSpec>> family = {
      {"zero", FlowSpec()},
      {"steady shear A=0.5", FlowSpec(SteadyShear{ShearDirection::horizontal, 1, 0.0, 0.5})},
      {"steady shear A=1", FlowSpec(SteadyShear{ShearDirection::horizontal, 1, 0.0, 1.0})},
      {"steady shear A=2", FlowSpec(SteadyShear{ShearDirection::horizontal, 1, 0.0, 2.0})},
      {"alternating A=2", FlowSpec(AlternatingShear{2.0, 1.0, 7})}};
  bool ok = true;
  double flow_free_C = 0.0;
  for (const auto& [name, flow] : family) {
    LinParams p;
    p.grid = TorusGrid(2, 32);
    p.gamma = 0.05;
    p.flow = flow;
    p.alpha = 1;
    const auto e1 = dissipation_time(p, default_s_samples(p));
    p.alpha = 2;
    const auto e2 = dissipation_time(p, default_s_samples(p));
    const double horizon = std::max(4.0, 2.0 * flow_free_dissipation_time(1, p.gamma));
    const auto norms = flow_norms(flow, horizon, 64, p.grid);
    const auto r = check_tau_relation(e1, e2, norms.c2, fixtures::kCcal);
    std::printf("  %-19s tau1 %.6g tau2 %.6g |u|_C2 %.4g C_hat %.6g\n", name.c_str(), r.tau1,
                r.tau2, r.c2_norm, r.C_hat);
    ok = ok && r.holds;
    if (flow.is_zero()) flow_free_C = r.C_hat;
  }
  const double exact = 1.0 / (kTwoPi * kTwoPi);
  const double r = rel(flow_free_C, exact);
  std::printf("  C_cal %.4g; flow-free C_hat %.8g vs (2 pi)^-2 = %.8g, rel %.2e (tol 2e-4)\n",
              fixtures::kCcal, flow_free_C, exact, r);
  return ok && r <= 2e-4;
}

// ---- 9: hyperdiffusion vs transport ----

bool criterion9() {
  const TorusGrid g(2, 64);
  const double gamma = 3e-5;
  const double horizon = 0.5;
  const std::vector<std::pair<std::string, FlowSpec>> runs = {
      {"steady shear A=1", FlowSpec(SteadyShear{ShearDirection::horizontal, 1, 0.0, 1.0})},
      {"steady shear A=2", FlowSpec(SteadyShear{ShearDirection::vertical, 1, 0.5, 2.0})},
      {"alternating A=1", FlowSpec(AlternatingShear{1.0, 0.25, 3})},
      {"alternating A=2", FlowSpec(AlternatingShear{2.0, 0.25, 7})},
      {"cellular A=1", FlowSpec(CellularFlow{1.0, 1})}};
  const auto modes = lowest_mode_test_set(g, 4);
  SpectralField theta0 = modes.front();
  for (std::size_t i = 1; i < modes.size(); ++i) theta0 += modes[i];

  bool ok = true;
  double needed = 0.0;
  int active = 0;
  for (const auto& [name, flow] : runs) {
    const auto norms = flow_norms(flow, horizon, 16, g);
    const auto rep = transport_difference(theta0, flow, gamma, norms.c2, horizon, 8, 16);
    double worst = 0.0;
    for (const auto& s : rep.samples) worst = std::max(worst, s.diff_sq / rep.bound(s, fixtures::kCd));
    needed = std::max(needed, rep.required_C_d());
    if (!rep.holds(0.0)) ++active;
    std::printf("  %-17s |u|_C2 %.4g  required C_d %.5g  max lhs/rhs %.4f  drift %.1e\n",
                name.c_str(), rep.c2_norm, rep.required_C_d(), worst, rep.max_drift);
    ok = ok && rep.holds(fixtures::kCd);
  }
  std::printf("  fixed C_d %.3g (largest required %.5g); %d of %zu runs need C_d > 0\n",
              fixtures::kCd, needed, active, runs.size());
  return ok;
}

// ---- 10: thresholds ----

bool criterion10() {
  bool ok = true;
  ThresholdInputs in;
  const auto t0 = compute_T0(in);
  std::printf("  T0' = %.15g  T0 = %.15g (expected 1.25e-5)\n", t0.prime, t0.value);
  ok = ok && std::abs(t0.prime - 1.25e-5) <= 1e-12 && std::abs(t0.value - 1.25e-5) <= 1e-12;

  ThresholdInputs in3;
  in3.dim = 3;
  in3.gamma = 0.1;
  const auto t1 = compute_T1(in3);
  const double branch = (0.75 - std::sqrt(2.0) / 2.0) * std::pow(0.1, 3.5) / 2.0;
  std::printf("  T1' = %.15g  independent branch %.15g (~6.782e-6)  T1 = %.15g\n", t1.prime, branch,
              t1.value);
  ok = ok && std::abs(t1.prime - branch) <= 1e-12 && std::abs(t1.value - branch) <= 1e-12 &&
       std::abs(branch - 6.782e-6) <= 5e-10;

  CounterStream rng(2024);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    ThresholdInputs a;
    a.dim = i % 2 == 0 ? 2 : 3;
    a.cbar = rng.uniform(-1.0, 1.0);
    a.beta = rng.uniform(1.01, 2.0);
    a.mu = rng.uniform(0.1, 10.0);
    a.gamma = std::pow(10.0, rng.uniform(-4.0, 0.0));
    a.C_beta_mu = std::pow(10.0, rng.uniform(-2.0, 2.0));
    a.B = rng.uniform(0.0, 5.0);
    ThresholdInputs b = a;
    b.B = a.B + rng.uniform(1e-3, 5.0);
    const auto ta = a.dim == 2 ? compute_T0(a) : compute_T1(a);
    const auto tb = b.dim == 2 ? compute_T0(b) : compute_T1(b);
    if (tb.prime > ta.prime || tb.value > ta.value) ++bad;
  }
  std::printf("  monotonicity in B: %d violations over 1000 random inputs\n", bad);
  return ok && bad == 0;
}

// ---- 11: t* solver ----

double newton_root(const std::function<double(double)>& f, const std::function<double(double)>& df,
                   double x) {
  for (int i = 0; i < 100; ++i) {
    const double step = f(x) / df(x);
    x -= step;
    if (std::abs(step) < 1e-15 * std::abs(x)) break;
  }
  return x;
}

bool criterion11() {
  bool ok = true;
  auto h = [](double t) { return std::exp(-t); };

  const auto a = solve_t_star(h, RateKind::strong, 1.0, 1.0, 2);
  const double root = newton_root([](double t) { return t * t - std::exp(-t / std::sqrt(2.0)); },
                                  [](double t) {
                                    return 2 * t + std::exp(-t / std::sqrt(2.0)) / std::sqrt(2.0);
                                  },
                                  1.0);
  std::printf("  strong e^-t: t* %.12f residual %.1e, Newton oracle %.12f\n", a.t_star, a.residual,
              root);
  ok = ok && a.residual <= 1e-10 && std::abs(a.t_star - root) <= 1e-10;

  const auto b = solve_t_star(h, RateKind::strong, 0.25, 1.0, 2);
  std::printf("  strong e^-t, gamma/4: t* %.12f residual %.1e (must exceed %.6f)\n", b.t_star,
              b.residual, a.t_star);
  ok = ok && b.residual <= 1e-10 && b.t_star > a.t_star;

  const auto c = solve_t_star([](double t) { return 1.0 / t; }, RateKind::weak, 1.0, 1.0, 2);
  const double closed = std::pow(std::pow(2.0, 2.0 / 3.0), 0.3);
  std::printf("  weak 1/t, d=2: t* %.12f residual %.1e, closed form %.12f\n", c.t_star, c.residual,
              closed);
  ok = ok && c.residual <= 1e-10 && std::abs(c.t_star - closed) <= 1e-10;
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char*, bool (*)()>> criteria = {
      {"flow-free dissipation times", criterion1},
      {"dense-oracle operator norm", criterion2},
      {"energy decay bound", criterion3},
      {"CH structural suite", criterion4},
      {"linear-stability rates", criterion5},
      {"stirred phase separation (A=0.5 vs A=2)", criterion6},
      {"rescaling identity", criterion7},
      {"tau1-tau2 relation", criterion8},
      {"hyperdiffusion vs transport difference", criterion9},
      {"threshold formulas", criterion10},
      {"t* fixed-point solver", criterion11}};

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    if (only != 0 && k != only) continue;
    std::printf("criterion %d: %s\n", k, criteria[i].first);
    bool ok = false;
    try {
      ok = criteria[i].second();
    } catch (const std::exception& e) {
      std::printf("  error: %s\n", e.what());
    }
    std::printf("%s criterion %d\n", ok ? "PASS" : "FAIL", k);
    if (!ok) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
