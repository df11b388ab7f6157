#include "chmix/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "chmix/errors.hpp"

namespace chmix {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string error_chain(const std::exception& e) {
  std::string out = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    out += "\ncaused by: " + error_chain(inner);
  } catch (...) {
    out += "\ncaused by: unknown error";
  }
  return out;
}

const char* error_family(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  return "internal";
}

std::string time_tag(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

FlowSpec with_amplitude(const FlowSpec& flow, double A) {
  return std::visit(
      [&](const auto& f) -> FlowSpec {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ZeroFlow>) {
          return f;
        } else if constexpr (std::is_same_v<T, SteadyShear> ||
                             std::is_same_v<T, AlternatingShear> ||
                             std::is_same_v<T, CellularFlow>) {
          T g = f;
          g.amplitude = A;
          return g;
        } else {
          throw ConfigError("calibration needs a base flow with an amplitude");
        }
      },
      flow.variant());
}

double norm_horizon(int alpha, double gamma) {
  return std::max(4.0, 2.0 * flow_free_dissipation_time(alpha, gamma));
}

FlowNorms measured_norms(const FlowSpec& flow, double horizon, const TorusGrid& grid) {
  return flow_norms(flow, horizon, 64, grid);
}

DissipationTimeEstimate estimate_tau(const RunConfig& cfg, const FlowSpec& flow, int alpha,
                                     double gamma) {
  LinParams p = cfg.dtime.params;
  p.flow = flow;
  p.alpha = alpha;
  p.gamma = gamma;
  const auto s = cfg.dtime.s_samples.empty() ? default_s_samples(p) : cfg.dtime.s_samples;
  return dissipation_time(p, s, cfg.dtime.options);
}

struct Context {
  const RunConfig& cfg;
  Manifest& m;
  std::vector<std::pair<std::string, std::string>> summary;

  void report(const std::string& key, const std::string& value) {
    m.set(key, value);
    summary.emplace_back(key, value);
  }
  void report(const std::string& key, double value) { report(key, format_double(value)); }
  void report(const std::string& key, bool value) {
    report(key, std::string(value ? "pass" : "fail"));
  }
};

void put_bound(Context& ctx, const std::string& name, const BoundReport& r) {
  if (!r.precondition_ok)
    ctx.report("check." + name, std::string("not evaluated"));
  else
    ctx.report("check." + name, r.holds);
  ctx.m.set("check." + name + ".max_ratio", r.max_ratio);
  if (r.first_violation) ctx.m.set("check." + name + ".first_violation", *r.first_violation);
  if (!r.message.empty()) ctx.m.set("check." + name + ".message", r.message);
}

void run_simulate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const fs::path out = cfg.out_dir;
  SimulationHooks hooks;
  hooks.on_checkpoint = [&](const CHState& s) {
    write_checkpoint(s, out / "checkpoints" / ("checkpoint_t" + time_tag(s.t) + ".chk"));
  };

  SimulationResult res = [&] {
    try {
      if (!cfg.init.restore.empty()) {
        const CHState start = read_checkpoint(cfg.init.restore);
        if (!(start.c.grid() == cfg.ch.grid))
          throw ConfigError("checkpoint grid does not match [grid]");
        ctx.m.set("restored_from", cfg.init.restore);
        ctx.m.set("restored_t", start.t);
        return simulate_from(cfg.ch, start, hooks);
      }
      const auto c0 = default_initial_data(cfg.ch.grid, cfg.ch.seed, cfg.init.noise_amplitude,
                                           cfg.init.cbar);
      return simulate(cfg.ch, c0, hooks);
    } catch (const BlowUpError& e) {
      write_timeseries(e.partial_records(), out / "timeseries.csv");
      ctx.m.set("blowup_last_valid_t", e.last_valid().t);
      throw;
    }
  }();

  write_timeseries(res.records, out / "timeseries.csv");
  for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%03zu_t%s.chsn", i,
                  time_tag(res.snapshots[i].t).c_str());
    write_snapshot(res.snapshots[i].c, res.snapshots[i].t, out / "snapshots" / name);
  }

  const auto& rec = res.records;
  const double gamma = cfg.ch.gamma, D = cfg.ch.mobility;
  ctx.report("samples", std::to_string(rec.size()));
  ctx.report("final_t", res.final_state.t);
  if (!rec.empty()) {
    ctx.report("l2_var_initial", rec.front().l2_var);
    ctx.report("l2_var_final", rec.back().l2_var);
    ctx.report("fe_total_final", rec.back().fe_total);
    ctx.report("max_abs_c_final", rec.back().max_abs_c);
  }
  put_bound(ctx, "mean_conservation", check_mean_conservation(rec));
  put_bound(ctx, "energy_monotone", check_energy_monotone(rec));
  put_bound(ctx, "growth_bound", check_growth_bound(rec, gamma, D));
  put_bound(ctx, "doubling", check_doubling(rec, gamma, cfg.thresholds.inputs.beta, D));
  const auto cert =
      fit_decay_certificate(rec, cfg.thresholds.inputs.beta, cfg.thresholds.inputs.mu);
  ctx.report("check.decay_certificate", cert.holds);
  ctx.m.set("decay.fitted_rate", cert.fitted_rate);
  ctx.m.set("decay.r_squared", cert.r_squared);
}

void run_dtime(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& p = cfg.dtime.params;
  const auto est = estimate_tau(cfg, p.flow, p.alpha, p.gamma);
  std::vector<std::vector<double>> rows;
  for (const auto& [t, v] : est.norm_curve) rows.push_back({t, v});
  write_csv(cfg.out_dir / "norm_curve.csv", {"t", "norm"}, rows);
  ctx.report("tau_star", est.tau_star);
  ctx.report("flow_free_bound", est.flow_free_bound);
  ctx.m.set("alpha", static_cast<long long>(est.alpha));
  ctx.m.set("gamma", est.gamma);
  ctx.m.set("t_lo", est.t_lo);
  ctx.m.set("t_hi", est.t_hi);
  ctx.m.set("tol", est.tol);
  ctx.m.set("norm_tol", est.norm_tol);
  ctx.m.set("s_samples", static_cast<long long>(est.s_samples.size()));
  ctx.m.set("norm_evaluations", static_cast<long long>(est.norm_evaluations));
  ctx.m.set("iterations", static_cast<long long>(est.iterations));
  ctx.report("monotone", std::string(est.monotone ? "true" : "false"));
}

void run_mixrate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& mr = cfg.mixrate;
  const auto& grid = cfg.ch.grid;
  const auto est = measure_rate(cfg.ch.flow, mr.kind, mr.horizon, grid, mr.options);
  std::vector<std::vector<double>> env, raw;
  for (const auto& [t, h] : est.samples) env.push_back({t, h});
  for (const auto& [t, h] : est.raw) raw.push_back({t, h});
  write_csv(cfg.out_dir / "rate.csv", {"t", "h"}, env);
  write_csv(cfg.out_dir / "rate_raw.csv", {"t", "h"}, raw);

  ctx.report("rate.kind", std::string(to_string(est.kind)));
  ctx.report("fit.form", std::string(to_string(est.fit.form)));
  ctx.report("fit.a", est.fit.a);
  ctx.report("fit.b", est.fit.b);
  ctx.m.set("fit.r_squared", est.fit.r_squared);
  ctx.m.set("test_set", est.test_set);
  ctx.m.set("max_drift", est.max_drift);
  ctx.report("horizon_used", est.horizon_used);
  ctx.report("decays", std::string(est.decays ? "true" : "false"));

  const double c2 = measured_norms(cfg.ch.flow, mr.horizon, grid).c2;
  ctx.m.set("c2_norm", c2);
  if (c2 > 0.0 && est.decays) {
    try {
      const auto ts = solve_t_star(est.fit, mr.kind, mr.gamma, c2, grid.dim(), mr.constants);
      ctx.report("t_star", ts.t_star);
      ctx.report("tau2_bound", ts.tau2_bound);
      ctx.m.set("t_star.residual", ts.residual);
    } catch (const EstimationError& e) {
      ctx.report("t_star", std::string("unbracketed: ") + e.what());
    }
  } else {
    ctx.report("t_star", std::string("not applicable"));
  }
}

void run_thresholds(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& th = cfg.thresholds;
  ThresholdInputs in = th.inputs;
  const double horizon = norm_horizon(2, in.gamma);
  std::optional<FlowNorms> norms;
  auto get_norms = [&]() -> const FlowNorms& {
    if (!norms) norms = measured_norms(cfg.ch.flow, horizon, cfg.ch.grid);
    return *norms;
  };
  if (!th.grad_u_sup_given) in.grad_u_sup = get_norms().grad_sup;
  const double c2 = th.c2_norm ? *th.c2_norm : get_norms().c2;

  double tau2;
  if (th.tau2) {
    tau2 = *th.tau2;
    ctx.m.set("tau2.source", std::string("config"));
  } else {
    if (cfg.dtime.params.alpha != 2) throw ConfigError("estimating tau2 needs [linear] alpha = 2");
    tau2 = estimate_tau(cfg, cfg.ch.flow, 2, in.gamma).tau_star;
    ctx.m.set("tau2.source", std::string("estimated"));
  }

  const bool two = in.dim == 2;
  const auto T = two ? compute_T0(in) : compute_T1(in);
  ctx.report(two ? "T0_prime" : "T1_prime", T.prime);
  ctx.report(two ? "T0" : "T1", T.value);
  ctx.report("grad_u_sup", in.grad_u_sup);
  ctx.report("c2_norm", c2);
  ctx.report("tau2", tau2);
  const double lb = lower_bound_tau2(c2, in.gamma, th.C_dim);
  ctx.report("lower_bound_tau2", lb);
  ctx.report("check.lower_bound", tau2 >= lb);
  const auto hyp = hypothesis_check(in, tau2, cfg.ch.grid.dim());
  ctx.report("hypothesis.lhs", hyp.lhs);
  ctx.report("hypothesis.threshold", hyp.threshold);
  ctx.report("hypothesis.margin", hyp.margin);
  ctx.report("hypothesis.theorem_applies",
             std::string(hyp.theorem_applies ? "true" : "false"));
}

SpectralField transport_datum(const TorusGrid& grid) {
  auto modes = lowest_mode_test_set(grid, 4);
  SpectralField f = modes.front();
  for (std::size_t i = 1; i < modes.size(); ++i) f += modes[i];
  return f;
}

void run_calibrate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& cal = cfg.calibrate;
  const auto& grid = cfg.ch.grid;
  std::vector<FlowSpec> flows;
  std::vector<double> amps;
  if (cfg.ch.flow.is_zero()) {
    flows.push_back(cfg.ch.flow);
    amps.push_back(0.0);
  } else {
    for (double A : cal.amplitudes) {
      flows.push_back(with_amplitude(cfg.ch.flow, A));
      amps.push_back(A);
    }
  }
  const double gamma = cfg.dtime.params.gamma;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  double constant = 0.0;

  switch (cal.target) {
    case CalibrationTarget::C_cal: {
      header = {"amplitude", "c2_norm", "tau1", "tau2", "C_hat"};
      for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto e1 = estimate_tau(cfg, flows[i], 1, gamma);
        const auto e2 = estimate_tau(cfg, flows[i], 2, gamma);
        const double c2 = measured_norms(flows[i], norm_horizon(1, gamma), grid).c2;
        const auto rel = check_tau_relation(e1, e2, c2, kInf);
        rows.push_back({amps[i], c2, rel.tau1, rel.tau2, rel.C_hat});
        constant = std::max(constant, rel.C_hat);
      }
      break;
    }
    case CalibrationTarget::C_dim: {
      header = {"amplitude", "c2_norm", "gamma", "tau2"};
      std::vector<LowerBoundFixture> fixtures;
      for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto e2 = estimate_tau(cfg, flows[i], 2, gamma);
        const double c2 = measured_norms(flows[i], norm_horizon(2, gamma), grid).c2;
        fixtures.push_back({c2, gamma, e2.tau_star});
        rows.push_back({amps[i], c2, gamma, e2.tau_star});
      }
      constant = calibrate_C_dim(fixtures);
      break;
    }
    case CalibrationTarget::C_d: {
      header = {"amplitude", "c2_norm", "required_C_d"};
      const auto theta0 = transport_datum(grid);
      for (std::size_t i = 0; i < flows.size(); ++i) {
        const double c2 = measured_norms(flows[i], cal.horizon, grid).c2;
        const auto rep = transport_difference(theta0, flows[i], gamma, c2, cal.horizon);
        rows.push_back({amps[i], c2, rep.required_C_d()});
        constant = std::max(constant, rep.required_C_d());
      }
      break;
    }
    case CalibrationTarget::C1: {
      header = {"amplitude", "c2_norm", "t_star", "tau2", "C1"};
      const auto& mr = cfg.mixrate;
      for (std::size_t i = 0; i < flows.size(); ++i) {
        const double c2 = measured_norms(flows[i], mr.horizon, grid).c2;
        if (!(c2 > 0.0)) continue;
        const auto rate = measure_rate(flows[i], mr.kind, mr.horizon, grid, mr.options);
        const auto ts = solve_t_star(rate.fit, mr.kind, gamma, c2, grid.dim(), mr.constants);
        const double tau2 = estimate_tau(cfg, flows[i], 2, gamma).tau_star;
        const double c1 = calibrate_C1(tau2, ts.t_star, c2);
        rows.push_back({amps[i], c2, ts.t_star, tau2, c1});
        constant = std::max(constant, c1);
      }
      if (rows.empty()) throw ConfigError("C1 calibration needs flows with nonzero C2 norm");
      break;
    }
    case CalibrationTarget::C_beta_mu: {
      header = {"amplitude", "tau2", "grad_u_sup", "B", "certificate", "critical_C"};
      std::vector<HypothesisFixture> fixtures;
      const auto c0 = default_initial_data(grid, cfg.ch.seed, cfg.init.noise_amplitude,
                                           cfg.init.cbar);
      for (std::size_t i = 0; i < flows.size(); ++i) {
        CHParams p = cfg.ch;
        p.flow = flows[i];
        p.snapshot_times.clear();
        p.checkpoint_times.clear();
        const auto sim = simulate(p, c0);
        ThresholdInputs in = cfg.thresholds.inputs;
        in.gamma = p.gamma;
        in.B = sim.records.front().l2_var;
        in.cbar = cfg.init.cbar;
        in.grad_u_sup = measured_norms(flows[i], norm_horizon(2, p.gamma), grid).grad_sup;
        const double tau2 = estimate_tau(cfg, flows[i], 2, p.gamma).tau_star;
        const bool cert = fit_decay_certificate(sim.records, in.beta, in.mu).holds;
        fixtures.push_back({in, tau2, cert, "A=" + format_double(amps[i])});
        rows.push_back({amps[i], tau2, in.grad_u_sup, in.B, cert ? 1.0 : 0.0, 0.0});
      }
      const auto res = calibrate_C_beta_mu(fixtures);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i].back() = res.critical[i];
      ctx.report("C_beta_mu.lower", res.lower);
      ctx.report("C_beta_mu.upper", res.upper);
      constant = res.recommended;
      break;
    }
  }
  write_csv(cfg.out_dir / "calibration.csv", header, rows);
  ctx.report("target", std::string(to_string(cal.target)));
  ctx.report("fixtures", std::to_string(rows.size()));
  ctx.report("constant", constant);
}

void run_sweep(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  auto children = expand_sweep(cfg);
  std::vector<std::exception_ptr> errors(children.size());
  std::vector<std::string> status(children.size(), "ok");
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < children.size();) {
      try {
        run_experiment(children[i].config);
      } catch (const std::exception& e) {
        errors[i] = std::current_exception();
        status[i] = std::string("failed (") + error_family(e) + ")";
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(children.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::string csv = "index,label,value,status\n";
  for (std::size_t i = 0; i < children.size(); ++i) {
    csv += std::to_string(i) + "," + children[i].label + "," + cfg.sweep.values[i] + "," +
           status[i] + "\n";
    ctx.report("child." + children[i].label, status[i]);
  }
  write_atomic(cfg.out_dir / "sweep.csv", csv);
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::string format_table(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  std::string out;
  for (const auto& [k, v] : rows) out += k + std::string(w - k.size() + 2, ' ') + v + "\n";
  return out;
}

RunResult run_experiment(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  result.out_dir = cfg.out_dir;
  Manifest& m = result.manifest;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir.string() + ": " + ec.message());
  fs::remove(cfg.out_dir / "FAILED", ec);

  m.set("version", std::string(kVersion));
  m.set("kind", std::string(to_string(cfg.kind)));
  for (const auto& [k, v] : config_echo(cfg)) m.set("config." + k, v);

  Context ctx{cfg, m, {}};
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    switch (cfg.kind) {
      case ExperimentKind::simulate: run_simulate(ctx); break;
      case ExperimentKind::dtime: run_dtime(ctx); break;
      case ExperimentKind::mixrate: run_mixrate(ctx); break;
      case ExperimentKind::thresholds: run_thresholds(ctx); break;
      case ExperimentKind::sweep: run_sweep(ctx); break;
      case ExperimentKind::calibrate: run_calibrate(ctx); break;
    }
  } catch (const std::exception& e) {
    const std::string chain = error_chain(e);
    m.set("status", std::string("failed"));
    m.set("error.family", std::string(error_family(e)));
    m.set("error", chain);
    m.set("wall_clock_seconds", elapsed());
    try {
      write_atomic(cfg.out_dir / "FAILED", chain + "\n");
      m.write(cfg.out_dir / "manifest.txt");
    } catch (const std::exception&) {
      // the original error is the one worth reporting
    }
    throw;
  }
  m.set("status", std::string("ok"));
  m.set("wall_clock_seconds", elapsed());
  m.write(cfg.out_dir / "manifest.txt");
  result.summary = format_table(ctx.summary);
  return result;
}

}  // namespace chmix
