#include "chmix/ch_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace chmix {

namespace {

constexpr double kPi = std::numbers::pi;

double time_tol(double t) { return 1e-9 * std::max(1.0, std::abs(t)); }

FlowSpec internal_flow(const CHParams& p) {
  if (p.mobility == 1.0) return p.flow;
  return FlowSpec::rescaled(p.flow, 1.0 / p.mobility);
}

}  // namespace

void CHParams::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(mobility > 0.0)) throw ConfigError("mobility must be positive");
  dt_policy.validate();
  if (!(t_end >= 0.0)) throw ConfigError("t_end must be non-negative");
  if (!(sample_interval > 0.0)) throw ConfigError("sample_interval must be positive");
  if (dt_policy.kind == StepKind::fixed && sample_interval < dt_policy.dt * mobility)
    throw ConfigError("sample_interval must be at least dt");
  for (double t : snapshot_times)
    if (!(t >= 0.0 && t <= t_end)) throw ConfigError("snapshot time outside [0, t_end]");
  for (double t : checkpoint_times)
    if (!(t >= 0.0 && t <= t_end)) throw ConfigError("checkpoint time outside [0, t_end]");
}

TimeStepPolicy default_ch_step_policy(double gamma) {
  TimeStepPolicy p;
  p.kind = StepKind::cfl;
  p.c_adv = 0.5;
  p.dt_max = 0.1 * std::min(gamma, 1.0 / (4.0 * kPi * kPi));
  return p;
}

double chemical_free_energy(const SpectralField& c) {
  const auto v = to_padded_physical(c);
  double sum = 0.0;
  for (double x : v) {
    const double w = x * x - 1.0;
    sum += w * w;
  }
  return 0.25 * sum / static_cast<double>(v.size());
}

TimeSeriesRecord diagnose(const CHState& state, double gamma) {
  TimeSeriesRecord r;
  r.t = state.t;
  r.l2_var = sobolev_norm(state.c, 0.0, true);
  r.h1 = sobolev_norm(state.c, 1.0);
  r.hm1 = sobolev_norm(state.c, -1.0);
  r.fe_chem = chemical_free_energy(state.c);
  r.fe_int = 0.5 * gamma * r.h1 * r.h1;
  r.fe_total = r.fe_chem + r.fe_int;
  r.mean = state.c.mean();
  r.max_abs_c = max_abs(state.c);
  return r;
}

CHIntegrator::CHIntegrator(const CHParams& params)
    : params_(params), advection_(internal_flow(params), params.grid) {
  params_.validate();
  const double two_pi = 2.0 * kPi;
  decay_rate_ = multiplier_table(params_.grid, [&](const Wavevector& k) {
    const double k2 = two_pi * two_pi * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    return params_.gamma * k2 * k2;
  });
}

const std::vector<double>& CHIntegrator::multiplier(double h) {
  if (h != cached_h_) {
    cached_multiplier_.resize(decay_rate_.size());
    for (std::size_t i = 0; i < decay_rate_.size(); ++i)
      cached_multiplier_[i] = std::exp(-decay_rate_[i] * h);
    cached_h_ = h;
  }
  return cached_multiplier_;
}

SpectralField CHIntegrator::nonlinear_rhs(const SpectralField& c, double internal_piece_time) {
  auto v = to_padded_physical(c);
  for (double& x : v) x = x * x * x - x;
  SpectralField rhs = laplacian(from_padded_physical(v, c.grid()));
  if (!advection_.is_zero()) rhs -= advection_.apply(c, internal_piece_time);
  rhs.set_mean(0.0);
  return rhs;
}

void CHIntegrator::internal_step(SpectralField& c, double h, double piece_time) {
  const auto& e = multiplier(h);
  const SpectralField n1 = nonlinear_rhs(c, piece_time);
  SpectralField stage = c;
  stage.axpy(h, n1);
  apply_multiplier_inplace(stage, e);
  const SpectralField n2 = nonlinear_rhs(stage, piece_time);
  c.axpy(0.5 * h, n1);
  apply_multiplier_inplace(c, e);
  c.axpy(0.5 * h, n2);
}

CHState CHIntegrator::step(const CHState& state, double dt, std::optional<double> piece_time) {
  const double d = params_.mobility;
  const double pt = piece_time.value_or(state.t + 0.5 * dt);
  CHState next{state.t + dt, state.c};
  internal_step(next.c, d * dt, d * pt);
  if (!next.c.all_finite())
    throw BlowUpError("non-finite coefficients at t = " + std::to_string(next.t), state, {});
  return next;
}

CHState CHIntegrator::advance(const CHState& state, double t1, const std::vector<double>& events) {
  const double d = params_.mobility;
  std::vector<double> internal_events;
  internal_events.reserve(events.size());
  for (double e : events) internal_events.push_back(d * e);
  const auto segments = advection_.plan(d * state.t, d * t1, params_.dt_policy, internal_events);
  CHState cur = state;
  for (const auto& seg : segments) {
    const double h = seg.h();
    for (int i = 0; i < seg.steps; ++i) {
      SpectralField next = cur.c;
      internal_step(next, h, seg.mid());
      if (!next.all_finite()) {
        throw BlowUpError("non-finite coefficients after t = " + std::to_string(cur.t), cur, {});
      }
      cur.c = std::move(next);
      cur.t = (seg.t0 + (i + 1) * h) / d;
    }
    cur.t = seg.t1 / d;
  }
  cur.t = t1;
  return cur;
}

CHState ch_step(const CHState& state, const CHParams& params, double dt) {
  CHIntegrator integrator(params);
  return integrator.step(state, dt);
}

SpectralField default_initial_data(const TorusGrid& grid, std::uint64_t seed, double delta,
                                   double cbar) {
  SpectralField c = random_noise_field(grid, seed, delta, cbar);
  drop_nyquist(c);
  return c;
}

SimulationResult simulate(const CHParams& params, const SpectralField& c0,
                          const SimulationHooks& hooks) {
  if (!(c0.grid() == params.grid)) throw ConfigError("initial data is not on the run grid");
  for (double v : to_physical(c0))
    if (!std::isfinite(v)) throw ConfigError("initial data contains non-finite values");
  CHState start{0.0, c0};
  drop_nyquist(start.c);
  return simulate_from(params, start, hooks);
}

SimulationResult simulate_from(const CHParams& params, const CHState& start,
                               const SimulationHooks& hooks) {
  params.validate();
  if (!(start.c.grid() == params.grid)) throw ConfigError("state is not on the run grid");

  const double dts = params.sample_interval;
  std::set<double> samples;
  const auto k_first = static_cast<long long>(std::ceil(start.t / dts - 1e-9));
  const auto k_last = static_cast<long long>(std::floor(params.t_end / dts + 1e-9));
  for (long long k = std::max(0LL, k_first); k <= k_last; ++k)
    samples.insert(static_cast<double>(k) * dts);

  auto within = [&](double t) {
    return t >= start.t - time_tol(start.t) && t <= params.t_end + time_tol(params.t_end);
  };
  std::set<double> snapshots;
  for (double t : params.snapshot_times)
    if (within(t)) snapshots.insert(t);
  std::set<double> checkpoints;
  for (double t : params.checkpoint_times)
    if (within(t) && t > start.t) checkpoints.insert(t);

  std::set<double> events(samples.begin(), samples.end());
  events.insert(snapshots.begin(), snapshots.end());
  events.insert(checkpoints.begin(), checkpoints.end());
  events.insert(params.t_end);

  auto near = [](const std::set<double>& s, double t) {
    auto it = s.lower_bound(t - time_tol(t));
    return it != s.end() && std::abs(*it - t) <= time_tol(t);
  };

  std::vector<TimeSeriesRecord> records;
  std::vector<Snapshot> snaps;
  CHIntegrator integrator(params);
  CHState state = start;
  for (double e : events) {
    if (e > state.t + time_tol(state.t)) {
      try {
        state = integrator.advance(state, e);
      } catch (const BlowUpError& err) {
        throw BlowUpError(err.what(), err.last_valid(), records);
      }
    } else if (e < state.t - time_tol(state.t)) {
      continue;
    }
    if (near(samples, e)) {
      records.push_back(diagnose(state, params.gamma));
      if (hooks.on_record) hooks.on_record(records.back());
    }
    if (near(snapshots, e)) snaps.push_back({state.t, state.c});
    if (near(checkpoints, e) && hooks.on_checkpoint) hooks.on_checkpoint(state);
  }
  return SimulationResult{std::move(state), std::move(records), std::move(snaps)};
}

BoundReport check_growth_bound(const std::vector<TimeSeriesRecord>& records, double gamma,
                               double mobility) {
  BoundReport rep;
  if (records.empty()) return rep;
  const double v0 = records.front().l2_var * records.front().l2_var;
  const double t0 = records.front().t;
  for (const auto& r : records) {
    if (r.t <= t0) continue;
    const double lhs = r.l2_var * r.l2_var;
    const double rhs = v0 * std::exp(mobility * (r.t - t0) / gamma);
    double ratio = 0.0;
    if (rhs > 0.0)
      ratio = lhs / rhs;
    else if (lhs > 0.0)
      ratio = std::numeric_limits<double>::infinity();
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (lhs > rhs * (1.0 + 1e-8) && rep.holds) {
      rep.holds = false;
      rep.first_violation = r.t;
      rep.message = "variance growth bound violated at t = " + std::to_string(r.t);
    }
  }
  return rep;
}

BoundReport check_doubling(const std::vector<TimeSeriesRecord>& records, double gamma,
                           double beta, double mobility) {
  BoundReport rep;
  if (!(beta > 1.0)) {
    rep.precondition_ok = false;
    rep.message = "beta must exceed 1";
    return rep;
  }
  const double window = gamma * std::log(beta) / mobility;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].t - records[i - 1].t > window / 4.0 * (1.0 + 1e-12)) {
      rep.precondition_ok = false;
      rep.message = "sample spacing exceeds gamma ln(beta) / 4; doubling check not evaluated";
      return rep;
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double base = beta * records[i].l2_var * records[i].l2_var;
    for (std::size_t j = i; j < records.size(); ++j) {
      if (records[j].t - records[i].t > window * (1.0 + 1e-12)) break;
      const double lhs = records[j].l2_var * records[j].l2_var;
      double ratio = 0.0;
      if (base > 0.0)
        ratio = lhs / base;
      else if (lhs > 0.0)
        ratio = std::numeric_limits<double>::infinity();
      rep.max_ratio = std::max(rep.max_ratio, ratio);
      if (lhs > base * (1.0 + 1e-8) && rep.holds) {
        rep.holds = false;
        rep.first_violation = records[i].t;
        rep.message = "doubling inequality violated from t0 = " + std::to_string(records[i].t);
      }
    }
  }
  return rep;
}

BoundReport check_h1_bound(const std::vector<TimeSeriesRecord>& records, double grad_u_sup,
                           double gamma, double t0, double tau, double mobility) {
  BoundReport rep;
  auto find = [&](double t) -> const TimeSeriesRecord* {
    for (const auto& r : records)
      if (std::abs(r.t - t) <= time_tol(t)) return &r;
    return nullptr;
  };
  const auto* a = find(t0);
  const auto* b = find(t0 + tau);
  if (a == nullptr || b == nullptr) {
    rep.precondition_ok = false;
    rep.message = "records do not contain both t0 and t0 + tau";
    return rep;
  }
  // internal (D = 1) frame: time D tau, velocity u / D
  const double tau_int = mobility * tau;
  const double grad_int = grad_u_sup / mobility;
  const double lhs = b->h1 * b->h1;
  const double rhs = 2.0 * a->fe_total / gamma +
                     grad_int / (2.0 * kPi * kPi * gamma) * std::exp(tau_int / gamma) *
                         a->l2_var * a->l2_var;
  rep.max_ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  if (lhs > rhs * (1.0 + 1e-8)) {
    rep.holds = false;
    rep.first_violation = b->t;
    rep.message = "H1 bound violated at t = " + std::to_string(b->t);
  }
  return rep;
}

DecayCertificate fit_decay_certificate(const std::vector<TimeSeriesRecord>& records, double beta,
                                       double mu) {
  if (records.empty()) throw ConfigError("decay certificate needs at least one record");
  DecayCertificate cert;
  const double l0 = records.front().l2_var;
  const double t0 = records.front().t;
  if (l0 == 0.0) {
    cert.holds = true;
    cert.fitted_rate = std::numeric_limits<double>::infinity();
    return cert;
  }
  for (const auto& r : records) {
    if (r.l2_var > beta * std::exp(-mu * (r.t - t0)) * l0 * (1.0 + 1e-8)) {
      cert.holds = false;
      break;
    }
  }
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = records.size() / 2; i < records.size(); ++i)
    if (records[i].l2_var > 0.0) pts.emplace_back(records[i].t, std::log(records[i].l2_var));
  if (pts.size() < 2) {
    cert.fitted_rate = std::numeric_limits<double>::infinity();
    return cert;
  }
  double st = 0, sy = 0;
  for (const auto& [t, y] : pts) {
    st += t;
    sy += y;
  }
  const double m = static_cast<double>(pts.size());
  const double tm = st / m, ym = sy / m;
  double stt = 0, sty = 0, syy = 0;
  for (const auto& [t, y] : pts) {
    stt += (t - tm) * (t - tm);
    sty += (t - tm) * (y - ym);
    syy += (y - ym) * (y - ym);
  }
  const double slope = stt > 0.0 ? sty / stt : 0.0;
  cert.fitted_rate = -slope;
  cert.r_squared = (stt > 0.0 && syy > 0.0) ? (sty * sty) / (stt * syy) : 1.0;
  return cert;
}

BoundReport check_energy_monotone(const std::vector<TimeSeriesRecord>& records, double slack) {
  BoundReport rep;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double prev = records[i - 1].fe_total;
    const double excess = records[i].fe_total - prev;
    rep.max_ratio = std::max(rep.max_ratio, excess);
    if (excess > slack * std::max(1.0, std::abs(prev)) && rep.holds) {
      rep.holds = false;
      rep.first_violation = records[i].t;
      rep.message = "free energy increased at t = " + std::to_string(records[i].t);
    }
  }
  return rep;
}

BoundReport check_mean_conservation(const std::vector<TimeSeriesRecord>& records, double tol) {
  BoundReport rep;
  if (records.empty()) return rep;
  const double m0 = records.front().mean;
  for (const auto& r : records) {
    const double drift = std::abs(r.mean - m0);
    rep.max_ratio = std::max(rep.max_ratio, drift);
    if (drift > tol && rep.holds) {
      rep.holds = false;
      rep.first_violation = r.t;
      rep.message = "mean drifted by " + std::to_string(drift);
    }
  }
  return rep;
}

}  // namespace chmix
