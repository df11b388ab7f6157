#include "chmix/mixing_rates.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "chmix/errors.hpp"
#include "chmix/linear_solver.hpp"

namespace chmix {

namespace {

class Transporter {
 public:
  Transporter(const FlowSpec& flow, const TorusGrid& grid, const TransportOptions& opts)
      : adv_(flow, grid), opts_(opts) {
    const double half = grid.n() / 2;
    filter_ = multiplier_table(grid, [&](const Wavevector& k) {
      const int m = std::max({std::abs(k[0]), std::abs(k[1]), std::abs(k[2])});
      const double kappa = m / half;
      if (kappa <= 2.0 / 3.0) return 1.0;
      const double z = 3.0 * kappa - 2.0;
      return std::exp(-36.0 * z * z * z * z);
    });
  }

  void run(SpectralField& f, double t0, double t1) {
    if (!(t1 > t0) || adv_.is_zero()) return;
    for (const auto& seg : adv_.plan(t0, t1, opts_.dt_policy)) {
      const double h = seg.h();
      for (int i = 0; i < seg.steps; ++i) step(f, h, seg.mid());
    }
  }

 private:
  void step(SpectralField& f, double h, double piece) {
    SpectralField k1 = adv_.apply(f, piece);
    SpectralField y = f;
    y.axpy(-0.5 * h, k1);
    SpectralField k2 = adv_.apply(y, piece);
    y = f;
    y.axpy(-0.5 * h, k2);
    SpectralField k3 = adv_.apply(y, piece);
    y = f;
    y.axpy(-h, k3);
    SpectralField k4 = adv_.apply(y, piece);
    f.axpy(-h / 6.0, k1);
    f.axpy(-h / 3.0, k2);
    f.axpy(-h / 3.0, k3);
    f.axpy(-h / 6.0, k4);
    apply_multiplier_inplace(f, filter_);
  }

  AdvectionOperator adv_;
  TransportOptions opts_;
  std::vector<double> filter_;
};

double l2(const SpectralField& f) { return std::sqrt(inner_product(f, f)); }

void check_drift(double drift, double budget, double t) {
  if (drift > budget) {
    std::ostringstream os;
    os << "transport L2 drift " << drift << " exceeds " << budget << " at t = " << t
       << "; use a finer grid or a shorter horizon";
    throw NumericError(os.str());
  }
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double xm = sx / m, ym = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
    syy += (y[i] - ym) * (y[i] - ym);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = ym - f.slope * xm;
  f.r_squared = (sxx > 0 && syy > 1e-28 * std::max(1.0, ym * ym)) ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (nt == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(nt));
  for (int w = 0; w < nt; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < count; i += static_cast<std::size_t>(nt))
          fn(i);
      } catch (...) {
        errs[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace

TransportResult transport_evolve(const SpectralField& phi0, double s, double t,
                                 const FlowSpec& flow, const TransportOptions& opts) {
  opts.dt_policy.validate();
  if (t < s) throw ConfigError("transport_evolve requires t >= s");
  const double n0 = l2(phi0);
  if (std::abs(phi0.mean()) > 1e-12 * std::max(1.0, n0))
    throw ConfigError("transport_evolve requires mean-zero data");
  TransportResult res{phi0, 0.0};
  res.field.set_mean(0.0);
  drop_nyquist(res.field);
  Transporter tr(flow, phi0.grid(), opts);
  // monitor drift on a coarse event grid
  const int checks = 16;
  double prev = s;
  for (int i = 1; i <= checks; ++i) {
    const double next = i == checks ? t : s + (t - s) * i / checks;
    tr.run(res.field, prev, next);
    prev = next;
    if (n0 > 0.0) {
      res.max_drift = std::max(res.max_drift, std::abs(l2(res.field) / n0 - 1.0));
      check_drift(res.max_drift, opts.drift_budget, next);
    }
  }
  return res;
}

double RateFit::operator()(double t) const {
  return form == FitForm::exponential ? a * std::exp(-b * t) : a * std::pow(t, -b);
}

std::vector<SpectralField> lowest_mode_test_set(const TorusGrid& grid, int count) {
  if (count < 1) throw ConfigError("test set needs at least one mode");
  // half-space representatives ordered by |k|^2
  std::vector<Wavevector> ks;
  const int r = 3;
  for (int z = (grid.dim() == 3 ? -r : 0); z <= (grid.dim() == 3 ? r : 0); ++z)
    for (int y = -r; y <= r; ++y)
      for (int x = 0; x <= r; ++x) {
        Wavevector k{x, y, z};
        const bool positive = x > 0 || (x == 0 && (y > 0 || (y == 0 && z > 0)));
        if (positive) ks.push_back(k);
      }
  std::stable_sort(ks.begin(), ks.end(), [](const Wavevector& a, const Wavevector& b) {
    return a[0] * a[0] + a[1] * a[1] + a[2] * a[2] < b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
  });
  std::vector<SpectralField> out;
  for (const auto& k : ks) {
    for (Complex c : {Complex(0.5, 0.0), Complex(0.0, -0.5)}) {  // cos, sin
      if (static_cast<int>(out.size()) == count) return out;
      SpectralField f(grid);
      f.set_coefficient(k, c);
      f *= 1.0 / sobolev_norm(f, 1.0);
      out.push_back(std::move(f));
    }
  }
  return out;
}

RateFunctionEstimate measure_rate(const FlowSpec& flow, RateKind kind, double horizon,
                                  const TorusGrid& grid, const RateOptions& opts) {
  return measure_rate(flow, kind, horizon, lowest_mode_test_set(grid, opts.test_modes), opts);
}

RateFunctionEstimate measure_rate(const FlowSpec& flow, RateKind kind, double horizon,
                                  const std::vector<SpectralField>& test_set,
                                  const RateOptions& opts) {
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (test_set.empty()) throw ConfigError("test set must not be empty");
  if (opts.s_samples.empty()) throw ConfigError("s_samples must not be empty");
  if (opts.time_points < 2) throw ConfigError("time_points must be at least 2");
  const TorusGrid& grid = test_set.front().grid();
  std::vector<double> h1(test_set.size());
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    if (!(test_set[i].grid() == grid)) throw ConfigError("test set mixes grids");
    if (std::abs(test_set[i].mean()) > 1e-12) throw ConfigError("test functions must be mean-zero");
    h1[i] = sobolev_norm(test_set[i], 1.0);
    if (!(h1[i] > 0.0) || !std::isfinite(h1[i]))
      throw ConfigError("test functions need finite nonzero H1 norm");
  }

  const int N = opts.time_points;
  const std::size_t P = test_set.size();
  const std::size_t jobs = opts.s_samples.size() * P;
  // value[job][j]: max over psi of the normalized statistic at sample j
  std::vector<std::vector<double>> value(jobs, std::vector<double>(static_cast<std::size_t>(N) + 1));
  std::vector<double> drift(jobs, 0.0);
  std::vector<int> valid(jobs, 0);

  parallel_for(jobs, opts.threads, [&](std::size_t job) {
    const double s = opts.s_samples[job / P];
    const std::size_t i = job % P;
    SpectralField phi = test_set[i];
    drop_nyquist(phi);
    const double n0 = l2(phi);
    Transporter tr(flow, grid, opts.transport);
    std::vector<std::vector<double>> pair(P, std::vector<double>(static_cast<std::size_t>(N) + 1));
    int last = 0;
    for (int j = 0; j <= N; ++j) {
      const double tj = s + horizon * j / N;
      if (j > 0) tr.run(phi, s + horizon * (j - 1) / N, tj);
      const double d = std::abs(l2(phi) / n0 - 1.0);
      if (d > opts.conservation_budget) break;
      drift[job] = std::max(drift[job], d);
      last = j;
      for (std::size_t q = 0; q < P; ++q)
        pair[q][static_cast<std::size_t>(j)] = inner_product(phi, test_set[q]) / (h1[i] * h1[q]);
    }
    valid[job] = last;
    auto& out = value[job];
    for (std::size_t q = 0; q < P; ++q) {
      double integral = 0.0;
      for (int j = 0; j <= last; ++j) {
        const double p = pair[q][static_cast<std::size_t>(j)];
        double v;
        if (kind == RateKind::strong) {
          v = std::abs(p);
        } else if (j == 0) {
          v = std::abs(p);
        } else {
          const double pp = pair[q][static_cast<std::size_t>(j - 1)];
          integral += 0.5 * (pp * pp + p * p) * (horizon / N);
          v = std::sqrt(integral / (horizon * j / N));
        }
        out[static_cast<std::size_t>(j)] = std::max(out[static_cast<std::size_t>(j)], v);
      }
    }
  });

  RateFunctionEstimate est;
  est.kind = kind;
  est.s_samples = opts.s_samples;
  est.max_drift = *std::max_element(drift.begin(), drift.end());
  {
    std::ostringstream os;
    os << P << " lowest real Fourier modes, all " << P * P << " pairs, "
       << opts.s_samples.size() << " start time(s)";
    est.test_set = os.str();
  }

  // horizon capped where the first trajectory leaves the conservation budget
  const int J = *std::min_element(valid.begin(), valid.end());
  if (J < std::max(4, N / 8)) {
    std::ostringstream os;
    os << "transport L2 drift exceeds " << opts.conservation_budget << " after t = "
       << horizon * J / N << " (less than 1/8 of the horizon); use a finer grid or a shorter horizon";
    throw NumericError(os.str());
  }
  est.horizon_used = horizon * J / N;

  // geometric subset j = J, J/sqrt2, J/2, ... >= 1
  std::vector<int> idx;
  for (double j = J; j >= 1.0; j /= std::sqrt(2.0)) {
    const int r = static_cast<int>(std::lround(j));
    if (r >= 1 && (idx.empty() || idx.back() != r)) idx.push_back(r);
  }
  std::reverse(idx.begin(), idx.end());
  for (int j : idx) {
    double h = 0.0;
    for (const auto& v : value) h = std::max(h, v[static_cast<std::size_t>(j)]);
    est.raw.emplace_back(horizon * j / N, h);
  }
  est.samples = est.raw;
  for (std::size_t i = est.samples.size() - 1; i-- > 0;)
    est.samples[i].second = std::max(est.samples[i].second, est.samples[i + 1].second);

  const double floor = std::numeric_limits<double>::min();
  std::vector<double> ts, logt, logh;
  for (const auto& [t, h] : est.samples) {
    ts.push_back(t);
    logt.push_back(std::log(t));
    logh.push_back(std::log(std::max(h, floor)));
  }
  const LineFit fe = least_squares(ts, logh);
  const LineFit fp = least_squares(logt, logh);
  RateFit fit;
  if (fp.r_squared > fe.r_squared && -fp.slope > 0.0) {
    fit = RateFit{FitForm::power, std::exp(fp.intercept), -fp.slope, fp.r_squared};
  } else {
    fit = RateFit{FitForm::exponential, std::exp(fe.intercept), -fe.slope, fe.r_squared};
  }
  double lift = 1.0;
  for (const auto& [t, h] : est.samples) lift = std::max(lift, h / (1.05 * fit(t)));
  fit.a *= lift;
  est.fit = fit;
  est.decays = fit(est.samples.back().first) * 1.05 < fit(est.samples.front().first);
  return est;
}

TStarResult solve_t_star(const std::function<double(double)>& h, RateKind kind, double gamma,
                         double c2_norm, int dim, const TStarConstants& constants,
                         double t_max) {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(c2_norm > 0.0)) throw ConfigError("c2_norm must be positive");
  if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
  if (!(constants.C1 > 0.0 && constants.C2 > 0.0)) throw ConfigError("constants must be positive");
  if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");

  const double k = gamma * c2_norm;
  auto lhs = [&](double t) { return k * t * t; };
  auto rhs = [&](double t) {
    if (kind == RateKind::weak)
      return constants.C2 * std::pow(h(t / std::sqrt(2.0)), 8.0 / (4.0 + dim));
    const double v = h(t / (2.0 * std::sqrt(2.0)));
    return constants.C2 * v * v;
  };
  auto g = [&](double t) { return lhs(t) - rhs(t); };

  if (!(g(t_max) > 0.0))
    throw EstimationError("t* root not bracketed on (0, t_max]", 0.0, t_max);

  TStarResult res;
  double lo = 0.0, hi = t_max;
  while (hi - lo > 1e-15 * hi && res.iterations < 400) {
    const double mid = 0.5 * (lo + hi);
    const double v = g(mid);
    ++res.iterations;
    if (!std::isfinite(v)) throw NumericError("rate function returned a non-finite value");
    if (v > 0.0)
      hi = mid;
    else if (v < 0.0)
      lo = mid;
    else
      lo = hi = mid;
  }
  // pick the endpoint with the smaller residual
  auto resid = [&](double t) {
    const double a = lhs(t), b = rhs(t);
    return std::abs(a - b) / std::max(a, b);
  };
  res.t_star = (lo > 0.0 && resid(lo) < resid(hi)) ? lo : hi;
  res.residual = resid(res.t_star);
  res.tau2_bound = res.t_star + constants.C1 * c2_norm * res.t_star * res.t_star;
  return res;
}

double calibrate_C1(double tau2, double t_star, double c2_norm) {
  if (!(c2_norm > 0.0) || !(t_star > 0.0)) throw ConfigError("calibration needs positive c2 and t*");
  return std::max(0.0, (tau2 - t_star) / (c2_norm * t_star * t_star));
}

double TransportDifferenceReport::bound(const TransportDifferenceSample& s, double C_d) const {
  return std::sqrt(2.0 * gamma * s.t) * theta0_l2 *
         std::sqrt(C_d * c2_norm * s.lap_integral + lap_theta0_sq);
}

double TransportDifferenceReport::required_C_d() const {
  double C = 0.0;
  for (const auto& s : samples) {
    const double pre = std::sqrt(2.0 * gamma * s.t) * theta0_l2;
    if (!(pre > 0.0)) continue;
    const double need = (s.diff_sq / pre) * (s.diff_sq / pre) - lap_theta0_sq;
    if (need <= 0.0) continue;
    const double denom = c2_norm * s.lap_integral;
    C = std::max(C, denom > 0.0 ? need / denom : std::numeric_limits<double>::infinity());
  }
  return C;
}

bool TransportDifferenceReport::holds(double C_d) const {
  for (const auto& s : samples)
    if (s.diff_sq > bound(s, C_d) * (1.0 + 1e-8)) return false;
  return true;
}

TransportDifferenceReport transport_difference(const SpectralField& theta0, const FlowSpec& flow,
                                               double gamma, double c2_norm, double t_end,
                                               int sample_count, int quadrature_per_sample,
                                               const TransportOptions& opts) {
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (sample_count < 1 || quadrature_per_sample < 1)
    throw ConfigError("sample and quadrature counts must be positive");
  if (!(c2_norm >= 0.0)) throw ConfigError("c2_norm must be non-negative");
  LinParams lp;
  lp.alpha = 2;
  lp.gamma = gamma;
  lp.grid = theta0.grid();
  lp.flow = flow;
  lp.dt_policy = opts.dt_policy;

  SpectralField theta = theta0;
  drop_nyquist(theta);
  SpectralField phi = theta;
  const double n0 = l2(phi);

  TransportDifferenceReport rep;
  rep.gamma = gamma;
  rep.c2_norm = c2_norm;
  rep.theta0_l2 = n0;
  auto lap_sq = [](const SpectralField& f) {
    const double v = sobolev_norm(f, 2.0);
    return v * v;
  };
  rep.lap_theta0_sq = lap_sq(theta);

  Transporter tr(flow, theta.grid(), opts);
  const int panels = sample_count * quadrature_per_sample;
  double integral = 0.0, prev_lap = rep.lap_theta0_sq, t_prev = 0.0;
  for (int p = 1; p <= panels; ++p) {
    const double t = t_end * p / panels;
    theta = evolve(theta, t_prev, t, lp);
    tr.run(phi, t_prev, t);
    const double lap = lap_sq(theta);
    integral += 0.5 * (prev_lap + lap) * (t - t_prev);
    prev_lap = lap;
    t_prev = t;
    if (n0 > 0.0) {
      rep.max_drift = std::max(rep.max_drift, std::abs(l2(phi) / n0 - 1.0));
      check_drift(rep.max_drift, opts.drift_budget, t);
    }
    if (p % quadrature_per_sample == 0) {
      const SpectralField d = theta - phi;
      rep.samples.push_back({t, inner_product(d, d), integral});
    }
  }
  return rep;
}

const char* to_string(RateKind kind) { return kind == RateKind::weak ? "weak" : "strong"; }
const char* to_string(FitForm form) {
  return form == FitForm::exponential ? "exponential" : "power";
}

}  // namespace chmix
