#include "chmix/linear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>

#include "chmix/errors.hpp"

namespace chmix {

namespace {

constexpr double kPi = std::numbers::pi;

void require_mean_zero(const SpectralField& f, const char* who) {
  const double scale = std::max(1.0, sobolev_norm(f, 0.0));
  if (std::abs(f.mean()) > 1e-12 * scale)
    throw ConfigError(std::string(who) + " requires mean-zero data");
}

// ETDRK2 (Cox-Matthews) with N = -u.grad treated explicitly:
//   a = E f + h phi1 N f,  f' = a + h phi2 (N a - N f).
// The adjoint runs the transposed step on the time-reversed flow, whose
// advection term is N^T, over the mirrored segment plan.
class Propagator {
 public:
  Propagator(const LinParams& p, FlowSpec flow, bool transpose = false)
      : p_(p), adv_(std::move(flow), p.grid), transpose_(transpose) {
    const double two_pi = 2.0 * kPi;
    rate_ = multiplier_table(p.grid, [&](const Wavevector& k) {
      const double k2 = two_pi * two_pi * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
      return p.gamma * (p.alpha == 1 ? k2 : k2 * k2);
    });
  }

  void run(SpectralField& f, double s, double t) {
    if (!(t > s)) return;
    for (const auto& seg : adv_.plan(s, t, p_.dt_policy)) {
      const double h = seg.h();
      const Coefficients& c = coefficients(h);
      if (adv_.is_zero()) {
        for (int i = 0; i < seg.steps; ++i) apply_multiplier_inplace(f, c.e);
        continue;
      }
      for (int i = 0; i < seg.steps; ++i) {
        if (transpose_)
          transpose_step(f, h, c, seg.mid());
        else
          step(f, h, c, seg.mid());
      }
    }
  }

 private:
  struct Coefficients {
    std::vector<double> e, phi1, phi12, phi2;  // phi12 = phi1 - phi2
  };

  SpectralField n(const SpectralField& f, double piece) {
    SpectralField out = adv_.apply(f, piece);
    out *= -1.0;
    return out;
  }

  // f' = E f + h (phi1 - phi2) N f + h phi2 N(E f + h phi1 N f)
  void step(SpectralField& f, double h, const Coefficients& c, double piece) {
    const SpectralField n1 = n(f, piece);
    apply_multiplier_inplace(f, c.e);
    SpectralField a = f;
    a.axpy(h, apply_multiplier(n1, c.phi1));
    const SpectralField n2 = n(a, piece);
    f.axpy(h, apply_multiplier(n1, c.phi12));
    f.axpy(h, apply_multiplier(n2, c.phi2));
  }

  // g' = E g + h E m + h N^T((phi1 - phi2) g + h phi1 m),  m = N^T(phi2 g)
  void transpose_step(SpectralField& g, double h, const Coefficients& c, double piece) {
    const SpectralField m = n(apply_multiplier(g, c.phi2), piece);
    SpectralField inner = apply_multiplier(g, c.phi12);
    inner.axpy(h, apply_multiplier(m, c.phi1));
    const SpectralField tail = n(inner, piece);
    g.axpy(h, m);
    apply_multiplier_inplace(g, c.e);
    g.axpy(h, tail);
  }

  const Coefficients& coefficients(double h) {
    if (h != cached_h_) {
      const std::size_t m = rate_.size();
      cached_.e.resize(m);
      cached_.phi1.resize(m);
      cached_.phi12.resize(m);
      cached_.phi2.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double z = -rate_[i] * h;
        double p1, p2;
        if (std::abs(z) < 1e-3) {
          p1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
          p2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
        } else {
          const double em1 = std::expm1(z);
          p1 = em1 / z;
          p2 = (em1 - z) / (z * z);
        }
        cached_.e[i] = std::exp(z);
        cached_.phi1[i] = p1;
        cached_.phi2[i] = p2;
        cached_.phi12[i] = p1 - p2;
      }
      cached_h_ = h;
    }
    return cached_;
  }

  const LinParams& p_;
  AdvectionOperator adv_;
  bool transpose_;
  std::vector<double> rate_;
  double cached_h_ = -1.0;
  Coefficients cached_;
};

SpectralField normalized(SpectralField f) {
  const double n = std::sqrt(inner_product(f, f));
  if (n > 0.0) f *= 1.0 / n;
  return f;
}

SpectralField start_vector(const TorusGrid& grid, int restart, std::uint64_t seed) {
  const int band = grid.n() / 2 - 1;
  SpectralField noise = normalized(random_band_limited(grid, seed + 7919ULL * restart, band));
  if (restart > 0) return noise;
  SpectralField low(grid);
  for (int axis = 0; axis < grid.dim(); ++axis) {
    Wavevector k{0, 0, 0};
    k[static_cast<std::size_t>(axis)] = 1;
    low.set_coefficient(k, Complex(1.0, 1.0));
  }
  low = normalized(low);
  low.axpy(1e-3, noise);
  return normalized(low);
}

}  // namespace

void LinParams::validate() const {
  if (alpha != 1 && alpha != 2) throw ConfigError("alpha must be 1 or 2");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  dt_policy.validate();
}

double flow_free_dissipation_time(int alpha, double gamma) {
  return std::log(2.0) / (gamma * std::pow(2.0 * kPi, 2 * alpha));
}

SpectralField evolve(const SpectralField& f, double s, double t, const LinParams& params) {
  params.validate();
  if (!(f.grid() == params.grid)) throw ConfigError("field is not on the solver grid");
  if (t < s) throw ConfigError("evolve requires t >= s");
  require_mean_zero(f, "evolve");
  SpectralField out = f;
  out.set_mean(0.0);
  Propagator(params, params.flow).run(out, s, t);
  return out;
}

SpectralField adjoint_evolve(const SpectralField& g, double s, double t, const LinParams& params) {
  params.validate();
  if (!(g.grid() == params.grid)) throw ConfigError("field is not on the solver grid");
  if (t < s) throw ConfigError("adjoint_evolve requires t >= s");
  require_mean_zero(g, "adjoint_evolve");
  SpectralField out = g;
  out.set_mean(0.0);
  Propagator(params, FlowSpec::time_reversed(params.flow, s + t), true).run(out, s, t);
  return out;
}

NormEstimate operator_norm_estimate(double s, double t, const LinParams& params,
                                    const NormOptions& opts) {
  params.validate();
  if (t < s) throw ConfigError("operator_norm requires t >= s");
  if (!(opts.tol > 0.0)) throw ConfigError("tol must be positive");
  NormEstimate best;
  if (t == s) return best;

  Propagator forward(params, params.flow);
  Propagator backward(params, FlowSpec::time_reversed(params.flow, s + t), true);
  auto apply = [&](const SpectralField& x) {
    SpectralField y = x;
    forward.run(y, s, t);
    backward.run(y, s, t);
    y.set_mean(0.0);
    return y;
  };

  const std::size_t dim_space = params.grid.num_points() - 1;
  const int max_iter = static_cast<int>(std::min<std::size_t>(opts.max_iter, dim_space));
  best.value = 0.0;
  double best_upper = 0.0;
  const int restarts = std::max(2, opts.restarts);

  for (int r = 0; r < restarts; ++r) {
    std::vector<SpectralField> basis;
    std::vector<double> alphas, betas;
    basis.push_back(start_vector(params.grid, r, opts.seed));
    bool converged = false;
    double theta = 0.0, residual = 0.0;
    for (int j = 0; j < max_iter; ++j) {
      SpectralField w = apply(basis.back());
      ++best.iterations;
      const double a = inner_product(w, basis.back());
      w.axpy(-a, basis.back());
      if (j > 0) w.axpy(-betas.back(), basis[basis.size() - 2]);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& v : basis) w.axpy(-inner_product(w, v), v);
      const double b = std::sqrt(inner_product(w, w));
      alphas.push_back(a);

      Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alphas.data(), alphas.size());
      Eigen::VectorXd sub(static_cast<Eigen::Index>(betas.size()));
      for (std::size_t i = 0; i < betas.size(); ++i) sub[static_cast<Eigen::Index>(i)] = betas[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
      eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const Eigen::Index top = diag.size() - 1;
      theta = eig.eigenvalues()[top];
      residual = b * std::abs(eig.eigenvectors()(top, top));
      if (top > 0) {
        const double gap = theta - eig.eigenvalues()[top - 1];
        if (gap > 0.0) residual = std::min(residual, residual * residual / gap);
      }
      if (residual <= opts.tol * theta || b <= 1e-300 ||
          static_cast<std::size_t>(j + 1) >= dim_space) {
        converged = true;
        break;
      }
      betas.push_back(b);
      w *= 1.0 / b;
      basis.push_back(std::move(w));
    }
    const double sigma = std::sqrt(std::max(theta, 0.0));
    if (sigma > best.value) {
      best.value = sigma;
      best.residual = residual;
    }
    best_upper = std::max(best_upper, std::sqrt(std::max(theta + residual, 0.0)));
    if (!converged)
      throw EstimationError("operator norm did not converge within " +
                                std::to_string(max_iter) + " Krylov steps",
                            best.value, std::min(1.0, std::max(best_upper, best.value)));
  }
  return best;
}

double operator_norm(double s, double t, const LinParams& params, double tol) {
  NormOptions o;
  o.tol = tol;
  return operator_norm_estimate(s, t, params, o).value;
}

std::vector<double> default_s_samples(const LinParams& params) {
  const double horizon = std::max(4.0, 2.0 * flow_free_dissipation_time(params.alpha, params.gamma));
  return default_start_times(params.flow, horizon);
}

DissipationTimeEstimate dissipation_time(const LinParams& params,
                                         const std::vector<double>& s_samples,
                                         const DissipationTimeOptions& opts) {
  params.validate();
  if (s_samples.empty()) throw ConfigError("s_samples must not be empty");
  if (!(opts.tol > 0.0 && opts.tol < 1.0)) throw ConfigError("tol must lie in (0, 1)");
  for (double s : s_samples)
    if (!(s >= 0.0)) throw ConfigError("start times must be non-negative");

  DissipationTimeEstimate est;
  est.alpha = params.alpha;
  est.gamma = params.gamma;
  est.s_samples = s_samples;
  est.flow_free_bound = flow_free_dissipation_time(params.alpha, params.gamma);
  est.tol = opts.tol;
  est.norm_tol = opts.norm_tol;

  NormOptions no;
  no.tol = opts.norm_tol;
  no.restarts = opts.restarts;
  no.seed = opts.seed;

  auto worst = [&](double t) {
    std::vector<NormEstimate> vals(s_samples.size());
    const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(vals.size())));
    auto work = [&](int w) {
      for (std::size_t i = static_cast<std::size_t>(w); i < vals.size();
           i += static_cast<std::size_t>(threads))
        vals[i] = operator_norm_estimate(s_samples[i], s_samples[i] + t, params, no);
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errs(static_cast<std::size_t>(threads));
      for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
          try {
            work(w);
          } catch (...) {
            errs[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    }
    double m = 0.0;
    for (const auto& v : vals) {
      m = std::max(m, v.value);
      est.iterations += v.iterations;
    }
    est.norm_evaluations += static_cast<int>(vals.size());
    est.norm_curve.emplace_back(t, m);
    return m;
  };

  std::vector<double> scan;
  for (int k = -8; k <= -1; ++k) scan.push_back(est.flow_free_bound * std::ldexp(1.0, k));
  scan.push_back(est.flow_free_bound * (1.0 + 0.5 * opts.tol));

  double t_lo = 0.0, t_hi = -1.0, prev = 1.0;
  for (double t : scan) {
    const double w = worst(t);
    if (w > prev * (1.0 + 1e-9)) est.monotone = false;
    prev = w;
    if (w <= 0.5) {
      t_hi = t;
      break;
    }
    t_lo = t;
  }
  if (t_hi < 0.0)
    throw EstimationError(
        "norm still above 1/2 past the flow-free bound; time-step error exceeds tol, "
        "lower linear.c_adv or linear.dt_max",
        t_lo, std::numeric_limits<double>::infinity());

  while (t_hi - t_lo > opts.tol * t_hi) {
    const double mid = 0.5 * (t_lo + t_hi);
    if (worst(mid) <= 0.5)
      t_hi = mid;
    else
      t_lo = mid;
  }

  auto sorted = est.norm_curve;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].second > sorted[i - 1].second * (1.0 + 1e-9) + 10.0 * opts.norm_tol)
      est.monotone = false;

  est.t_lo = t_lo;
  est.t_hi = t_hi;
  est.tau_star = t_hi;
  return est;
}

RescalingReport check_rescaling_identity(const FlowSpec& v, double A, double gamma,
                                         const LinParams& base, double rel_tol,
                                         const DissipationTimeOptions& opts) {
  if (!(A > 0.0)) throw ConfigError("rescaling factor must be positive");
  LinParams rhs = base;
  rhs.alpha = 2;
  rhs.flow = v;
  rhs.gamma = gamma / A;
  const auto s_rhs = default_s_samples(rhs);

  LinParams lhs = base;
  lhs.alpha = 2;
  lhs.flow = FlowSpec::rescaled(v, A);
  lhs.gamma = gamma;
  // time runs A times faster on the left: scale the step cap to match
  lhs.dt_policy.dt /= A;
  lhs.dt_policy.dt_max /= A;
  std::vector<double> s_lhs;
  for (double s : s_rhs) s_lhs.push_back(s / A);

  RescalingReport rep;
  rep.lhs = dissipation_time(lhs, s_lhs, opts).tau_star;
  rep.rhs = dissipation_time(rhs, s_rhs, opts).tau_star / A;
  rep.relative_difference = std::abs(rep.lhs - rep.rhs) / std::max(rep.lhs, rep.rhs);
  rep.holds = rep.relative_difference <= rel_tol;
  return rep;
}

TauRelationReport check_tau_relation(const DissipationTimeEstimate& est1,
                                     const DissipationTimeEstimate& est2, double c2_norm,
                                     double C_cal) {
  if (est1.alpha != 1 || est2.alpha != 2)
    throw ConfigError("tau relation needs an alpha = 1 and an alpha = 2 estimate");
  if (est1.gamma != est2.gamma) throw ConfigError("tau relation needs a shared gamma");
  TauRelationReport rep;
  rep.tau1 = est1.tau_star;
  rep.tau2 = est2.tau_star;
  rep.c2_norm = c2_norm;
  rep.C_cal = C_cal;
  rep.C_hat = rep.tau2 / (rep.tau1 * (1.0 + c2_norm * rep.tau1));
  rep.holds = rep.C_hat <= C_cal;
  return rep;
}

}  // namespace chmix
