#include "chmix/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chmix/errors.hpp"

namespace chmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// first branch of T0' / T1' without the constant C
double t0_branch(const ThresholdInputs& in) {
  return in.gamma * in.gamma / (4.0 * (1.0 + in.cbar * in.cbar) * (1.0 + in.B * in.B));
}

double t1_branch(const ThresholdInputs& in) {
  const double c4 = in.cbar * in.cbar * in.cbar * in.cbar;
  return (0.75 - std::sqrt(in.beta) / 2.0) * std::pow(in.gamma, 3.5) /
         ((1.0 + in.B * in.B * in.B) * (1.0 + c4));
}

// min of the C-independent branches of the threshold actually used
double other_branches(const ThresholdInputs& in) {
  const double lb = std::log(in.beta);
  if (in.dim == 2) return std::min({in.gamma * lb, 1.0 / (4.0 * in.mu), lb / (2.0 * in.mu)});
  return std::min({in.gamma * lb / 2.0, 1.0 / (8.0 * in.mu), lb / (4.0 * in.mu)});
}

double lower_bound_shape(double x) {
  // ln(1 + x) / x, stable near 0
  return x < 1e-8 ? 1.0 - x / 2.0 : std::log1p(x) / x;
}

}  // namespace

void ThresholdInputs::validate() const {
  if (!(B >= 0.0)) throw ConfigError("B must be non-negative");
  if (!std::isfinite(cbar)) throw ConfigError("cbar must be finite");
  if (!(beta > 1.0 && beta <= 2.0)) throw ConfigError("beta must lie in (1, 2]");
  if (!(mu > 0.0)) throw ConfigError("mu must be positive");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(C_beta_mu > 0.0)) throw ConfigError("C_beta_mu must be positive");
  if (!(grad_u_sup >= 0.0)) throw ConfigError("grad_u_sup must be non-negative");
  if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
}

ThresholdPair compute_T0(const ThresholdInputs& in) {
  if (in.beta > 2.0) throw ConfigError("beta must lie in (1, 2]");
  in.validate();
  if (in.dim != 2) throw ConfigError("T0 applies to two-dimensional runs");
  const double lb = std::log(in.beta);
  ThresholdPair out;
  out.prime = std::min({t0_branch(in) / in.C_beta_mu, in.gamma * lb, 1.0 / (4.0 * in.mu)});
  out.value = std::min(out.prime, lb / (2.0 * in.mu));
  return out;
}

ThresholdPair compute_T1(const ThresholdInputs& in) {
  if (in.beta > 2.0) throw ConfigError("T1 requires beta <= 2 so that 3/4 - sqrt(beta)/2 > 0");
  in.validate();
  if (in.dim != 3) throw ConfigError("T1 applies to three-dimensional runs");
  const double lb = std::log(in.beta);
  ThresholdPair out;
  out.prime = std::min({t1_branch(in) / in.C_beta_mu, in.gamma * lb / 2.0, 1.0 / (8.0 * in.mu)});
  out.value = std::min(out.prime, lb / (4.0 * in.mu));
  return out;
}

double lower_bound_tau2(double c2_norm, double gamma, double C_dim) {
  if (!(c2_norm >= 0.0)) throw ConfigError("c2_norm must be non-negative");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(C_dim > 0.0)) throw ConfigError("C_dim must be positive");
  return lower_bound_shape(C_dim * c2_norm / gamma) / gamma;
}

HypothesisReport hypothesis_check(const ThresholdInputs& in, double tau2, int estimate_dim) {
  if (estimate_dim != in.dim)
    throw ConfigError("threshold inputs are " + std::to_string(in.dim) +
                      "D but the estimate comes from a " + std::to_string(estimate_dim) + "D run");
  if (!(tau2 >= 0.0)) throw ConfigError("tau2 must be non-negative");
  HypothesisReport rep;
  if (in.dim == 2) {
    rep.lhs = tau2;
    rep.threshold = compute_T0(in).value;
  } else {
    rep.lhs = std::sqrt(1.0 + in.grad_u_sup) * tau2;
    rep.threshold = compute_T1(in).value;
  }
  rep.margin = rep.lhs / rep.threshold;
  rep.theorem_applies = rep.margin < 1.0;
  return rep;
}

ConstantCalibration calibrate_C_beta_mu(const std::vector<HypothesisFixture>& fixtures) {
  if (fixtures.empty()) throw ConfigError("calibration needs at least one fixture");
  ConstantCalibration cal;
  cal.upper = kInf;
  for (const auto& f : fixtures) {
    ThresholdInputs in = f.inputs;
    in.C_beta_mu = 1.0;
    in.validate();
    const double lhs = in.dim == 2 ? f.tau2 : std::sqrt(1.0 + in.grad_u_sup) * f.tau2;
    // hypothesis holds iff lhs < min(branch / C, others)
    double crit = 0.0;
    if (lhs < other_branches(in)) {
      const double branch = in.dim == 2 ? t0_branch(in) : t1_branch(in);
      crit = lhs > 0.0 ? branch / lhs : kInf;
    }
    cal.critical.push_back(crit);
    if (f.certificate_holds) {
      if (crit > 0.0) cal.upper = std::min(cal.upper, crit);
    } else {
      cal.lower = std::max(cal.lower, crit);
    }
  }
  cal.recommended = std::isfinite(cal.upper) ? std::max(cal.lower, cal.upper) : cal.lower;
  return cal;
}

double calibrate_C_dim(const std::vector<LowerBoundFixture>& fixtures) {
  if (fixtures.empty()) throw ConfigError("calibration needs at least one fixture");
  double C = 0.0;
  for (const auto& f : fixtures) {
    if (!(f.c2_norm > 0.0))
      throw ConfigError("lower-bound calibration needs flows with nonzero C2 norm");
    if (!(f.gamma > 0.0) || !(f.tau2 > 0.0)) throw ConfigError("gamma and tau2 must be positive");
    // lower bound is decreasing in C; find where it meets tau2
    const double target = f.tau2 * f.gamma;  // shape(x) = target, x = C c2 / gamma
    if (target >= 1.0) continue;             // holds for every C
    double lo = 0.0, hi = 1.0;
    while (lower_bound_shape(hi) > target) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (lower_bound_shape(mid) > target ? lo : hi) = mid;
    }
    C = std::max(C, hi * f.gamma / f.c2_norm);
  }
  return C;
}

}  // namespace chmix
