#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chmix/advection.hpp"
#include "chmix/flows.hpp"
#include "chmix/spectral.hpp"

namespace chmix {

/// Advection-(hyper)diffusion  d theta/dt + u.grad theta + gamma (-Lap)^alpha theta = 0.
struct LinParams {
  int alpha = 2;
  double gamma = 0.01;
  TorusGrid grid{2, 32};
  FlowSpec flow{};
  TimeStepPolicy dt_policy{StepKind::cfl, 1e-3, 0.25, 0.05};

  void validate() const;
};

/// ln 2 / (gamma (2 pi)^{2 alpha}): the dissipation time without stirring,
/// and an upper bound for every divergence-free flow.
double flow_free_dissipation_time(int alpha, double gamma);

/// S_{s,t} f for t >= s. f must be mean-zero; Nyquist modes are carried by
/// the diffusion only.
SpectralField evolve(const SpectralField& f, double s, double t, const LinParams& params);

/// Exact discrete transpose of evolve: the transposed step run on the
/// mirrored segment plan with velocity -u(s + t - r).
SpectralField adjoint_evolve(const SpectralField& g, double s, double t, const LinParams& params);

struct NormOptions {
  double tol = 1e-4;  ///< relative tolerance on the singular value
  int restarts = 2;   ///< independent starts, at least 2
  int max_iter = 80;  ///< Krylov steps per start
  std::uint64_t seed = 0x5eed;
};

struct NormEstimate {
  double value = 1.0;
  int iterations = 0;  ///< total applications of S*S
  double residual = 0.0;
};

/// Largest singular value of S_{s,t} on mean-zero L^2.
///
/// Lanczos on S*S with full reorthogonalization (a Krylov acceleration of the
/// power iteration). Start 0 is the lowest Fourier modes plus a small seeded
/// perturbation; later starts are seeded random fields. The maximum over
/// starts is returned.
NormEstimate operator_norm_estimate(double s, double t, const LinParams& params,
                                    const NormOptions& opts = {});
double operator_norm(double s, double t, const LinParams& params, double tol = 1e-4);

struct DissipationTimeOptions {
  double tol = 1e-4;       ///< relative bracket width
  double norm_tol = 1e-7;  ///< operator-norm tolerance
  int restarts = 2;
  int threads = 1;
  std::uint64_t seed = 0x5eed;
};

struct DissipationTimeEstimate {
  double tau_star = 0.0;
  int alpha = 2;
  double gamma = 0.0;
  std::vector<double> s_samples;
  double t_lo = 0.0;
  double t_hi = 0.0;
  /// (t, max over s of the norm estimate) in evaluation order.
  std::vector<std::pair<double, double>> norm_curve;
  double flow_free_bound = 0.0;
  bool monotone = true;  ///< scan values non-increasing in t
  int norm_evaluations = 0;
  int iterations = 0;
  double tol = 0.0;
  double norm_tol = 0.0;
};

/// Smallest t with max_s ||S_{s,s+t}|| <= 1/2 over the sampled start times:
/// geometric scan up to the flow-free bound, then bisection.
DissipationTimeEstimate dissipation_time(const LinParams& params,
                                         const std::vector<double>& s_samples,
                                         const DissipationTimeOptions& opts = {});

/// Start times used when none are configured: the flow's natural start times
/// over a horizon of twice the flow-free bound.
std::vector<double> default_s_samples(const LinParams& params);

struct RescalingReport {
  double lhs = 0.0;  ///< tau_2(u_A, gamma)
  double rhs = 0.0;  ///< tau_2(v, gamma / A) / A
  double relative_difference = 0.0;
  bool holds = false;
};

/// tau*_2(u_A, gamma) = tau*_2(v, gamma / A) / A with u_A(x, t) = A v(x, A t),
/// within rel_tol.
RescalingReport check_rescaling_identity(const FlowSpec& v, double A, double gamma,
                                         const LinParams& base, double rel_tol = 0.05,
                                         const DissipationTimeOptions& opts = {});

struct TauRelationReport {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double c2_norm = 0.0;
  double C_hat = 0.0;  ///< tau2 / (tau1 (1 + c2 tau1))
  double C_cal = 0.0;
  bool holds = false;
};

TauRelationReport check_tau_relation(const DissipationTimeEstimate& est1,
                                     const DissipationTimeEstimate& est2, double c2_norm,
                                     double C_cal);

}  // namespace chmix
