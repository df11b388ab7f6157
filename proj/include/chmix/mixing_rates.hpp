#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "chmix/advection.hpp"
#include "chmix/flows.hpp"
#include "chmix/spectral.hpp"

namespace chmix {

struct TransportOptions {
  TimeStepPolicy dt_policy{StepKind::cfl, 1e-3, 0.5, 0.05};
  double drift_budget = 0.05;  ///< relative L2 drift that aborts the run
};

struct TransportResult {
  SpectralField field;
  double max_drift = 0.0;  ///< max_t | ||phi(t)|| / ||phi0|| - 1 |
};

/// Pure transport d phi/dt + u.grad phi = 0 from s to t: RK4 with dealiased
/// advection and an exponential filter acting on the top third of modes.
/// Throws NumericError when the L2 drift exceeds the budget.
TransportResult transport_evolve(const SpectralField& phi0, double s, double t,
                                 const FlowSpec& flow, const TransportOptions& opts = {});

enum class RateKind { weak, strong };
enum class FitForm { exponential, power };

struct RateFit {
  FitForm form = FitForm::exponential;
  double a = 1.0;
  double b = 0.0;  ///< e^{-b t} rate or t^{-b} exponent
  double r_squared = 0.0;

  double operator()(double t) const;
};

struct RateFunctionEstimate {
  RateKind kind = RateKind::strong;
  std::vector<std::pair<double, double>> raw;       ///< (t, h) before the envelope
  std::vector<std::pair<double, double>> samples;   ///< non-increasing envelope
  std::string test_set;
  std::vector<double> s_samples;
  RateFit fit;
  double max_drift = 0.0;
  double horizon_used = 0.0;  ///< requested horizon capped by the conservation budget
  bool decays = false;  ///< fitted envelope decreases by more than the 5% slack over the horizon
};

struct RateOptions {
  int time_points = 128;  ///< uniform pairing samples over the horizon
  int test_modes = 8;     ///< lowest nonconstant real Fourier modes
  std::vector<double> s_samples{0.0};
  int threads = 1;
  /// Samples after the first time any trajectory drifts by more than this
  /// are discarded; fewer than max(4, time_points / 8) usable samples is a
  /// resolution error.
  double conservation_budget = 0.01;
  TransportOptions transport{};
};

/// The n lowest nonconstant real Fourier modes (cos and sin of each |k|),
/// each with unit H^1 seminorm.
std::vector<SpectralField> lowest_mode_test_set(const TorusGrid& grid, int count);

/// h(t) = max over pairs and start times of
///   strong: |<phi(s+t), psi>| / (||phi(s)||_H1 ||psi||_H1)
///   weak:   (1/T int_0^T |<phi(s+t), psi>|^2 dt)^{1/2} / (...)
/// on a geometric subset of the uniform sample times, then made
/// non-increasing and fitted by an exponential or power law that dominates
/// every sample within 5%. The horizon is capped by the conservation budget.
RateFunctionEstimate measure_rate(const FlowSpec& flow, RateKind kind, double horizon,
                                  const TorusGrid& grid, const RateOptions& opts = {});

/// Same, with an explicit test set (pairs are all (phi0, psi) combinations).
RateFunctionEstimate measure_rate(const FlowSpec& flow, RateKind kind, double horizon,
                                  const std::vector<SpectralField>& test_set,
                                  const RateOptions& opts = {});

struct TStarConstants {
  double C1 = 1.0;
  double C2 = 1.0;
};

struct TStarResult {
  double t_star = 0.0;
  double tau2_bound = 0.0;  ///< t* + C1 ||u||_C2 t*^2
  double residual = 0.0;    ///< |lhs - rhs| / max(lhs, rhs) at t*
  int iterations = 0;
};

/// Root of gamma ||u||_C2 t^2 = C2 h(t / sqrt 2)^{8 / (4 + d)}   (weak) or
///            gamma ||u||_C2 t^2 = C2 h(t / (2 sqrt 2))^2        (strong)
/// by bisection on (0, t_max]. Throws EstimationError when there is no sign
/// change on the interval.
TStarResult solve_t_star(const std::function<double(double)>& h, RateKind kind, double gamma,
                         double c2_norm, int dim, const TStarConstants& constants = {},
                         double t_max = 1e3);

/// C1 that makes t* + C1 ||u||_C2 t*^2 equal a measured tau*_2 (0 when t*
/// alone already exceeds it).
double calibrate_C1(double tau2, double t_star, double c2_norm);

/// Distance between the hyperdiffusive solution theta (alpha = 2) and the
/// transported phi started from the same data, with the ingredients of
///   ||theta - phi||^2 <= sqrt(2 gamma t) ||theta0|| (C_d ||u||_C2 int_0^t ||Lap theta||^2 + ||Lap theta0||^2)^{1/2}.
struct TransportDifferenceSample {
  double t = 0.0;
  double diff_sq = 0.0;        ///< ||theta(t) - phi(t)||^2
  double lap_integral = 0.0;   ///< int_0^t ||Lap theta||^2 ds
};

struct TransportDifferenceReport {
  double gamma = 0.0;
  double c2_norm = 0.0;
  double theta0_l2 = 0.0;
  double lap_theta0_sq = 0.0;
  double max_drift = 0.0;
  std::vector<TransportDifferenceSample> samples;

  double bound(const TransportDifferenceSample& s, double C_d) const;
  /// Smallest C_d for which every sample meets the bound.
  double required_C_d() const;
  bool holds(double C_d) const;
};

/// Samples at k t_end / sample_count, k = 1..sample_count; the integral uses
/// quadrature_per_sample trapezoid panels between samples.
TransportDifferenceReport transport_difference(const SpectralField& theta0, const FlowSpec& flow,
                                               double gamma, double c2_norm, double t_end,
                                               int sample_count = 8,
                                               int quadrature_per_sample = 16,
                                               const TransportOptions& opts = {});

const char* to_string(RateKind kind);
const char* to_string(FitForm form);

}  // namespace chmix
