#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chmix/advection.hpp"
#include "chmix/errors.hpp"
#include "chmix/flows.hpp"
#include "chmix/spectral.hpp"

namespace chmix {

/// Parameters of the stirred Cahn-Hilliard run
///   dc/dt + u.grad c + gamma D Lap^2 c = D Lap(c^3 - c).
/// The solver integrates the D = 1 form in internal time s = D t with the
/// velocity rescaled by 1/D; every time reported to the caller is physical.
struct CHParams {
  double gamma = 0.01;
  double mobility = 1.0;
  TorusGrid grid{2, 64};
  /// Applied in internal (D = 1) time units.
  TimeStepPolicy dt_policy{};
  double t_end = 1.0;
  double sample_interval = 0.1;
  FlowSpec flow{};
  std::uint64_t seed = 0;
  std::vector<double> snapshot_times;
  std::vector<double> checkpoint_times;

  void validate() const;
};

/// Default step policy for a given gamma: CFL 0.5 capped at 0.1 min(gamma, (2 pi)^-2).
TimeStepPolicy default_ch_step_policy(double gamma);

struct CHState {
  double t = 0.0;
  SpectralField c;
};

struct TimeSeriesRecord {
  double t = 0.0;
  double l2_var = 0.0;  ///< ||c - cbar||_{L^2}
  double h1 = 0.0;      ///< ||grad c||_{L^2}
  double hm1 = 0.0;     ///< ||c - cbar||_{H^-1}
  double fe_chem = 0.0;
  double fe_int = 0.0;
  double fe_total = 0.0;
  double mean = 0.0;
  double max_abs_c = 0.0;
};

TimeSeriesRecord diagnose(const CHState& state, double gamma);

/// F_chem = 1/4 int (c^2 - 1)^2, evaluated exactly on the 2n grid.
double chemical_free_energy(const SpectralField& c);

/// Non-finite coefficients appeared; carries the last good state.
class BlowUpError : public NumericError {
 public:
  BlowUpError(const std::string& what, CHState last_valid, std::vector<TimeSeriesRecord> partial)
      : NumericError(what), last_valid_(std::move(last_valid)), partial_(std::move(partial)) {}
  const CHState& last_valid() const { return last_valid_; }
  const std::vector<TimeSeriesRecord>& partial_records() const { return partial_; }

 private:
  CHState last_valid_;
  std::vector<TimeSeriesRecord> partial_;
};

/// Integrating-factor RK2 stepper. The stiff -gamma Lap^2 part is applied
/// through the exact multiplier exp(-gamma (2 pi |k|)^4 h); Lap(c^3 - c) and
/// -u.grad c are explicit.
class CHIntegrator {
 public:
  explicit CHIntegrator(const CHParams& params);

  /// One step of physical length dt; piece_time (physical) selects the flow piece.
  CHState step(const CHState& state, double dt, std::optional<double> piece_time = std::nullopt);

  /// Advances to physical time t1 over the segment plan (flow breakpoints
  /// plus the given events).
  CHState advance(const CHState& state, double t1, const std::vector<double>& events = {});

  /// Explicit right-hand side Lap(c^3 - c) - u.grad c in internal time.
  SpectralField nonlinear_rhs(const SpectralField& c, double internal_piece_time);

  const CHParams& params() const { return params_; }

 private:
  void internal_step(SpectralField& c, double h, double piece_time);
  const std::vector<double>& multiplier(double h);

  CHParams params_;
  AdvectionOperator advection_;
  std::vector<double> decay_rate_;  // gamma (2 pi |k|)^4
  double cached_h_ = -1.0;
  std::vector<double> cached_multiplier_;
};

CHState ch_step(const CHState& state, const CHParams& params, double dt);

struct Snapshot {
  double t = 0.0;
  SpectralField c;
};

struct SimulationResult {
  CHState final_state;
  std::vector<TimeSeriesRecord> records;
  std::vector<Snapshot> snapshots;
};

struct SimulationHooks {
  /// Called at every configured checkpoint time with the state reached.
  std::function<void(const CHState&)> on_checkpoint;
  /// Called after every sample record.
  std::function<void(const TimeSeriesRecord&)> on_record;
};

/// Integrates from c0 at t = 0 to t_end, sampling every sample_interval.
SimulationResult simulate(const CHParams& params, const SpectralField& c0,
                          const SimulationHooks& hooks = {});

/// Continues a trajectory from a restored state; samples are the absolute
/// multiples of sample_interval in [start.t, t_end].
SimulationResult simulate_from(const CHParams& params, const CHState& start,
                               const SimulationHooks& hooks = {});

/// Default initial data: i.i.d. uniform noise in [-delta, delta], mean set to cbar.
SpectralField default_initial_data(const TorusGrid& grid, std::uint64_t seed, double delta,
                                   double cbar);

// Runtime diagnostics on a single trajectory.

struct BoundReport {
  bool holds = true;
  double max_ratio = 0.0;  ///< max of lhs / rhs over checked samples
  std::optional<double> first_violation;
  bool precondition_ok = true;
  std::string message;
};

/// l2_var(t)^2 <= l2_var(0)^2 e^{t/gamma} (1 + 1e-8) at every sample after the first.
/// With mobility D the bound is applied in internal time D t.
BoundReport check_growth_bound(const std::vector<TimeSeriesRecord>& records, double gamma,
                               double mobility = 1.0);

/// l2_var(t0 + tau)^2 <= beta l2_var(t0)^2 (1 + 1e-8) for every sampled pair
/// with 0 <= tau <= gamma ln beta. Requires sample spacing <= gamma ln beta / 4.
BoundReport check_doubling(const std::vector<TimeSeriesRecord>& records, double gamma,
                           double beta, double mobility = 1.0);

/// ||grad c(t0+tau)||^2 <= 2F(t0)/gamma + (||grad u||_inf / (2 pi^2 gamma)) e^{tau/gamma}
/// ||c(t0) - cbar||^2 with 1e-8 relative slack.
BoundReport check_h1_bound(const std::vector<TimeSeriesRecord>& records, double grad_u_sup,
                           double gamma, double t0, double tau, double mobility = 1.0);

struct DecayCertificate {
  bool holds = true;
  /// Decay rate (positive = decaying) of the least-squares line through
  /// log l2_var over the trailing half; +infinity for zero variance.
  double fitted_rate = 0.0;
  double r_squared = 1.0;
};

/// l2_var(t) <= beta e^{-mu t} l2_var(0) (1 + 1e-8) at every sample.
DecayCertificate fit_decay_certificate(const std::vector<TimeSeriesRecord>& records, double beta,
                                       double mu);

/// fe_total non-increasing sample to sample within slack.
BoundReport check_energy_monotone(const std::vector<TimeSeriesRecord>& records,
                                  double slack = 1e-9);

/// |mean(t) - mean(0)| <= tol at every sample.
BoundReport check_mean_conservation(const std::vector<TimeSeriesRecord>& records,
                                    double tol = 1e-10);

}  // namespace chmix
