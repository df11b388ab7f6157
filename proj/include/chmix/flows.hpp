#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "chmix/spectral.hpp"

namespace chmix {

class FlowSpec;

struct ZeroFlow {};

enum class ShearDirection { horizontal, vertical };

/// horizontal: u = (A sin(2 pi k y + phase), 0); vertical: u = (0, A sin(2 pi k x + phase)).
struct SteadyShear {
  ShearDirection direction = ShearDirection::horizontal;
  int wavenumber = 1;
  double phase = 0.0;
  double amplitude = 1.0;
};

/// Horizontal and vertical sinusoidal shears alternating every switch_period,
/// with the phase on interval j drawn uniformly from [0, 2 pi) keyed by
/// (phase_seed, j). In 3D the sheared component cycles x, y, z.
struct AlternatingShear {
  double amplitude = 1.0;
  double switch_period = 1.0;
  std::uint64_t phase_seed = 0;
};

/// Stream function psi = (A / 2 pi m) sin(2 pi m x) sin(2 pi m y).
struct CellularFlow {
  double amplitude = 1.0;
  int cells_per_side = 1;
};

/// u(x, t) = factor * inner(x, factor * t).
struct RescaledFlow {
  std::shared_ptr<const FlowSpec> inner;
  double factor = 1.0;
};

/// u*(x, r) = -inner(x, horizon - r); the velocity of the adjoint transport.
struct TimeReversedFlow {
  std::shared_ptr<const FlowSpec> inner;
  double horizon = 0.0;
};

/// Declarative divergence-free velocity field. Every variant is constant in
/// time on each piece between breakpoints, which lets solvers cache samples.
class FlowSpec {
 public:
  using Variant =
      std::variant<ZeroFlow, SteadyShear, AlternatingShear, CellularFlow, RescaledFlow,
                   TimeReversedFlow>;

  FlowSpec() : v_(ZeroFlow{}) {}
  FlowSpec(ZeroFlow f) : v_(f) {}
  FlowSpec(SteadyShear f);
  FlowSpec(AlternatingShear f);
  FlowSpec(CellularFlow f);

  /// rescaled(rescaled(v, a), b) flattens to rescaled(v, a * b).
  static FlowSpec rescaled(const FlowSpec& inner, double factor);
  static FlowSpec time_reversed(const FlowSpec& inner, double horizon);

  const Variant& variant() const noexcept { return v_; }
  bool is_zero() const;
  std::string describe() const;

 private:
  Variant v_;
};

/// Velocity of one physical component set at a fixed time.
struct VectorFieldSample {
  TorusGrid grid;
  std::vector<std::vector<double>> components;

  /// max over grid of |u|.
  double max_speed() const;
  bool component_is_zero(int i) const;
};

/// Sample at time t. Discrete choices (switch interval) are taken from t.
VectorFieldSample sample_flow(const FlowSpec& spec, double t, const TorusGrid& grid);

/// Sample the piece that contains piece_time (used to take one-sided limits
/// at breakpoints).
VectorFieldSample sample_flow_piece(const FlowSpec& spec, double t, double piece_time,
                                    const TorusGrid& grid);

/// Velocity at one point.
std::array<double, 3> velocity_at(const FlowSpec& spec, double t, double piece_time,
                                  const std::array<double, 3>& x, int dim);

/// Identifier of the piece containing time t; equal ids imply equal velocity.
std::int64_t piece_id(const FlowSpec& spec, double t);

/// Breakpoints strictly inside (t0, t1), sorted.
std::vector<double> breakpoints(const FlowSpec& spec, double t0, double t1);

/// Natural start times for sup-over-s estimates within [0, horizon): {0} for
/// steady flows, the switch boundaries for alternating shears.
std::vector<double> default_start_times(const FlowSpec& spec, double horizon);

/// Max over grid of the spectral divergence relative to the velocity norm.
double relative_divergence(const VectorFieldSample& u);

struct FlowNorms {
  double grad_sup = 0.0;  ///< sup_t max_x |grad u|_op
  double c2 = 0.0;        ///< sup_t sum_{|beta| <= 2} max_x |d^beta u|
};

FlowNorms flow_norms(const FlowSpec& spec, double t_max, int n_samples, const TorusGrid& grid);

/// Closed form of flow_norms for shears (A, 2 pi k A, (2 pi k)^2 A), when
/// the spec is an (optionally rescaled) steady or alternating shear.
bool shear_closed_form_norms(const FlowSpec& spec, FlowNorms& out);

}  // namespace chmix
