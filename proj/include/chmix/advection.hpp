#pragma once

#include <cstdint>
#include <vector>

#include "chmix/flows.hpp"
#include "chmix/spectral.hpp"

namespace chmix {

enum class StepKind { fixed, cfl };

struct TimeStepPolicy {
  StepKind kind = StepKind::cfl;
  double dt = 1e-3;      ///< used when kind == fixed
  double c_adv = 0.5;    ///< CFL number
  double dt_max = 1e-2;  ///< cap when kind == cfl

  /// Step size for a piece whose max speed is max_speed on a grid of spacing dx.
  double step(double max_speed, double dx) const;
  void validate() const;
};

/// A stretch of time on which the velocity is one piece, advanced in `steps`
/// uniform substeps.
struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  int steps = 1;
  double h() const { return (t1 - t0) / steps; }
  double mid() const { return 0.5 * (t0 + t1); }
};

/// Dealiased u.grad f on the grid of f, with padded velocity samples cached
/// per flow piece.
class AdvectionOperator {
 public:
  AdvectionOperator(FlowSpec flow, TorusGrid grid);

  const FlowSpec& flow() const noexcept { return flow_; }
  bool is_zero() const noexcept { return zero_; }

  /// u(piece) . grad f; mean mode and Nyquist modes of the result are zero.
  SpectralField apply(const SpectralField& f, double piece_time);
  double max_speed(double piece_time);

  /// Splits [t0, t1] at flow breakpoints and the given extra event times and
  /// assigns each piece a uniform step count from the policy.
  std::vector<Segment> plan(double t0, double t1, const TimeStepPolicy& policy,
                            const std::vector<double>& events = {});

 private:
  struct Piece {
    std::int64_t id = 0;
    std::vector<std::vector<double>> padded;  // per component, empty if identically 0
    double max_speed = 0.0;
  };
  const Piece& piece(double piece_time);

  FlowSpec flow_;
  TorusGrid grid_;
  TorusGrid padded_grid_;
  bool zero_;
  std::vector<Piece> cache_;
};

}  // namespace chmix
