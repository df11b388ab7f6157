#include "chmix/advection.hpp"

#include <algorithm>
#include <cmath>

#include "chmix/errors.hpp"

namespace chmix {

double TimeStepPolicy::step(double max_speed, double dx) const {
  if (kind == StepKind::fixed) return dt;
  if (max_speed <= 0.0) return dt_max;
  return std::min(dt_max, c_adv * dx / max_speed);
}

void TimeStepPolicy::validate() const {
  if (kind == StepKind::fixed && !(dt > 0.0)) throw ConfigError("dt must be positive");
  if (kind == StepKind::cfl && !(c_adv > 0.0)) throw ConfigError("c_adv must be positive");
  if (kind == StepKind::cfl && !(dt_max > 0.0)) throw ConfigError("dt_max must be positive");
}

AdvectionOperator::AdvectionOperator(FlowSpec flow, TorusGrid grid)
    : flow_(std::move(flow)),
      grid_(grid),
      padded_grid_(grid.refined(2)),
      zero_(flow_.is_zero()) {}

const AdvectionOperator::Piece& AdvectionOperator::piece(double piece_time) {
  const std::int64_t id = piece_id(flow_, piece_time);
  for (const auto& p : cache_)
    if (p.id == id) return p;
  // sampled directly on the 2n grid: the shipped flows are analytic and
  // band-limited well below n/2, so this equals zero-padding the n-grid sample
  auto sample = sample_flow_piece(flow_, piece_time, piece_time, padded_grid_);
  Piece p;
  p.id = id;
  p.max_speed = sample.max_speed();
  for (int c = 0; c < grid_.dim(); ++c) {
    if (sample.component_is_zero(c))
      p.padded.emplace_back();
    else
      p.padded.push_back(std::move(sample.components[static_cast<std::size_t>(c)]));
  }
  if (cache_.size() >= 8) cache_.erase(cache_.begin());
  cache_.push_back(std::move(p));
  return cache_.back();
}

double AdvectionOperator::max_speed(double piece_time) {
  if (zero_) return 0.0;
  return piece(piece_time).max_speed;
}

SpectralField AdvectionOperator::apply(const SpectralField& f, double piece_time) {
  if (zero_) return SpectralField(f.grid());
  const Piece& p = piece(piece_time);
  std::vector<double> acc(padded_grid_.num_points(), 0.0);
  bool any = false;
  for (int c = 0; c < grid_.dim(); ++c) {
    const auto& uc = p.padded[static_cast<std::size_t>(c)];
    if (uc.empty()) continue;
    const auto g = to_padded_physical(partial_derivative(f, c));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += uc[i] * g[i];
    any = true;
  }
  if (!any) return SpectralField(f.grid());
  SpectralField out = from_padded_physical(acc, grid_);
  out.set_mean(0.0);
  return out;
}

std::vector<Segment> AdvectionOperator::plan(double t0, double t1, const TimeStepPolicy& policy,
                                             const std::vector<double>& events) {
  std::vector<double> cuts = breakpoints(flow_, t0, t1);
  for (double e : events)
    if (e > t0 && e < t1) cuts.push_back(e);
  cuts.push_back(t0);
  cuts.push_back(t1);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Segment> out;
  const double dx = grid_.spacing();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Segment s{cuts[i], cuts[i + 1], 1};
    const double len = s.t1 - s.t0;
    if (!(len > 0.0)) continue;
    const double dt = policy.step(max_speed(s.mid()), dx);
    // tolerance keeps mirrored (adjoint) segments on the same step count
    s.steps = std::max(1, static_cast<int>(std::ceil(len / dt - 1e-9)));
    out.push_back(s);
  }
  return out;
}

}  // namespace chmix
