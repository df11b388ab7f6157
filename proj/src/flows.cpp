#include "chmix/flows.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chmix/errors.hpp"
#include "chmix/rng.hpp"

namespace chmix {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::int64_t interval_index(double t, double period) {
  return static_cast<std::int64_t>(std::floor(t / period));
}

double alternating_phase(const AlternatingShear& f, std::int64_t j) {
  return kTwoPi * counter_uniform(f.phase_seed, static_cast<std::uint64_t>(j));
}

}  // namespace

FlowSpec::FlowSpec(SteadyShear f) : v_(f) {
  if (!(f.amplitude >= 0.0)) throw ConfigError("shear amplitude must be non-negative");
  if (f.wavenumber < 1) throw ConfigError("shear wavenumber must be >= 1");
}

FlowSpec::FlowSpec(AlternatingShear f) : v_(f) {
  if (!(f.amplitude >= 0.0)) throw ConfigError("shear amplitude must be non-negative");
  if (!(f.switch_period > 0.0)) throw ConfigError("switch_period must be positive");
}

FlowSpec::FlowSpec(CellularFlow f) : v_(f) {
  if (!(f.amplitude >= 0.0)) throw ConfigError("cellular amplitude must be non-negative");
  if (f.cells_per_side < 1) throw ConfigError("cells_per_side must be >= 1");
}

FlowSpec FlowSpec::rescaled(const FlowSpec& inner, double factor) {
  if (!(factor >= 0.0) || !std::isfinite(factor))
    throw ConfigError("rescaling factor must be a non-negative finite number");
  FlowSpec out;
  if (const auto* r = std::get_if<RescaledFlow>(&inner.v_)) {
    out.v_ = RescaledFlow{r->inner, r->factor * factor};
  } else {
    out.v_ = RescaledFlow{std::make_shared<const FlowSpec>(inner), factor};
  }
  return out;
}

FlowSpec FlowSpec::time_reversed(const FlowSpec& inner, double horizon) {
  FlowSpec out;
  out.v_ = TimeReversedFlow{std::make_shared<const FlowSpec>(inner), horizon};
  return out;
}

bool FlowSpec::is_zero() const {
  return std::visit(overloaded{
                        [](const ZeroFlow&) { return true; },
                        [](const SteadyShear& f) { return f.amplitude == 0.0; },
                        [](const AlternatingShear& f) { return f.amplitude == 0.0; },
                        [](const CellularFlow& f) { return f.amplitude == 0.0; },
                        [](const RescaledFlow& f) { return f.factor == 0.0 || f.inner->is_zero(); },
                        [](const TimeReversedFlow& f) { return f.inner->is_zero(); },
                    },
                    v_);
}

std::string FlowSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const ZeroFlow&) { os << "zero"; },
                 [&](const SteadyShear& f) {
                   os << "steady_shear(direction="
                      << (f.direction == ShearDirection::horizontal ? "horizontal" : "vertical")
                      << ", wavenumber=" << f.wavenumber << ", phase=" << f.phase
                      << ", amplitude=" << f.amplitude << ")";
                 },
                 [&](const AlternatingShear& f) {
                   os << "alternating_shear(amplitude=" << f.amplitude
                      << ", switch_period=" << f.switch_period << ", phase_seed=" << f.phase_seed
                      << ")";
                 },
                 [&](const CellularFlow& f) {
                   os << "cellular(amplitude=" << f.amplitude
                      << ", cells_per_side=" << f.cells_per_side << ")";
                 },
                 [&](const RescaledFlow& f) {
                   os << "rescaled(" << f.inner->describe() << ", factor=" << f.factor << ")";
                 },
                 [&](const TimeReversedFlow& f) {
                   os << "time_reversed(" << f.inner->describe() << ", horizon=" << f.horizon
                      << ")";
                 },
             },
             v_);
  return os.str();
}

double VectorFieldSample::max_speed() const {
  double m = 0.0;
  const std::size_t np = grid.num_points();
  for (std::size_t i = 0; i < np; ++i) {
    double s = 0.0;
    for (const auto& c : components) s += c[i] * c[i];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

bool VectorFieldSample::component_is_zero(int i) const {
  const auto& c = components[static_cast<std::size_t>(i)];
  return std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
}

std::array<double, 3> velocity_at(const FlowSpec& spec, double t, double piece_time,
                                  const std::array<double, 3>& x, int dim) {
  std::array<double, 3> u{0.0, 0.0, 0.0};
  std::visit(overloaded{
                 [&](const ZeroFlow&) {},
                 [&](const SteadyShear& f) {
                   if (f.direction == ShearDirection::horizontal)
                     u[0] = f.amplitude * std::sin(kTwoPi * f.wavenumber * x[1] + f.phase);
                   else
                     u[1] = f.amplitude * std::sin(kTwoPi * f.wavenumber * x[0] + f.phase);
                 },
                 [&](const AlternatingShear& f) {
                   const std::int64_t j = interval_index(piece_time, f.switch_period);
                   const auto jm = static_cast<int>(((j % dim) + dim) % dim);
                   const int component = jm;
                   const int coordinate = (jm + 1) % dim;
                   u[static_cast<std::size_t>(component)] =
                       f.amplitude *
                       std::sin(kTwoPi * x[static_cast<std::size_t>(coordinate)] +
                                alternating_phase(f, j));
                 },
                 [&](const CellularFlow& f) {
                   const double m = kTwoPi * f.cells_per_side;
                   u[0] = f.amplitude * std::sin(m * x[0]) * std::cos(m * x[1]);
                   u[1] = -f.amplitude * std::cos(m * x[0]) * std::sin(m * x[1]);
                 },
                 [&](const RescaledFlow& f) {
                   const auto v =
                       velocity_at(*f.inner, f.factor * t, f.factor * piece_time, x, dim);
                   for (int i = 0; i < 3; ++i) u[i] = f.factor * v[i];
                 },
                 [&](const TimeReversedFlow& f) {
                   const auto v =
                       velocity_at(*f.inner, f.horizon - t, f.horizon - piece_time, x, dim);
                   for (int i = 0; i < 3; ++i) u[i] = -v[i];
                 },
             },
             spec.variant());
  return u;
}

VectorFieldSample sample_flow_piece(const FlowSpec& spec, double t, double piece_time,
                                    const TorusGrid& grid) {
  const int dim = grid.dim();
  VectorFieldSample out{grid, std::vector<std::vector<double>>(
                                  static_cast<std::size_t>(dim),
                                  std::vector<double>(grid.num_points(), 0.0))};
  if (spec.is_zero()) return out;
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    const auto u = velocity_at(spec, t, piece_time, grid.point(i), dim);
    for (int c = 0; c < dim; ++c) out.components[static_cast<std::size_t>(c)][i] = u[c];
  }
  return out;
}

VectorFieldSample sample_flow(const FlowSpec& spec, double t, const TorusGrid& grid) {
  if (t < 0.0) throw ConfigError("flow sample time must be non-negative");
  return sample_flow_piece(spec, t, t, grid);
}

std::int64_t piece_id(const FlowSpec& spec, double t) {
  return std::visit(overloaded{
                        [](const ZeroFlow&) -> std::int64_t { return 0; },
                        [](const SteadyShear&) -> std::int64_t { return 0; },
                        [](const CellularFlow&) -> std::int64_t { return 0; },
                        [&](const AlternatingShear& f) -> std::int64_t {
                          return interval_index(t, f.switch_period);
                        },
                        [&](const RescaledFlow& f) -> std::int64_t {
                          return piece_id(*f.inner, f.factor * t);
                        },
                        [&](const TimeReversedFlow& f) -> std::int64_t {
                          return piece_id(*f.inner, f.horizon - t);
                        },
                    },
                    spec.variant());
}

std::vector<double> breakpoints(const FlowSpec& spec, double t0, double t1) {
  std::vector<double> out;
  if (!(t1 > t0)) return out;
  std::visit(overloaded{
                 [](const ZeroFlow&) {},
                 [](const SteadyShear&) {},
                 [](const CellularFlow&) {},
                 [&](const AlternatingShear& f) {
                   for (std::int64_t k = interval_index(t0, f.switch_period) + 1;; ++k) {
                     const double b = static_cast<double>(k) * f.switch_period;
                     if (b >= t1) break;
                     if (b > t0) out.push_back(b);
                   }
                 },
                 [&](const RescaledFlow& f) {
                   if (f.factor == 0.0) return;
                   for (double b : breakpoints(*f.inner, f.factor * t0, f.factor * t1))
                     out.push_back(b / f.factor);
                 },
                 [&](const TimeReversedFlow& f) {
                   auto inner = breakpoints(*f.inner, f.horizon - t1, f.horizon - t0);
                   for (auto it = inner.rbegin(); it != inner.rend(); ++it)
                     out.push_back(f.horizon - *it);
                 },
             },
             spec.variant());
  // drop anything rounding left at the ends
  std::erase_if(out, [&](double b) { return !(b > t0 && b < t1); });
  return out;
}

std::vector<double> default_start_times(const FlowSpec& spec, double horizon) {
  std::vector<double> s{0.0};
  for (double b : breakpoints(spec, 0.0, horizon)) s.push_back(b);
  return s;
}

double relative_divergence(const VectorFieldSample& u) {
  const auto& g = u.grid;
  SpectralField div(g);
  double norm2 = 0.0;
  for (int c = 0; c < g.dim(); ++c) {
    const auto uc = to_spectral(u.components[static_cast<std::size_t>(c)], g);
    norm2 += std::pow(sobolev_norm(uc, 0.0), 2);
    div += partial_derivative(uc, c);
  }
  if (norm2 == 0.0) return 0.0;
  double m = 0.0;
  for (const auto& v : div.coeffs()) m = std::max(m, std::abs(v));
  return m / (kTwoPi * std::sqrt(norm2));
}

FlowNorms flow_norms(const FlowSpec& spec, double t_max, int n_samples, const TorusGrid& grid) {
  if (n_samples < 1) throw ConfigError("flow_norms needs at least one sample time");
  FlowNorms out;
  const int dim = grid.dim();
  const std::size_t np = grid.num_points();
  for (int s = 0; s < n_samples; ++s) {
    const double t = n_samples == 1 ? 0.0 : t_max * s / (n_samples - 1);
    const auto u = sample_flow(spec, t, grid);
    std::vector<SpectralField> uh;
    for (int c = 0; c < dim; ++c) uh.push_back(to_spectral(u.components[static_cast<std::size_t>(c)], grid));

    // first derivatives d_j u_c and second derivatives d_j d_l u_c (j <= l)
    std::vector<std::vector<std::vector<double>>> d1(
        static_cast<std::size_t>(dim), std::vector<std::vector<double>>(static_cast<std::size_t>(dim)));
    for (int j = 0; j < dim; ++j)
      for (int c = 0; c < dim; ++c)
        d1[j][c] = to_physical(partial_derivative(uh[c], j));

    // beta = 0
    double c2 = u.max_speed();
    // |beta| = 1
    for (int j = 0; j < dim; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < np; ++i) {
        double s2 = 0.0;
        for (int c = 0; c < dim; ++c) s2 += d1[j][c][i] * d1[j][c][i];
        m = std::max(m, s2);
      }
      c2 += std::sqrt(m);
    }
    // |beta| = 2
    for (int j = 0; j < dim; ++j)
      for (int l = j; l < dim; ++l) {
        std::vector<std::vector<double>> comp;
        for (int c = 0; c < dim; ++c)
          comp.push_back(to_physical(partial_derivative(partial_derivative(uh[c], j), l)));
        double m = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
          double s2 = 0.0;
          for (int c = 0; c < dim; ++c) s2 += comp[c][i] * comp[c][i];
          m = std::max(m, s2);
        }
        c2 += std::sqrt(m);
      }

    double grad = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
      for (int c = 0; c < dim; ++c)
        for (int j = 0; j < dim; ++j) jac(c, j) = d1[j][c][i];
      const Eigen::Matrix3d jtj = jac.transpose() * jac;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(jtj, Eigen::EigenvaluesOnly);
      grad = std::max(grad, std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff())));
    }
    out.grad_sup = std::max(out.grad_sup, grad);
    out.c2 = std::max(out.c2, c2);
  }
  return out;
}

bool shear_closed_form_norms(const FlowSpec& spec, FlowNorms& out) {
  double scale = 1.0;
  const FlowSpec* cur = &spec;
  while (const auto* r = std::get_if<RescaledFlow>(&cur->variant())) {
    scale *= r->factor;
    cur = r->inner.get();
  }
  double a = 0.0;
  double k = 1.0;
  if (const auto* s = std::get_if<SteadyShear>(&cur->variant())) {
    a = s->amplitude;
    k = s->wavenumber;
  } else if (const auto* alt = std::get_if<AlternatingShear>(&cur->variant())) {
    a = alt->amplitude;
  } else {
    return false;
  }
  a *= scale;
  const double w = kTwoPi * k;
  out.grad_sup = w * a;
  out.c2 = a + w * a + w * w * a;
  return true;
}

}  // namespace chmix
