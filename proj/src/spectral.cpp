#include "chmix/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "chmix/errors.hpp"
#include "chmix/rng.hpp"

namespace chmix {

namespace detail {

struct ModeTable {
  std::vector<Wavevector> k;
  std::vector<double> k2;
  std::vector<double> weight;
  std::vector<std::uint8_t> nyquist;
  std::vector<std::size_t> padded;
};

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Real <-> half-complex transform pair with its own aligned buffers.
class FftPair {
 public:
  FftPair(int dim, int n) {
    int dims[3] = {n, n, n};
    std::size_t points = 1;
    for (int i = 0; i < dim; ++i) points *= static_cast<std::size_t>(n);
    modes_ = points / static_cast<std::size_t>(n) * static_cast<std::size_t>(n / 2 + 1);
    points_ = points;
    std::lock_guard lock(planner_mutex());
    real_ = fftw_alloc_real(points_);
    spec_ = fftw_alloc_complex(modes_);
    forward_ = fftw_plan_dft_r2c(dim, dims, real_, spec_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r(dim, dims, spec_, real_, FFTW_ESTIMATE);
  }
  ~FftPair() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;

  double* real() { return real_; }
  Complex* spec() { return reinterpret_cast<Complex*>(spec_); }
  std::size_t points() const { return points_; }
  std::size_t modes() const { return modes_; }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

 private:
  std::size_t points_ = 0;
  std::size_t modes_ = 0;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

FftPair& fft_for(int dim, int n) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<FftPair>> cache;
  auto& slot = cache[{dim, n}];
  if (!slot) slot = std::make_unique<FftPair>(dim, n);
  return *slot;
}

int wrap_index(int k, int n) { return k >= 0 ? k : k + n; }

std::shared_ptr<const ModeTable> build_table(int dim, int n) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const ModeTable>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({dim, n});
  if (it != cache.end()) return it->second;

  auto table = std::make_shared<ModeTable>();
  const int h = n / 2 + 1;
  const int ny = n;
  const int nz = dim == 3 ? n : 1;
  const std::size_t count = static_cast<std::size_t>(h) * ny * nz;
  table->k.reserve(count);
  table->k2.reserve(count);
  table->weight.reserve(count);
  table->nyquist.reserve(count);
  table->padded.reserve(count);
  const int n2 = 2 * n;
  const int h2 = n + 1;
  for (int iz = 0; iz < nz; ++iz) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int kx = 0; kx < h; ++kx) {
        const int ky = iy < n / 2 ? iy : iy - n;
        const int kz = dim == 3 ? (iz < n / 2 ? iz : iz - n) : 0;
        table->k.push_back({kx, ky, kz});
        table->k2.push_back(static_cast<double>(kx * kx + ky * ky + kz * kz));
        table->weight.push_back((kx == 0 || kx == n / 2) ? 1.0 : 2.0);
        const bool nyq = kx == n / 2 || ky == -n / 2 || (dim == 3 && kz == -n / 2);
        table->nyquist.push_back(nyq ? 1 : 0);
        const std::size_t pz = dim == 3 ? static_cast<std::size_t>(wrap_index(kz, n2)) : 0;
        const std::size_t py = static_cast<std::size_t>(wrap_index(ky, n2));
        table->padded.push_back(static_cast<std::size_t>(kx) + h2 * (py + n2 * pz));
      }
    }
  }
  cache[{dim, n}] = table;
  return table;
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
  if (!(a == b)) throw ConfigError(std::string(what) + ": fields live on different grids");
}

}  // namespace
}  // namespace detail

TorusGrid::TorusGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim != 2 && dim != 3)
    throw ConfigError("grid dimension must be 2 or 3, got " + std::to_string(dim));
  if (n < 8 || (n & (n - 1)) != 0)
    throw ConfigError("grid size must be a power of two >= 8, got " + std::to_string(n));
  num_points_ = 1;
  for (int i = 0; i < dim; ++i) num_points_ *= static_cast<std::size_t>(n);
  num_modes_ = num_points_ / static_cast<std::size_t>(n) * static_cast<std::size_t>(n / 2 + 1);
  table_ = detail::build_table(dim, n);
}

const Wavevector& TorusGrid::wavevector(std::size_t mode) const { return table_->k[mode]; }
double TorusGrid::k_squared(std::size_t mode) const { return table_->k2[mode]; }
double TorusGrid::mode_weight(std::size_t mode) const { return table_->weight[mode]; }
bool TorusGrid::is_nyquist(std::size_t mode) const { return table_->nyquist[mode] != 0; }
std::size_t TorusGrid::padded_index(std::size_t mode) const { return table_->padded[mode]; }

std::size_t TorusGrid::mode_index(const Wavevector& k) const {
  const int h = n_ / 2 + 1;
  const std::size_t iy = static_cast<std::size_t>(detail::wrap_index(k[1], n_) % n_);
  const std::size_t iz =
      dim_ == 3 ? static_cast<std::size_t>(detail::wrap_index(k[2], n_) % n_) : 0;
  return static_cast<std::size_t>(k[0]) + h * (iy + static_cast<std::size_t>(n_) * iz);
}

std::array<double, 3> TorusGrid::point(std::size_t index) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  const double h = spacing();
  std::array<double, 3> p{0.0, 0.0, 0.0};
  p[0] = static_cast<double>(index % n) * h;
  p[1] = static_cast<double>((index / n) % n) * h;
  if (dim_ == 3) p[2] = static_cast<double>(index / (n * n)) * h;
  return p;
}

SpectralField::SpectralField(TorusGrid grid)
    : grid_(std::move(grid)), coeffs_(grid_.num_modes(), Complex(0.0, 0.0)) {}

SpectralField::SpectralField(TorusGrid grid, std::vector<Complex> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_.num_modes())
    throw ConfigError("coefficient array size " + std::to_string(coeffs_.size()) +
                      " does not match grid (" + std::to_string(grid_.num_modes()) + ")");
}

Complex SpectralField::coefficient(const Wavevector& k) const {
  const int half = grid_.n() / 2;
  for (int i = 0; i < grid_.dim(); ++i)
    if (std::abs(k[i]) > half) throw ConfigError("wavevector outside the represented band");
  if (k[0] >= 0) return coeffs_[grid_.mode_index(k)];
  return std::conj(coeffs_[grid_.mode_index({-k[0], -k[1], -k[2]})]);
}

void SpectralField::set_coefficient(const Wavevector& k, Complex value) {
  const int half = grid_.n() / 2;
  for (int i = 0; i < grid_.dim(); ++i)
    if (std::abs(k[i]) > half) throw ConfigError("wavevector outside the represented band");
  const Wavevector neg{-k[0], -k[1], -k[2]};
  const Wavevector& stored = k[0] >= 0 ? k : neg;
  const Complex v = k[0] >= 0 ? value : std::conj(value);
  const std::size_t idx = grid_.mode_index(stored);
  coeffs_[idx] = v;
  if (stored[0] == 0 || stored[0] == half) {
    const std::size_t mirror = grid_.mode_index({stored[0], -stored[1], -stored[2]});
    if (mirror == idx)
      coeffs_[idx] = Complex(v.real(), 0.0);
    else
      coeffs_[mirror] = std::conj(v);
  }
}

bool SpectralField::all_finite() const noexcept {
  for (const auto& c : coeffs_)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  detail::require_same_grid(grid_, other.grid_, "addition");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  detail::require_same_grid(grid_, other.grid_, "subtraction");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

SpectralField& SpectralField::axpy(double a, const SpectralField& x) {
  detail::require_same_grid(grid_, x.grid_, "axpy");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += a * x.coeffs_[i];
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

double inner_product(const SpectralField& a, const SpectralField& b) {
  detail::require_same_grid(a.grid(), b.grid(), "inner product");
  const auto& g = a.grid();
  const auto ca = a.coeffs();
  const auto cb = b.coeffs();
  double sum = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    sum += g.mode_weight(i) * (ca[i].real() * cb[i].real() + ca[i].imag() * cb[i].imag());
  }
  return sum;
}

SpectralField to_spectral(std::span<const double> values, const TorusGrid& grid) {
  if (values.size() != grid.num_points())
    throw ConfigError("physical array has " + std::to_string(values.size()) +
                      " values, grid expects " + std::to_string(grid.num_points()));
  auto& fft = detail::fft_for(grid.dim(), grid.n());
  std::copy(values.begin(), values.end(), fft.real());
  fft.forward();
  const double scale = 1.0 / static_cast<double>(grid.num_points());
  std::vector<Complex> coeffs(grid.num_modes());
  const Complex* spec = fft.spec();
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = spec[i] * scale;
  return SpectralField(grid, std::move(coeffs));
}

std::vector<double> to_physical(const SpectralField& f) {
  const auto& grid = f.grid();
  auto& fft = detail::fft_for(grid.dim(), grid.n());
  std::copy(f.coeffs().begin(), f.coeffs().end(), fft.spec());
  fft.backward();
  return std::vector<double>(fft.real(), fft.real() + grid.num_points());
}

std::vector<double> to_padded_physical(const SpectralField& f) {
  const auto& grid = f.grid();
  auto& fft = detail::fft_for(grid.dim(), 2 * grid.n());
  Complex* spec = fft.spec();
  std::fill(spec, spec + fft.modes(), Complex(0.0, 0.0));
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!grid.is_nyquist(i)) spec[grid.padded_index(i)] = c[i];
  }
  fft.backward();
  return std::vector<double>(fft.real(), fft.real() + fft.points());
}

SpectralField from_padded_physical(std::span<const double> values, const TorusGrid& grid) {
  auto& fft = detail::fft_for(grid.dim(), 2 * grid.n());
  if (values.size() != fft.points())
    throw ConfigError("padded array size does not match 2n grid");
  std::copy(values.begin(), values.end(), fft.real());
  fft.forward();
  const double scale = 1.0 / static_cast<double>(fft.points());
  const Complex* spec = fft.spec();
  std::vector<Complex> coeffs(grid.num_modes(), Complex(0.0, 0.0));
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (!grid.is_nyquist(i)) coeffs[i] = spec[grid.padded_index(i)] * scale;
  }
  return SpectralField(grid, std::move(coeffs));
}

SpectralField apply_symbol(const SpectralField& f, const Symbol& symbol) {
  SpectralField out(f.grid());
  const auto& g = f.grid();
  auto dst = out.coeffs();
  const auto src = f.coeffs();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Complex s = symbol(g.wavevector(i));
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
      throw NumericError("symbol is not finite at a represented wavevector");
    dst[i] = s * src[i];
  }
  return out;
}

SpectralField apply_multiplier(const SpectralField& f, std::span<const double> multiplier) {
  SpectralField out = f;
  apply_multiplier_inplace(out, multiplier);
  return out;
}

void apply_multiplier_inplace(SpectralField& f, std::span<const double> multiplier) {
  auto c = f.coeffs();
  if (multiplier.size() != c.size()) throw ConfigError("multiplier size does not match grid");
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= multiplier[i];
}

std::vector<double> multiplier_table(const TorusGrid& grid,
                                     const std::function<double(const Wavevector&)>& symbol) {
  std::vector<double> m(grid.num_modes());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = symbol(grid.wavevector(i));
    if (!std::isfinite(m[i])) throw NumericError("multiplier is not finite");
  }
  return m;
}

double laplacian_symbol(const Wavevector& k) {
  const double two_pi = 2.0 * std::numbers::pi;
  return -two_pi * two_pi * static_cast<double>(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
}

SpectralField partial_derivative(const SpectralField& f, int axis) {
  const auto& g = f.grid();
  if (axis < 0 || axis >= g.dim()) throw ConfigError("derivative axis out of range");
  const int half = g.n() / 2;
  const double two_pi = 2.0 * std::numbers::pi;
  SpectralField out(g);
  auto dst = out.coeffs();
  const auto src = f.coeffs();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const int k = g.wavevector(i)[axis];
    if (std::abs(k) == half) continue;
    dst[i] = Complex(0.0, two_pi * k) * src[i];
  }
  return out;
}

SpectralField laplacian(const SpectralField& f) {
  SpectralField out = f;
  const auto& g = f.grid();
  auto c = out.coeffs();
  const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= -four_pi2 * g.k_squared(i);
  return out;
}

SpectralField dealiased_product(std::span<const SpectralField> fields) {
  if (fields.size() < 2 || fields.size() > 3)
    throw ConfigError("dealiased_product takes 2 or 3 fields");
  const auto& grid = fields[0].grid();
  for (const auto& f : fields) detail::require_same_grid(grid, f.grid(), "dealiased_product");
  std::vector<double> acc = to_padded_physical(fields[0]);
  for (std::size_t j = 1; j < fields.size(); ++j) {
    const std::vector<double> next = to_padded_physical(fields[j]);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= next[i];
  }
  return from_padded_physical(acc, grid);
}

SpectralField dealiased_product(const SpectralField& a, const SpectralField& b) {
  const std::array<SpectralField, 2> f{a, b};
  return dealiased_product(std::span<const SpectralField>(f));
}

SpectralField dealiased_product(const SpectralField& a, const SpectralField& b,
                                const SpectralField& c) {
  const std::array<SpectralField, 3> f{a, b, c};
  return dealiased_product(std::span<const SpectralField>(f));
}

double sobolev_norm(const SpectralField& f, double order, bool mean_free) {
  if (order != -1.0 && order != 0.0 && order != 1.0 && order != 2.0)
    throw ConfigError("unsupported Sobolev order " + std::to_string(order) +
                      " (expected -1, 0, 1 or 2)");
  const auto& g = f.grid();
  const auto c = f.coeffs();
  const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;
  double sum = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double lam = four_pi2 * g.k_squared(i);
    sum += g.mode_weight(i) * std::pow(lam, order) * std::norm(c[i]);
  }
  if (order == 0.0 && !mean_free) sum += std::norm(c[0]);
  return std::sqrt(sum);
}

double max_abs(const SpectralField& f) {
  const auto v = to_physical(f);
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

SpectralField random_noise_field(const TorusGrid& grid, std::uint64_t seed, double amplitude,
                                 double mean) {
  CounterStream rng(seed);
  std::vector<double> values(grid.num_points());
  for (auto& v : values) v = rng.uniform(-amplitude, amplitude);
  SpectralField f = to_spectral(values, grid);
  f.set_mean(mean);
  return f;
}

SpectralField random_band_limited(const TorusGrid& grid, std::uint64_t seed, int band) {
  CounterStream rng(seed);
  SpectralField f(grid);
  const int limit = std::min(band, grid.n() / 2 - 1);
  const int kz_lo = grid.dim() == 3 ? -limit : 0;
  const int kz_hi = grid.dim() == 3 ? limit : 0;
  for (int kz = kz_lo; kz <= kz_hi; ++kz)
    for (int ky = -limit; ky <= limit; ++ky)
      for (int kx = 0; kx <= limit; ++kx) {
        if (kx == 0 && (ky < 0 || (ky == 0 && kz <= 0))) continue;
        f.set_coefficient({kx, ky, kz}, Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
      }
  return f;
}

void drop_nyquist(SpectralField& f) {
  const auto& g = f.grid();
  auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (g.is_nyquist(i)) c[i] = Complex(0.0, 0.0);
}

}  // namespace chmix
