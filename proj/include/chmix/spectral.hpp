#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace chmix {

using Complex = std::complex<double>;

/// Integer wavevector; unused trailing components are zero in 2D.
using Wavevector = std::array<int, 3>;

namespace detail {
struct ModeTable;
}

/// Uniform grid on the unit torus [0,1)^dim.
///
/// Physical arrays are row-major with x fastest: index = ix + n*(iy + n*iz).
/// Spectral arrays hold the half spectrum kx in [0, n/2] produced by a real
/// transform; index = kx + (n/2+1)*(iy + n*iz) with iy, iz the usual wrapped
/// FFT indices (entries >= n/2 are negative wavenumbers).
class TorusGrid {
 public:
  TorusGrid(int dim, int n);

  int dim() const noexcept { return dim_; }
  int n() const noexcept { return n_; }
  double spacing() const noexcept { return 1.0 / n_; }
  int half_n() const noexcept { return n_ / 2 + 1; }
  std::size_t num_points() const noexcept { return num_points_; }
  std::size_t num_modes() const noexcept { return num_modes_; }

  const Wavevector& wavevector(std::size_t mode) const;
  /// Integer |k|^2.
  double k_squared(std::size_t mode) const;
  /// Number of full-spectrum coefficients a stored entry stands for (1 or 2).
  double mode_weight(std::size_t mode) const;
  /// True when any component sits at the Nyquist wavenumber n/2.
  bool is_nyquist(std::size_t mode) const;
  /// Position of the stored entry in the 2n-point padded half spectrum.
  std::size_t padded_index(std::size_t mode) const;

  /// Storage index of k (requires kx >= 0 and |k_i| <= n/2).
  std::size_t mode_index(const Wavevector& k) const;

  std::array<double, 3> point(std::size_t index) const;

  /// Same dimension with factor*n points per axis.
  TorusGrid refined(int factor) const { return TorusGrid(dim_, n_ * factor); }

  bool operator==(const TorusGrid& other) const noexcept {
    return dim_ == other.dim_ && n_ == other.n_;
  }

 private:
  int dim_;
  int n_;
  std::size_t num_points_;
  std::size_t num_modes_;
  std::shared_ptr<const detail::ModeTable> table_;
};

/// Fourier coefficients of a real scalar field: value(x) = sum_k c_k e^{2 pi i k.x}.
/// Only the half spectrum is stored, so Hermitian symmetry is structural
/// except on the kx = 0 and kx = n/2 planes. c_0 is the spatial mean.
class SpectralField {
 public:
  explicit SpectralField(TorusGrid grid);
  SpectralField(TorusGrid grid, std::vector<Complex> coeffs);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::span<Complex> coeffs() noexcept { return coeffs_; }
  std::span<const Complex> coeffs() const noexcept { return coeffs_; }

  /// Coefficient for any k with |k_i| <= n/2 (conjugates for kx < 0).
  Complex coefficient(const Wavevector& k) const;
  /// Sets c_k and c_{-k} = conj(c_k).
  void set_coefficient(const Wavevector& k, Complex value);

  double mean() const noexcept { return coeffs_[0].real(); }
  void set_mean(double m) noexcept { coeffs_[0] = Complex(m, 0.0); }
  bool all_finite() const noexcept;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);
  /// this += a * x
  SpectralField& axpy(double a, const SpectralField& x);

 private:
  TorusGrid grid_;
  std::vector<Complex> coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

/// Real L^2 inner product over the unit torus.
double inner_product(const SpectralField& a, const SpectralField& b);

SpectralField to_spectral(std::span<const double> values, const TorusGrid& grid);
std::vector<double> to_physical(const SpectralField& f);

/// Physical values of f on the 2n grid (Nyquist modes dropped).
std::vector<double> to_padded_physical(const SpectralField& f);
/// Truncates a 2n-grid physical field back to grid; Nyquist modes zeroed.
SpectralField from_padded_physical(std::span<const double> values, const TorusGrid& grid);

using Symbol = std::function<Complex(const Wavevector&)>;

SpectralField apply_symbol(const SpectralField& f, const Symbol& symbol);
/// Fast path for real multipliers precomputed per stored mode.
SpectralField apply_multiplier(const SpectralField& f, std::span<const double> multiplier);
void apply_multiplier_inplace(SpectralField& f, std::span<const double> multiplier);
std::vector<double> multiplier_table(const TorusGrid& grid,
                                     const std::function<double(const Wavevector&)>& symbol);

/// Symbol of Delta on the unit torus: -(2 pi |k|)^2.
double laplacian_symbol(const Wavevector& k);

/// d/dx_axis; the Nyquist component along that axis is zeroed so the result
/// stays a real field.
SpectralField partial_derivative(const SpectralField& f, int axis);
SpectralField laplacian(const SpectralField& f);

/// Alias-free coefficients of a pointwise product of 2 or 3 fields (2x
/// zero-padding, exact through cubics for Nyquist-free inputs).
SpectralField dealiased_product(std::span<const SpectralField> fields);
SpectralField dealiased_product(const SpectralField& a, const SpectralField& b);
SpectralField dealiased_product(const SpectralField& a, const SpectralField& b,
                                const SpectralField& c);

/// Homogeneous Sobolev (semi)norm (sum_{k != 0} (2 pi |k|)^{2 order} |c_k|^2)^{1/2}.
/// Supported orders: -1, 0, 1, 2. For order 0 the mean is included unless
/// mean_free is set.
double sobolev_norm(const SpectralField& f, double order, bool mean_free = false);

/// Max over grid points of |value|.
double max_abs(const SpectralField& f);

/// Physical field sampled from fn(x, y, z).
template <class Fn>
SpectralField from_function(const TorusGrid& grid, Fn&& fn) {
  std::vector<double> values(grid.num_points());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto p = grid.point(i);
    values[i] = fn(p[0], p[1], p[2]);
  }
  return to_spectral(values, grid);
}

/// I.i.d. uniform physical noise in [-amplitude, amplitude] shifted to the
/// requested mean.
SpectralField random_noise_field(const TorusGrid& grid, std::uint64_t seed, double amplitude,
                                 double mean = 0.0);

/// Random mean-zero field supported on |k_i| <= band.
SpectralField random_band_limited(const TorusGrid& grid, std::uint64_t seed, int band);

/// Zeroes Nyquist modes.
void drop_nyquist(SpectralField& f);

}  // namespace chmix
