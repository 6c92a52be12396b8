#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace pfc {

/// Uniform periodic M x M grid on the square (0, L)^2.
///
/// Grid points sit at (i h, j h) for 0 <= i, j < M. Fourier wavenumbers run
/// over {-M/2, ..., M/2-1} in each direction with base frequency nu = 2 pi / L.
class Grid2D {
 public:
  /// Throws ArgumentError unless M is even, M >= 4 and L > 0.
  Grid2D(int M, double L);

  int M() const { return m_; }
  double L() const { return l_; }
  double h() const { return h_; }
  double nu() const { return 2.0 * std::numbers::pi / l_; }
  std::size_t size() const { return static_cast<std::size_t>(m_) * m_; }
  /// |Omega_h| = L^2, the measure used by the discrete inner product.
  double area() const { return l_ * l_; }
  /// Cell weight h^2 of the discrete inner product.
  double weight() const { return h_ * h_; }

  double x(int i) const { return i * h_; }
  double y(int j) const { return j * h_; }

  friend bool operator==(const Grid2D& a, const Grid2D& b) {
    return a.m_ == b.m_ && a.l_ == b.l_;
  }

 private:
  int m_;
  double l_;
  double h_;
};

/// Real periodic grid function, stored row-major: value(i, j) is the sample at
/// x = i h, y = j h and lives at index j * M + i (row j is the y index).
class Field {
 public:
  explicit Field(const Grid2D& grid, double value = 0.0);
  /// Throws DimensionError if values.size() != M^2.
  Field(const Grid2D& grid, std::vector<double> values);

  template <class F>
  static Field sample(const Grid2D& grid, F&& f) {
    Field out(grid);
    for (int j = 0; j < grid.M(); ++j) {
      for (int i = 0; i < grid.M(); ++i) out(i, j) = f(grid.x(i), grid.y(j));
    }
    return out;
  }

  const Grid2D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int i, int j) { return values_[index(i, j)]; }
  double operator()(int i, int j) const { return values_[index(i, j)]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

  friend bool operator==(const Field& a, const Field& b) {
    return a.grid_ == b.grid_ && a.values_ == b.values_;
  }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * grid_.M() + i;
  }

  Grid2D grid_;
  std::vector<double> values_;
};

/// Neumaier-compensated sum; mass bookkeeping at the 1e-10 level needs it on
/// large grids.
double compensated_sum(std::span<const double> v);

/// Throws DimensionError when the two fields do not share a grid.
void require_same_grid(const Field& a, const Field& b);

/// Half-spectrum of a real field (FFTW r2c layout): row iy in [0, M), column
/// ix in [0, M/2]. The remaining coefficients follow from conjugate symmetry
/// and are reachable through at().
class SpectralCoeffs {
 public:
  using value_type = std::complex<double>;

  explicit SpectralCoeffs(const Grid2D& grid);

  const Grid2D& grid() const { return grid_; }
  int columns() const { return grid_.M() / 2 + 1; }
  std::size_t size() const { return coeffs_.size(); }

  /// Coefficient of the mode exp(i nu (l x + m y)) for any integer pair
  /// (l, m), taken modulo M.
  value_type at(int l, int m) const;

  value_type& raw(int ix, int iy) { return coeffs_[index(ix, iy)]; }
  value_type raw(int ix, int iy) const { return coeffs_[index(ix, iy)]; }
  std::span<value_type> data() { return coeffs_; }
  std::span<const value_type> data() const { return coeffs_; }

 private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * columns() + ix;
  }

  Grid2D grid_;
  std::vector<value_type> coeffs_;
};

}  // namespace pfc
