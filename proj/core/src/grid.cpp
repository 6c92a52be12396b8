#include "pfc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pfc/error.hpp"

namespace pfc {

Grid2D::Grid2D(int M, double L) : m_(M), l_(L), h_(L / M) {
  if (M < 4 || M % 2 != 0) {
    throw ArgumentError("grid size M must be even and >= 4, got " +
                        std::to_string(M));
  }
  if (!(L > 0.0) || !std::isfinite(L)) {
    throw ArgumentError("domain length L must be positive and finite");
  }
}

Field::Field(const Grid2D& grid, double value)
    : grid_(grid), values_(grid.size(), value) {}

Field::Field(const Grid2D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw DimensionError("field holds " + std::to_string(values_.size()) +
                         " values, grid needs " + std::to_string(grid_.size()));
  }
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) {
    throw DimensionError("fields live on different grids (M=" +
                         std::to_string(a.grid().M()) + " vs M=" +
                         std::to_string(b.grid().M()) + ")");
  }
}

SpectralCoeffs::SpectralCoeffs(const Grid2D& grid)
    : grid_(grid),
      coeffs_(static_cast<std::size_t>(grid.M()) * (grid.M() / 2 + 1)) {}

SpectralCoeffs::value_type SpectralCoeffs::at(int l, int m) const {
  const int M = grid_.M();
  const int lx = ((l % M) + M) % M;
  const int my = ((m % M) + M) % M;
  if (lx <= M / 2) return raw(lx, my);
  return std::conj(raw(M - lx, (M - my) % M));
}

double compensated_sum(std::span<const double> v) {
  double s = 0.0, c = 0.0;
  for (double x : v) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

}  // namespace pfc
