#pragma once

#include <complex>
#include <filesystem>
#include <memory>
#include <span>
#include <utility>

#include "pfc/grid.hpp"

namespace pfc {

/// FFT-backed transform engine for one grid.
///
/// Forward transforms are unnormalized; the backward transform carries the
/// 1/M^2 factor. An engine owns its plans and work buffers, so a single
/// instance must not be used from two threads at once. for_grid() hands out a
/// per-thread instance.
class SpectralEngine {
 public:
  explicit SpectralEngine(const Grid2D& grid);
  ~SpectralEngine();
  SpectralEngine(SpectralEngine&&) noexcept;
  SpectralEngine& operator=(SpectralEngine&&) noexcept;
  SpectralEngine(const SpectralEngine&) = delete;
  SpectralEngine& operator=(const SpectralEngine&) = delete;

  const Grid2D& grid() const;
  std::size_t spectral_size() const;

  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  void backward(std::span<const std::complex<double>> in, std::span<double> out);

  SpectralCoeffs forward(const Field& f);
  Field backward(const SpectralCoeffs& c);

  /// nu^2 (l^2 + m^2) for every half-spectrum entry.
  std::span<const double> k2() const;
  /// First-derivative multipliers nu l and nu m (the factor i is implied).
  /// Both vanish on the Nyquist row/column.
  std::span<const double> kx() const;
  std::span<const double> ky() const;

  /// Engine cached per thread and per grid.
  static SpectralEngine& for_grid(const Grid2D& grid);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Applies a real multiplier symbol(k2) coefficient-wise; the zero mode is
/// passed through symbol(0.0) like any other mode.
template <class Symbol>
Field apply_symbol(const Field& f, Symbol&& symbol) {
  SpectralEngine& engine = SpectralEngine::for_grid(f.grid());
  SpectralCoeffs c = engine.forward(f);
  auto k2 = engine.k2();
  auto data = c.data();
  for (std::size_t k = 0; k < data.size(); ++k) data[k] *= symbol(k2[k]);
  return engine.backward(c);
}

/// h^2 sum f g.
double inner(const Field& f, const Field& g);

struct Norms {
  double l2 = 0.0;
  double l4 = 0.0;
  double linf = 0.0;
};

Norms norms(const Field& f);
double mean(const Field& f);

Field laplacian(const Field& f);
std::pair<Field, Field> gradient(const Field& f);

/// (-Delta_h)^{-gamma} f on the mean-zero space. Throws PreconditionError when
/// |mean(f)| exceeds 1e-12 ||f||_inf.
Field inv_laplacian(const Field& f, int gamma = 1);
/// sqrt(<(-Delta_h)^{-1} f, f>); same precondition as inv_laplacian.
double hminus1_norm(const Field& f);

/// Mean-zero tolerance used by the inverse-Laplacian preconditions.
inline constexpr double kMeanZeroTolerance = 1e-12;

/// Throws PreconditionError naming the measured mean unless
/// |mean(f)| <= kMeanZeroTolerance * scale. A non-positive scale means
/// ||f||_inf.
void require_mean_zero(const Field& f, double scale = 0.0);

/// sqrt(<-Delta_h f, f>). Equals ||grad_h f|| for fields without Nyquist
/// content; the Nyquist mode contributes here but not to gradient().
double grad_norm(const Field& f);

/// Snapshot file: "M L t" on the first line, then M rows of M comma
/// separated values (row j = y index j), 17 significant digits.
void write_snapshot(const std::filesystem::path& path, const Field& f, double t);

struct Snapshot {
  Field field;
  double t;
};

/// Throws ConfigError on malformed files.
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace pfc
