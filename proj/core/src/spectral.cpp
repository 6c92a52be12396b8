#include "pfc/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <string>

#include "pfc/error.hpp"

namespace pfc {
namespace {

// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwDeleter {
  void operator()(T* p) const { fftw_free(p); }
};

}  // namespace

struct SpectralEngine::Impl {
  Grid2D grid;
  std::size_t n_real;
  std::size_t n_spec;
  std::unique_ptr<double, FftwDeleter<double>> rbuf;
  std::unique_ptr<fftw_complex, FftwDeleter<fftw_complex>> cbuf;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::vector<double> k2, kx, ky;

  explicit Impl(const Grid2D& g)
      : grid(g),
        n_real(g.size()),
        n_spec(static_cast<std::size_t>(g.M()) * (g.M() / 2 + 1)),
        rbuf(static_cast<double*>(fftw_malloc(sizeof(double) * n_real))),
        cbuf(static_cast<fftw_complex*>(
            fftw_malloc(sizeof(fftw_complex) * n_spec))) {
    const int M = g.M();
    {
      std::lock_guard lock(planner_mutex());
      fwd = fftw_plan_dft_r2c_2d(M, M, rbuf.get(), cbuf.get(), FFTW_ESTIMATE);
      bwd = fftw_plan_dft_c2r_2d(M, M, cbuf.get(), rbuf.get(), FFTW_ESTIMATE);
    }
    const int cols = M / 2 + 1;
    const double nu = g.nu();
    k2.resize(n_spec);
    kx.resize(n_spec);
    ky.resize(n_spec);
    for (int iy = 0; iy < M; ++iy) {
      const int m = iy < M / 2 ? iy : iy - M;
      for (int ix = 0; ix < cols; ++ix) {
        const int l = ix;  // ix == M/2 is the Nyquist column
        const std::size_t k = static_cast<std::size_t>(iy) * cols + ix;
        k2[k] = nu * nu * (static_cast<double>(l) * l + static_cast<double>(m) * m);
        kx[k] = ix == M / 2 ? 0.0 : nu * l;
        ky[k] = iy == M / 2 ? 0.0 : nu * m;
      }
    }
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

SpectralEngine::SpectralEngine(const Grid2D& grid)
    : impl_(std::make_unique<Impl>(grid)) {}
SpectralEngine::~SpectralEngine() = default;
SpectralEngine::SpectralEngine(SpectralEngine&&) noexcept = default;
SpectralEngine& SpectralEngine::operator=(SpectralEngine&&) noexcept = default;

const Grid2D& SpectralEngine::grid() const { return impl_->grid; }
std::size_t SpectralEngine::spectral_size() const { return impl_->n_spec; }

void SpectralEngine::forward(std::span<const double> in,
                             std::span<std::complex<double>> out) {
  if (in.size() != impl_->n_real || out.size() != impl_->n_spec) {
    throw DimensionError("forward transform: buffer size mismatch");
  }
  std::copy(in.begin(), in.end(), impl_->rbuf.get());
  fftw_execute(impl_->fwd);
  const auto* src = reinterpret_cast<const std::complex<double>*>(impl_->cbuf.get());
  std::copy(src, src + impl_->n_spec, out.begin());
}

void SpectralEngine::backward(std::span<const std::complex<double>> in,
                              std::span<double> out) {
  if (in.size() != impl_->n_spec || out.size() != impl_->n_real) {
    throw DimensionError("backward transform: buffer size mismatch");
  }
  auto* dst = reinterpret_cast<std::complex<double>*>(impl_->cbuf.get());
  std::copy(in.begin(), in.end(), dst);
  fftw_execute(impl_->bwd);  // c2r overwrites cbuf
  const double scale = 1.0 / static_cast<double>(impl_->n_real);
  const double* r = impl_->rbuf.get();
  for (std::size_t k = 0; k < impl_->n_real; ++k) out[k] = r[k] * scale;
}

SpectralCoeffs SpectralEngine::forward(const Field& f) {
  if (!(f.grid() == impl_->grid)) throw DimensionError("field/engine grid mismatch");
  SpectralCoeffs c(impl_->grid);
  forward(f.values(), c.data());
  return c;
}

Field SpectralEngine::backward(const SpectralCoeffs& c) {
  if (!(c.grid() == impl_->grid)) throw DimensionError("coeffs/engine grid mismatch");
  Field f(impl_->grid);
  backward(c.data(), f.values());
  return f;
}

std::span<const double> SpectralEngine::k2() const { return impl_->k2; }
std::span<const double> SpectralEngine::kx() const { return impl_->kx; }
std::span<const double> SpectralEngine::ky() const { return impl_->ky; }

SpectralEngine& SpectralEngine::for_grid(const Grid2D& grid) {
  thread_local std::map<std::pair<int, double>, SpectralEngine> cache;
  auto key = std::make_pair(grid.M(), grid.L());
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, SpectralEngine(grid)).first;
  return it->second;
}

double inner(const Field& f, const Field& g) {
  require_same_grid(f, g);
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k];
  return f.grid().weight() * s;
}

Norms norms(const Field& f) {
  double s2 = 0.0, s4 = 0.0, mx = 0.0;
  for (double v : f.values()) {
    const double v2 = v * v;
    s2 += v2;
    s4 += v2 * v2;
    mx = std::max(mx, std::abs(v));
  }
  const double w = f.grid().weight();
  return {std::sqrt(w * s2), std::pow(w * s4, 0.25), mx};
}

double mean(const Field& f) {
  return compensated_sum(f.values()) / static_cast<double>(f.size());
}

Field laplacian(const Field& f) {
  SpectralEngine& engine = SpectralEngine::for_grid(f.grid());
  SpectralCoeffs c = engine.forward(f);
  auto k2 = engine.k2();
  auto data = c.data();
  for (std::size_t k = 0; k < data.size(); ++k) data[k] *= -k2[k];
  data[0] = 0.0;
  return engine.backward(c);
}

std::pair<Field, Field> gradient(const Field& f) {
  SpectralEngine& engine = SpectralEngine::for_grid(f.grid());
  const SpectralCoeffs c = engine.forward(f);
  SpectralCoeffs cx(f.grid()), cy(f.grid());
  auto kx = engine.kx();
  auto ky = engine.ky();
  const std::complex<double> I(0.0, 1.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    cx.data()[k] = I * kx[k] * c.data()[k];
    cy.data()[k] = I * ky[k] * c.data()[k];
  }
  return {engine.backward(cx), engine.backward(cy)};
}

void require_mean_zero(const Field& f, double scale) {
  const double m = mean(f);
  if (scale <= 0.0) scale = norms(f).linf;
  if (std::abs(m) > kMeanZeroTolerance * scale) {
    std::ostringstream os;
    os << std::setprecision(6) << "field is not mean-zero: measured mean " << m
       << " exceeds " << kMeanZeroTolerance << " * " << scale;
    throw PreconditionError(os.str());
  }
}

Field inv_laplacian(const Field& f, int gamma) {
  if (gamma < 1) throw DomainError("inv_laplacian: gamma must be a positive integer");
  require_mean_zero(f);
  SpectralEngine& engine = SpectralEngine::for_grid(f.grid());
  SpectralCoeffs c = engine.forward(f);
  auto k2 = engine.k2();
  auto data = c.data();
  data[0] = 0.0;
  for (std::size_t k = 1; k < data.size(); ++k) data[k] /= std::pow(k2[k], gamma);
  return engine.backward(c);
}

double hminus1_norm(const Field& f) {
  const Field g = inv_laplacian(f, 1);
  return std::sqrt(std::max(0.0, inner(g, f)));
}

double grad_norm(const Field& f) {
  return std::sqrt(std::max(0.0, -inner(laplacian(f), f)));
}

void write_snapshot(const std::filesystem::path& path, const Field& f, double t) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open snapshot file for writing: " + path.string());
  out << std::setprecision(17);
  const int M = f.grid().M();
  out << M << ' ' << f.grid().L() << ' ' << t << '\n';
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) {
      if (i) out << ',';
      out << f(i, j);
    }
    out << '\n';
  }
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open snapshot file: " + path.string());
  int M = 0;
  double L = 0.0, t = 0.0;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty snapshot file");
  {
    std::istringstream head(line);
    if (!(head >> M >> L >> t)) throw ConfigError("malformed snapshot header: " + line);
  }
  Grid2D grid(M, L);
  Field f(grid);
  for (int j = 0; j < M; ++j) {
    if (!std::getline(in, line)) throw ConfigError("snapshot truncated at row " + std::to_string(j));
    std::istringstream row(line);
    std::string cell;
    for (int i = 0; i < M; ++i) {
      if (!std::getline(row, cell, ',')) {
        throw ConfigError("snapshot row " + std::to_string(j) + " has too few values");
      }
      f(i, j) = std::stod(cell);
    }
  }
  return {std::move(f), t};
}

}  // namespace pfc
