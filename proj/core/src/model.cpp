#include "pfc/model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "pfc/error.hpp"
#include "pfc/spectral.hpp"

namespace pfc {

PfcParams::PfcParams(double epsilon, const Grid2D& grid) : epsilon_(epsilon), grid_(grid) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("epsilon must lie in (0, 1), got " + std::to_string(epsilon));
  }
}

namespace {

// (1 - k^2)^2, the symbol of (1 + Delta_h)^2.
double swift_hohenberg_symbol(double k2) { return (1.0 - k2) * (1.0 - k2); }

}  // namespace

Field chemical_potential(const Field& phi, const PfcParams& p) {
  Field mu = apply_symbol(phi, swift_hohenberg_symbol);
  const double eps = p.epsilon();
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double v = phi[k];
    mu[k] += v * v * v - eps * v;
  }
  return mu;
}

double energy(const Field& phi, const PfcParams& p) {
  const Field lin = apply_symbol(phi, [](double k2) { return 1.0 - k2; });
  const double eps = p.epsilon();
  double quad = 0.0, quartic = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    quad += lin[k] * lin[k];
    const double d = phi[k] * phi[k] - eps;
    // (phi^2 - eps)^2 - eps^2 = phi^2 (phi^2 - 2 eps), summed without the
    // cancellation of two O(eps^2 |Omega|) terms.
    quartic += phi[k] * phi[k] * (d - eps);
  }
  const double w = phi.grid().weight();
  return 0.5 * w * quad + 0.25 * w * quartic;
}

double modified_energy(const Field& phi_k, const Field& phi_km1, double tau_k,
                       double r_kp1, const PfcParams& p) {
  if (!(tau_k > 0.0)) throw ArgumentError("modified_energy needs tau_k > 0");
  if (!(r_kp1 >= 0.0)) throw ArgumentError("modified_energy needs r_{k+1} >= 0");
  const double E = energy(phi_k, p);
  if (r_kp1 == 0.0) return E;
  const Field diff = phi_k - phi_km1;
  require_mean_zero(diff, std::max(norms(phi_k).linf, norms(phi_km1).linf));
  // The roundoff-level mean is projected out before the H^{-1} norm.
  Field centered = diff;
  const double m = mean(diff);
  for (double& v : centered.values()) v -= m;
  if (norms(centered).linf == 0.0) return E;
  const double h1 = hminus1_norm(centered);
  return E + r_kp1 / (2.0 * (1.0 + r_kp1) * tau_k) * h1 * h1;
}

double mass(const Field& phi) {
  return phi.grid().weight() * compensated_sum(phi.values());
}

LinfMonitor linf_monitor(const Field& phi, double initial_energy, const PfcParams& p) {
  const double e = p.epsilon();
  const double arg = 8.0 * initial_energy + 2.0 * (2.0 + e) * (2.0 + e) * phi.grid().area();
  return {norms(phi).linf, std::sqrt(std::max(0.0, arg))};
}

Field manufactured_solution(double t, const Grid2D& grid) {
  const double c = std::cos(t);
  constexpr double half_pi = std::numbers::pi / 2.0;
  return Field::sample(grid, [&](double x, double y) {
    return c * std::sin(half_pi * x) * std::sin(half_pi * y);
  });
}

Field manufactured_forcing(double t, const PfcParams& p) {
  const Grid2D& grid = p.grid();
  const Field phi = manufactured_solution(t, grid);
  // d/dt [cos(t) S] = -sin(t) S with S the spatial profile.
  Field dphi_dt = manufactured_solution(0.0, grid);
  dphi_dt *= -std::sin(t);
  return dphi_dt - laplacian(chemical_potential(phi, p));
}

void write_energy_csv(const std::filesystem::path& path,
                      std::span<const EnergyRecord> records) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write energy CSV: " + path.string());
  out << "t,tau,E,E_mod,mass,linf,iters\n" << std::setprecision(17);
  for (const auto& r : records) {
    out << r.t << ',' << r.tau << ',' << r.energy << ',' << r.modified_energy << ','
        << r.mass << ',' << r.linf << ',' << r.iterations << '\n';
  }
}

}  // namespace pfc
