#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "pfc/grid.hpp"

namespace pfc {

/// Temperature parameter epsilon in (0, 1) and the spatial grid.
class PfcParams {
 public:
  /// Throws DomainError unless 0 < epsilon < 1.
  PfcParams(double epsilon, const Grid2D& grid);

  double epsilon() const { return epsilon_; }
  const Grid2D& grid() const { return grid_; }

 private:
  double epsilon_;
  Grid2D grid_;
};

struct EnergyRecord {
  double t = 0.0;
  double tau = 0.0;
  double energy = 0.0;
  double modified_energy = 0.0;
  double mass = 0.0;
  double linf = 0.0;
  int iterations = 0;
};

/// mu = (1 + Delta_h)^2 phi + phi^3 - epsilon phi.
Field chemical_potential(const Field& phi, const PfcParams& p);

/// E = 1/2 ||(1 + Delta_h) phi||^2 + 1/4 ||phi^2 - eps||^2 - 1/4 eps^2 |Omega|.
double energy(const Field& phi, const PfcParams& p);

/// E[phi_k] + r_{k+1} / (2 (1 + r_{k+1}) tau_k) ||phi_k - phi_{k-1}||_{-1}^2.
/// The difference must be mean-zero at the roundoff scale of the two states;
/// otherwise PreconditionError.
double modified_energy(const Field& phi_k, const Field& phi_km1, double tau_k,
                       double r_kp1, const PfcParams& p);

double mass(const Field& phi);

struct LinfMonitor {
  double linf;
  /// sqrt(8 E0 + 2 (2 + eps)^2 |Omega|), the a-priori bound with the
  /// embedding constant taken as 1. Reported, never enforced.
  double bound_proxy;
};

LinfMonitor linf_monitor(const Field& phi, double initial_energy, const PfcParams& p);

/// Exact solution cos(t) sin(pi x / 2) sin(pi y / 2) of the forced problem
/// on (0, 8)^2, sampled on the grid.
Field manufactured_solution(double t, const Grid2D& grid);

/// g(t) = d/dt Phi(t) - Delta_h mu(Phi(t)) built from the discrete operators,
/// so the sampled exact solution solves the semi-discrete forced equation.
Field manufactured_forcing(double t, const PfcParams& p);

/// CSV with header t,tau,E,E_mod,mass,linf,iters and 17 significant digits.
void write_energy_csv(const std::filesystem::path& path,
                      std::span<const EnergyRecord> records);

}  // namespace pfc
