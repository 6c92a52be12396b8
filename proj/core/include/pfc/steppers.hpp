#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfc/grid.hpp"
#include "pfc/model.hpp"

namespace pfc {

enum class Scheme { Bdf2, CrankNicolson, CrankNicolsonConvexSplitting };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

/// Explicit extrapolation entering the CNCS concave term Delta_h phi_hat.
/// Literal uses phi_hat = 3 phi^{n-1} - phi^{n-2} (equivalently 2 Delta_h of
/// the half-point extrapolation, matching the 2 Delta_h term of
/// (1 + Delta_h)^2); Halved uses (3 phi^{n-1} - phi^{n-2}) / 2.
enum class Extrapolation { Literal, Halved };

struct SolverOptions {
  double tolerance = 1e-12;  ///< max-norm of successive iterate difference
  int max_iterations = 500;
  /// Start BDF2 iterations from the linear extrapolation of the history
  /// instead of phi^{n-1}.
  bool extrapolated_guess = false;
  Extrapolation cncs_extrapolation = Extrapolation::Literal;
};

struct SolveStats {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  /// False when the iterate difference grew after the second iteration.
  bool monotone = true;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveStats stats)
      : std::runtime_error(what), stats_(stats) {}
  const SolveStats& stats() const { return stats_; }

 private:
  SolveStats stats_;
};

/// The implicit linear symbol is not positive for some Fourier mode.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, int l, int m)
      : std::runtime_error(what), l_(l), m_(m) {}
  int l() const { return l_; }
  int m() const { return m_; }

 private:
  int l_, m_;
};

/// Solution history for a one-trajectory stepper.
struct StepperState {
  explicit StepperState(Field phi0, double t0 = 0.0) : phi_prev(std::move(phi0)), t(t0) {}

  Field phi_prev;                  ///< phi^{n-1}
  std::optional<Field> phi_prev2;  ///< phi^{n-2}, present after the first step
  std::optional<double> tau_prev;
  double t;

  /// Shifts the history after an accepted step of size tau.
  void push(Field next, double tau);
};

struct StepResult {
  Field phi;
  SolveStats stats;
};

/// Which linear operator the diagonal solve treats implicitly:
/// Full is (1 + Delta_h)^2 - eps, Convex is Delta_h^2 + (1 - eps).
enum class LinearPart { Full, Convex };

/// One implicit system
///   diag phi - weight Delta_h L phi = rhs + Delta_h N(phi),
/// with L from LinearPart, solved by the lagged iteration
///   phi^{(m+1)} = S^{-1} (rhs + Delta_h N(phi^{(m)})),
/// S = diag + weight |k|^2 L(k) diagonal in Fourier space.
struct ImplicitSystem {
  double diag = 0.0;
  double weight = 1.0;
  LinearPart linear = LinearPart::Full;
  std::vector<std::complex<double>> rhs;  ///< half-spectrum coefficients
  /// Writes N(phi) pointwise.
  std::function<void(std::span<const double>, std::span<double>)> nonlinearity;
  /// Fixes the mean of the solution (volume conservation).
  std::optional<double> mean;
};

StepResult solve_implicit(const ImplicitSystem& system, const Field& guess,
                          const PfcParams& p, const SolverOptions& opts = {});

/// Fixed-point solve of b0 phi - Delta_h((1 + Delta_h)^2 - eps) phi
///   = rhs_linear + Delta_h phi^3.
StepResult fixed_point_solve(double b0, const Field& rhs_linear, const Field& guess,
                             const PfcParams& p, const SolverOptions& opts = {});

/// Variable-step BDF2 step; BDF1 when the state has a single level.
StepResult bdf2_step(const StepperState& state, double tau, const PfcParams& p,
                     const Field* forcing = nullptr, const SolverOptions& opts = {});
/// Crank-Nicolson step with the mean-value nonlinearity.
StepResult cn_step(const StepperState& state, double tau, const PfcParams& p,
                   const SolverOptions& opts = {});
/// First-order convex-splitting step (CNCS starter).
StepResult cs1_step(const StepperState& state, double tau, const PfcParams& p,
                    const SolverOptions& opts = {});
/// Crank-Nicolson convex-splitting step; needs two history levels.
StepResult cncs_step(const StepperState& state, double tau, const PfcParams& p,
                     const SolverOptions& opts = {});

/// Dispatches one step; CNCS falls back to cs1_step on its first step.
StepResult scheme_step(Scheme scheme, const StepperState& state, double tau,
                       const PfcParams& p, const Field* forcing = nullptr,
                       const SolverOptions& opts = {});

/// Drives one trajectory of a scheme.
class Integrator {
 public:
  Integrator(Scheme scheme, PfcParams params, Field phi0, SolverOptions opts = {});

  /// Computes the next level with step tau without committing it.
  StepResult trial(double tau, const Field* forcing = nullptr) const;
  void commit(StepResult result, double tau);
  SolveStats advance(double tau, const Field* forcing = nullptr);

  const StepperState& state() const { return state_; }
  const PfcParams& params() const { return params_; }
  Scheme scheme() const { return scheme_; }
  int steps() const { return steps_; }

 private:
  Scheme scheme_;
  PfcParams params_;
  SolverOptions opts_;
  StepperState state_;
  int steps_ = 0;
};

struct RunOptions {
  SolverOptions solver;
  bool record_energy = true;
  /// Source term evaluated at t_n, if any.
  std::function<Field(double)> forcing;
  /// Called after each accepted step.
  std::function<void(const StepperState&, const SolveStats&)> on_step;
};

struct RunSummary {
  Field final_state;
  /// Level 0 plus one record per step (when record_energy is set).
  std::vector<EnergyRecord> records;
  std::vector<double> steps;
  double mean_iterations = 0.0;
  double max_mass_drift = 0.0;
  double seconds = 0.0;
};

/// Runs a scheme across the given step sizes. Modified energies use the
/// next step's ratio, and r_{N+1} = 0 at the final level.
RunSummary run_steps(Scheme scheme, const PfcParams& p, const Field& phi0,
                     std::span<const double> steps, const RunOptions& opts = {});

/// Energy, modified energy, mass and max norm of the current level.
EnergyRecord make_record(const StepperState& state, double tau_next_ratio,
                         const PfcParams& p, int iterations);

}  // namespace pfc
