#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pfc/model.hpp"
#include "pfc/steppers.hpp"

namespace pfc {

enum class ErrorNorm { L2, Max };

struct AdaptiveConfig {
  double rho = 0.9;
  double tol = 1e-3;
  double tau_max = 0.5;
  double tau_min = 1e-4;
  double ratio_cap = 3.561;
  ErrorNorm norm = ErrorNorm::L2;
  /// First trial step; tau_min when unset.
  std::optional<double> initial_tau;

  /// Throws ConfigError when an invariant fails.
  void validate() const;
  double first_tau() const { return initial_tau.value_or(tau_min); }
};

/// min(ratio_cap, rho sqrt(tol / e)) tau_cur; e = 0 gives ratio_cap tau_cur.
double tau_ada(double e, double tau_cur, const AdaptiveConfig& cfg);

/// Relative change ||next - prev|| / ||next||, falling back to the absolute
/// change when ||next|| < 1e-14.
double relative_change(const Field& next, const Field& prev, ErrorNorm norm);

/// One row of the adaptive log.
struct TrialRecord {
  int n = 0;  ///< index of the level being computed
  double t = 0.0;  ///< time the trial would reach
  double tau = 0.0;
  double e_rel = 0.0;
  int rejections = 0;  ///< rejections so far for this level
  bool accepted = false;
};

struct AdaptiveStep {
  double accepted_tau = 0.0;
  double next_tau = 0.0;
  double e_rel = 0.0;
  int rejections = 0;
  SolveStats stats;
};

/// Advances the integrator by one accepted step chosen by the controller,
/// starting from the trial step tau_trial. Rejected trials leave the history
/// untouched. Solver errors propagate.
AdaptiveStep adaptive_advance(Integrator& integ, double tau_trial, const AdaptiveConfig& cfg,
                              std::vector<TrialRecord>* log = nullptr);

struct AdaptiveRun {
  Field final_state;
  std::vector<EnergyRecord> records;  ///< level 0 plus one per accepted step
  std::vector<double> steps;          ///< accepted step sizes
  std::vector<TrialRecord> trials;
  int rejections = 0;
  double max_mass_drift = 0.0;
  /// Accepted levels where the step restriction of the stability theory
  /// failed (reported only).
  int restriction_warnings = 0;
  double seconds = 0.0;
};

struct AdaptiveRunOptions {
  SolverOptions solver;
  /// Called after each accepted step with the new state.
  std::function<void(const StepperState&)> on_step;
};

/// BDF2 driven by the controller from phi0 until t >= T; the last step is not
/// clipped to land on T. Modified energies use the ratio of the proposed next
/// step to the accepted one.
AdaptiveRun run_adaptive(const PfcParams& p, const Field& phi0, double T,
                         const AdaptiveConfig& cfg, const AdaptiveRunOptions& opts = {});

/// Linear interpolation of E between the records bracketing time t.
double energy_at(std::span<const EnergyRecord> records, double t);

/// CSV with header n,t,tau,e_rel,rejections,accepted.
void write_trial_log(const std::filesystem::path& path, std::span<const TrialRecord> trials);

}  // namespace pfc
