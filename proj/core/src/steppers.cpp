#include "pfc/steppers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "pfc/error.hpp"
#include "pfc/spectral.hpp"

namespace pfc {

Scheme parse_scheme(const std::string& name) {
  if (name == "bdf2") return Scheme::Bdf2;
  if (name == "cn") return Scheme::CrankNicolson;
  if (name == "cncs") return Scheme::CrankNicolsonConvexSplitting;
  throw ArgumentError("unknown scheme '" + name + "' (expected bdf2, cn or cncs)");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Bdf2: return "bdf2";
    case Scheme::CrankNicolson: return "cn";
    case Scheme::CrankNicolsonConvexSplitting: return "cncs";
  }
  return "?";
}

void StepperState::push(Field next, double tau) {
  phi_prev2 = std::move(phi_prev);
  phi_prev = std::move(next);
  tau_prev = tau;
  t += tau;
}

namespace {

using Coeffs = std::vector<std::complex<double>>;

double linear_symbol(LinearPart part, double k2, double eps) {
  if (part == LinearPart::Full) return (1.0 - k2) * (1.0 - k2) - eps;
  return k2 * k2 + 1.0 - eps;
}

void cubic(std::span<const double> phi, std::span<double> out) {
  for (std::size_t k = 0; k < phi.size(); ++k) out[k] = phi[k] * phi[k] * phi[k];
}

Coeffs transform(const Field& f) {
  SpectralEngine& engine = SpectralEngine::for_grid(f.grid());
  Coeffs c(engine.spectral_size());
  engine.forward(f.values(), c);
  return c;
}

void check_step(const StepperState& state, double tau, const PfcParams& p) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ArgumentError("time step must be positive and finite");
  }
  if (!(state.phi_prev.grid() == p.grid())) {
    throw DimensionError("state and parameters live on different grids");
  }
}

}  // namespace

StepResult solve_implicit(const ImplicitSystem& sys, const Field& guess,
                          const PfcParams& p, const SolverOptions& opts) {
  if (!(guess.grid() == p.grid())) throw DimensionError("guess/parameter grid mismatch");
  if (!sys.nonlinearity) throw ArgumentError("implicit system without nonlinearity");
  if (opts.max_iterations < 1 || !(opts.tolerance > 0.0)) {
    throw ArgumentError("solver needs max_iterations >= 1 and tolerance > 0");
  }
  SpectralEngine& engine = SpectralEngine::for_grid(p.grid());
  const std::size_t ns = engine.spectral_size();
  if (sys.rhs.size() != ns) throw DimensionError("right-hand side has the wrong size");

  const auto k2 = engine.k2();
  const int M = p.grid().M();
  const int cols = M / 2 + 1;
  std::vector<double> inv_symbol(ns);
  for (std::size_t k = 0; k < ns; ++k) {
    const double s = sys.diag + sys.weight * k2[k] * linear_symbol(sys.linear, k2[k], p.epsilon());
    if (!(s > 0.0)) {
      const int ix = static_cast<int>(k % cols);
      const int iy = static_cast<int>(k / cols);
      const int m = iy < M / 2 ? iy : iy - M;
      std::ostringstream msg;
      msg << "implicit symbol " << s << " is not positive at mode (" << ix << ", " << m << ")";
      throw ConditioningError(msg.str(), ix, m);
    }
    inv_symbol[k] = 1.0 / s;
  }

  Field phi = guess;
  Field next(p.grid());
  std::vector<double> nl(phi.size());
  Coeffs nl_hat(ns), next_hat(ns);
  SolveStats stats;
  double prev_res = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    sys.nonlinearity(phi.values(), nl);
    engine.forward(nl, nl_hat);
    for (std::size_t k = 0; k < ns; ++k) {
      next_hat[k] = (sys.rhs[k] - k2[k] * nl_hat[k]) * inv_symbol[k];
    }
    if (sys.mean) next_hat[0] = *sys.mean * static_cast<double>(phi.size());
    engine.backward(next_hat, next.values());
    if (sys.mean) {
      // The inverse transform returns the pinned mean only up to roundoff;
      // shift it back so the drift cannot accumulate over long runs.
      const double shift = *sys.mean - mean(next);
      for (double& v : next.values()) v += shift;
    }

    double res = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) res = std::max(res, std::abs(next[k] - phi[k]));
    std::swap(phi, next);
    stats.iterations = it;
    stats.final_residual = res;
    if (!std::isfinite(res)) {
      throw SolverError("fixed-point iteration diverged at iteration " + std::to_string(it),
                        stats);
    }
    if (it > 2 && res > prev_res) stats.monotone = false;
    prev_res = res;
    if (res <= opts.tolerance) {
      stats.converged = true;
      return {std::move(phi), stats};
    }
  }
  std::ostringstream msg;
  msg << "fixed-point iteration did not reach " << opts.tolerance << " in "
      << opts.max_iterations << " iterations (last difference " << stats.final_residual << ")";
  throw SolverError(msg.str(), stats);
}

StepResult fixed_point_solve(double b0, const Field& rhs_linear, const Field& guess,
                             const PfcParams& p, const SolverOptions& opts) {
  require_same_grid(rhs_linear, guess);
  ImplicitSystem sys;
  sys.diag = b0;
  sys.weight = 1.0;
  sys.linear = LinearPart::Full;
  sys.rhs = transform(rhs_linear);
  sys.nonlinearity = cubic;
  return solve_implicit(sys, guess, p, opts);
}

StepResult bdf2_step(const StepperState& state, double tau, const PfcParams& p,
                     const Field* forcing, const SolverOptions& opts) {
  check_step(state, tau, p);
  const bool second_order = state.phi_prev2.has_value();
  const double r = second_order ? tau / *state.tau_prev : 0.0;
  const double b0 = (1.0 + 2.0 * r) / (tau * (1.0 + r));
  const double b1 = -r * r / (tau * (1.0 + r));

  const Coeffs prev = transform(state.phi_prev);
  ImplicitSystem sys;
  sys.diag = b0;
  sys.linear = LinearPart::Full;
  sys.nonlinearity = cubic;
  sys.rhs.resize(prev.size());
  for (std::size_t k = 0; k < prev.size(); ++k) sys.rhs[k] = b0 * prev[k];
  if (second_order) {
    const Coeffs prev2 = transform(*state.phi_prev2);
    for (std::size_t k = 0; k < prev.size(); ++k) sys.rhs[k] -= b1 * (prev[k] - prev2[k]);
  }
  if (forcing) {
    require_same_grid(*forcing, state.phi_prev);
    const Coeffs g = transform(*forcing);
    for (std::size_t k = 0; k < g.size(); ++k) sys.rhs[k] += g[k];
  } else {
    sys.mean = mean(state.phi_prev);
  }

  Field guess = state.phi_prev;
  if (opts.extrapolated_guess && second_order) {
    guess += r * (state.phi_prev - *state.phi_prev2);
  }
  return solve_implicit(sys, guess, p, opts);
}

StepResult cn_step(const StepperState& state, double tau, const PfcParams& p,
                   const SolverOptions& opts) {
  check_step(state, tau, p);
  SpectralEngine& engine = SpectralEngine::for_grid(p.grid());
  const auto k2 = engine.k2();
  const Coeffs prev = transform(state.phi_prev);
  const double eps = p.epsilon();

  ImplicitSystem sys;
  sys.diag = 1.0 / tau;
  sys.weight = 0.5;
  sys.linear = LinearPart::Full;
  sys.rhs.resize(prev.size());
  for (std::size_t k = 0; k < prev.size(); ++k) {
    sys.rhs[k] = prev[k] / tau - 0.5 * k2[k] * linear_symbol(LinearPart::Full, k2[k], eps) * prev[k];
  }
  sys.mean = mean(state.phi_prev);
  // (phi^4 - q^4) / (4 (phi - q)), the mean-value form of the quartic term.
  std::span<const double> q = state.phi_prev.values();
  sys.nonlinearity = [q](std::span<const double> phi, std::span<double> out) {
    for (std::size_t k = 0; k < phi.size(); ++k) {
      out[k] = 0.25 * (phi[k] * phi[k] + q[k] * q[k]) * (phi[k] + q[k]);
    }
  };
  return solve_implicit(sys, state.phi_prev, p, opts);
}

StepResult cs1_step(const StepperState& state, double tau, const PfcParams& p,
                    const SolverOptions& opts) {
  check_step(state, tau, p);
  SpectralEngine& engine = SpectralEngine::for_grid(p.grid());
  const auto k2 = engine.k2();
  const Coeffs prev = transform(state.phi_prev);

  ImplicitSystem sys;
  sys.diag = 1.0 / tau;
  sys.weight = 1.0;
  sys.linear = LinearPart::Convex;
  sys.nonlinearity = cubic;
  sys.rhs.resize(prev.size());
  // The concave part 2 Delta_h is explicit.
  for (std::size_t k = 0; k < prev.size(); ++k) {
    sys.rhs[k] = prev[k] / tau + 2.0 * k2[k] * k2[k] * prev[k];
  }
  sys.mean = mean(state.phi_prev);
  return solve_implicit(sys, state.phi_prev, p, opts);
}

StepResult cncs_step(const StepperState& state, double tau, const PfcParams& p,
                     const SolverOptions& opts) {
  check_step(state, tau, p);
  if (!state.phi_prev2) throw PreconditionError("cncs_step needs two history levels");
  SpectralEngine& engine = SpectralEngine::for_grid(p.grid());
  const auto k2 = engine.k2();
  const Coeffs prev = transform(state.phi_prev);
  const Coeffs prev2 = transform(*state.phi_prev2);
  const double eps = p.epsilon();
  const double r = tau / *state.tau_prev;
  // Extrapolation to t_{n-1/2}: (1 + r/2) phi^{n-1} - (r/2) phi^{n-2}.
  const double scale = opts.cncs_extrapolation == Extrapolation::Literal ? 2.0 : 1.0;
  const double a = scale * (1.0 + 0.5 * r);
  const double c = scale * 0.5 * r;

  ImplicitSystem sys;
  sys.diag = 1.0 / tau;
  sys.weight = 0.5;
  sys.linear = LinearPart::Convex;
  sys.rhs.resize(prev.size());
  for (std::size_t k = 0; k < prev.size(); ++k) {
    const double k4 = k2[k] * k2[k];
    sys.rhs[k] = prev[k] / tau - 0.5 * k2[k] * linear_symbol(LinearPart::Convex, k2[k], eps) * prev[k] +
                 k4 * (a * prev[k] - c * prev2[k]);
  }
  sys.mean = mean(state.phi_prev);
  std::span<const double> q = state.phi_prev.values();
  sys.nonlinearity = [q](std::span<const double> phi, std::span<double> out) {
    for (std::size_t k = 0; k < phi.size(); ++k) {
      out[k] = 0.25 * (phi[k] * phi[k] + q[k] * q[k]) * (phi[k] + q[k]);
    }
  };
  return solve_implicit(sys, state.phi_prev, p, opts);
}

StepResult scheme_step(Scheme scheme, const StepperState& state, double tau,
                       const PfcParams& p, const Field* forcing, const SolverOptions& opts) {
  if (forcing && scheme != Scheme::Bdf2) {
    throw ArgumentError("source terms are only supported by the BDF2 stepper");
  }
  switch (scheme) {
    case Scheme::Bdf2: return bdf2_step(state, tau, p, forcing, opts);
    case Scheme::CrankNicolson: return cn_step(state, tau, p, opts);
    case Scheme::CrankNicolsonConvexSplitting:
      return state.phi_prev2 ? cncs_step(state, tau, p, opts) : cs1_step(state, tau, p, opts);
  }
  throw ArgumentError("unknown scheme");
}

Integrator::Integrator(Scheme scheme, PfcParams params, Field phi0, SolverOptions opts)
    : scheme_(scheme), params_(std::move(params)), opts_(opts), state_(std::move(phi0)) {
  if (!(state_.phi_prev.grid() == params_.grid())) {
    throw DimensionError("initial state and parameters live on different grids");
  }
  if (!state_.phi_prev.all_finite()) throw ArgumentError("initial state is not finite");
}

StepResult Integrator::trial(double tau, const Field* forcing) const {
  return scheme_step(scheme_, state_, tau, params_, forcing, opts_);
}

void Integrator::commit(StepResult result, double tau) {
  state_.push(std::move(result.phi), tau);
  ++steps_;
}

SolveStats Integrator::advance(double tau, const Field* forcing) {
  StepResult r = trial(tau, forcing);
  const SolveStats stats = r.stats;
  commit(std::move(r), tau);
  return stats;
}

EnergyRecord make_record(const StepperState& state, double next_ratio, const PfcParams& p,
                         int iterations) {
  EnergyRecord rec;
  rec.t = state.t;
  rec.tau = state.tau_prev.value_or(0.0);
  rec.energy = energy(state.phi_prev, p);
  rec.modified_energy =
      state.phi_prev2 ? modified_energy(state.phi_prev, *state.phi_prev2, *state.tau_prev,
                                        next_ratio, p)
                      : rec.energy;
  rec.mass = mass(state.phi_prev);
  rec.linf = norms(state.phi_prev).linf;
  rec.iterations = iterations;
  return rec;
}

RunSummary run_steps(Scheme scheme, const PfcParams& p, const Field& phi0,
                     std::span<const double> steps, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  Integrator integ(scheme, p, phi0, opts.solver);
  RunSummary out{phi0, {}, {steps.begin(), steps.end()}, 0.0, 0.0, 0.0};
  const double mass0 = mass(phi0);
  if (opts.record_energy) out.records.push_back(make_record(integ.state(), 0.0, p, 0));

  long total_iterations = 0;
  for (std::size_t n = 0; n < steps.size(); ++n) {
    const double tau = steps[n];
    SolveStats stats;
    if (opts.forcing) {
      const Field g = opts.forcing(integ.state().t + tau);
      stats = integ.advance(tau, &g);
    } else {
      stats = integ.advance(tau);
    }
    total_iterations += stats.iterations;
    out.max_mass_drift = std::max(out.max_mass_drift, std::abs(mass(integ.state().phi_prev) - mass0));
    if (opts.record_energy) {
      const double next_ratio = n + 1 < steps.size() ? steps[n + 1] / tau : 0.0;
      out.records.push_back(make_record(integ.state(), next_ratio, p, stats.iterations));
    }
    if (opts.on_step) opts.on_step(integ.state(), stats);
  }
  out.final_state = integ.state().phi_prev;
  if (!steps.empty()) out.mean_iterations = static_cast<double>(total_iterations) / steps.size();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace pfc
