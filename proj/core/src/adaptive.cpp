#include "pfc/adaptive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "pfc/error.hpp"
#include "pfc/spectral.hpp"
#include "pfc/time_mesh.hpp"

namespace pfc {

void AdaptiveConfig::validate() const {
  if (!(tau_min > 0.0 && tau_min < tau_max)) {
    throw ConfigError("adaptive config needs 0 < tau_min < tau_max");
  }
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("adaptive config needs 0 < rho <= 1");
  if (!(tol > 0.0)) throw ConfigError("adaptive config needs tol > 0");
  if (!(ratio_cap > 0.0 && ratio_cap <= kRatioSup)) {
    throw ConfigError("adaptive ratio cap must lie in (0, (3 + sqrt 17) / 2]");
  }
  if (initial_tau && !(*initial_tau > 0.0)) {
    throw ConfigError("adaptive initial step must be positive");
  }
}

double tau_ada(double e, double tau_cur, const AdaptiveConfig& cfg) {
  if (!(tau_cur > 0.0)) throw ArgumentError("tau_ada needs tau_cur > 0");
  if (e < 0.0 || std::isnan(e)) throw ArgumentError("tau_ada needs e >= 0");
  if (e == 0.0) return cfg.ratio_cap * tau_cur;
  return std::min(cfg.ratio_cap, cfg.rho * std::sqrt(cfg.tol / e)) * tau_cur;
}

double relative_change(const Field& next, const Field& prev, ErrorNorm norm) {
  const Field diff = next - prev;
  const Norms nd = norms(diff), nn = norms(next);
  const double num = norm == ErrorNorm::L2 ? nd.l2 : nd.linf;
  const double den = norm == ErrorNorm::L2 ? nn.l2 : nn.linf;
  return den < 1e-14 ? num : num / den;
}

AdaptiveStep adaptive_advance(Integrator& integ, double tau_trial, const AdaptiveConfig& cfg,
                              std::vector<TrialRecord>* log) {
  if (!(tau_trial > 0.0)) throw ArgumentError("adaptive trial step must be positive");
  AdaptiveStep out;
  double tau = tau_trial;
  for (;;) {
    StepResult trial = integ.trial(tau);
    const double e = relative_change(trial.phi, integ.state().phi_prev, cfg.norm);
    bool accept = false;
    double next = 0.0;
    if (e < cfg.tol) {
      accept = true;
      next = std::min(std::max(cfg.tau_min, tau_ada(e, tau, cfg)), cfg.tau_max);
    } else if (tau <= cfg.tau_min) {
      accept = true;
      next = cfg.tau_min;
    }
    if (log) {
      log->push_back({integ.steps() + 1, integ.state().t + tau, tau, e, out.rejections, accept});
    }
    if (accept) {
      out.accepted_tau = tau;
      out.next_tau = next;
      out.e_rel = e;
      out.stats = trial.stats;
      integ.commit(std::move(trial), tau);
      return out;
    }
    ++out.rejections;
    tau = std::max(cfg.tau_min, tau_ada(e, tau, cfg));
  }
}

AdaptiveRun run_adaptive(const PfcParams& p, const Field& phi0, double T,
                         const AdaptiveConfig& cfg, const AdaptiveRunOptions& opts) {
  cfg.validate();
  if (!(T > 0.0)) throw ArgumentError("adaptive horizon must be positive");
  const auto start = std::chrono::steady_clock::now();
  Integrator integ(Scheme::Bdf2, p, phi0, opts.solver);
  AdaptiveRun run{phi0, {}, {}, {}, 0, 0.0, 0, 0.0};
  const double mass0 = mass(phi0);
  run.records.push_back(make_record(integ.state(), 0.0, p, 0));

  double tau = cfg.first_tau();
  double prev_tau = 0.0;
  while (integ.state().t < T) {
    const AdaptiveStep step = adaptive_advance(integ, tau, cfg, &run.trials);
    run.steps.push_back(step.accepted_tau);
    run.rejections += step.rejections;
    const double r = prev_tau > 0.0 ? step.accepted_tau / prev_tau : 0.0;
    const double r_next = step.next_tau / step.accepted_tau;
    if (step.accepted_tau > restriction_bound(r, r_next, p.epsilon())) ++run.restriction_warnings;
    run.records.push_back(make_record(integ.state(), r_next, p, step.stats.iterations));
    run.max_mass_drift =
        std::max(run.max_mass_drift, std::abs(mass(integ.state().phi_prev) - mass0));
    if (opts.on_step) opts.on_step(integ.state());
    prev_tau = step.accepted_tau;
    tau = step.next_tau;
  }
  run.final_state = integ.state().phi_prev;
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

double energy_at(std::span<const EnergyRecord> records, double t) {
  if (records.empty()) throw ArgumentError("energy_at needs at least one record");
  if (t <= records.front().t) return records.front().energy;
  for (std::size_t k = 1; k < records.size(); ++k) {
    if (records[k].t >= t) {
      const EnergyRecord& a = records[k - 1];
      const EnergyRecord& b = records[k];
      const double w = (t - a.t) / (b.t - a.t);
      return (1.0 - w) * a.energy + w * b.energy;
    }
  }
  return records.back().energy;
}

void write_trial_log(const std::filesystem::path& path, std::span<const TrialRecord> trials) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "n,t,tau,e_rel,rejections,accepted\n";
  for (const TrialRecord& r : trials) {
    out << r.n << ',' << r.t << ',' << r.tau << ',' << r.e_rel << ',' << r.rejections << ','
        << (r.accepted ? 1 : 0) << '\n';
  }
}

}  // namespace pfc
