#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "pfc/adaptive.hpp"
#include "pfc/error.hpp"
#include "pfc/spectral.hpp"

using namespace pfc;

namespace {

Field example_state(const Grid2D& g, std::uint64_t seed) {
  Field f = oracle::random_field(g, seed, 0.05);
  for (double& v : f.values()) v += 0.1;
  return f;
}

}  // namespace

TEST(TauAda, HandValues) {
  AdaptiveConfig c;
  EXPECT_DOUBLE_EQ(tau_ada(c.tol, 0.1, c), 0.09);
  EXPECT_DOUBLE_EQ(tau_ada(4 * c.tol, 0.1, c), 0.045);
  EXPECT_DOUBLE_EQ(tau_ada(10 * c.tol, 1.0, c), 0.9 / std::sqrt(10.0));
  EXPECT_DOUBLE_EQ(tau_ada(0.0, 0.2, c), 3.561 * 0.2);
  // rho sqrt(tol / e) = cap exactly at e = tol (rho / cap)^2.
  const double e_cap = c.tol * (c.rho / c.ratio_cap) * (c.rho / c.ratio_cap);
  EXPECT_NEAR(tau_ada(e_cap, 1.0, c), c.ratio_cap, 1e-12);
  EXPECT_DOUBLE_EQ(tau_ada(e_cap / 2, 1.0, c), c.ratio_cap);
  EXPECT_LT(tau_ada(e_cap * 2, 1.0, c), c.ratio_cap);
  EXPECT_THROW(tau_ada(-1.0, 1.0, c), ArgumentError);
  EXPECT_THROW(tau_ada(1.0, 0.0, c), ArgumentError);
}

TEST(TauAda, MonotoneInError) {
  AdaptiveConfig c;
  double prev = tau_ada(1e-9, 1.0, c);
  for (double e = 1e-8; e < 1.0; e *= 3) {
    const double t = tau_ada(e, 1.0, c);
    EXPECT_LE(t, prev);
    prev = t;
  }
}

TEST(AdaptiveConfig, Validate) {
  AdaptiveConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.first_tau(), c.tau_min);
  auto bad = [](auto mutate) {
    AdaptiveConfig x;
    mutate(x);
    EXPECT_THROW(x.validate(), ConfigError);
  };
  bad([](AdaptiveConfig& x) { x.tau_min = 0.0; });
  bad([](AdaptiveConfig& x) { x.tau_min = 1.0; });
  bad([](AdaptiveConfig& x) { x.rho = 0.0; });
  bad([](AdaptiveConfig& x) { x.rho = 1.5; });
  bad([](AdaptiveConfig& x) { x.tol = 0.0; });
  bad([](AdaptiveConfig& x) { x.ratio_cap = 4.0; });
  bad([](AdaptiveConfig& x) { x.initial_tau = -1.0; });
}

TEST(RelativeChange, Norms) {
  const Grid2D g(8, 1.0);
  const Field a(g, 2.0), b(g, 1.0);
  EXPECT_DOUBLE_EQ(relative_change(a, b, ErrorNorm::L2), 0.5);
  EXPECT_DOUBLE_EQ(relative_change(a, b, ErrorNorm::Max), 0.5);
  // Absolute change once the new state vanishes.
  const Field z(g);
  EXPECT_DOUBLE_EQ(relative_change(z, b, ErrorNorm::Max), 1.0);
  EXPECT_DOUBLE_EQ(relative_change(z, b, ErrorNorm::L2), 1.0);
}

TEST(AdaptiveAdvance, AcceptsSmallChangesAndGrowsStep) {
  const Grid2D g(16, 8.0);
  const PfcParams p(0.2, g);
  Integrator it(Scheme::Bdf2, p, Field(g, 0.1));
  AdaptiveConfig c;
  // A constant state does not move: e = 0, next step = cap * tau.
  const AdaptiveStep s = adaptive_advance(it, 0.01, c);
  EXPECT_EQ(s.rejections, 0);
  EXPECT_EQ(s.accepted_tau, 0.01);
  EXPECT_DOUBLE_EQ(s.next_tau, c.ratio_cap * 0.01);
  EXPECT_EQ(it.steps(), 1);
}

TEST(AdaptiveAdvance, NextStepClampedToMax) {
  const Grid2D g(16, 8.0);
  const PfcParams p(0.2, g);
  Integrator it(Scheme::Bdf2, p, Field(g, 0.1));
  AdaptiveConfig c;
  EXPECT_EQ(adaptive_advance(it, 0.4, c).next_tau, c.tau_max);
}

TEST(AdaptiveAdvance, RejectsThenAccepts) {
  const Grid2D g(32, 16.0);
  const PfcParams p(0.25, g);
  // Smooth data, so the change shrinks with the step well above tau_min.
  Field phi0 = oracle::smooth_random_field(g, 1, 3);
  phi0 *= 0.05;
  Integrator it(Scheme::Bdf2, p, phi0);
  AdaptiveConfig c;
  c.tol = 1e-2;
  std::vector<TrialRecord> log;
  const AdaptiveStep s = adaptive_advance(it, 0.5, c, &log);
  EXPECT_GE(s.rejections, 1);
  ASSERT_EQ(log.size(), static_cast<std::size_t>(s.rejections + 1));
  for (std::size_t k = 0; k + 1 < log.size(); ++k) {
    EXPECT_FALSE(log[k].accepted);
    EXPECT_GE(log[k].e_rel, c.tol);
    EXPECT_LT(log[k + 1].tau, log[k].tau);
  }
  EXPECT_TRUE(log.back().accepted);
  EXPECT_LT(s.e_rel, c.tol);
  EXPECT_EQ(it.state().t, s.accepted_tau);
}

TEST(AdaptiveAdvance, ForcedAcceptAtMinimumStep) {
  const Grid2D g(32, 16.0);
  const PfcParams p(0.25, g);
  Integrator it(Scheme::Bdf2, p, example_state(g, 2));
  AdaptiveConfig c;
  c.tol = 1e-12;
  c.tau_min = 1e-3;
  const AdaptiveStep s = adaptive_advance(it, 1e-3, c);
  EXPECT_EQ(s.rejections, 0);
  EXPECT_GE(s.e_rel, c.tol);
  EXPECT_EQ(s.accepted_tau, c.tau_min);
  EXPECT_EQ(s.next_tau, c.tau_min);
}

TEST(RunAdaptive, InvariantsAndReplay) {
  const Grid2D g(32, 16.0);
  const PfcParams p(0.25, g);
  const Field phi0 = example_state(g, 3);
  AdaptiveConfig c;
  c.tol = 1e-3;
  const AdaptiveRun run = run_adaptive(p, phi0, 5.0, c);
  ASSERT_FALSE(run.steps.empty());
  EXPECT_EQ(run.records.size(), run.steps.size() + 1);
  double t = 0.0;
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    EXPECT_GE(run.steps[k], c.tau_min);
    EXPECT_LE(run.steps[k], c.tau_max);
    if (k > 0) EXPECT_LE(run.steps[k] / run.steps[k - 1], c.ratio_cap * (1 + 1e-12));
    t += run.steps[k];
  }
  EXPECT_GE(t, 5.0);
  EXPECT_LT(t - run.steps.back(), 5.0);
  EXPECT_LE(run.max_mass_drift, 1e-10);

  int accepted = 0;
  for (const TrialRecord& r : run.trials) accepted += r.accepted;
  EXPECT_EQ(accepted, static_cast<int>(run.steps.size()));

  // Replaying the accepted steps on a fixed mesh reproduces the run bit for bit.
  RunOptions ro;
  ro.record_energy = false;
  const RunSummary replay = run_steps(Scheme::Bdf2, p, phi0, run.steps, ro);
  EXPECT_TRUE(replay.final_state == run.final_state);
}

TEST(RunAdaptive, Deterministic) {
  const Grid2D g(32, 16.0);
  const PfcParams p(0.25, g);
  const Field phi0 = example_state(g, 4);
  const AdaptiveRun a = run_adaptive(p, phi0, 2.0, AdaptiveConfig{});
  const AdaptiveRun b = run_adaptive(p, phi0, 2.0, AdaptiveConfig{});
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_TRUE(a.final_state == b.final_state);
}

TEST(EnergyAt, LinearInterpolation) {
  std::vector<EnergyRecord> r(3);
  r[0].t = 0.0, r[0].energy = 4.0;
  r[1].t = 1.0, r[1].energy = 2.0;
  r[2].t = 3.0, r[2].energy = 1.0;
  EXPECT_DOUBLE_EQ(energy_at(r, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(energy_at(r, 2.0), 1.5);
  EXPECT_DOUBLE_EQ(energy_at(r, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(energy_at(r, 5.0), 1.0);
  EXPECT_DOUBLE_EQ(energy_at(r, -1.0), 4.0);
  EXPECT_THROW(energy_at(std::span<const EnergyRecord>{}, 1.0), ArgumentError);
}

TEST(TrialLog, Format) {
  const auto path = std::filesystem::temp_directory_path() / "pfc_trial_log.csv";
  std::vector<TrialRecord> t{{1, 0.5, 0.5, 2e-3, 0, false}, {1, 0.25, 0.25, 5e-4, 1, true}};
  write_trial_log(path, t);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,t,tau,e_rel,rejections,accepted");
  std::getline(in, line);
  EXPECT_EQ(line, "1,0.5,0.5,0.002,0,0");
  std::getline(in, line);
  EXPECT_EQ(line, "1,0.25,0.25,0.00050000000000000001,1,1");
  std::filesystem::remove(path);
}
