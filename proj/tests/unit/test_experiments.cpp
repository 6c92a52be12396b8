#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pfc/error.hpp"
#include "pfc/experiments.hpp"
#include "pfc/rng.hpp"
#include "pfc/spectral.hpp"

using namespace pfc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pfc_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Experiment, Names) {
  for (Experiment e : {Experiment::Kernels, Experiment::Convergence, Experiment::Compare,
                       Experiment::Polycrystal}) {
    EXPECT_EQ(parse_experiment(to_string(e)), e);
  }
}

TEST(RandomInitial, ZeroAmplitudeIsConstant) {
  const Grid2D g(16, 4.0);
  const Field f = random_initial(0.3, 0.0, g, 1);
  for (double v : f.values()) EXPECT_EQ(v, 0.3);
  EXPECT_THROW(random_initial(0.0, -1.0, g, 1), ArgumentError);
}

TEST(RandomInitial, BoundsMeanAndDeterminism) {
  const Grid2D g(128, 64.0);
  const Field f = random_initial(0.1, 0.02, g, 20210917);
  for (double v : f.values()) {
    EXPECT_GT(v, 0.08);
    EXPECT_LT(v, 0.12);
  }
  // U(-a, a) has standard deviation a / sqrt 3; allow three standard errors.
  const double se = 0.02 / std::sqrt(3.0) / std::sqrt(double(g.size()));
  EXPECT_NEAR(mean(f), 0.1, 3 * se);
  EXPECT_TRUE(f == random_initial(0.1, 0.02, g, 20210917));
  EXPECT_FALSE(f == random_initial(0.1, 0.02, g, 20210918));
}

TEST(RandomInitial, DrawsInStorageOrder) {
  const Grid2D g(8, 1.0);
  const Field f = random_initial(0.0, 1.0, g, 7);
  SplitMix64 rng(7);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(f[k], rng.symmetric());
}

TEST(PatchedInitial, NoPatchesIsBase) {
  const Grid2D g(32, 32.0);
  const Field f = patched_initial(g, {}, 0.285, 1);
  for (double v : f.values()) EXPECT_EQ(v, 0.285);
}

TEST(PatchedInitial, OnlyPatchPointsMove) {
  const Grid2D g(64, 64.0);
  const std::vector<Patch> patches{{16, 16, 8, 0.5}, {48, 40, 6, 0.3}};
  const Field f = patched_initial(g, patches, 0.285, 9);
  int moved = 0;
  for (int j = 0; j < g.M(); ++j) {
    for (int i = 0; i < g.M(); ++i) {
      bool inside = false;
      double amp = 0.0;
      for (const Patch& p : patches) {
        if (std::abs(g.x(i) - p.cx) <= p.side / 2 && std::abs(g.y(j) - p.cy) <= p.side / 2) {
          inside = true;
          amp = p.amp;
        }
      }
      if (!inside) {
        EXPECT_EQ(f(i, j), 0.285);
      } else {
        EXPECT_LE(std::abs(f(i, j) - 0.285), amp);
        ++moved;
      }
    }
  }
  // h = 1: 9 x 9 + 7 x 7 grid points.
  EXPECT_EQ(moved, 81 + 49);
}

TEST(PatchedInitial, DefaultLayoutMass) {
  const Grid2D g(256, 256.0);
  const Field f = patched_initial(g, default_patches(), 0.285, 20210917);
  // 3 patches of 11 x 11 points, each perturbation bounded by its amplitude.
  const double bound = 121 * (0.2 + 0.3 + 0.9);
  EXPECT_LE(std::abs(mass(f) - 0.285 * 256 * 256), bound);
  EXPECT_FALSE(patches_overlap(default_patches()));
}

TEST(PatchedInitial, RejectsPatchOutsideDomain) {
  const Grid2D g(32, 32.0);
  EXPECT_THROW(patched_initial(g, {{2, 16, 8, 0.1}}, 0.0, 1), ArgumentError);
  EXPECT_THROW(patched_initial(g, {{16, 16, 0, 0.1}}, 0.0, 1), ArgumentError);
}

TEST(Patches, OverlapDetection) {
  EXPECT_TRUE(patches_overlap({{10, 10, 4, 0}, {13, 10, 4, 0}}));
  EXPECT_TRUE(patches_overlap({{10, 10, 4, 0}, {14, 14, 4, 0}}));
  EXPECT_FALSE(patches_overlap({{10, 10, 4, 0}, {15, 10, 4, 0}}));
  EXPECT_FALSE(patches_overlap({{10, 10, 4, 0}}));
}

TEST(Profiles, MidlineRow) {
  const Grid2D g(8, 8.0);
  const Field f = Field::sample(g, [](double x, double y) { return 10 * y + x; });
  const std::vector<double> m = midline(f);
  ASSERT_EQ(m.size(), 8u);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(m[i], 40.0 + i);
}

TEST(Profiles, OscillationIndicator) {
  EXPECT_EQ(oscillation_indicator({0, 1, 2, 3, 4}), 0);
  EXPECT_EQ(oscillation_indicator({0, 1, 0, 1, 0, 1}), 3);
  EXPECT_EQ(oscillation_indicator({0, 1, 4, 9, 16}), 0);
  // A zero second difference does not reset the sign.
  EXPECT_EQ(oscillation_indicator({0, 1, 3, 5, 8}), 0);
  EXPECT_EQ(oscillation_indicator({0, 1, 3, 5, 6, 6}), 1);
  EXPECT_EQ(oscillation_indicator({}), 0);
}

TEST(Config, Defaults) {
  const ExperimentConfig c = default_config(Experiment::Polycrystal);
  EXPECT_EQ(c.M, 256);
  EXPECT_EQ(c.L, 256.0);
  EXPECT_EQ(c.epsilon, 0.25);
  EXPECT_EQ(c.patches.size(), 3u);
  EXPECT_NO_THROW(validate(c));
  for (Experiment e : {Experiment::Kernels, Experiment::Convergence, Experiment::Compare}) {
    EXPECT_NO_THROW(validate(default_config(e)));
  }
}

TEST(Config, ParsesSectionsAndIgnoresOthers) {
  std::istringstream in(
      "; comment\n"
      "[compare]\nM = 64\nL = 32\nepsilon = 0.3\nscheme = cncs\nprofile_taus = 0.01, 0.005\n"
      "[solver]\ntolerance = 1e-11\ncncs_extrapolation = halved\n"
      "[adaptive]\ntol = 1e-4\nnorm = max\n"
      "[polycrystal]\nwhatever = 1\n");
  const ExperimentConfig c = load_config(Experiment::Compare, in);
  EXPECT_EQ(c.M, 64);
  EXPECT_EQ(c.L, 32.0);
  EXPECT_EQ(c.epsilon, 0.3);
  EXPECT_EQ(c.scheme, Scheme::CrankNicolsonConvexSplitting);
  EXPECT_EQ(c.profile_taus, (std::vector<double>{0.01, 0.005}));
  EXPECT_EQ(c.solver.tolerance, 1e-11);
  EXPECT_EQ(c.solver.cncs_extrapolation, Extrapolation::Halved);
  EXPECT_EQ(c.adaptive.tol, 1e-4);
  EXPECT_EQ(c.adaptive.norm, ErrorNorm::Max);
}

TEST(Config, RejectsBadInput) {
  auto load = [](Experiment e, const std::string& text) {
    std::istringstream in(text);
    return load_config(e, in);
  };
  EXPECT_THROW(load(Experiment::Compare, "[compare]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(load(Experiment::Compare, "[compare]\nladder = 10,20\n"), ConfigError);
  EXPECT_THROW(load(Experiment::Compare, "[compare]\nM = 7\n"), ConfigError);
  EXPECT_THROW(load(Experiment::Compare, "[compare]\nepsilon = abc\n"), ConfigError);
  EXPECT_THROW(load(Experiment::Compare, "[compare]\nscheme = euler\n"), ConfigError);
  EXPECT_THROW(load(Experiment::Compare, "[solver]\nfoo = 1\n"), ConfigError);
  EXPECT_THROW(load(Experiment::Polycrystal, "[adaptive]\ntau_min = 1\ntau_max = 0.5\n"),
               ConfigError);
  EXPECT_THROW(load(Experiment::Polycrystal, "[polycrystal]\npatches = 10 10 4\n"), ConfigError);
  EXPECT_THROW(load(Experiment::Polycrystal, "[polycrystal]\npatches = 2 100 10 0.1\n"),
               ConfigError);
}

TEST(Config, EchoRoundTrip) {
  for (Experiment e : {Experiment::Kernels, Experiment::Convergence, Experiment::Compare,
                       Experiment::Polycrystal}) {
    ExperimentConfig c = default_config(e);
    c.seed = 12345678901234ULL;
    c.epsilon = 0.1 + 1e-16 * 3;
    c.adaptive.initial_tau = 0.01;
    std::ostringstream out;
    write_config(out, c);
    std::istringstream in(out.str());
    const ExperimentConfig back = load_config(e, in);
    std::ostringstream again;
    write_config(again, back);
    EXPECT_EQ(out.str(), again.str()) << to_string(e);
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(back.epsilon, c.epsilon);
  }
}

TEST(Convergence, LadderSeedsDifferPerRung) {
  EXPECT_NE(ladder_seed(1, 20), ladder_seed(1, 40));
  EXPECT_EQ(ladder_seed(1, 20), ladder_seed(1, 20));
}

TEST(Convergence, UniformRowsShowSecondOrder) {
  ExperimentConfig c = default_config(Experiment::Convergence);
  c.M = 32;
  const std::vector<TimeMesh> meshes{TimeMesh::uniform(10, 1.0), TimeMesh::uniform(20, 1.0),
                                     TimeMesh::uniform(40, 1.0)};
  const std::vector<ConvergenceRow> rows = convergence_rows(c, meshes);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[0].order.has_value());
  for (int k = 1; k < 3; ++k) {
    ASSERT_TRUE(rows[k].order.has_value());
    EXPECT_NEAR(*rows[k].order, 2.0, 0.15);
    EXPECT_LT(rows[k].error, rows[k - 1].error);
  }
}

TEST(Convergence, WritesArtifacts) {
  ExperimentConfig c = default_config(Experiment::Convergence);
  c.M = 16;
  c.ladder = {10, 20};
  c.output_dir = scratch("convergence");
  const ConvergenceResult r = run_convergence(c);
  EXPECT_EQ(r.random.size(), 2u);
  EXPECT_EQ(r.uniform.size(), 2u);
  EXPECT_TRUE(fs::exists(c.output_dir / "config.ini"));
  EXPECT_TRUE(fs::exists(c.output_dir / "convergence.csv"));
  EXPECT_TRUE(fs::exists(c.output_dir / "meshes" / "random_20.txt"));
  const TimeMesh m = read_mesh_file(c.output_dir / "meshes" / "random_20.txt");
  const TimeMesh want = random_mesh(20, 1.0, ladder_seed(c.seed, 20));
  ASSERT_EQ(m.size(), 20);
  for (int k = 1; k <= 20; ++k) EXPECT_EQ(m.tau(k), want.tau(k));
  fs::remove_all(c.output_dir);
}

TEST(Compare, SmallRunProducesProfilesAndEnergies) {
  ExperimentConfig c = default_config(Experiment::Compare);
  c.M = 32;
  c.L = 16.0;
  c.profile_taus = {1e-2, 5e-3};
  c.reference_tau = 1e-3;
  c.energy_T = 0.1;
  c.energy_taus = {1e-2};
  c.output_dir = scratch("compare");
  const CompareResult r = run_compare(c);
  EXPECT_EQ(r.failures, 0);
  EXPECT_EQ(r.reference_profile.size(), 32u);
  EXPECT_EQ(r.profiles.size(), 6u);
  EXPECT_EQ(r.energies.size(), 3u);
  for (const EnergyRun& e : r.energies) EXPECT_EQ(e.records.size(), 11u);
  EXPECT_TRUE(fs::exists(c.output_dir / "profile_stats.csv"));
  EXPECT_TRUE(fs::exists(c.output_dir / "iterations.csv"));
  EXPECT_TRUE(fs::exists(c.output_dir / "energy" / "bdf2_tau0.01.csv"));
  fs::remove_all(c.output_dir);
}

TEST(Kernels, ReportFooter) {
  ExperimentConfig c = default_config(Experiment::Kernels);
  c.mesh = "random:50,1,3";
  const KernelReport r = run_kernels(c);
  EXPECT_EQ(r.mesh.size(), 50);
  EXPECT_LT(r.orthogonality, 1e-10);
  const fs::path path = scratch("kernels.csv");
  write_kernel_report(path, r, c.epsilon);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,tau,ratio,b0,b1,theta_sum,orth_residual,restriction");
  int rows = 0, footer = 0;
  while (std::getline(in, line)) (line.rfind('#', 0) == 0 ? footer : rows)++;
  EXPECT_EQ(rows, 50);
  EXPECT_GE(footer, 5);
  fs::remove(path);
}

TEST(ResolveMesh, SpecAndFile) {
  EXPECT_EQ(resolve_mesh("uniform:4,2").size(), 4);
  const fs::path path = scratch("mesh.txt");
  write_mesh_file(path, std::vector<double>{0.5, 0.25});
  EXPECT_EQ(resolve_mesh(path.string()).horizon(), 0.75);
  fs::remove(path);
  EXPECT_THROW(resolve_mesh("random:3"), ConfigError);
}
