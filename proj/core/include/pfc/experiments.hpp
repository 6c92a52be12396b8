#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pfc/adaptive.hpp"
#include "pfc/grid.hpp"
#include "pfc/kernels.hpp"
#include "pfc/steppers.hpp"
#include "pfc/time_mesh.hpp"

namespace pfc {

enum class Experiment { Kernels, Convergence, Compare, Polycrystal };

Experiment parse_experiment(const std::string& name);
std::string to_string(Experiment e);

struct Patch {
  double cx = 0.0;
  double cy = 0.0;
  double side = 0.0;
  double amp = 0.0;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Convergence;
  int M = 128;
  double L = 8.0;
  double epsilon = 0.02;
  /// Restricts compare to one scheme and picks the uniform polycrystal leg.
  std::optional<Scheme> scheme;
  /// Mesh spec or mesh file; kernels analyses it, convergence runs it alone.
  std::optional<std::string> mesh;
  std::uint64_t seed = 20210917;
  std::filesystem::path output_dir;
  std::vector<double> snapshot_times;
  SolverOptions solver;
  AdaptiveConfig adaptive;

  // convergence
  double T = 1.0;
  std::vector<int> ladder{20, 40, 80, 160, 320};
  bool uniform_control = true;

  // compare
  double init_mean = 0.1;
  double init_amp = 0.02;
  double profile_T = 0.01;
  std::vector<double> profile_taus{1e-2, 1e-3, 5e-4, 2.5e-4};
  double reference_tau = 1e-4;
  double energy_T = 5.0;
  std::vector<double> energy_taus{1e-1, 1e-2, 1e-3};

  // polycrystal
  double base = 0.285;
  std::vector<Patch> patches;
  double uniform_tau = 0.05;
  double compare_T = 50.0;
  double long_T = 1000.0;
  bool long_run = false;

  Grid2D grid() const { return Grid2D(M, L); }
};

/// Defaults of each experiment; an empty config file reproduces them.
ExperimentConfig default_config(Experiment e);

/// Reads `key = value` INI text. Sections [solver] and [adaptive] are shared;
/// the section named after the experiment holds its own keys; other sections
/// are ignored. Unknown keys and malformed values throw ConfigError.
ExperimentConfig load_config(Experiment e, std::istream& in);
ExperimentConfig load_config(Experiment e, const std::filesystem::path& path);
/// Writes every effective setting in the format load_config reads.
void write_config(std::ostream& out, const ExperimentConfig& cfg);
/// Throws ConfigError when settings are inconsistent.
void validate(const ExperimentConfig& cfg);

/// mean + amp U(-1, 1) per grid point, drawn in storage order.
Field random_initial(double mean, double amp, const Grid2D& grid, std::uint64_t seed);

/// base everywhere, plus amp U(-1, 1) at grid points with |x - cx| <= side/2
/// and |y - cy| <= side/2; patch k draws from sub-stream k of the seed.
/// Overlapping patches add up. Throws ArgumentError for patches leaving the
/// domain.
Field patched_initial(const Grid2D& grid, const std::vector<Patch>& patches, double base,
                      std::uint64_t seed);
bool patches_overlap(const std::vector<Patch>& patches);
std::vector<Patch> default_patches();

/// Values on the grid row nearest to y = L/2.
std::vector<double> midline(const Field& f);
/// Sign changes of the second difference along a profile.
int oscillation_indicator(const std::vector<double>& profile);

struct ConvergenceRow {
  int N = 0;
  double tau_max = 0.0;
  double error = 0.0;
  std::optional<double> order;  ///< against the previous row
  double max_ratio = 0.0;
  int n1 = 0;  ///< ratios >= (3 + sqrt 17) / 2
  std::string failure;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> random;
  std::vector<ConvergenceRow> uniform;
  double seconds = 0.0;
};

/// Seed of the random mesh with N steps.
std::uint64_t ladder_seed(std::uint64_t seed, int N);
/// Manufactured-problem BDF2 run on one mesh; L2 error at the final level.
double manufactured_error(const PfcParams& p, const TimeMesh& mesh, const SolverOptions& opts);
ConvergenceResult run_convergence(const ExperimentConfig& cfg);
std::vector<ConvergenceRow> convergence_rows(const ExperimentConfig& cfg,
                                             const std::vector<TimeMesh>& meshes);

struct ProfileRun {
  Scheme scheme = Scheme::Bdf2;
  double tau = 0.0;
  std::vector<double> profile;
  double deviation = 0.0;  ///< max |profile - reference|
  int oscillations = 0;
  std::string failure;
};

struct EnergyRun {
  Scheme scheme = Scheme::Bdf2;
  double tau = 0.0;
  double mean_iterations = 0.0;
  double seconds = 0.0;
  std::vector<EnergyRecord> records;
  std::string failure;
};

struct CompareResult {
  std::vector<double> reference_profile;
  int reference_oscillations = 0;
  std::vector<ProfileRun> profiles;
  std::vector<EnergyRun> energies;
  int failures = 0;
};

std::vector<Scheme> compare_schemes(const ExperimentConfig& cfg);
CompareResult run_compare(const ExperimentConfig& cfg);

struct PolycrystalResult {
  RunSummary uniform;
  AdaptiveRun adaptive;
  double uniform_final_energy = 0.0;
  double adaptive_energy_at_T = 0.0;  ///< interpolated at compare_T
  std::optional<AdaptiveRun> long_run;
  std::vector<double> snapshot_times_hit;
};

PolycrystalResult run_polycrystal(const ExperimentConfig& cfg);

struct KernelReport {
  TimeMesh mesh;
  MeshReport mesh_report;
  EigenBounds bounds;
  double orthogonality = 0.0;
};

KernelReport run_kernels(const ExperimentConfig& cfg);
/// Per-level CSV n,tau,ratio,b0,b1,theta_sum,orth_residual,restriction with a
/// '#' footer holding the eigenvalue certificates.
void write_kernel_report(const std::filesystem::path& path, const KernelReport& r,
                         double epsilon);

/// Resolves a mesh option: a spec ("uniform:..", "random:..") or a file.
TimeMesh resolve_mesh(const std::string& spec);

}  // namespace pfc
