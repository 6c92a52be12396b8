#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pfc {

/// (3 + sqrt(17)) / 2, the largest step ratio for which the variable-step BDF2
/// kernels stay positive definite.
inline const double kRatioSup = (3.0 + std::sqrt(17.0)) / 2.0;
/// 1 + sqrt(2).
inline const double kRatioZeroStable = 1.0 + std::sqrt(2.0);

/// Nonuniform time levels 0 = t_0 < t_1 < ... < t_N.
///
/// Levels are 1-based to match the usual notation: tau(k), t(k) and ratio(k)
/// accept k in [1, N]; t(0) = 0 and ratio(1) = 0.
class TimeMesh {
 public:
  /// Throws ArgumentError if steps is empty or holds a non-positive entry.
  explicit TimeMesh(std::vector<double> steps);

  static TimeMesh uniform(int N, double T);
  /// Steps with ratios r_2..r_N taken from `ratios` (size N-1), rescaled so
  /// that t_N = T.
  static TimeMesh from_ratios(std::span<const double> ratios, double T);

  int size() const { return static_cast<int>(steps_.size()); }
  double tau(int k) const { return steps_[k - 1]; }
  double t(int k) const { return k == 0 ? 0.0 : times_[k - 1]; }
  double ratio(int k) const { return ratios_[k - 1]; }
  double horizon() const { return times_.back(); }
  double max_step() const;
  double max_ratio() const;

  std::span<const double> steps() const { return steps_; }
  std::span<const double> ratios() const { return ratios_; }

 private:
  std::vector<double> steps_;
  std::vector<double> times_;
  std::vector<double> ratios_;
};

/// tau_k = T sigma_k / S with sigma_k ~ U(0,1) drawn from SplitMix64(seed).
TimeMesh random_mesh(int N, double T, std::uint64_t seed);

/// Mesh whose ratios r_2..r_N are i.i.d. U(r_lo, r_hi); handy for S1 meshes.
TimeMesh random_ratio_mesh(int N, double T, double r_lo, double r_hi,
                           std::uint64_t seed);

/// R(z, s) = (2 + 4z - z^2)/(1 + z) - s/(1 + s) on 0 <= z, s < r_sup.
double ratio_function(double z, double s);

struct MeshReport {
  double max_step = 0.0;
  double max_ratio = 0.0;
  /// Levels k >= 2 with r_k >= r_sup.
  std::vector<int> s1_violations;
  /// N0 = #{k : 1 + sqrt(2) <= r_k < r_sup}.
  int s2_count = 0;
  /// Levels breaking the energy step-size restriction (filled when an
  /// epsilon is supplied).
  std::vector<int> restriction_violations;
};

/// Step-size bound (2 / (3 eps)) min{(1+2r_n)/(1+r_n), R(r_n, r_{n+1})}.
/// Returns 0 when either ratio lies outside [0, r_sup).
double restriction_bound(double r_n, double r_next, double epsilon);

/// Levels n with tau_n above restriction_bound. `lookahead` closes the check
/// at n = N (r_{N+1}); it defaults to 0, the most favourable value.
std::vector<int> check_restriction(const TimeMesh& mesh, double epsilon,
                                   double lookahead = 0.0);

MeshReport analyze(const TimeMesh& mesh,
                   std::optional<double> epsilon = std::nullopt);

/// Parses "uniform:N,T" or "random:N,T,seed". Throws ConfigError.
TimeMesh parse_mesh_spec(const std::string& spec);

/// One step size per line.
TimeMesh read_mesh_file(const std::filesystem::path& path);
void write_mesh_file(const std::filesystem::path& path, std::span<const double> steps);

}  // namespace pfc
