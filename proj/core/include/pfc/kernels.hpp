#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pfc/time_mesh.hpp"

namespace pfc {

/// Variable-step BDF2 convolution kernels on a mesh:
///   D_2 v^n = b_0^{(n)} (v^n - v^{n-1}) + b_1^{(n)} (v^{n-1} - v^{n-2}),
/// with the BDF1 kernel b_0^{(1)} = 1 / tau_1 at the first level.
class Bdf2Coeffs {
 public:
  explicit Bdf2Coeffs(const TimeMesh& mesh);

  int size() const { return static_cast<int>(b0_.size()); }
  /// Levels are 1-based. b1(1) is 0.
  double b0(int n) const { return b0_[n - 1]; }
  double b1(int n) const { return b1_[n - 1]; }
  /// b_{lag}^{(n)}: b0 for lag 0, b1 for lag 1, zero beyond.
  double kernel(int n, int lag) const;

 private:
  std::vector<double> b0_;
  std::vector<double> b1_;
};

/// Kernel pair for a single step given tau_n and r_n (r_n = 0 gives BDF1).
struct StepKernels {
  double b0;
  double b1;
};
StepKernels step_kernels(double tau, double ratio);

/// Discrete orthogonal convolution (DOC) kernels theta_{n-j}^{(n)},
/// 1 <= j <= n <= N, as a ragged triangular table.
class DocKernels {
 public:
  DocKernels() = default;
  explicit DocKernels(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {}

  int size() const { return static_cast<int>(rows_.size()); }
  /// theta_{n-j}^{(n)}, 1-based n and j.
  double theta(int n, int j) const { return rows_[n - 1][j - 1]; }
  std::span<const double> row(int n) const { return rows_[n - 1]; }

 private:
  std::vector<std::vector<double>> rows_;
};

/// Row n of the DOC kernels from the closed-form product
///   theta_{n-j}^{(n)} = (1 / b_0^{(j)}) prod_{i=j+1}^{n} r_i^2 / (1 + 2 r_i).
std::vector<double> doc_row(const TimeMesh& mesh, const Bdf2Coeffs& b, int n);
/// Row n from the defining recursion; kept as an independent cross-check.
std::vector<double> doc_row_recursive(const Bdf2Coeffs& b, int n);

DocKernels doc_kernels(const TimeMesh& mesh);
DocKernels doc_kernels_recursive(const TimeMesh& mesh);

/// max_{1<=k<=n<=N} |sum_{j=k}^{n} theta_{n-j}^{(n)} b_{j-k}^{(j)} - delta_{nk}|.
double verify_orthogonality(const TimeMesh& mesh);
/// Same residual restricted to row n.
double orthogonality_residual(const DocKernels& theta, const Bdf2Coeffs& b, int n);

/// max_n |sum_{j=1}^{n} theta_{n-j}^{(n)} D_2 v^j - (v^n - v^{n-1})|.
/// Throws DimensionError unless v.size() == N + 1.
double verify_telescope(const TimeMesh& mesh, std::span<const double> v);

/// Dense matrices of the quadratic-form certificates.
struct KernelMatrices {
  Eigen::MatrixXd B2;       ///< lower bidiagonal, entries b_{k-j}^{(k)}
  Eigen::MatrixXd Theta2;   ///< lower triangular, entries theta_{k-j}^{(k)}
  Eigen::MatrixXd B2tilde;  ///< Lambda_tau B2 Lambda_tau
  Eigen::MatrixXd Btilde;   ///< B2tilde + B2tilde^T
};

KernelMatrices kernel_matrices(const TimeMesh& mesh);

/// Symmetric tridiagonal matrix given by its diagonal and off-diagonal.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  ///< off[k] couples rows k and k+1
};

/// Number of eigenvalues strictly below x (Sturm sequence count).
int sturm_count(const Tridiagonal& t, double x);
/// k-th smallest eigenvalue (0-based) by bisection inside the Gershgorin
/// interval, to absolute tolerance `tol`.
double tridiagonal_eigenvalue(const Tridiagonal& t, int k, double tol = 1e-10);

/// Btilde = B2tilde + B2tilde^T as a tridiagonal matrix.
Tridiagonal btilde_tridiagonal(const TimeMesh& mesh);
/// B2tilde^T B2tilde as a tridiagonal matrix.
Tridiagonal b2tb2_tridiagonal(const TimeMesh& mesh);

struct EigenBounds {
  double lambda_min_btilde;
  double lambda_max_b2tb2;
  double mr;  ///< lambda_max / lambda_min^2
  /// Set when the mesh violates S1; the numbers are still computed.
  bool s1_warning;
};

EigenBounds eigen_bounds(const TimeMesh& mesh);

/// R_L(z, s) = (2 + 4z - z^{3/2})/(1 + z) - s^{3/2}/(1 + s).
double ratio_function_lower(double z, double s);
/// R_U(z, s) = (1+2z)(1+2z+z^{3/2})/(1+z)^2 + s^{3/2}(1+2s+s^{3/2})/(1+s)^2.
double ratio_function_upper(double z, double s);

/// Case constant for M_r in the practical step-ratio regimes: 1.19 when all
/// ratios are <= sqrt(3) - 1, 3.25 when <= 2, 3.94 when the ratio following
/// a large one is capped at 1.45, and 4 otherwise.
double mr_refined(double max_ratio, double next_ratio_cap);

/// 2 sum_k w_k sum_{j<=k} b_{k-j}^{(k)} w_j.
double bdf2_quadratic_form(const Bdf2Coeffs& b, std::span<const double> w);
/// sum_k sum_{j<=k} theta_{k-j}^{(k)} w_k v_j.
double doc_bilinear_form(const DocKernels& theta, std::span<const double> w,
                         std::span<const double> v);

}  // namespace pfc
