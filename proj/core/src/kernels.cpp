#include "pfc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pfc/error.hpp"

namespace pfc {

StepKernels step_kernels(double tau, double ratio) {
  if (ratio == 0.0) return {1.0 / tau, 0.0};
  return {(1.0 + 2.0 * ratio) / (tau * (1.0 + ratio)),
          -ratio * ratio / (tau * (1.0 + ratio))};
}

Bdf2Coeffs::Bdf2Coeffs(const TimeMesh& mesh) {
  const int N = mesh.size();
  b0_.resize(N);
  b1_.resize(N);
  for (int n = 1; n <= N; ++n) {
    const auto k = step_kernels(mesh.tau(n), mesh.ratio(n));
    b0_[n - 1] = k.b0;
    b1_[n - 1] = k.b1;
  }
}

double Bdf2Coeffs::kernel(int n, int lag) const {
  if (lag == 0) return b0(n);
  if (lag == 1) return b1(n);
  return 0.0;
}

std::vector<double> doc_row(const TimeMesh& mesh, const Bdf2Coeffs& b, int n) {
  std::vector<double> row(static_cast<std::size_t>(n));
  double product = 1.0;
  row[n - 1] = 1.0 / b.b0(n);
  for (int j = n - 1; j >= 1; --j) {
    const double r = mesh.ratio(j + 1);
    product *= r * r / (1.0 + 2.0 * r);
    row[j - 1] = product / b.b0(j);
  }
  return row;
}

std::vector<double> doc_row_recursive(const Bdf2Coeffs& b, int n) {
  std::vector<double> row(static_cast<std::size_t>(n));
  row[n - 1] = 1.0 / b.b0(n);
  for (int k = n - 1; k >= 1; --k) {
    double s = 0.0;
    for (int j = k + 1; j <= n; ++j) s += row[j - 1] * b.kernel(j, j - k);
    row[k - 1] = -s / b.b0(k);
  }
  return row;
}

DocKernels doc_kernels(const TimeMesh& mesh) {
  const Bdf2Coeffs b(mesh);
  std::vector<std::vector<double>> rows;
  rows.reserve(mesh.size());
  for (int n = 1; n <= mesh.size(); ++n) rows.push_back(doc_row(mesh, b, n));
  return DocKernels(std::move(rows));
}

DocKernels doc_kernels_recursive(const TimeMesh& mesh) {
  const Bdf2Coeffs b(mesh);
  std::vector<std::vector<double>> rows;
  rows.reserve(mesh.size());
  for (int n = 1; n <= mesh.size(); ++n) rows.push_back(doc_row_recursive(b, n));
  return DocKernels(std::move(rows));
}

double orthogonality_residual(const DocKernels& theta, const Bdf2Coeffs& b, int n) {
  double worst = 0.0;
  for (int k = 1; k <= n; ++k) {
    double s = 0.0;
    // b_{j-k}^{(j)} vanishes for j - k >= 2.
    for (int j = k; j <= std::min(n, k + 1); ++j) s += theta.theta(n, j) * b.kernel(j, j - k);
    worst = std::max(worst, std::abs(s - (k == n ? 1.0 : 0.0)));
  }
  return worst;
}

double verify_orthogonality(const TimeMesh& mesh) {
  const Bdf2Coeffs b(mesh);
  const DocKernels theta = doc_kernels(mesh);
  double worst = 0.0;
  for (int n = 1; n <= mesh.size(); ++n) {
    worst = std::max(worst, orthogonality_residual(theta, b, n));
  }
  return worst;
}

double verify_telescope(const TimeMesh& mesh, std::span<const double> v) {
  const int N = mesh.size();
  if (static_cast<int>(v.size()) != N + 1) {
    throw DimensionError("telescope check needs N+1 = " + std::to_string(N + 1) +
                         " values, got " + std::to_string(v.size()));
  }
  const Bdf2Coeffs b(mesh);
  const DocKernels theta = doc_kernels(mesh);
  std::vector<double> d2(static_cast<std::size_t>(N) + 1, 0.0);
  for (int j = 1; j <= N; ++j) {
    d2[j] = b.b0(j) * (v[j] - v[j - 1]);
    if (j >= 2) d2[j] += b.b1(j) * (v[j - 1] - v[j - 2]);
  }
  double worst = 0.0;
  for (int n = 1; n <= N; ++n) {
    double s = 0.0;
    for (int j = 1; j <= n; ++j) s += theta.theta(n, j) * d2[j];
    worst = std::max(worst, std::abs(s - (v[n] - v[n - 1])));
  }
  return worst;
}

KernelMatrices kernel_matrices(const TimeMesh& mesh) {
  const int N = mesh.size();
  const Bdf2Coeffs b(mesh);
  const DocKernels theta = doc_kernels(mesh);
  KernelMatrices m;
  m.B2 = Eigen::MatrixXd::Zero(N, N);
  m.Theta2 = Eigen::MatrixXd::Zero(N, N);
  for (int k = 1; k <= N; ++k) {
    m.B2(k - 1, k - 1) = b.b0(k);
    if (k >= 2) m.B2(k - 1, k - 2) = b.b1(k);
    for (int j = 1; j <= k; ++j) m.Theta2(k - 1, j - 1) = theta.theta(k, j);
  }
  Eigen::VectorXd sqrt_tau(N);
  for (int k = 1; k <= N; ++k) sqrt_tau(k - 1) = std::sqrt(mesh.tau(k));
  m.B2tilde = sqrt_tau.asDiagonal() * m.B2 * sqrt_tau.asDiagonal();
  m.Btilde = m.B2tilde + m.B2tilde.transpose();
  return m;
}

int sturm_count(const Tridiagonal& t, double x) {
  const std::size_t n = t.diag.size();
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e2 = i == 0 ? 0.0 : t.off[i - 1] * t.off[i - 1];
    q = (t.diag[i] - x) - (i == 0 ? 0.0 : e2 / q);
    if (q == 0.0) q = -std::numeric_limits<double>::epsilon() * (std::abs(x) + 1.0);
    if (q < 0.0) ++count;
  }
  return count;
}

double tridiagonal_eigenvalue(const Tridiagonal& t, int k, double tol) {
  const std::size_t n = t.diag.size();
  if (n == 0 || t.off.size() + 1 != n) throw DimensionError("malformed tridiagonal matrix");
  if (k < 0 || k >= static_cast<int>(n)) throw ArgumentError("eigenvalue index out of range");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double radius = (i > 0 ? std::abs(t.off[i - 1]) : 0.0) +
                          (i + 1 < n ? std::abs(t.off[i]) : 0.0);
    lo = std::min(lo, t.diag[i] - radius);
    hi = std::max(hi, t.diag[i] + radius);
  }
  lo -= tol;
  hi += tol;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

double btilde0(double r) { return (1.0 + 2.0 * r) / (1.0 + r); }
double btilde1(double r) { return -std::pow(r, 1.5) / (1.0 + r); }

}  // namespace

Tridiagonal btilde_tridiagonal(const TimeMesh& mesh) {
  const int N = mesh.size();
  Tridiagonal t;
  t.diag.resize(N);
  t.off.resize(N - 1);
  for (int k = 1; k <= N; ++k) {
    t.diag[k - 1] = 2.0 * btilde0(mesh.ratio(k));
    if (k < N) t.off[k - 1] = btilde1(mesh.ratio(k + 1));
  }
  return t;
}

Tridiagonal b2tb2_tridiagonal(const TimeMesh& mesh) {
  const int N = mesh.size();
  Tridiagonal t;
  t.diag.resize(N);
  t.off.resize(N - 1);
  for (int k = 1; k <= N; ++k) {
    const double d = btilde0(mesh.ratio(k));
    const double below = k < N ? btilde1(mesh.ratio(k + 1)) : 0.0;
    t.diag[k - 1] = d * d + below * below;
    if (k < N) t.off[k - 1] = below * btilde0(mesh.ratio(k + 1));
  }
  return t;
}

EigenBounds eigen_bounds(const TimeMesh& mesh) {
  const Tridiagonal bt = btilde_tridiagonal(mesh);
  const Tridiagonal bb = b2tb2_tridiagonal(mesh);
  EigenBounds out{};
  out.lambda_min_btilde = tridiagonal_eigenvalue(bt, 0);
  out.lambda_max_b2tb2 = tridiagonal_eigenvalue(bb, mesh.size() - 1);
  out.mr = out.lambda_max_b2tb2 / (out.lambda_min_btilde * out.lambda_min_btilde);
  out.s1_warning = mesh.size() >= 2 && mesh.max_ratio() >= kRatioSup;
  return out;
}

namespace {

void require_ratio_domain(double z, double s, const char* name) {
  if (!(z >= 0.0 && z < kRatioSup && s >= 0.0 && s < kRatioSup)) {
    throw DomainError(std::string(name) + " needs 0 <= z, s < (3+sqrt(17))/2");
  }
}

}  // namespace

double ratio_function_lower(double z, double s) {
  require_ratio_domain(z, s, "R_L");
  return (2.0 + 4.0 * z - std::pow(z, 1.5)) / (1.0 + z) - std::pow(s, 1.5) / (1.0 + s);
}

double ratio_function_upper(double z, double s) {
  require_ratio_domain(z, s, "R_U");
  const double z32 = std::pow(z, 1.5);
  const double s32 = std::pow(s, 1.5);
  return (1.0 + 2.0 * z) * (1.0 + 2.0 * z + z32) / ((1.0 + z) * (1.0 + z)) +
         s32 * (1.0 + 2.0 * s + s32) / ((1.0 + s) * (1.0 + s));
}

double mr_refined(double max_ratio, double next_ratio_cap) {
  if (max_ratio <= std::sqrt(3.0) - 1.0) return 1.19;
  if (max_ratio <= 2.0) return 3.25;
  if (max_ratio < kRatioSup && next_ratio_cap <= 1.45) return 3.94;
  return 4.0;
}

double bdf2_quadratic_form(const Bdf2Coeffs& b, std::span<const double> w) {
  if (static_cast<int>(w.size()) != b.size()) throw DimensionError("quadratic form size mismatch");
  double s = 0.0;
  for (int k = 1; k <= b.size(); ++k) {
    double conv = b.b0(k) * w[k - 1];
    if (k >= 2) conv += b.b1(k) * w[k - 2];
    s += w[k - 1] * conv;
  }
  return 2.0 * s;
}

double doc_bilinear_form(const DocKernels& theta, std::span<const double> w,
                         std::span<const double> v) {
  const int N = theta.size();
  if (static_cast<int>(w.size()) != N || static_cast<int>(v.size()) != N) {
    throw DimensionError("bilinear form size mismatch");
  }
  double s = 0.0;
  for (int k = 1; k <= N; ++k) {
    double conv = 0.0;
    for (int j = 1; j <= k; ++j) conv += theta.theta(k, j) * v[j - 1];
    s += w[k - 1] * conv;
  }
  return s;
}

}  // namespace pfc
