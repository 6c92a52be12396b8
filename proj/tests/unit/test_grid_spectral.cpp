#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <thread>

#include "oracles.hpp"
#include "pfc/error.hpp"
#include "pfc/spectral.hpp"

using namespace pfc;

namespace {

Field sin_x(const Grid2D& g, int k = 1) {
  const double nu = g.nu();
  return Field::sample(g, [&](double x, double) { return std::sin(k * nu * x); });
}

}  // namespace

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(Grid2D(5, 1.0), ArgumentError);
  EXPECT_THROW(Grid2D(2, 1.0), ArgumentError);
  EXPECT_THROW(Grid2D(8, 0.0), ArgumentError);
  const Grid2D g(16, 8.0);
  EXPECT_DOUBLE_EQ(g.h() * g.M(), g.L());
  EXPECT_DOUBLE_EQ(g.nu(), 2 * std::numbers::pi / 8.0);
}

TEST(Field, StorageIsRowMajorInY) {
  const Grid2D g(4, 4.0);
  Field f = Field::sample(g, [](double x, double y) { return 10 * y + x; });
  EXPECT_DOUBLE_EQ(f[1 * 4 + 2], 12.0);
  EXPECT_DOUBLE_EQ(f(2, 1), 12.0);
  EXPECT_THROW(Field(g, std::vector<double>(15)), DimensionError);
}

TEST(Inner, ConstantsAndResolvedModes) {
  const Grid2D g4(4, 8.0);
  EXPECT_DOUBLE_EQ(inner(Field(g4, 1.0), Field(g4, 1.0)), 64.0);
  const Field r = oracle::random_field(g4, 3);
  EXPECT_EQ(inner(r, Field(g4)), 0.0);

  const Grid2D g(32, 8.0);
  EXPECT_NEAR(inner(sin_x(g), sin_x(g)), 32.0, 1e-12);
  EXPECT_THROW(inner(Field(g), Field(g4)), DimensionError);
}

TEST(Norms, ConstantAndSine) {
  const Grid2D g(32, 8.0);
  const Norms z = norms(Field(g));
  EXPECT_EQ(z.l2, 0.0);
  EXPECT_EQ(z.l4, 0.0);
  EXPECT_EQ(z.linf, 0.0);

  const double c = -0.7;
  const Norms n = norms(Field(g, c));
  EXPECT_NEAR(n.l2, 8 * std::abs(c), 1e-13);
  EXPECT_NEAR(n.l4, std::pow(64 * std::pow(c, 4), 0.25), 1e-13);
  EXPECT_DOUBLE_EQ(n.linf, std::abs(c));
  EXPECT_NEAR(norms(sin_x(g)).l2, std::sqrt(32.0), 1e-12);
}

TEST(Spectral, ForwardMatchesNaiveDft) {
  const Grid2D g(8, 3.0);
  const Field f = oracle::random_field(g, 11);
  const auto ref = oracle::dft(f);
  SpectralEngine engine(g);
  const SpectralCoeffs c = engine.forward(f);
  for (int m = 0; m < 8; ++m) {
    for (int l = 0; l < 8; ++l) {
      const auto want = ref[static_cast<std::size_t>(m) * 8 + l];
      EXPECT_NEAR(std::abs(c.at(l, m) - want), 0.0, 1e-12) << l << "," << m;
      // Conjugate symmetry of real data.
      EXPECT_NEAR(std::abs(c.at(-l, -m) - std::conj(c.at(l, m))), 0.0, 1e-12);
    }
  }
}

TEST(Spectral, RoundTrip) {
  for (int M : {16, 32, 64, 128}) {
    const Grid2D g(M, 5.0);
    const Field f = oracle::random_field(g, M);
    SpectralEngine& e = SpectralEngine::for_grid(g);
    const Field back = e.backward(e.forward(f));
    EXPECT_LE(oracle::max_abs_diff(back, f), 1e-13 * oracle::max_abs(f)) << M;
  }
}

TEST(Laplacian, Eigenfunctions) {
  const Grid2D g(32, 8.0);
  const double nu = g.nu();
  const Field lc = laplacian(Field(g, 2.5));
  EXPECT_EQ(oracle::max_abs(lc), 0.0);
  EXPECT_LE(oracle::max_abs_diff(laplacian(sin_x(g)), -nu * nu * sin_x(g)), 1e-12);
  const Field s2 = Field::sample(g, [&](double x, double y) { return std::sin(nu * x) * std::sin(nu * y); });
  EXPECT_LE(oracle::max_abs_diff(laplacian(s2), -2 * nu * nu * s2), 1e-12);
}

TEST(Laplacian, MatchesNaiveOracleIncludingNyquist) {
  const Grid2D g(8, 2.0);
  const Field f = oracle::random_field(g, 5);
  const Field want = oracle::laplacian(f);
  EXPECT_LE(oracle::max_abs_diff(laplacian(f), want), 1e-11 * oracle::max_abs(want));
}

TEST(Laplacian, KillsTheMean) {
  // The zero-mode multiplier is exactly 0; what is left is transform roundoff.
  const Grid2D g(16, 4.0);
  const Field f = oracle::random_field(g, 9) + Field(g, 3.0);
  EXPECT_LE(std::abs(mean(laplacian(f))), 1e-14);
  EXPECT_EQ(oracle::max_abs(laplacian(Field(g, 3.0))), 0.0);
}

TEST(Laplacian, LinearAndSelfAdjoint) {
  const Grid2D g(32, 6.0);
  const Field f = oracle::random_field(g, 1), h = oracle::random_field(g, 2);
  const double a = 0.3, b = -1.7;
  const Field lhs = laplacian(a * f + b * h);
  const Field rhs = a * laplacian(f) + b * laplacian(h);
  EXPECT_LE(oracle::max_abs_diff(lhs, rhs), 1e-12 * oracle::max_abs(rhs));
  const double fh = inner(laplacian(f), h), hf = inner(f, laplacian(h));
  EXPECT_NEAR(fh, hf, 1e-11 * std::abs(fh));
  EXPECT_GE(-inner(laplacian(f), f), 0.0);
}

TEST(Gradient, ModesAndGreenIdentity) {
  const Grid2D g(32, 8.0);
  const double nu = g.nu();
  auto [cx, cy] = gradient(Field(g, 1.0));
  EXPECT_LE(oracle::max_abs(cx) + oracle::max_abs(cy), 1e-14);

  auto [sx, sy] = gradient(sin_x(g));
  const Field cosx = Field::sample(g, [&](double x, double) { return nu * std::cos(nu * x); });
  EXPECT_LE(oracle::max_abs_diff(sx, cosx), 1e-12);
  EXPECT_LE(oracle::max_abs(sy), 1e-12);

  // Nyquist-free data: the dropped first-derivative mode carries nothing.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Field f = oracle::smooth_random_field(g, seed, 10);
    auto [gx, gy] = gradient(f);
    const double lhs = -inner(laplacian(f), f);
    const double rhs = inner(gx, gx) + inner(gy, gy);
    EXPECT_NEAR(lhs, rhs, 1e-11 * lhs);
  }
}

TEST(Gradient, NyquistModeHasNoFirstDerivative) {
  const Grid2D g(8, 8.0);
  // cos(pi i) alternates sign: the pure Nyquist mode in x.
  const Field f = Field::sample(g, [&](double x, double) { return std::cos(g.nu() * 4 * x); });
  auto [gx, gy] = gradient(f);
  EXPECT_LE(oracle::max_abs(gx), 1e-13);
  const double nyq = g.nu() * 4;
  EXPECT_LE(oracle::max_abs_diff(laplacian(f), -nyq * nyq * f), 1e-12);
}

TEST(InverseLaplacian, Eigenfunctions) {
  const Grid2D g(32, 8.0);
  const double nu = g.nu();
  EXPECT_LE(oracle::max_abs_diff(inv_laplacian(sin_x(g)), (1 / (nu * nu)) * sin_x(g)), 1e-13);
  EXPECT_EQ(oracle::max_abs(inv_laplacian(Field(g))), 0.0);
  const Field f = sin_x(g) + sin_x(g, 2);
  const Field want = (1 / (nu * nu)) * sin_x(g) + (1 / (4 * nu * nu)) * sin_x(g, 2);
  EXPECT_LE(oracle::max_abs_diff(inv_laplacian(f), want), 1e-13);
  const Field want2 = (1 / std::pow(nu, 4)) * sin_x(g);
  EXPECT_LE(oracle::max_abs_diff(inv_laplacian(sin_x(g), 2), want2), 1e-12);
}

TEST(InverseLaplacian, InvertsLaplacianOnMeanZeroData) {
  const Grid2D g(32, 5.0);
  const Field f = oracle::mean_free(oracle::random_field(g, 4));
  const Field back = laplacian(inv_laplacian(f));
  EXPECT_LE(oracle::max_abs_diff(back, -1.0 * f), 1e-11 * oracle::max_abs(f));
}

TEST(InverseLaplacian, RejectsNonzeroMean) {
  const Grid2D g(16, 5.0);
  const Field f = sin_x(g) + Field(g, 1e-3);
  try {
    inv_laplacian(f);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("mean"), std::string::npos);
  }
  EXPECT_THROW(hminus1_norm(f), PreconditionError);
  EXPECT_THROW(inv_laplacian(sin_x(g), 0), DomainError);
}

TEST(HMinusOne, SineAndHolder) {
  const Grid2D g(32, 8.0);
  EXPECT_EQ(hminus1_norm(Field(g)), 0.0);
  EXPECT_NEAR(hminus1_norm(sin_x(g)), std::sqrt(32.0) / g.nu(), 1e-12);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Field f = oracle::mean_free(oracle::random_field(g, 100 + seed));
    const double l2 = norms(f).l2;
    EXPECT_LE(l2 * l2, grad_norm(f) * hminus1_norm(f) * (1 + 1e-12));
  }
}

TEST(Snapshot, RoundTripIsLossless) {
  const Grid2D g(8, 3.5);
  const Field f = oracle::random_field(g, 77);
  const auto path = std::filesystem::temp_directory_path() / "pfc_snapshot_test.txt";
  write_snapshot(path, f, 1.25);
  const Snapshot s = read_snapshot(path);
  EXPECT_EQ(s.t, 1.25);
  EXPECT_TRUE(s.field == f);
  std::filesystem::remove(path);
  EXPECT_THROW(read_snapshot(path), ConfigError);
}

TEST(Spectral, ThreadsGetIndependentEngines) {
  const Grid2D g(32, 8.0);
  const Field f = oracle::random_field(g, 8);
  const Field want = laplacian(f);
  Field a(g), b(g);
  std::thread t1([&] { a = laplacian(f); });
  std::thread t2([&] { b = laplacian(f); });
  t1.join();
  t2.join();
  EXPECT_TRUE(a == want);
  EXPECT_TRUE(b == want);
}
