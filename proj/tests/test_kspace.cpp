#include "bloch/kspace.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace bloch;
using testutil::max_abs;

namespace {

Mat random_field(const KGrid& g, int n, unsigned seed) {
  std::mt19937 rng(seed);
  return testutil::random_matrix(g.total(), n, rng);
}

// Straight O(N^2) evaluation of (1/|grid|) sum_k e^{i 2 pi k.g} f(k).
Vec direct_coefficient(const KGrid& grid, const Mat& f, const Index3& g) {
  Vec c = Vec::Zero(f.cols());
  for (int r = 0; r < grid.total(); ++r) {
    const auto k = grid.point(r);
    double dot = 0.0;
    for (int a = 0; a < grid.dim(); ++a) dot += k[a] * g[a];
    c += std::exp(I * (two_pi * dot)) * f.row(r).transpose();
  }
  return c / static_cast<double>(grid.total());
}

}  // namespace

TEST(InverseBlochFloquet, ConstantFieldIsOnSite) {
  const KGrid g = KGrid::cube(2, 8);
  Mat f = Mat::Zero(g.total(), 2);
  f.col(0).setOnes();
  const LatticeFunction w = inverse_bloch_floquet(g, f, 4);
  EXPECT_NEAR(std::abs(w.at({0, 0, 0}, 0) - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(w.values.norm(), 1.0, 1e-13);
}

TEST(InverseBlochFloquet, PlaneWaveShiftsByOneCell) {
  const KGrid g = KGrid::cube(2, 8);
  Mat f = Mat::Zero(g.total(), 2);
  for (int r = 0; r < g.total(); ++r) f(r, 0) = std::exp(-I * (two_pi * g.point(r)[0]));
  const LatticeFunction w = inverse_bloch_floquet(g, f, 3);
  EXPECT_NEAR(std::abs(w.at({1, 0, 0}, 0) - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(w.values.norm(), 1.0, 1e-13);
}

TEST(InverseBlochFloquet, MatchesDirectSum) {
  const KGrid g({6, 5});
  const Mat f = random_field(g, 3, 1);
  const LatticeFunction w = inverse_bloch_floquet(g, f, 2);
  for (const Index3 c : {Index3{0, 0, 0}, Index3{-2, 1, 0}, Index3{2, -2, 0}}) {
    const Vec d = direct_coefficient(g, f, c);
    for (int x = 0; x < 3; ++x) EXPECT_LT(std::abs(w.at(c, x) - d[x]), 1e-13);
  }
}

TEST(InverseBlochFloquet, PlancherelOnFullPeriodicBox) {
  const KGrid g = KGrid::cube(2, 32);
  const Mat f = random_field(g, 2, 2);
  const Mat c = lattice_coefficients(g, f);
  const double lhs = c.squaredNorm();
  const double rhs = f.squaredNorm() / g.total();
  EXPECT_LT(std::abs(lhs - rhs) / rhs, 1e-12);
}

TEST(InverseBlochFloquet, RoundTripInThreeDimensions) {
  const KGrid g({4, 3, 5});
  const Mat f = random_field(g, 2, 3);
  EXPECT_LT(max_abs(bloch_sum(g, lattice_coefficients(g, f)) - f), 1e-13);
}

TEST(InverseBlochFloquet, RejectsOversizedBox) {
  const KGrid g = KGrid::cube(2, 8);
  EXPECT_THROW(inverse_bloch_floquet(g, Mat::Zero(g.total(), 1), 5), InvalidInput);
}

TEST(Fejer, KernelIsNonNegativeAndNormalised) {
  for (int order : {1, 3, 8}) {
    const RVec k = fejer_kernel(16, order);
    EXPECT_GE(k.minCoeff(), -1e-15);
    EXPECT_NEAR(k.sum(), 1.0, 1e-13);
  }
}

TEST(Fejer, ConstantIsUnchangedAndModeIsDamped) {
  const KGrid g({16});
  Mat f(16, 1);
  f.setConstant(cplx(0.3, -1.2));
  EXPECT_LT(max_abs(fejer_smooth(g, f, 5) - f), 1e-13);
  for (int r = 0; r < 16; ++r) f(r, 0) = std::exp(I * (two_pi * r / 16.0));
  EXPECT_LT(max_abs(fejer_smooth(g, f, 5) - (1.0 - 1.0 / 5) * f), 1e-13);
}

TEST(Fejer, AgreesWithDirectConvolutionByClosedFormKernel) {
  const int n = 20, order = 6;
  const KGrid g({n});
  const Mat f = random_field(g, 1, 4);
  const Mat s = fejer_smooth(g, f, order);
  for (int i = 0; i < n; ++i) {
    cplx acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double x = static_cast<double>(i - j) / n;
      const double ker = (i == j) ? order : std::pow(std::sin(pi * order * x) / std::sin(pi * x), 2) / order;
      acc += ker * f(j, 0) / static_cast<double>(n);
    }
    EXPECT_LT(std::abs(acc - s(i, 0)), 1e-12);
  }
}

TEST(Fejer, SmoothsAStep) {
  const KGrid g({32});
  Mat f(32, 1);
  for (int r = 0; r < 32; ++r) f(r, 0) = r < 16 ? 1.0 : -1.0;
  auto second_diff = [](const Mat& v) {
    double s = 0.0;
    const int n = static_cast<int>(v.rows());
    for (int r = 0; r < n; ++r) s += std::norm(v((r + 1) % n, 0) - 2.0 * v(r, 0) + v((r + n - 1) % n, 0));
    return std::sqrt(s);
  };
  EXPECT_LT(second_diff(fejer_smooth(g, f, 6)), second_diff(f));
}

TEST(Reorthonormalize, FixedPointsAndRescaling) {
  const KGrid g({2, 2});
  ProjectionFamily fam{g, 3, 2, std::vector<Mat>(4)};
  Mat e = Mat::Zero(3, 2);
  e(0, 0) = 1.0;
  e(1, 1) = 1.0;
  for (Mat& p : fam.p) p = e * e.adjoint();
  std::vector<Mat> v(4, e);
  auto out = reorthonormalize(fam, v);
  for (const Mat& x : out) EXPECT_LT(max_abs(x - e), 1e-15);

  for (Mat& x : v) x = 1.01 * e;
  out = reorthonormalize(fam, v, InvSqrtMethod::series);
  for (const Mat& x : out) EXPECT_LT(max_abs(x - e), 1e-12);

  for (Mat& x : v) x(0, 1) = 0.1;
  out = reorthonormalize(fam, v);
  for (const Mat& x : out) EXPECT_LT(max_abs(x.adjoint() * x - Mat::Identity(2, 2)), 1e-13);
}

TEST(Reorthonormalize, AbortsFarFromOrthonormal) {
  const KGrid g({2});
  ProjectionFamily fam{g, 2, 1, std::vector<Mat>(2, Mat::Identity(2, 2))};
  fam.rank = 2;
  std::vector<Mat> v(2, 1.5 * Mat::Identity(2, 2));
  EXPECT_THROW(reorthonormalize(fam, v), NumericalFailure);
}
