#include "bloch/families.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace bloch;
using testutil::max_abs;

TEST(EigHermitian, DiagonalIsSortedAscending) {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 2;
  a(1, 1) = 1;
  const auto ed = eig_hermitian(a);
  EXPECT_DOUBLE_EQ(ed.values[0], 1.0);
  EXPECT_DOUBLE_EQ(ed.values[1], 2.0);
}

TEST(EigHermitian, PauliXHasUnitSplitting) {
  Mat a(2, 2);
  a << 0, 1, 1, 0;
  const auto ed = eig_hermitian(a);
  EXPECT_NEAR(ed.values[0], -1.0, 1e-14);
  EXPECT_NEAR(ed.values[1], 1.0, 1e-14);
  EXPECT_NEAR(std::abs(ed.vectors(0, 1)), std::sqrt(0.5), 1e-14);
}

TEST(EigHermitian, RandomReconstructionAndPhaseConvention) {
  std::mt19937 rng(1);
  const Mat a = testutil::random_hermitian(6, rng);
  const auto ed = eig_hermitian(a);
  EXPECT_LT(max_abs(ed.vectors * ed.values.asDiagonal() * ed.vectors.adjoint() - a), 1e-10);
  EXPECT_LT(max_abs(ed.vectors.adjoint() * ed.vectors - Mat::Identity(6, 6)), 1e-12);
  for (int c = 0; c < 6; ++c) {
    int at = 0;
    ed.vectors.col(c).cwiseAbs().maxCoeff(&at);
    EXPECT_NEAR(ed.vectors(at, c).imag(), 0.0, 1e-14);
    EXPECT_GT(ed.vectors(at, c).real(), 0.0);
  }
}

TEST(EigHermitian, RejectsNonHermitian) {
  Mat a(2, 2);
  a << 0, 1, 0, 0;
  EXPECT_THROW(eig_hermitian(a), InvalidInput);
}

TEST(CayleyLog, IdentityGivesZero) { EXPECT_LT(max_abs(cayley_log(Mat::Identity(3, 3))), 1e-15); }

TEST(CayleyLog, QuarterTurn) {
  Mat u = Mat::Identity(1, 1) * std::exp(I * (pi / 2));
  EXPECT_NEAR(cayley_log(u)(0, 0).real(), pi / 2, 1e-14);
}

TEST(CayleyLog, RandomUnitaryExponentiatesBack) {
  std::mt19937 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const Mat u = testutil::random_unitary(4, rng);
    const Mat h = cayley_log(u);
    EXPECT_LT(max_abs(h - h.adjoint()), 1e-12);
    EXPECT_LT(max_abs(testutil::taylor_expm(I * h) - u), 1e-9);
    EXPECT_LT(Eigen::SelfAdjointEigenSolver<Mat>(h).eigenvalues().cwiseAbs().maxCoeff(), pi);
  }
}

TEST(CayleyLog, RoundTripInsidePrincipalStrip) {
  std::mt19937 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    Mat h = testutil::random_hermitian(5, rng);
    h *= (pi - 0.1) / op_norm(h);
    EXPECT_LT(max_abs(cayley_log(testutil::taylor_expm(I * h)) - h), 1e-9);
  }
}

TEST(CayleyLog, CommutesWithUnitaryConjugation) {
  std::mt19937 rng(4);
  const Mat u = testutil::random_unitary(4, rng);
  const Mat g = testutil::random_unitary(4, rng);
  EXPECT_LT(max_abs(cayley_log(g * u * g.adjoint()) - g * cayley_log(u) * g.adjoint()), 1e-10);
}

TEST(CayleyLog, RejectsMinusOneInSpectrum) {
  Mat u = Mat::Identity(2, 2);
  u(1, 1) = -1.0;
  EXPECT_THROW(cayley_log(u), InvalidInput);
}

TEST(InvSqrt, IdentityAndDiagonal) {
  EXPECT_LT(max_abs(inv_sqrt_psd(Mat::Identity(3, 3)) - Mat::Identity(3, 3)), 1e-15);
  const Mat four = 4.0 * Mat::Identity(2, 2);
  EXPECT_LT(max_abs(inv_sqrt_psd(four) - 0.5 * Mat::Identity(2, 2)), 1e-15);
}

TEST(InvSqrt, SeriesAgreesWithEigenRoute) {
  std::mt19937 rng(5);
  Mat h = testutil::random_hermitian(5, rng);
  h /= op_norm(h);
  const Mat s = Mat::Identity(5, 5) + 0.3 * h;
  const Mat a = inv_sqrt_psd(s, InvSqrtMethod::eigen);
  const Mat b = inv_sqrt_psd(s, InvSqrtMethod::series);
  EXPECT_LT(max_abs(a - b), 1e-9);
  EXPECT_LT(max_abs(a * s * a - Mat::Identity(5, 5)), 1e-12);
}

TEST(InvSqrt, SeriesRejectsLargeDeviation) {
  const Mat s = 2.5 * Mat::Identity(2, 2);
  EXPECT_THROW(inv_sqrt_psd(s, InvSqrtMethod::series), InvalidInput);
}

TEST(TightBinding, TwoBandFiberMatchesClosedForm) {
  const TightBinding m = models::two_band(1.3);
  EXPECT_LT(m.hermiticity_defect(), 1e-15);
  const std::array<double, 3> k{0.13, 0.71, 0.0};
  const double s1 = std::sin(two_pi * k[0]), s2 = std::sin(two_pi * k[1]);
  const double d3 = 1.3 - std::cos(two_pi * k[0]) - std::cos(two_pi * k[1]);
  Mat h(2, 2);
  h << d3, s1 - I * s2, s1 + I * s2, -d3;
  EXPECT_LT(max_abs(m.fiber(k) - h), 1e-14);
}

TEST(ProjectionFamily, TwoBandLowerBandIsRankOne) {
  const ProjectionFamily f = band_projection(models::two_band(1.0), KGrid::cube(2, 16), 0, 1);
  const ProjectionDefects d = validate_projection_family(f);
  EXPECT_EQ(d.rank, 1);
  EXPECT_TRUE(d.ok(1e-12));
  EXPECT_GT(d.derivative_bound, 0.0);
  EXPECT_LT(d.derivative_bound, 30.0);
}

TEST(ProjectionFamily, HermiticityDefectIsFlagged) {
  ProjectionFamily f = band_projection(models::two_band(1.0), KGrid::cube(2, 8), 0, 1);
  f.p[5](0, 1) += 1e-3;
  const ProjectionDefects d = validate_projection_family(f);
  EXPECT_GT(d.hermiticity, 5e-4);
  EXPECT_FALSE(d.ok(1e-6));
}

TEST(UnitaryFamily, TwistAppliesPerPeriod) {
  std::mt19937 rng(6);
  UnitaryFamily a{KGrid({4}), {}, {}};
  for (int i = 0; i < 4; ++i) a.u.push_back(testutil::random_unitary(2, rng));
  a.twist = {testutil::random_unitary(2, rng)};
  const Mat& t = a.twist[0];
  EXPECT_LT(max_abs(a.at({5, 0, 0}) - t * a.u[1] * t.adjoint()), 1e-14);
  EXPECT_LT(max_abs(a.at({-3, 0, 0}) - t.adjoint() * a.u[1] * t), 1e-14);
  EXPECT_LT(max_abs(a.at({8, 0, 0}) - t * t * a.u[0] * t.adjoint() * t.adjoint()), 1e-13);
}

TEST(UnitaryEigen, MinimalGapIsChordal) {
  Mat u = Mat::Zero(2, 2);
  u(0, 0) = std::exp(I * 0.1);
  u(1, 1) = std::exp(I * 0.3);
  EXPECT_NEAR(min_eigen_gap(u), 2 * std::sin(0.1), 1e-12);
}
