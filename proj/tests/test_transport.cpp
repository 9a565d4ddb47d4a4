#include "bloch/framesyn.hpp"
#include "bloch/transport.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace bloch;
using testutil::max_abs;

namespace {

ProjectionFamily rotating_line(int n) {
  ProjectionFamily f{KGrid({n}), 2, 1, {}};
  for (int j = 0; j < n; ++j) {
    Vec v(2);
    v << std::cos(pi * j / n), std::sin(pi * j / n);
    f.p.push_back(v * v.adjoint());
  }
  return f;
}

}  // namespace

TEST(ParallelTransport, ConstantFamilyTransportsTrivially) {
  ProjectionFamily f{KGrid({8, 4}), 3, 1, std::vector<Mat>(32, Mat::Zero(3, 3))};
  for (Mat& p : f.p) p(1, 1) = 1.0;
  const TransportLines t = parallel_transport(f, 0);
  for (const Mat& u : t.t) EXPECT_LT(max_abs(u - Mat::Identity(3, 3)), 1e-15);
  const UnitaryFamily a = obstruction_matrix(t, std::vector<Mat>(4, Mat::Identity(3, 3).col(1)));
  for (const Mat& u : a.u) EXPECT_LT(std::abs(u(0, 0) - 1.0), 1e-15);
}

TEST(ParallelTransport, RealRotatingLineIsCarriedAlong) {
  const int n = 64;
  const ProjectionFamily f = rotating_line(n);
  const TransportLines t = parallel_transport(f, 0);
  Vec v0(2);
  v0 << 1.0, 0.0;
  for (int j = 0; j <= n; ++j) {
    Vec v(2);
    v << std::cos(pi * j / n), std::sin(pi * j / n);
    EXPECT_LT((t.at(0, j) * v0 - v).norm(), 1e-6);
    EXPECT_LT(unitarity_defect(t.at(0, j)), 1e-10);
  }
  // d = 1: the obstruction matrix is the holonomy on Ran P(0), here -1
  const UnitaryFamily a = obstruction_matrix(t, {v0});
  EXPECT_LT(std::abs(a.u[0](0, 0) + 1.0), 1e-10);
}

TEST(ParallelTransport, IntertwinesTheProjections) {
  const ProjectionFamily f = band_projection(models::coupled_pair(1.0, 3.0, 0.4), KGrid::cube(2, 16), 0, 2);
  const TransportLines t = parallel_transport(f, 1);
  for (int tr = 0; tr < t.lines(); ++tr)
    for (int j = 0; j < 16; ++j) {
      const Mat& u = t.at(tr, j);
      const Mat& p0 = f.p[f.grid.join(1, 0, tr)];
      const Mat& pj = f.p[f.grid.join(1, j, tr)];
      EXPECT_LT(max_abs(u * p0 * u.adjoint() - pj), 1e-12);
    }
}

TEST(ParallelTransport, SecondPeriodPicksUpTheObstruction) {
  // Sample two periods of P on one grid; transport over the second period equals the first
  // one followed by the holonomy: psi(k + 1) = psi(k) alpha.
  const int n = 24;
  const TightBinding model = models::chain3(0.7, 0.4);
  ProjectionFamily two{KGrid({2 * n}), 3, 2, {}};
  for (int j = 0; j < 2 * n; ++j) {
    const ProjectionFamily one = band_projection(model, KGrid({n}), 0, 2);
    two.p.push_back(one.p[j % n]);
  }
  const TransportLines t = parallel_transport(two, 0);
  const Mat xi0 = two.range_basis(0);
  const Mat alpha = xi0.adjoint() * t.at(0, n) * xi0;
  EXPECT_LT(unitarity_defect(alpha), 1e-12);
  for (int j = 0; j <= n; ++j) EXPECT_LT(max_abs(t.at(0, n + j) * xi0 - t.at(0, j) * xi0 * alpha), 1e-12);
}

TEST(Chern, TwoBandModelPhases) {
  const KGrid g = KGrid::cube(2, 32);
  const ProjectionFamily top = band_projection(models::two_band(1.0), g, 0, 1);
  const ProjectionFamily triv = band_projection(models::two_band(3.0), g, 0, 1);
  double raw = 0.0;
  const int c = chern_number(top, 0, 1, &raw);
  EXPECT_EQ(std::abs(c), 1);
  EXPECT_EQ(chern_number(triv), 0);
  EXPECT_EQ(chern_number(top, 1, 0), -c);
}

TEST(Chern, PlaquetteAndRiemannSumAgreeInSign) {
  const KGrid g = KGrid::cube(2, 32);
  for (double mu : {-1.0, 1.0, 3.0}) {
    const ProjectionFamily f = band_projection(models::two_band(mu), g, 0, 1);
    EXPECT_NEAR(chern_riemann_sum(f), chern_number(f), 0.05) << "mu = " << mu;
  }
}

TEST(Chern, LowerBandSignConvention) {
  // Lower band of the two-band model at 0 < mu < 2, orientation of (1/2 pi i) Tr(P [d1 P, d2 P]).
  const ProjectionFamily f = band_projection(models::two_band(1.0), KGrid::cube(2, 48), 0, 1);
  EXPECT_EQ(chern_number(f), 1);
  EXPECT_NEAR(chern_riemann_sum(f), 1.0, 0.02);
  const ProjectionFamily g = band_projection(models::two_band(-1.0), KGrid::cube(2, 48), 0, 1);
  EXPECT_EQ(chern_number(g), -1);
}

TEST(Winding, PlaneWaveDeterminant) {
  UnitaryFamily a{KGrid({16}), {}, {}};
  for (int j = 0; j < 16; ++j) {
    Mat u = Mat::Identity(2, 2);
    u(0, 0) = std::exp(I * (two_pi * j / 16.0));
    a.u.push_back(u);
  }
  EXPECT_EQ(winding_degree(a), 1);
}

TEST(Winding, ObstructionDegreeEqualsChernNumber) {
  for (double mu : {1.0, -1.0, 3.0}) {
    const ProjectionFamily f = band_projection(models::two_band(mu), KGrid::cube(2, 32), 0, 1);
    const TransportLines t = parallel_transport(f, 0);
    const ProjectionFamily face = f.face(0);
    // smooth face basis from the d = 1 construction
    const BlochFrame fb = construct_bloch_basis(face);
    const UnitaryFamily a = obstruction_matrix(t, fb.vectors);
    EXPECT_EQ(winding_degree(a), chern_number(f)) << "mu = " << mu;
  }
}

TEST(Winding, ThreeDimensionalDegreesMatchChernNumbers) {
  const ProjectionFamily f = band_projection(models::layered(1.0, 0.6), KGrid::cube(3, 16), 0, 1);
  const TransportLines t = parallel_transport(f, 0);
  const ProjectionFamily face = f.face(0);
  for (int axis = 0; axis < 2; ++axis) {
    // face basis periodic along `axis`: transport with the holonomy phase unwound on each line
    const TransportLines ft = parallel_transport(face, axis);
    std::vector<Mat> basis(face.grid.total());
    for (int tr = 0; tr < ft.lines(); ++tr) {
      const Mat xi0 = face.range_basis(face.grid.join(axis, 0, tr));
      const double ph = std::arg((xi0.adjoint() * ft.holonomy(tr) * xi0)(0, 0));
      const int n = face.grid.size(axis);
      for (int j = 0; j < n; ++j)
        basis[face.grid.join(axis, j, tr)] = ft.at(tr, j) * xi0 * std::exp(-I * (ph * j / n));
    }
    const UnitaryFamily a = obstruction_matrix(t, basis);
    EXPECT_EQ(winding_degree(a, axis), chern_number(f, 0, axis + 1)) << "axis " << axis + 2;
  }
}
