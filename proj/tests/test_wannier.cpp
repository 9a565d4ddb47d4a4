#include "bloch/wannier.hpp"

#include <gtest/gtest.h>

using namespace bloch;

namespace {

LatticeFunction radial(int radius, double rate) {
  LatticeFunction w{LatticeBox{2, radius, 1}, Vec()};
  w.values = Vec::Zero(w.box.size());
  for (int s = 0; s < w.box.sites(); ++s) {
    const Index3 g = w.box.cell(s);
    w.values[s] = std::exp(-rate * std::hypot(g[0], g[1]));
  }
  return w;
}

BlochFrame basis_frame(int n) {
  return construct_bloch_basis(band_projection(models::two_band(3.0), KGrid::cube(2, n), 0, 1));
}

}  // namespace

TEST(DecayFit, SyntheticExponential) {
  const DecayFit f = decay_fit(radial(20, 0.7));
  EXPECT_NEAR(f.rate, 0.7, 0.02);
  EXPECT_GT(f.r2, 0.99);
  EXPECT_FALSE(f.trivially_localized);
}

TEST(DecayFit, DeltaIsTriviallyLocalized) {
  LatticeFunction w{LatticeBox{2, 6, 2}, Vec()};
  w.values = Vec::Zero(w.box.size());
  w.at({0, 0, 0}, 1) = 1.0;
  const DecayFit f = decay_fit(w);
  EXPECT_TRUE(f.trivially_localized);
  EXPECT_TRUE(f.localized());
}

TEST(DecayFit, BoundarySpikeIsFlagged) {
  LatticeFunction w = radial(20, 0.7);
  EXPECT_FALSE(decay_fit(w).boundary_polluted);
  w.at({20, 3, 0}, 0) = 1e-3;
  const DecayFit f = decay_fit(w);
  EXPECT_TRUE(f.boundary_polluted);
  EXPECT_NEAR(f.rate, 0.7, 0.02);  // the fit only uses r <= L/2
}

TEST(DecayFit, ZeroFunctionRejected) {
  LatticeFunction w{LatticeBox{1, 3, 1}, Vec::Zero(7)};
  EXPECT_THROW(decay_fit(w), InvalidInput);
}

TEST(Wannier, BasisIsOrthonormalSystemOfTranslates) {
  const BlochFrame fr = basis_frame(16);
  EXPECT_LT(plancherel_defect(fr), 1e-12);
  EXPECT_LT(translate_gram_defect(fr), 1e-10);
}

TEST(Wannier, BasisDecaysExponentially) {
  const WannierSet ws = frame_to_wannier(basis_frame(32), 12);
  ASSERT_EQ(ws.functions.size(), 1u);
  EXPECT_GT(ws.combined.rate, 0.0);
  EXPECT_GT(ws.combined.r2, 0.98);
  EXPECT_FALSE(ws.combined.boundary_polluted);
}

TEST(Wannier, ParsevalReconstruction) {
  const ProjectionFamily fam = band_projection(models::two_band(1.0), KGrid::cube(2, 16), 0, 1);
  const BlochFrame fr = construct_parseval_frame(fam);
  EXPECT_EQ(fr.count(), 2);
  EXPECT_LT(wannier_reconstruction_residual(fr, fam, 5), 1e-10);
}

TEST(Wannier, RankTwoParsevalReconstructionInThreeDimensions) {
  const ProjectionFamily fam = band_projection(models::layered_pair(1.0, -1.0, 0.3, 0.4), KGrid::cube(3, 6), 0, 2);
  const BlochFrame fr = construct_parseval_frame(fam);
  EXPECT_EQ(fr.count(), 3);
  EXPECT_LT(wannier_reconstruction_residual(fr, fam, 3), 1e-9);
}

TEST(EffectiveHamiltonian, ParsevalSpectrumMatchesOccupiedBand) {
  const TightBinding tb = models::two_band(1.0);
  const BlochFrame fr = construct_parseval_frame(band_projection(tb, KGrid::cube(2, 16), 0, 1));
  const EffectiveHamiltonian eh = effective_hamiltonian(fr, tb, 0);
  EXPECT_LT(eh.spectral_error, 1e-8);
  EXPECT_EQ(eh.zero_modes, 1);
  EXPECT_GT(eh.shift, 0.0);
}

TEST(EffectiveHamiltonian, BasisHasNoZeroModes) {
  const TightBinding tb = models::two_band(3.0);
  const EffectiveHamiltonian eh = effective_hamiltonian(basis_frame(12), tb, 0);
  EXPECT_LT(eh.spectral_error, 1e-8);
  EXPECT_EQ(eh.zero_modes, 0);
}

TEST(EffectiveHamiltonian, RejectsSubframe) {
  const TightBinding tb = models::coupled_pair(1.0, -1.0, 0.5);
  const BlochFrame fr = construct_subframe(band_projection(tb, KGrid::cube(2, 12), 0, 2));
  EXPECT_THROW(effective_hamiltonian(fr, tb, 0), InvalidInput);
}

TEST(Interpolation, RestrictionToCoarseGridIsIdentity) {
  const TightBinding tb = models::two_band(1.0);
  const BlochFrame fr = construct_parseval_frame(band_projection(tb, KGrid::cube(2, 8), 0, 1));
  const EffectiveHamiltonian eh = effective_hamiltonian(fr, tb, 0);
  const std::vector<Mat> back = interpolate_family(eh.grid, eh.h, eh.grid);
  double d = 0.0;
  for (size_t f = 0; f < back.size(); ++f) d = std::max(d, (back[f] - eh.h[f]).cwiseAbs().maxCoeff());
  EXPECT_LT(d, 1e-12);
}

TEST(Interpolation, TrigonometricPolynomialIsReproduced) {
  // h(k) = cos 2 pi k1 + sin 4 pi k2 needs no more than a 5-point grid
  const KGrid coarse = KGrid::cube(2, 6), fine = KGrid::cube(2, 18);
  auto value = [](const std::array<double, 3>& k) {
    Mat h(1, 1);
    h(0, 0) = std::cos(two_pi * k[0]) + std::sin(2 * two_pi * k[1]);
    return h;
  };
  std::vector<Mat> s;
  for (int f = 0; f < coarse.total(); ++f) s.push_back(value(coarse.point(f)));
  const std::vector<Mat> out = interpolate_family(coarse, s, fine);
  for (int f = 0; f < fine.total(); ++f) EXPECT_NEAR(std::abs(out[f](0, 0) - value(fine.point(f))(0, 0)), 0.0, 1e-12);
}

TEST(Interpolation, ErrorFallsTenfoldPerDoubling) {
  const TightBinding tb = models::two_band(1.0);
  const KGrid fine = KGrid::cube(2, 128);
  const BlochFrame fr = construct_parseval_frame(band_projection(tb, fine, 0, 1));
  std::vector<double> err;
  for (int nc : {16, 32, 64}) {
    BlochFrame sub = fr;
    sub.grid = KGrid::cube(2, nc);
    sub.vectors.clear();
    for (int f = 0; f < sub.grid.total(); ++f) {
      Index3 i = sub.grid.coords(f);
      for (int a = 0; a < 2; ++a) i[a] *= 128 / nc;
      sub.vectors.push_back(fr.vectors[fine.flat(i)]);
    }
    err.push_back(interpolate_bands(effective_hamiltonian(sub, tb, 0), tb, 0, 1, fine).max_error);
  }
  EXPECT_GT(err[0] / err[1], 10.0);
  EXPECT_GT(err[1] / err[2], 10.0);
}
