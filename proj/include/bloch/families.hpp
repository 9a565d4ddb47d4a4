/// Dense spectral kernels and sampled families of projections and unitaries on the torus.
#pragma once

#include "bloch/core.hpp"

#include <functional>
#include <map>
#include <optional>

namespace bloch {

struct EigenDecomposition {
  RVec values;  // ascending
  Mat vectors;  // orthonormal columns, phase-fixed
};

/// Hermitian eigendecomposition. Each eigenvector is rotated so that its largest-modulus
/// component (lowest index on ties) is real and positive.
EigenDecomposition eig_hermitian(const Mat& a, double hermiticity_tol = 1e-10);

/// e^{i t h} for Hermitian h.
Mat expm_hermitian(const Mat& h, double t = 1.0);

/// Self-adjoint h with spectrum in (-pi, pi) and e^{ih} = u, computed as 2 arctan of the
/// Cayley transform i(1-u)(1+u)^{-1}. Rejects u whose spectrum comes within `min_distance` of -1.
Mat cayley_log(const Mat& u, double min_distance = 1e-6);

enum class InvSqrtMethod { eigen, series };

/// S^{-1/2} for positive definite S. The series method sums the binomial expansion of
/// (1 + (S-1))^{-1/2} and requires ||S - 1|| < 1.
Mat inv_sqrt_psd(const Mat& s, InvSqrtMethod method = InvSqrtMethod::eigen);

/// Eigenphases of a unitary in (-pi, pi], ascending, with unit eigenvectors.
struct UnitarySpectrum {
  RVec phases;
  Mat vectors;
};
UnitarySpectrum unitary_eigen(const Mat& u);
/// Smallest chordal distance |l_i - l_j| between eigenvalues; 2 for a single eigenvalue.
double min_eigen_gap(const Mat& u);

/// Samples of an orthogonal projection P(k) on C^n over a k-grid.
struct ProjectionFamily {
  KGrid grid;
  int ambient = 0;
  int rank = 0;
  std::vector<Mat> p;

  const Mat& at(int flat) const { return p[flat]; }
  /// Family on the face {k_axis = 0}.
  ProjectionFamily face(int axis = 0) const;
  /// Orthonormal basis of Ran P(k): eigenvectors for eigenvalues above 1/2.
  Mat range_basis(int flat) const;
};

/// Samples of unitaries on a grid of dimension D. If `twist` is non-empty the family is
/// twisted-periodic along axis 0: u(k_0 + 1, k') = t(k') u(k_0, k') t(k')^{-1}, with `twist`
/// indexed by the transverse flat index of axis 0.
struct UnitaryFamily {
  KGrid grid;
  std::vector<Mat> u;
  std::vector<Mat> twist;

  int order() const { return u.empty() ? 0 : static_cast<int>(u.front().rows()); }
  bool twisted() const { return !twist.empty(); }
  /// Value at an unwrapped multi-index, applying the twist once per period crossed along axis 0.
  Mat at(const Index3& i) const;
};

struct ProjectionDefects {
  int rank = 0;
  double idempotency = 0.0;
  double hermiticity = 0.0;
  double rank_drift = 0.0;
  /// max over axes and k of N_j ||P(k + e_j/N_j) - P(k)||
  double derivative_bound = 0.0;
  bool ok(double tol = 1e-10) const {
    return idempotency <= tol && hermiticity <= tol && rank_drift <= tol;
  }
};

ProjectionDefects validate_projection_family(const ProjectionFamily& family);

/// Tight-binding fiber h(k) = sum_g e^{-i 2 pi k.g} T(g) on C^orbitals.
struct TightBinding {
  int dim = 2;
  int orbitals = 1;
  std::map<Index3, Mat> hoppings;

  Mat fiber(const std::array<double, 3>& k) const;
  void add(const Index3& g, const Mat& block);
  /// Adds `block` at g and its adjoint at -g.
  void add_hermitian_pair(const Index3& g, const Mat& block);
  /// max ||T(-g) - T(g)^*||
  double hermiticity_defect() const;
  int support_radius() const;
};

/// Projection onto the eigenvectors of h(k) with indices [first, first + count).
ProjectionFamily band_projection(const TightBinding& model, const KGrid& grid, int first, int count);
/// Projection onto the spectral window (lo, hi); the rank must be constant and the window
/// edges must stay at least `margin` away from the spectrum.
ProjectionFamily window_projection(const TightBinding& model, const KGrid& grid, double lo, double hi,
                                   double margin = 1e-6);
/// Eigenvalues of h(k) per grid point.
std::vector<RVec> band_energies(const TightBinding& model, const KGrid& grid);

namespace models {
/// Two-band model sin(2pi k1) s1 + sin(2pi k2) s2 + (mu - cos 2pi k1 - cos 2pi k2) s3.
TightBinding two_band(double mu);
/// Direct sum of the two-band models at mu_a and mu_b coupled by a constant Hermitian term.
TightBinding coupled_pair(double mu_a, double mu_b, double coupling);
/// Two-band model in d = 3 whose mass term also depends on k3.
TightBinding layered(double mu, double interlayer);
/// Four-band model in d = 3 (two coupled layered blocks), rank-2 lower bands.
TightBinding layered_pair(double mu_a, double mu_b, double interlayer, double coupling);
/// Dimerised chain in d = 1 with n_cells orbitals per cell (n = 2: SSH-like).
TightBinding chain(double t_intra, double t_inter);
/// Generic gapped chain with three orbitals for rank-2 tests in d = 1.
TightBinding chain3(double a, double b);
}  // namespace models

}  // namespace bloch
